/*
 * patchgmm: imputation of sparsely sliced volumes from image collections
 *
 * Copyright 2026 The patchgmm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace patchgmm {

// Voxel counts per axis. Axis 0 varies fastest in every dense buffer:
// linear index = i + n0 * (j + n1 * k).
using Dims = std::array<int, 3>;
using Index3 = std::array<int, 3>;
using Spacing = std::array<double, 3>;

std::size_t voxel_count(const Dims& dims);

inline std::size_t linear_index(const Dims& dims, int i, int j, int k) {
  return static_cast<std::size_t>(i) +
         static_cast<std::size_t>(dims[0]) *
             (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
}

inline Index3 unravel_index(const Dims& dims, std::size_t idx) {
  const int i = static_cast<int>(idx % static_cast<std::size_t>(dims[0]));
  idx /= static_cast<std::size_t>(dims[0]);
  const int j = static_cast<int>(idx % static_cast<std::size_t>(dims[1]));
  const int k = static_cast<int>(idx / static_cast<std::size_t>(dims[1]));
  return {i, j, k};
}

// Throws ShapeError unless every entry is positive.
void check_dims(const Dims& dims);

// Dense scalar grid. Values are stored as float32 and are always finite;
// computation elsewhere promotes them to double.
class Volume {
 public:
  Volume(const Dims& dims, const Spacing& spacing, std::vector<float> data);
  Volume(const Dims& dims, std::vector<float> data) : Volume(dims, {1.0, 1.0, 1.0}, std::move(data)) {}

  static Volume filled(const Dims& dims, float value, const Spacing& spacing = {1.0, 1.0, 1.0});

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }
  std::span<const float> data() const { return data_; }

  float operator[](std::size_t idx) const { return data_[idx]; }
  float at(int i, int j, int k) const { return data_[linear_index(dims_, i, j, k)]; }

  float max_value() const;

  bool operator==(const Volume& other) const = default;

 private:
  Dims dims_;
  Spacing spacing_;
  std::vector<float> data_;
};

// Per-voxel observed flag aligned with a Volume.
class ObservationMask {
 public:
  ObservationMask(const Dims& dims, std::vector<std::uint8_t> flags);

  static ObservationMask all_observed(const Dims& dims);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return flags_.size(); }
  std::span<const std::uint8_t> flags() const { return flags_; }

  bool observed(std::size_t idx) const { return flags_[idx] != 0; }
  bool observed(int i, int j, int k) const { return flags_[linear_index(dims_, i, j, k)] != 0; }

  std::size_t observed_count() const;

  bool operator==(const ObservationMask& other) const = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> flags_;
};

// Throws ShapeError if the mask does not match the volume grid and
// ValidationError if it has no observed voxel.
void require_usable_mask(const Volume& v, const ObservationMask& m);

// Copy of v with unobserved voxels replaced by fill.
Volume apply_mask(const Volume& v, const ObservationMask& m, float fill = 0.0F);

// MIV1 portable format, little-endian:
//   "MIV1" | u32 dims[3] | f64 spacing[3] | u32 dtype | payload
// dtype 0 is float32 (volumes), dtype 1 is uint8 (masks). The payload is in
// fastest-first axis order.
void save_volume(const Volume& v, const std::filesystem::path& path);
Volume load_volume(const std::filesystem::path& path);

void save_mask(const ObservationMask& m, const std::filesystem::path& path,
               const Spacing& spacing = {1.0, 1.0, 1.0});
ObservationMask load_mask(const std::filesystem::path& path);

// Observed iff weight >= (gradient > gradient_cut ? high_thresh : low_thresh).
ObservationMask mask_from_weights(const Dims& dims, std::span<const double> weights,
                                  std::span<const double> gradient_magnitude, double low_thresh,
                                  double high_thresh, double gradient_cut);

struct ThresholdDefaults {
  static constexpr double kLow = 0.5;
  static constexpr double kHigh = 0.75;
  static constexpr double kGradientQuantile = 0.75;
};

// Central-difference gradient magnitude in physical units.
std::vector<double> gradient_magnitude(const Volume& v);

// Linear-interpolated quantile of the values, q in [0, 1].
double quantile(std::span<const double> values, double q);

}  // namespace patchgmm

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

#include "patchgmm/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "patchgmm/error.hpp"

namespace patchgmm {

namespace {

using detail::get_le;
using detail::put_le;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

constexpr char kMagic[4] = {'M', 'I', 'V', '1'};
constexpr std::uint32_t kDtypeFloat32 = 0;
constexpr std::uint32_t kDtypeUint8 = 1;
constexpr std::size_t kHeaderBytes = 4 + 3 * 4 + 3 * 8 + 4;

struct Header {
  Dims dims;
  Spacing spacing;
  std::uint32_t dtype;
};

std::string encode_header(const Dims& dims, const Spacing& spacing, std::uint32_t dtype) {
  std::string out(kMagic, 4);
  for (int d : dims) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double s : spacing) put_le<double>(out, s);
  put_le<std::uint32_t>(out, dtype);
  return out;
}

Header decode_header(const std::string& bytes, const std::filesystem::path& path) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(path.string() + ": not an MIV1 file");
  Header h{};
  const char* p = bytes.data() + 4;
  for (int a = 0; a < 3; ++a, p += 4) {
    const auto n = get_le<std::uint32_t>(p);
    if (n == 0 || n > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
      throw FormatError(path.string() + ": invalid dimension");
    h.dims[a] = static_cast<int>(n);
  }
  for (int a = 0; a < 3; ++a, p += 8) {
    h.spacing[a] = get_le<double>(p);
    if (!(h.spacing[a] > 0.0) || !std::isfinite(h.spacing[a]))
      throw FormatError(path.string() + ": invalid spacing");
  }
  h.dtype = get_le<std::uint32_t>(p);
  if (h.dtype != kDtypeFloat32 && h.dtype != kDtypeUint8)
    throw FormatError(path.string() + ": unknown dtype code " + std::to_string(h.dtype));
  const std::size_t elem = h.dtype == kDtypeFloat32 ? 4 : 1;
  if (bytes.size() != kHeaderBytes + voxel_count(h.dims) * elem)
    throw FormatError(path.string() + ": payload size does not match header");
  return h;
}

}  // namespace

std::size_t voxel_count(const Dims& dims) {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
         static_cast<std::size_t>(dims[2]);
}

void check_dims(const Dims& dims) {
  for (int d : dims)
    if (d <= 0) throw ShapeError("volume dimensions must be positive");
}

Volume::Volume(const Dims& dims, const Spacing& spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  check_dims(dims_);
  for (double s : spacing_)
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("voxel spacing must be positive");
  if (data_.size() != voxel_count(dims_)) throw ShapeError("data length does not match dimensions");
  for (float x : data_)
    if (!std::isfinite(x)) throw ValidationError("volume contains non-finite values");
}

Volume Volume::filled(const Dims& dims, float value, const Spacing& spacing) {
  check_dims(dims);
  return Volume(dims, spacing, std::vector<float>(voxel_count(dims), value));
}

float Volume::max_value() const { return *std::max_element(data_.begin(), data_.end()); }

ObservationMask::ObservationMask(const Dims& dims, std::vector<std::uint8_t> flags)
    : dims_(dims), flags_(std::move(flags)) {
  check_dims(dims_);
  if (flags_.size() != voxel_count(dims_)) throw ShapeError("mask length does not match dimensions");
  for (auto& f : flags_) f = f != 0 ? 1 : 0;
}

ObservationMask ObservationMask::all_observed(const Dims& dims) {
  check_dims(dims);
  return ObservationMask(dims, std::vector<std::uint8_t>(voxel_count(dims), 1));
}

std::size_t ObservationMask::observed_count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

void require_usable_mask(const Volume& v, const ObservationMask& m) {
  if (v.dims() != m.dims()) throw ShapeError("mask dimensions do not match volume");
  if (m.observed_count() == 0) throw ValidationError("mask has no observed voxels");
}

Volume apply_mask(const Volume& v, const ObservationMask& m, float fill) {
  if (v.dims() != m.dims()) throw ShapeError("mask dimensions do not match volume");
  std::vector<float> out(v.data().begin(), v.data().end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!m.observed(i)) out[i] = fill;
  return Volume(v.dims(), v.spacing(), std::move(out));
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  std::string bytes = encode_header(v.dims(), v.spacing(), kDtypeFloat32);
  bytes.reserve(kHeaderBytes + v.size() * 4);
  for (float x : v.data()) put_le<float>(bytes, x);
  detail::write_file_atomic(path, bytes);
}

Volume load_volume(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const Header h = decode_header(bytes, path);
  const std::size_t n = voxel_count(h.dims);
  std::vector<float> data(n);
  const char* p = bytes.data() + kHeaderBytes;
  if (h.dtype == kDtypeFloat32) {
    for (std::size_t i = 0; i < n; ++i) data[i] = get_le<float>(p + 4 * i);
  } else {
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(static_cast<std::uint8_t>(p[i]));
  }
  for (float x : data)
    if (!std::isfinite(x)) throw ValidationError(path.string() + ": payload contains NaN or Inf");
  return Volume(h.dims, h.spacing, std::move(data));
}

void save_mask(const ObservationMask& m, const std::filesystem::path& path, const Spacing& spacing) {
  std::string bytes = encode_header(m.dims(), spacing, kDtypeUint8);
  bytes.append(reinterpret_cast<const char*>(m.flags().data()), m.size());
  detail::write_file_atomic(path, bytes);
}

ObservationMask load_mask(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const Header h = decode_header(bytes, path);
  if (h.dtype != kDtypeUint8) throw FormatError(path.string() + ": mask files must use dtype uint8");
  const std::size_t n = voxel_count(h.dims);
  std::vector<std::uint8_t> flags(n);
  std::memcpy(flags.data(), bytes.data() + kHeaderBytes, n);
  for (auto f : flags)
    if (f > 1) throw FormatError(path.string() + ": mask values must be 0 or 1");
  return ObservationMask(h.dims, std::move(flags));
}

ObservationMask mask_from_weights(const Dims& dims, std::span<const double> weights,
                                  std::span<const double> gradient, double low_thresh,
                                  double high_thresh, double gradient_cut) {
  check_dims(dims);
  const std::size_t n = voxel_count(dims);
  if (weights.size() != n || gradient.size() != n)
    throw ShapeError("weights and gradient arrays must match the mask dimensions");
  if (!(0.0 <= low_thresh && low_thresh <= high_thresh && high_thresh <= 1.0))
    throw ParameterError("thresholds must satisfy 0 <= low <= high <= 1");
  std::vector<std::uint8_t> flags(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = gradient[i] > gradient_cut ? high_thresh : low_thresh;
    flags[i] = weights[i] >= t ? 1 : 0;
  }
  return ObservationMask(dims, std::move(flags));
}

std::vector<double> gradient_magnitude(const Volume& v) {
  const Dims& n = v.dims();
  std::vector<double> out(v.size());
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Index3 p{i, j, k};
        double sq = 0.0;
        for (int a = 0; a < 3; ++a) {
          if (n[a] < 2) continue;
          Index3 lo = p, hi = p;
          lo[a] = std::max(p[a] - 1, 0);
          hi[a] = std::min(p[a] + 1, n[a] - 1);
          const double diff = static_cast<double>(v.at(hi[0], hi[1], hi[2])) - v.at(lo[0], lo[1], lo[2]);
          const double g = diff / ((hi[a] - lo[a]) * v.spacing()[a]);
          sq += g * g;
        }
        out[linear_index(n, i, j, k)] = std::sqrt(sq);
      }
  return out;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ParameterError("quantile of an empty set");
  if (q < 0.0 || q > 1.0) throw ParameterError("quantile must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

}  // namespace patchgmm

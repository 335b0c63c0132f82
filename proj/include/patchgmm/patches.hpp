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

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "patchgmm/volume.hpp"

namespace patchgmm {

// Subvolume tiling of a volume. Along each axis, centers start at half the
// subvolume size and are `stride` apart; the last center is placed so that its
// subvolume ends at the volume boundary. Each subvolume box is the block of
// side subvolume_size around its center intersected with the volume, so boxes
// are only clipped when the volume is smaller than a subvolume.
struct SubvolumeGrid {
  Dims subvolume_size{21, 21, 21};
  Dims stride{11, 11, 11};
  Dims patch_size{11, 11, 11};
  Dims volume_dims{1, 1, 1};

  int patch_dim() const { return patch_size[0] * patch_size[1] * patch_size[2]; }

  // Throws ParameterError on inconsistent sizes.
  void validate() const;

  std::vector<Index3> centers() const;

  struct Box {
    Index3 lo;  // inclusive
    Index3 hi;  // exclusive
  };
  Box subvolume_box(const Index3& center) const;

  // Number of patch positions fully inside the clipped subvolume.
  std::size_t patches_in_subvolume(const Index3& center) const;
};

// One vectorized patch. `values` has D entries in fastest-first order inside
// the patch; entries not listed in `observed` are meaningless and never read
// by learning code.
struct PatchSample {
  Eigen::VectorXd values;
  std::vector<int> observed;  // strictly increasing, < D
  int volume_id = 0;
  Index3 corner{0, 0, 0};

  int dim() const { return static_cast<int>(values.size()); }
  bool fully_observed() const { return observed.size() == static_cast<std::size_t>(values.size()); }
  Eigen::VectorXd observed_values() const;
};

// Throws ValidationError if the observed index set is malformed.
void validate_patch(const PatchSample& p);

// All patches fully inside the subvolume at `center`, scanned with the corner
// in fastest-first order. Patches without observed voxels are dropped.
std::vector<PatchSample> extract_patches(const Volume& v, const ObservationMask& m, const SubvolumeGrid& grid,
                                         const Index3& center, int volume_id = 0);

// Every patch position of the subvolume, including patches without observed
// voxels; restoration imputes those from the mixture prior.
std::vector<PatchSample> extract_restoration_patches(const Volume& v, const ObservationMask& m,
                                                     const SubvolumeGrid& grid, const Index3& center);

// Dense (fully valued) patches for every position in the subvolume; used for
// initialization from interpolated volumes.
std::vector<Eigen::VectorXd> extract_dense_patches(const Volume& v, const SubvolumeGrid& grid, const Index3& center);

// Patch corners in the subvolume in the order used by extract_patches.
std::vector<Index3> patch_corners(const SubvolumeGrid& grid, const Index3& center);

Eigen::VectorXd read_patch(const Volume& v, const Dims& patch_size, const Index3& corner);

struct PlacedPatch {
  Eigen::VectorXd values;
  Index3 corner;
};

enum class StitchWeighting { kUniform };

// Running per-voxel sums for patch averaging. Accumulation order is the call
// order, so sequential use gives reproducible results.
class StitchAccumulator {
 public:
  StitchAccumulator(const Dims& dims, const Dims& patch_size);

  void add(const Eigen::VectorXd& values, const Index3& corner, double weight = 1.0);

  // Throws CoverageError naming the first voxel (fastest-first order) that no
  // patch covered.
  Volume finish(const Spacing& spacing = {1.0, 1.0, 1.0}) const;

 private:
  Dims dims_;
  Dims patch_size_;
  std::vector<double> sum_;
  std::vector<double> weight_;
};

Volume stitch(std::span<const PlacedPatch> patches, const Dims& dims, const Dims& patch_size,
              StitchWeighting weighting = StitchWeighting::kUniform, const Spacing& spacing = {1.0, 1.0, 1.0});

}  // namespace patchgmm

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

#include "patchgmm/patches.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patchgmm/error.hpp"

namespace patchgmm {

namespace {

std::vector<int> axis_centers(int n, int size, int stride) {
  if (size >= n) return {n / 2};
  const int half = size / 2;
  const int last = n - size + half;  // box [n - size, n)
  std::vector<int> out;
  for (int c = half;; c += stride) {
    out.push_back(std::min(c, last));
    if (c >= last) break;
  }
  return out;
}

}  // namespace

void SubvolumeGrid::validate() const {
  check_dims(volume_dims);
  for (int a = 0; a < 3; ++a) {
    if (subvolume_size[a] < 1 || stride[a] < 1 || patch_size[a] < 1)
      throw ParameterError("grid sizes must be positive");
    if (patch_size[a] > subvolume_size[a]) throw ParameterError("patch size exceeds subvolume size");
    if (patch_size[a] > volume_dims[a]) throw ParameterError("patch size exceeds volume size");
    // Consecutive boxes must overlap or touch so that coverage is complete.
    if (stride[a] > subvolume_size[a])
      throw ParameterError("stride leaves gaps between subvolumes");
  }
}

std::vector<Index3> SubvolumeGrid::centers() const {
  validate();
  std::array<std::vector<int>, 3> per_axis;
  for (int a = 0; a < 3; ++a) per_axis[a] = axis_centers(volume_dims[a], subvolume_size[a], stride[a]);
  std::vector<Index3> out;
  for (int z : per_axis[2])
    for (int y : per_axis[1])
      for (int x : per_axis[0]) out.push_back({x, y, z});
  return out;
}

SubvolumeGrid::Box SubvolumeGrid::subvolume_box(const Index3& center) const {
  Box b{};
  for (int a = 0; a < 3; ++a) {
    const int lo = center[a] - subvolume_size[a] / 2;
    b.lo[a] = std::max(lo, 0);
    b.hi[a] = std::min(lo + subvolume_size[a], volume_dims[a]);
  }
  return b;
}

std::size_t SubvolumeGrid::patches_in_subvolume(const Index3& center) const {
  const Box b = subvolume_box(center);
  std::size_t n = 1;
  for (int a = 0; a < 3; ++a) n *= static_cast<std::size_t>(std::max(b.hi[a] - b.lo[a] - patch_size[a] + 1, 0));
  return n;
}

Eigen::VectorXd PatchSample::observed_values() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(observed.size()));
  for (std::size_t t = 0; t < observed.size(); ++t) out[static_cast<Eigen::Index>(t)] = values[observed[t]];
  return out;
}

void validate_patch(const PatchSample& p) {
  if (p.observed.empty()) throw ValidationError("patch has no observed voxels");
  int prev = -1;
  for (int idx : p.observed) {
    if (idx <= prev || idx >= p.dim()) throw ValidationError("observed indices must be strictly increasing and < D");
    if (!std::isfinite(p.values[idx])) throw ValidationError("observed patch value is not finite");
    prev = idx;
  }
}

std::vector<Index3> patch_corners(const SubvolumeGrid& grid, const Index3& center) {
  const auto b = grid.subvolume_box(center);
  std::vector<Index3> out;
  for (int z = b.lo[2]; z + grid.patch_size[2] <= b.hi[2]; ++z)
    for (int y = b.lo[1]; y + grid.patch_size[1] <= b.hi[1]; ++y)
      for (int x = b.lo[0]; x + grid.patch_size[0] <= b.hi[0]; ++x) out.push_back({x, y, z});
  return out;
}

Eigen::VectorXd read_patch(const Volume& v, const Dims& ps, const Index3& corner) {
  Eigen::VectorXd out(ps[0] * ps[1] * ps[2]);
  Eigen::Index t = 0;
  for (int k = 0; k < ps[2]; ++k)
    for (int j = 0; j < ps[1]; ++j)
      for (int i = 0; i < ps[0]; ++i) out[t++] = v.at(corner[0] + i, corner[1] + j, corner[2] + k);
  return out;
}

namespace {

std::vector<PatchSample> collect_patches(const Volume& v, const ObservationMask& m, const SubvolumeGrid& grid,
                                         const Index3& center, int volume_id, bool keep_unobserved) {
  if (v.dims() != m.dims()) throw ShapeError("mask dimensions do not match volume");
  if (v.dims() != grid.volume_dims) throw ShapeError("grid was built for different volume dimensions");
  const Dims& ps = grid.patch_size;
  std::vector<PatchSample> out;
  for (const Index3& corner : patch_corners(grid, center)) {
    PatchSample p;
    p.values = read_patch(v, ps, corner);
    p.volume_id = volume_id;
    p.corner = corner;
    int t = 0;
    for (int k = 0; k < ps[2]; ++k)
      for (int j = 0; j < ps[1]; ++j)
        for (int i = 0; i < ps[0]; ++i, ++t)
          if (m.observed(corner[0] + i, corner[1] + j, corner[2] + k)) p.observed.push_back(t);
    if (keep_unobserved || !p.observed.empty()) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<PatchSample> extract_patches(const Volume& v, const ObservationMask& m, const SubvolumeGrid& grid,
                                         const Index3& center, int volume_id) {
  return collect_patches(v, m, grid, center, volume_id, false);
}

std::vector<PatchSample> extract_restoration_patches(const Volume& v, const ObservationMask& m,
                                                     const SubvolumeGrid& grid, const Index3& center) {
  return collect_patches(v, m, grid, center, 0, true);
}

std::vector<Eigen::VectorXd> extract_dense_patches(const Volume& v, const SubvolumeGrid& grid, const Index3& center) {
  std::vector<Eigen::VectorXd> out;
  for (const Index3& corner : patch_corners(grid, center)) out.push_back(read_patch(v, grid.patch_size, corner));
  return out;
}

StitchAccumulator::StitchAccumulator(const Dims& dims, const Dims& patch_size)
    : dims_(dims), patch_size_(patch_size), sum_(voxel_count(dims), 0.0), weight_(voxel_count(dims), 0.0) {}

void StitchAccumulator::add(const Eigen::VectorXd& values, const Index3& corner, double weight) {
  const Dims& ps = patch_size_;
  if (values.size() != ps[0] * ps[1] * ps[2]) throw ShapeError("patch length does not match patch size");
  for (int a = 0; a < 3; ++a)
    if (corner[a] < 0 || corner[a] + ps[a] > dims_[a]) throw ShapeError("patch lies outside the volume");
  Eigen::Index t = 0;
  for (int k = 0; k < ps[2]; ++k)
    for (int j = 0; j < ps[1]; ++j)
      for (int i = 0; i < ps[0]; ++i, ++t) {
        const std::size_t idx = linear_index(dims_, corner[0] + i, corner[1] + j, corner[2] + k);
        sum_[idx] += weight * values[t];
        weight_[idx] += weight;
      }
}

Volume StitchAccumulator::finish(const Spacing& spacing) const {
  std::vector<float> out(sum_.size());
  for (std::size_t idx = 0; idx < sum_.size(); ++idx) {
    if (weight_[idx] <= 0.0) {
      const Index3 p = unravel_index(dims_, idx);
      throw CoverageError("voxel (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ", " +
                          std::to_string(p[2]) + ") is not covered by any patch");
    }
    out[idx] = static_cast<float>(sum_[idx] / weight_[idx]);
  }
  return Volume(dims_, spacing, std::move(out));
}

Volume stitch(std::span<const PlacedPatch> patches, const Dims& dims, const Dims& patch_size,
              StitchWeighting /*weighting*/, const Spacing& spacing) {
  StitchAccumulator acc(dims, patch_size);
  for (const auto& p : patches) acc.add(p.values, p.corner);
  return acc.finish(spacing);
}

}  // namespace patchgmm

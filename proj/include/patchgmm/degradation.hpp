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
#include <cstdint>
#include <span>
#include <vector>

#include "patchgmm/volume.hpp"

namespace patchgmm {

using EulerAngles = std::array<double, 3>;

// Planes perpendicular to axis 2: observed iff k % spacing_factor == offset.
ObservationMask axial_slice_mask(const Dims& dims, int spacing_factor, int offset);

// Parallel planes spacing_factor voxels apart whose normal is the z axis
// rotated by R = Rz(c) * Ry(b) * Rx(a) for rotation = (a, b, c). A voxel is
// observed when its distance to the nearest plane is below half a voxel.
// The plane offset is drawn from seed.
ObservationMask rotated_plane_mask(const Dims& dims, int spacing_factor, const EulerAngles& rotation,
                                   std::uint64_t seed);

// Offset in [0, spacing_factor) used by rotated_plane_mask for seed.
int plane_offset_for_seed(int spacing_factor, std::uint64_t seed);

// Exactly round(fraction * total) voxels, chosen uniformly without replacement.
ObservationMask random_mask(const Dims& dims, double fraction, std::uint64_t seed);

// Normalized Gaussian taps for sigma in voxels, truncated at 3 sigma.
std::vector<double> gaussian_kernel(double sigma_vox);

// Convolution of one line with an odd-length kernel, half-sample symmetric
// padding (x[-1] = x[0]). Symmetric kernels preserve the sum of the line.
std::vector<double> blur_line(std::span<const double> line, std::span<const double> kernel);

// Gaussian blur along one axis, sigma given in mm. The kernel is truncated at
// 3 sigma, renormalized and applied with half-sample symmetric padding.
Volume thickness_blur(const Volume& v, double sigma_mm, int axis);

}  // namespace patchgmm

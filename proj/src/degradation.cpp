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

#include "patchgmm/degradation.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "patchgmm/error.hpp"

namespace patchgmm {

namespace {

// Mirror index into [0, n) with period 2n.
int reflect(int idx, int n) {
  const int period = 2 * n;
  int r = idx % period;
  if (r < 0) r += period;
  return r < n ? r : period - 1 - r;
}

}  // namespace

ObservationMask axial_slice_mask(const Dims& dims, int spacing_factor, int offset) {
  check_dims(dims);
  if (spacing_factor < 1) throw ParameterError("spacing factor must be at least 1");
  if (offset < 0 || offset >= spacing_factor) throw ParameterError("offset must lie in [0, spacing_factor)");
  std::vector<std::uint8_t> flags(voxel_count(dims), 0);
  for (int k = offset; k < dims[2]; k += spacing_factor)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) flags[linear_index(dims, i, j, k)] = 1;
  return ObservationMask(dims, std::move(flags));
}

int plane_offset_for_seed(int spacing_factor, std::uint64_t seed) {
  if (spacing_factor < 1) throw ParameterError("spacing factor must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, spacing_factor - 1);
  return pick(rng);
}

ObservationMask rotated_plane_mask(const Dims& dims, int spacing_factor, const EulerAngles& rotation,
                                   std::uint64_t seed) {
  check_dims(dims);
  const int offset = plane_offset_for_seed(spacing_factor, seed);
  const double ca = std::cos(rotation[0]), sa = std::sin(rotation[0]);
  const double cb = std::cos(rotation[1]), sb = std::sin(rotation[1]);
  const double cc = std::cos(rotation[2]), sc = std::sin(rotation[2]);
  // Third column of Rz(c) Ry(b) Rx(a).
  const double nx = cc * sb * ca + sc * sa;
  const double ny = sc * sb * ca - cc * sa;
  const double nz = cb * ca;
  const double f = spacing_factor;
  std::vector<std::uint8_t> flags(voxel_count(dims), 0);
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const double s = nx * i + ny * j + nz * k - offset;
        const double dist = std::abs(s - f * std::round(s / f));
        if (dist < 0.5) flags[linear_index(dims, i, j, k)] = 1;
      }
  return ObservationMask(dims, std::move(flags));
}

ObservationMask random_mask(const Dims& dims, double fraction, std::uint64_t seed) {
  check_dims(dims);
  if (!(fraction > 0.0) || fraction > 1.0) throw ParameterError("fraction must lie in (0, 1]");
  const std::size_t total = voxel_count(dims);
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  if (count == 0) throw ParameterError("fraction selects no voxels");
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first count entries are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::uint8_t> flags(total, 0);
  for (std::size_t i = 0; i < count; ++i) flags[order[i]] = 1;
  return ObservationMask(dims, std::move(flags));
}

std::vector<double> gaussian_kernel(double sigma_vox) {
  if (!(sigma_vox >= 0.0)) throw ParameterError("blur sigma must be non-negative");
  const int radius = static_cast<int>(std::floor(3.0 * sigma_vox + 1e-12));
  if (radius == 0) return {1.0};
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double z = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[static_cast<std::size_t>(t + radius)] = std::exp(-0.5 * t * t / (sigma_vox * sigma_vox));
    z += kernel[static_cast<std::size_t>(t + radius)];
  }
  for (auto& w : kernel) w /= z;
  return kernel;
}

std::vector<double> blur_line(std::span<const double> line, std::span<const double> kernel) {
  if (kernel.size() % 2 == 0) throw ParameterError("kernel length must be odd");
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = static_cast<int>(line.size());
  std::vector<double> out(line.size());
  for (int c = 0; c < n; ++c) {
    double acc = 0.0;
    for (int t = -radius; t <= radius; ++t)
      acc += kernel[static_cast<std::size_t>(t + radius)] * line[static_cast<std::size_t>(reflect(c + t, n))];
    out[static_cast<std::size_t>(c)] = acc;
  }
  return out;
}

Volume thickness_blur(const Volume& v, double sigma_mm, int axis) {
  if (!(sigma_mm >= 0.0)) throw ParameterError("blur sigma must be non-negative");
  if (axis < 0 || axis > 2) throw ParameterError("axis must be 0, 1 or 2");
  if (sigma_mm == 0.0) return v;
  const auto kernel = gaussian_kernel(sigma_mm / v.spacing()[axis]);
  if (kernel.size() == 1) return v;

  const Dims& n = v.dims();
  std::vector<float> out(v.size());
  std::vector<double> line(static_cast<std::size_t>(n[axis]));
  Index3 lim = n;
  lim[axis] = 1;
  for (int k = 0; k < lim[2]; ++k)
    for (int j = 0; j < lim[1]; ++j)
      for (int i = 0; i < lim[0]; ++i) {
        Index3 p{i, j, k};
        for (int t = 0; t < n[axis]; ++t) {
          p[axis] = t;
          line[static_cast<std::size_t>(t)] = v.at(p[0], p[1], p[2]);
        }
        const auto blurred = blur_line(line, kernel);
        for (int t = 0; t < n[axis]; ++t) {
          p[axis] = t;
          out[linear_index(n, p[0], p[1], p[2])] = static_cast<float>(blurred[static_cast<std::size_t>(t)]);
        }
      }
  return Volume(n, v.spacing(), std::move(out));
}

}  // namespace patchgmm

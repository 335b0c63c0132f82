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

#include <optional>
#include <string>
#include <vector>

#include "patchgmm/volume.hpp"

namespace patchgmm {

// Mean squared difference over `region` (all voxels when absent).
double mse(const Volume& z, const Volume& z0, const std::optional<ObservationMask>& region = std::nullopt);

enum class PsnrConvention {
  kLogRatio,      // log10(max(z0) / mse), the definition used for reported numbers
  kConventional,  // 10 log10(max(z0)^2 / mse)
};

// Throws InfinitePsnrError when mse is zero.
double psnr(const Volume& z, const Volume& z0, PsnrConvention convention = PsnrConvention::kLogRatio);
double psnr_from_mse(double max_value, double mse_value, PsnrConvention convention = PsnrConvention::kLogRatio);

// Positive iff the method has the lower error.
inline double improvement_over_baseline(double method_mse, double baseline_mse) { return baseline_mse - method_mse; }

// Each missing voxel copies the nearest observed voxel (Euclidean distance in
// voxel units; ties go to the lowest linear index).
Volume baseline_nearest(const Volume& v, const ObservationMask& m);

// Axis along which the mask consists of whole observed or missing planes, or
// -1 if there is none. Fully observed masks report -1 too.
int planar_axis(const ObservationMask& m);

// Linear interpolation between the bracketing observed planes along the
// planar axis, constant extrapolation past the outermost planes. Throws
// ValidationError for non-planar masks.
Volume baseline_linear(const Volume& v, const ObservationMask& m);

struct ReportRow {
  std::string subject;
  std::string method;
  double mse = 0.0;
  double psnr = 0.0;         // +inf when mse is zero
  double improvement = 0.0;  // relative to nearest neighbour
};

// Tab-separated table with a header line.
std::string format_report(const std::vector<ReportRow>& rows);

}  // namespace patchgmm

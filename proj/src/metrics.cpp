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

#include "patchgmm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "patchgmm/error.hpp"

namespace patchgmm {

double mse(const Volume& z, const Volume& z0, const std::optional<ObservationMask>& region) {
  if (z.dims() != z0.dims()) throw ShapeError("volumes have different dimensions");
  if (region && region->dims() != z.dims()) throw ShapeError("region mask has different dimensions");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (region && !region->observed(i)) continue;
    const double diff = static_cast<double>(z[i]) - static_cast<double>(z0[i]);
    sum += diff * diff;
    ++n;
  }
  if (n == 0) throw ValidationError("mse region is empty");
  return sum / static_cast<double>(n);
}

double psnr_from_mse(double max_value, double mse_value, PsnrConvention convention) {
  if (mse_value == 0.0) throw InfinitePsnrError("reconstruction is exact; PSNR is infinite");
  if (!(mse_value > 0.0)) throw ValidationError("mse must be positive");
  if (convention == PsnrConvention::kConventional) return 10.0 * std::log10(max_value * max_value / mse_value);
  return std::log10(max_value / mse_value);
}

double psnr(const Volume& z, const Volume& z0, PsnrConvention convention) {
  return psnr_from_mse(static_cast<double>(z0.max_value()), mse(z, z0), convention);
}

Volume baseline_nearest(const Volume& v, const ObservationMask& m) {
  require_usable_mask(v, m);
  const Dims& n = v.dims();
  std::vector<float> out(v.data().begin(), v.data().end());
  const int rmax = std::max({n[0], n[1], n[2]});
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const std::size_t here = linear_index(n, i, j, k);
        if (m.observed(here)) continue;
        long best_d2 = std::numeric_limits<long>::max();
        std::size_t best = 0;
        // Scan cube shells of growing Chebyshev radius; a shell at radius r
        // cannot beat a hit with squared distance <= r^2.
        for (int r = 1; r <= rmax; ++r) {
          for (int dk = -r; dk <= r; ++dk) {
            const int kk = k + dk;
            if (kk < 0 || kk >= n[2]) continue;
            for (int dj = -r; dj <= r; ++dj) {
              const int jj = j + dj;
              if (jj < 0 || jj >= n[1]) continue;
              const bool face = std::abs(dk) == r || std::abs(dj) == r;
              for (int di = -r; di <= r; di += face ? 1 : 2 * r) {
                const int ii = i + di;
                if (ii < 0 || ii >= n[0]) continue;
                const std::size_t idx = linear_index(n, ii, jj, kk);
                if (!m.observed(idx)) continue;
                const long d2 = static_cast<long>(di) * di + static_cast<long>(dj) * dj + static_cast<long>(dk) * dk;
                if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                  best_d2 = d2;
                  best = idx;
                }
              }
            }
          }
          if (best_d2 <= static_cast<long>(r) * r) break;
        }
        out[here] = v[best];
      }
  return Volume(n, v.spacing(), std::move(out));
}

int planar_axis(const ObservationMask& m) {
  const Dims& n = m.dims();
  if (m.observed_count() == m.size()) return -1;
  for (int axis = 2; axis >= 0; --axis) {
    bool planar = true;
    for (int s = 0; s < n[axis] && planar; ++s) {
      int first = -1;
      for (int k = 0; k < n[2] && planar; ++k)
        for (int j = 0; j < n[1] && planar; ++j)
          for (int i = 0; i < n[0] && planar; ++i) {
            const Index3 p{i, j, k};
            if (p[axis] != s) continue;
            const int f = m.observed(i, j, k) ? 1 : 0;
            if (first < 0) first = f;
            else if (f != first) planar = false;
          }
    }
    if (planar) return axis;
  }
  return -1;
}

Volume baseline_linear(const Volume& v, const ObservationMask& m) {
  require_usable_mask(v, m);
  if (m.observed_count() == m.size()) return v;
  const int axis = planar_axis(m);
  if (axis < 0) throw ValidationError("linear baseline needs a mask made of whole planes");
  const Dims& n = v.dims();
  std::vector<int> planes;
  for (int s = 0; s < n[axis]; ++s) {
    Index3 p{0, 0, 0};
    p[axis] = s;
    if (m.observed(p[0], p[1], p[2])) planes.push_back(s);
  }
  // For every slice position: lower and upper bracketing planes and weight.
  std::vector<int> lo(n[axis]), hi(n[axis]);
  std::vector<double> t(n[axis]);
  std::size_t next = 0;
  for (int s = 0; s < n[axis]; ++s) {
    while (next < planes.size() && planes[next] < s) ++next;
    if (next < planes.size() && planes[next] == s) {
      lo[s] = hi[s] = s;
      t[s] = 0.0;
    } else if (next == 0) {
      lo[s] = hi[s] = planes.front();
      t[s] = 0.0;
    } else if (next == planes.size()) {
      lo[s] = hi[s] = planes.back();
      t[s] = 0.0;
    } else {
      lo[s] = planes[next - 1];
      hi[s] = planes[next];
      t[s] = static_cast<double>(s - lo[s]) / (hi[s] - lo[s]);
    }
  }
  std::vector<float> out(v.size());
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        Index3 p{i, j, k};
        const int s = p[axis];
        Index3 a = p, b = p;
        a[axis] = lo[s];
        b[axis] = hi[s];
        const double va = v.at(a[0], a[1], a[2]);
        const double vb = v.at(b[0], b[1], b[2]);
        out[linear_index(n, i, j, k)] = static_cast<float>((1.0 - t[s]) * va + t[s] * vb);
      }
  return Volume(n, v.spacing(), std::move(out));
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "subject\tmethod\tmse\tpsnr\timprovement\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.subject << '\t' << r.method;
    std::snprintf(buf, sizeof buf, "\t%.9e", r.mse);
    os << buf;
    if (std::isfinite(r.psnr)) std::snprintf(buf, sizeof buf, "\t%.9f", r.psnr);
    else std::snprintf(buf, sizeof buf, "\tinf");
    os << buf;
    std::snprintf(buf, sizeof buf, "\t%.9e\n", r.improvement);
    os << buf;
  }
  return os.str();
}

}  // namespace patchgmm

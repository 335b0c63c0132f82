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

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "patchgmm/degradation.hpp"
#include "patchgmm/error.hpp"
#include "patchgmm/metrics.hpp"

using namespace patchgmm;

namespace {

Volume random_volume(const Dims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  std::vector<float> data(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
  for (auto& x : data) x = u(rng);
  return Volume(dims, std::move(data));
}

ObservationMask bernoulli_mask(const Dims& dims, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(p);
  std::vector<std::uint8_t> f(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
  for (auto& x : f) x = b(rng) ? 1 : 0;
  f[0] = 1;
  return ObservationMask(dims, f);
}

// Brute-force nearest observed voxel: full scan, strict improvement only, so
// the first (lowest linear index) candidate wins ties.
Volume nearest_oracle(const Volume& v, const ObservationMask& m) {
  const Dims& n = v.dims();
  std::vector<float> out(v.data().begin(), v.data().end());
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        if (m.observed(linear_index(n, i, j, k))) continue;
        long best = std::numeric_limits<long>::max();
        float val = 0.0F;
        for (int c = 0; c < n[2]; ++c)
          for (int b = 0; b < n[1]; ++b)
            for (int a = 0; a < n[0]; ++a) {
              if (!m.observed(linear_index(n, a, b, c))) continue;
              const long d2 = long(a - i) * (a - i) + long(b - j) * (b - j) + long(c - k) * (c - k);
              if (d2 < best) {
                best = d2;
                val = v.at(a, b, c);
              }
            }
        out[linear_index(n, i, j, k)] = val;
      }
  return Volume(n, std::move(out));
}

}  // namespace

TEST_CASE("mse and psnr against scalar loops") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dims dims{7, 5, 6};
    const auto a = random_volume(dims, s);
    const auto b = random_volume(dims, s + 100);
    const auto region = bernoulli_mask(dims, 0.4, s + 200);
    double sum = 0.0, rsum = 0.0, mx = -1.0;
    int rn = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double e = double(a[i]) - double(b[i]);
      sum += e * e;
      if (region.observed(i)) {
        rsum += e * e;
        ++rn;
      }
      mx = std::max(mx, double(b[i]));
    }
    const double m0 = sum / double(a.size());
    CHECK(std::abs(mse(a, b) - m0) <= 1e-12 * m0);
    CHECK(std::abs(mse(a, b, region) - rsum / rn) <= 1e-12 * (rsum / rn));
    const double p = std::log10(mx / m0);
    CHECK(std::abs(psnr(a, b) - p) <= 1e-12 * std::abs(p));
    const double pc = 10.0 * std::log10(mx * mx / m0);
    CHECK(std::abs(psnr(a, b, PsnrConvention::kConventional) - pc) <= 1e-12 * std::abs(pc));
  }
}

TEST_CASE("psnr conventions and edge cases") {
  CHECK(psnr_from_mse(1.0, 0.01) == 2.0);
  CHECK(psnr_from_mse(1.0, 0.01, PsnrConvention::kConventional) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK_THROWS_AS(psnr_from_mse(1.0, 0.0), InfinitePsnrError);
  CHECK_THROWS_AS(psnr_from_mse(1.0, -1.0), ValidationError);
  const auto a = random_volume({3, 3, 3}, 1);
  CHECK(mse(a, a) == 0.0);
  CHECK_THROWS_AS(psnr(a, a), InfinitePsnrError);
  CHECK_THROWS_AS(mse(a, random_volume({3, 3, 4}, 1)), ShapeError);
  CHECK_THROWS_AS(mse(a, a, ObservationMask({3, 3, 3}, std::vector<std::uint8_t>(27, 0))), ValidationError);
  CHECK(improvement_over_baseline(0.1, 0.3) == doctest::Approx(0.2));
  CHECK(improvement_over_baseline(0.3, 0.1) < 0.0);
}

TEST_CASE("nearest-neighbour baseline matches a brute-force scan") {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Dims dims{6, 7, 5};
    const auto v = random_volume(dims, s);
    const auto m = s % 2 == 0 ? bernoulli_mask(dims, 0.1, s) : axial_slice_mask(dims, 3, int(s % 3));
    const auto got = baseline_nearest(v, m);
    const auto expect = nearest_oracle(v, m);
    CHECK(std::equal(got.data().begin(), got.data().end(), expect.data().begin()));
  }
  // equidistant observed voxels: the lower linear index wins
  std::vector<std::uint8_t> f(5, 0);
  f[0] = f[4] = 1;
  const Volume v({5, 1, 1}, {1.0F, 0.0F, 0.0F, 0.0F, 2.0F});
  const auto r = baseline_nearest(v, ObservationMask({5, 1, 1}, f));
  CHECK(r[1] == 1.0F);
  CHECK(r[2] == 1.0F);
  CHECK(r[3] == 2.0F);
}

TEST_CASE("planar axis detection") {
  const Dims dims{6, 6, 12};
  CHECK(planar_axis(axial_slice_mask(dims, 6, 2)) == 2);
  CHECK(planar_axis(bernoulli_mask(dims, 0.3, 1)) == -1);
  CHECK(planar_axis(ObservationMask(dims, std::vector<std::uint8_t>(432, 1))) == -1);
  std::vector<std::uint8_t> f(432, 0);
  for (int k = 0; k < 12; ++k)
    for (int j = 0; j < 6; ++j) f[linear_index(dims, 3, j, k)] = 1;
  CHECK(planar_axis(ObservationMask(dims, f)) == 0);
}

TEST_CASE("linear baseline interpolates between planes and extrapolates flat") {
  const Dims dims{2, 2, 10};
  std::vector<float> data(40);
  for (int k = 0; k < 10; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) data[linear_index(dims, i, j, k)] = float(k * k + i);
  const Volume v(dims, data);
  const auto m = axial_slice_mask(dims, 3, 2);  // planes 2, 5, 8
  const auto r = baseline_linear(v, m);
  for (int i = 0; i < 2; ++i) {
    CHECK(r.at(i, 0, 0) == float(4 + i));
    CHECK(r.at(i, 0, 1) == float(4 + i));
    CHECK(r.at(i, 1, 2) == float(4 + i));
    CHECK(r.at(i, 0, 3) == doctest::Approx((2.0 * (4 + i) + (25 + i)) / 3.0));
    CHECK(r.at(i, 0, 4) == doctest::Approx(((4 + i) + 2.0 * (25 + i)) / 3.0));
    CHECK(r.at(i, 0, 7) == doctest::Approx(((25 + i) + 2.0 * (64 + i)) / 3.0));
    CHECK(r.at(i, 0, 9) == float(64 + i));
  }
  CHECK_THROWS_AS(baseline_linear(v, bernoulli_mask(dims, 0.5, 3)), ValidationError);
}

TEST_CASE("report formatting") {
  const std::vector<ReportRow> rows{{"subject_000", "method", 0.25, std::log10(4.0), 0.5},
                                    {"subject_000", "nearest", 0.0, std::numeric_limits<double>::infinity(), 0.0}};
  const auto text = format_report(rows);
  CHECK(text ==
        "subject\tmethod\tmse\tpsnr\timprovement\n"
        "subject_000\tmethod\t2.500000000e-01\t0.602059991\t5.000000000e-01\n"
        "subject_000\tnearest\t0.000000000e+00\tinf\t0.000000000e+00\n");
}

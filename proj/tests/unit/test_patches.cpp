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

#include <algorithm>
#include <random>

#include "doctest.h"
#include "patchgmm/error.hpp"
#include "patchgmm/patches.hpp"

using namespace patchgmm;

namespace {

Volume random_volume(const Dims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  std::vector<float> data(voxel_count(dims));
  for (auto& x : data) x = u(rng);
  return Volume(dims, std::move(data));
}

SubvolumeGrid make_grid(const Dims& vol, int sub, int stride, int patch) {
  SubvolumeGrid g;
  g.volume_dims = vol;
  g.subvolume_size = {sub, sub, sub};
  g.stride = {stride, stride, stride};
  g.patch_size = {patch, patch, patch};
  return g;
}

}  // namespace

TEST_CASE("grid defaults follow the 21/11/11 layout") {
  SubvolumeGrid g;
  CHECK(g.subvolume_size == Dims{21, 21, 21});
  CHECK(g.stride == Dims{11, 11, 11});
  CHECK(g.patch_size == Dims{11, 11, 11});
  CHECK(g.patch_dim() == 1331);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(make_grid({30, 30, 30}, 9, 4, 11).validate(), ParameterError);
  CHECK_THROWS_AS(make_grid({30, 30, 30}, 9, 10, 5).validate(), ParameterError);
  CHECK_THROWS_AS(make_grid({4, 30, 30}, 9, 4, 5).validate(), ParameterError);
  CHECK_NOTHROW(make_grid({30, 30, 30}, 9, 9, 5).validate());
}

TEST_CASE("interior subvolume holds (s - p + 1)^3 patches") {
  const auto g = make_grid({64, 64, 64}, 21, 11, 11);
  const auto v = Volume::filled(g.volume_dims, 0.5F);
  const auto m = ObservationMask::all_observed(g.volume_dims);
  const Index3 c{21, 21, 21};
  CHECK(g.patches_in_subvolume(c) == 1331);
  const auto patches = extract_patches(v, m, g, c);
  CHECK(patches.size() == 1331);
  for (const auto& p : patches) CHECK(p.fully_observed());
}

TEST_CASE("subvolume equal to the patch gives one patch") {
  const auto g = make_grid({5, 5, 5}, 5, 5, 5);
  CHECK(g.centers().size() == 1);
  const auto v = random_volume(g.volume_dims, 1);
  const auto patches = extract_patches(v, ObservationMask::all_observed(g.volume_dims), g, g.centers()[0]);
  REQUIRE(patches.size() == 1);
  for (int j = 0; j < 125; ++j) CHECK(patches[0].values[j] == v[static_cast<std::size_t>(j)]);
}

TEST_CASE("every voxel lies in some subvolume and boxes stay inside the volume") {
  for (const auto& g : {make_grid({33, 33, 33}, 13, 13, 7), make_grid({33, 40, 29}, 21, 11, 11),
                        make_grid({17, 17, 17}, 9, 4, 5), make_grid({12, 12, 12}, 21, 11, 11)}) {
    const auto& n = g.volume_dims;
    std::vector<int> hit(voxel_count(n), 0);
    for (const auto& c : g.centers()) {
      const auto b = g.subvolume_box(c);
      for (int a = 0; a < 3; ++a) {
        CHECK(b.lo[a] >= 0);
        CHECK(b.hi[a] <= n[a]);
        CHECK(b.hi[a] - b.lo[a] >= g.patch_size[a]);
      }
      for (const auto& corner : patch_corners(g, c))
        for (int k = 0; k < g.patch_size[2]; ++k)
          for (int j = 0; j < g.patch_size[1]; ++j)
            for (int i = 0; i < g.patch_size[0]; ++i) ++hit[linear_index(n, corner[0] + i, corner[1] + j, corner[2] + k)];
    }
    CHECK(std::count(hit.begin(), hit.end(), 0) == 0);
  }
}

TEST_CASE("observed sets come from the mask and empty patches are dropped") {
  const auto g = make_grid({6, 6, 12}, 6, 6, 3);
  const Dims& n = g.volume_dims;
  std::vector<std::uint8_t> f(voxel_count(n), 0);
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i) f[linear_index(n, i, j, 0)] = 1;  // only plane k = 0
  const ObservationMask m(n, f);
  const auto v = random_volume(n, 3);
  for (const auto& c : g.centers()) {
    const auto patches = extract_patches(v, m, g, c, 4);
    for (const auto& p : patches) {
      CHECK(p.volume_id == 4);
      CHECK(p.corner[2] == 0);
      CHECK(p.observed.size() == 9);
      for (int idx : p.observed) CHECK(idx < 9);  // first plane in fastest-first order
      CHECK_NOTHROW(validate_patch(p));
    }
    const auto all = extract_restoration_patches(v, m, g, c);
    CHECK(all.size() == g.patches_in_subvolume(c));
  }
}

TEST_CASE("patch validation") {
  PatchSample p;
  p.values = Eigen::VectorXd::Zero(4);
  p.observed = {};
  CHECK_THROWS_AS(validate_patch(p), ValidationError);
  p.observed = {2, 1};
  CHECK_THROWS_AS(validate_patch(p), ValidationError);
  p.observed = {1, 4};
  CHECK_THROWS_AS(validate_patch(p), ValidationError);
  p.observed = {0, 3};
  p.values[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate_patch(p), ValidationError);
  p.values[2] = std::numeric_limits<double>::quiet_NaN();  // missing entries are never read
  p.values[3] = 1.0;
  CHECK_NOTHROW(validate_patch(p));
  CHECK(p.observed_values() == Eigen::Vector2d(0.0, 1.0));
}

TEST_CASE("stitch: single covering patch, equal overlaps, arithmetic mean") {
  const Dims d{2, 2, 2};
  Eigen::VectorXd vals(8);
  for (int i = 0; i < 8; ++i) vals[i] = 0.125 * i;
  const std::vector<PlacedPatch> one{{vals, {0, 0, 0}}};
  const auto out = stitch(one, d, d);
  for (std::size_t i = 0; i < 8; ++i) CHECK(out[i] == static_cast<float>(vals[static_cast<Eigen::Index>(i)]));

  const Dims line{3, 1, 1};
  const std::vector<PlacedPatch> same{{Eigen::Vector2d(0.5, 0.5), {0, 0, 0}}, {Eigen::Vector2d(0.5, 0.5), {1, 0, 0}}};
  const auto s = stitch(same, line, {2, 1, 1});
  CHECK(s[1] == 0.5F);
  const std::vector<PlacedPatch> ab{{Eigen::Vector2d(0.2, 0.2), {0, 0, 0}}, {Eigen::Vector2d(0.4, 0.4), {1, 0, 0}}};
  const auto t = stitch(ab, line, {2, 1, 1});
  CHECK(t[0] == 0.2F);
  CHECK(t[1] == doctest::Approx(0.3));
  CHECK(t[2] == 0.4F);
}

TEST_CASE("stitch reports the first uncovered voxel") {
  const std::vector<PlacedPatch> p{{Eigen::Vector2d(1.0, 1.0), {0, 0, 0}}};
  try {
    (void)stitch(p, {3, 1, 1}, {2, 1, 1});
    FAIL("expected a coverage error");
  } catch (const CoverageError& e) {
    CHECK(std::string(e.what()).find("(2, 0, 0)") != std::string::npos);
  }
}

TEST_CASE("extract then stitch reproduces a fully observed volume") {
  const auto g = make_grid({17, 15, 13}, 9, 5, 4);
  const auto v = random_volume(g.volume_dims, 8);
  const auto m = ObservationMask::all_observed(g.volume_dims);
  std::vector<PlacedPatch> placed;
  for (const auto& c : g.centers())
    for (const auto& p : extract_patches(v, m, g, c)) placed.push_back({p.values, p.corner});
  const auto out = stitch(placed, g.volume_dims, g.patch_size);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == v[i]);
}

TEST_CASE("stitch is invariant to the order of its patches") {
  const auto g = make_grid({9, 9, 9}, 9, 9, 4);
  const auto v = random_volume(g.volume_dims, 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<PlacedPatch> placed;
  for (const auto& p : extract_patches(v, ObservationMask::all_observed(g.volume_dims), g, g.centers()[0])) {
    Eigen::VectorXd vals = p.values;
    for (Eigen::Index j = 0; j < vals.size(); ++j) vals[j] += noise(rng);
    placed.push_back({vals, p.corner});
  }
  const auto a = stitch(placed, g.volume_dims, g.patch_size);
  std::shuffle(placed.begin(), placed.end(), rng);
  const auto b = stitch(placed, g.volume_dims, g.patch_size);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
}

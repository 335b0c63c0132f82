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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "patchgmm/error.hpp"
#include "patchgmm/model_io.hpp"

using namespace patchgmm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "patchgmm_test_model_io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void spill(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

}  // namespace

TEST_CASE("factored models round-trip exactly") {
  std::mt19937_64 rng(1);
  const auto m = oracle::random_model(3, 27, 4, rng);
  const auto p = fresh_dir("factored") / "m.mivm";
  save_mixture(m, p);
  const auto back = load_mixture(p);
  CHECK(back.pi == m.pi);
  CHECK(back.sigma2 == m.sigma2);
  CHECK(back.mu == m.mu);
  for (int k = 0; k < 3; ++k) CHECK(back.W[static_cast<std::size_t>(k)] == m.W[static_cast<std::size_t>(k)]);
  CHECK(peek_model_variant(p) == ModelVariant::kFactored);
  const auto bytes = slurp(p);
  CHECK(bytes.size() == 4 + 16 + 8 * (3 + 3 + 3 * 27 + 3 * 27 * 4));
  CHECK(bytes.substr(0, 4) == "MIVM");
  save_mixture(m, p);
  CHECK(slurp(p) == bytes);
}

TEST_CASE("full-covariance models round-trip exactly") {
  std::mt19937_64 rng(2);
  const auto m = FullCovModel::from_mixture(oracle::random_model(2, 8, 2, rng));
  const auto p = fresh_dir("full") / "m.mivm";
  save_full_cov(m, p);
  const auto back = load_full_cov(p);
  CHECK(back.pi == m.pi);
  CHECK(back.mu == m.mu);
  CHECK(back.Sigma[1] == m.Sigma[1]);
  CHECK(peek_model_variant(p) == ModelVariant::kFullCovariance);
  CHECK_THROWS_AS(load_mixture(p), FormatError);
}

TEST_CASE("corrupt model files are rejected") {
  std::mt19937_64 rng(3);
  const auto dir = fresh_dir("corrupt");
  const auto p = dir / "m.mivm";
  save_mixture(oracle::random_model(2, 5, 1, rng), p);
  const auto bytes = slurp(p);
  spill(dir / "short.mivm", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_mixture(dir / "short.mivm"), FormatError);
  spill(dir / "long.mivm", bytes + "x");
  CHECK_THROWS_AS(load_mixture(dir / "long.mivm"), FormatError);
  spill(dir / "magic.mivm", "XIVM" + bytes.substr(4));
  CHECK_THROWS_AS(load_mixture(dir / "magic.mivm"), FormatError);
  CHECK_THROWS_AS(load_mixture(dir / "absent.mivm"), IoError);
  // weights that do not sum to one fail validation
  auto bad = bytes;
  bad[4 + 16 + 7] = '\x40';
  spill(dir / "weights.mivm", bad);
  CHECK_THROWS_AS(load_mixture(dir / "weights.mivm"), Error);
}

TEST_CASE("manifests and model sets") {
  std::mt19937_64 rng(4);
  const auto dir = fresh_dir("manifest");
  Manifest man;
  man.grid.subvolume_size = {5, 5, 5};
  man.grid.stride = {3, 3, 3};
  man.grid.patch_size = {3, 3, 3};
  man.grid.volume_dims = {8, 8, 8};
  man.latent_dim = 2;
  std::map<Index3, MixtureModel> truth;
  for (const auto& c : man.grid.centers()) {
    auto m = oracle::random_model(2, 27, 2, rng);
    const auto stem = location_stem(c) + ".mivm";
    save_mixture(m, dir / stem);
    man.entries.push_back({c, stem});
    truth.emplace(c, std::move(m));
  }
  write_manifest(man, dir / "manifest.json");
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j["format"] == "patchgmm-manifest");
  CHECK(j["version"] == 1);
  CHECK(j["locations"].size() == man.entries.size());

  const auto back = read_manifest(dir / "manifest.json");
  CHECK(back.variant == "em");
  CHECK(back.grid.volume_dims == man.grid.volume_dims);
  CHECK(back.grid.stride == man.grid.stride);
  CHECK(back.entries.size() == man.entries.size());
  CHECK(back.entries[0].file == man.entries[0].file);

  const auto set = load_model_set(dir / "manifest.json");
  CHECK(set.models.size() == truth.size());
  for (const auto& [c, m] : truth) CHECK(set.at(c).mu == m.mu);

  CHECK(location_stem({1, 22, 333}) == "loc_001_022_333");

  fs::remove(dir / man.entries[1].file);
  CHECK_THROWS_AS(load_model_set(dir / "manifest.json"), ManifestError);
  spill(dir / "broken.json", "{\"format\": \"patchgmm-manifest\"");
  CHECK_THROWS_AS(read_manifest(dir / "broken.json"), ManifestError);
  spill(dir / "other.json", "{\"format\": \"something-else\", \"version\": 1}");
  CHECK_THROWS_AS(read_manifest(dir / "other.json"), ManifestError);
}

TEST_CASE("full-covariance model sets are projected to the manifest's latent dimension") {
  std::mt19937_64 rng(5);
  const auto dir = fresh_dir("ecm");
  Manifest man;
  man.variant = "ecm";
  man.grid.subvolume_size = {3, 3, 3};
  man.grid.stride = {3, 3, 3};
  man.grid.patch_size = {2, 2, 2};
  man.grid.volume_dims = {3, 3, 3};
  man.latent_dim = 2;
  const auto m = oracle::random_model(2, 8, 2, rng);
  const auto c = man.grid.centers().at(0);
  save_full_cov(FullCovModel::from_mixture(m), dir / "a.mivm");
  man.entries.push_back({c, "a.mivm"});
  write_manifest(man, dir / "manifest.json");
  const auto set = load_model_set(dir / "manifest.json");
  const auto& f = set.at(c);
  CHECK(f.latent_dim() == 2);
  for (int k = 0; k < 2; ++k) CHECK((oracle::dense_cov(f, k) - oracle::dense_cov(m, k)).cwiseAbs().maxCoeff() < 1e-10);
}

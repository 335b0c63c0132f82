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

#include <filesystem>
#include <string>
#include <vector>

#include "patchgmm/ecm.hpp"
#include "patchgmm/imputer.hpp"
#include "patchgmm/mixture.hpp"

namespace patchgmm {

// Model files, little-endian:
//   "MIVM" | u32 variant | u32 K | u32 D | u32 d | f64 pi[K] | f64 sigma2[K]
//   | f64 mu[K][D] | f64 W[K][D][d]                         (variant 0, factored)
//   "MIVM" | u32 variant | u32 K | u32 D | u32 0 | f64 pi[K]
//   | f64 mu[K][D] | f64 Sigma[K][D][D]                     (variant 1, full covariance)
enum class ModelVariant : std::uint32_t { kFactored = 0, kFullCovariance = 1 };

void save_mixture(const MixtureModel& m, const std::filesystem::path& path);
MixtureModel load_mixture(const std::filesystem::path& path);

void save_full_cov(const FullCovModel& m, const std::filesystem::path& path);
FullCovModel load_full_cov(const std::filesystem::path& path);

ModelVariant peek_model_variant(const std::filesystem::path& path);

// JSON manifest mapping subvolume centers to model files (paths relative to
// the manifest directory).
struct ManifestEntry {
  Index3 center{0, 0, 0};
  std::string file;
};

struct Manifest {
  std::string variant = "em";  // "em" (factored files) or "ecm" (full-covariance files)
  SubvolumeGrid grid;
  int latent_dim = 0;
  double sigma2_floor = 1e-6;
  std::vector<ManifestEntry> entries;
};

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

// Loads every model listed in the manifest. Full-covariance models are
// converted to factored form with the manifest's latent dimension.
ModelSet load_model_set(const std::filesystem::path& manifest_path);

std::string location_stem(const Index3& center);

}  // namespace patchgmm

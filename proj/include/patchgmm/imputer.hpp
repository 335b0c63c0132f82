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

#include <cstdint>
#include <map>
#include <optional>

#include <Eigen/Core>

#include "patchgmm/mixture.hpp"
#include "patchgmm/patches.hpp"

namespace patchgmm {

struct PatchImputation {
  Eigen::VectorXd values;  // all D entries, observed positions included
  int cluster = 0;         // most responsible cluster
};

// Hard assignment to the most responsible cluster (lowest index on ties),
// then mu_k + W_k xhat_k.
PatchImputation impute_patch_map(const PatchSample& p, const MixtureModel& model);

// Responsibility-weighted average of every cluster's reconstruction.
Eigen::VectorXd impute_patch_soft(const PatchSample& p, const MixtureModel& model);

struct SampleOptions {
  // Replaces sigma2 of the chosen cluster in the sampling covariance.
  std::optional<double> sigma2_override;
};

// Draw from N(mu_k + W_k xhat, sigma2_k I + W_k (S + xhat xhat^T) W_k^T) for
// the most responsible cluster k.
Eigen::VectorXd impute_patch_sample(const PatchSample& p, const MixtureModel& model, std::uint64_t seed,
                                    const SampleOptions& opts = {});

// Trained models keyed by subvolume center.
struct ModelSet {
  SubvolumeGrid grid;
  std::map<Index3, MixtureModel> models;

  // Throws ManifestError if no model is stored for the center.
  const MixtureModel& at(const Index3& center) const;
};

enum class ImputeMode { kMap, kSample };

struct RestoreOptions {
  ImputeMode mode = ImputeMode::kMap;
  bool keep_observed = false;
  bool soft = false;  // only used in kMap mode
  std::uint64_t seed = 0;
  int workers = 1;
};

// Imputes every patch of every subvolume with that location's model and
// averages overlapping patches.
Volume restore_volume(const Volume& v, const ObservationMask& m, const ModelSet& models,
                      const RestoreOptions& opts = {});

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace patchgmm

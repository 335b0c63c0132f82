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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "patchgmm/mixture.hpp"

namespace patchgmm {

struct TrainConfig {
  int K = 5;
  int d_target = 30;
  int d_init = 1;
  int d_growth_per_iter = 1;
  int max_iters = 100;
  double loglik_rel_tol = 1e-6;
  double sigma2_floor = 1e-6;
  double min_cluster_weight = 1e-4;
  std::uint64_t seed = 0;
  // Iterations of the diagonal GMM fit used for initialization.
  int init_gmm_iters = 25;
  // See MStepOptions::min_latent_spread. Stops a small cluster from growing
  // an unbounded loading on a voxel whose few observers share one posterior.
  double min_latent_spread = 1e-6;

  // Throws ParameterError unless 1 <= d_init <= d_target < D and K >= 1.
  void validate(int D) const;
};

// Latent dimension used by the E-step of (1-based) iteration t.
int latent_dim_at_iteration(const TrainConfig& cfg, int iteration);

// Diagonal-covariance GMM on fully valued patches (k-means++ seeding), then a
// rank-d_init factor per cluster from its largest variances.
MixtureModel init_from_interpolation(std::span<const Eigen::VectorXd> patches, const TrainConfig& cfg);

// Index structures reused across EM iterations: observation patterns and,
// for every patch voxel j, the patches observing it.
class PreparedPatches {
 public:
  explicit PreparedPatches(std::span<const PatchSample> patches);

  std::span<const PatchSample> patches() const { return patches_; }
  int size() const { return static_cast<int>(patches_.size()); }
  int dim() const { return dim_; }
  const PatternIndex& patterns() const { return patterns_; }
  std::span<const int> observers(int j) const;
  int unobserved_voxels() const;

 private:
  std::span<const PatchSample> patches_;
  int dim_ = 0;
  PatternIndex patterns_;
  std::vector<int> offsets_;   // D + 1
  std::vector<int> observers_;
};

LatentStats e_step(const PreparedPatches& data, const MixtureModel& model);
LatentStats e_step(std::span<const PatchSample> patches, const MixtureModel& model);

struct MStepOptions {
  double sigma2_floor = 1e-6;
  // A voxel's mean and factor row are refit only when 1 - b^T A^{-1} b, the
  // normalized spread of the latent posteriors over the patches observing it,
  // exceeds this. Otherwise the previous row is kept.
  double min_latent_spread = 1e-12;
};

MixtureModel m_step(const PreparedPatches& data, const LatentStats& stats, const MixtureModel& prev,
                    const MStepOptions& opts = {});
MixtureModel m_step(std::span<const PatchSample> patches, const LatentStats& stats, const MixtureModel& prev,
                    const MStepOptions& opts = {});

// Adds `extra` latent columns drawn from N(0, scale^2).
MixtureModel grow_latent_dim(const MixtureModel& model, int extra, double scale, std::uint64_t seed);

struct IterationRecord {
  int iteration = 0;
  int latent_dim = 0;
  double loglik = 0.0;
  Eigen::VectorXd pi;
  Eigen::VectorXd sigma2;
  double wall_seconds = 0.0;
};

struct FitResult {
  MixtureModel model;
  std::vector<double> loglik_trace;  // one entry per evaluated model
  std::vector<int> latent_dims;      // latent dimension of each traced model
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> events;   // reseeds and warnings
};

using IterationCallback = std::function<void(const IterationRecord&)>;

// Alternates e_step and m_step from `init`, growing the latent dimension by
// d_growth_per_iter after every M-step until d_target. Stops when the relative
// log-likelihood change between two iterations at the same latent dimension
// drops below loglik_rel_tol, or after max_iters M-steps.
FitResult fit(std::span<const PatchSample> patches, const TrainConfig& cfg, const MixtureModel& init,
              const IterationCallback& on_iteration = {});

}  // namespace patchgmm

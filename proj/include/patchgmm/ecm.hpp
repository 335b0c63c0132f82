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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "patchgmm/em.hpp"
#include "patchgmm/mixture.hpp"

namespace patchgmm {

// The full-covariance alternative treats missing voxels as latent variables.
// Every E-step touches D x D matrices, so it is limited to small patches and
// meant for comparison and cross-checking.
inline constexpr int kEcmMaxDim = 512;

struct FullCovModel {
  Eigen::VectorXd pi;                  // K
  Eigen::MatrixXd mu;                  // D x K
  std::vector<Eigen::MatrixXd> Sigma;  // K matrices, D x D

  int clusters() const { return static_cast<int>(pi.size()); }
  int dim() const { return static_cast<int>(mu.rows()); }

  void validate() const;

  // Sigma_k = W_k W_k^T + sigma2_k I
  static FullCovModel from_mixture(const MixtureModel& m);
};

struct EcmPatchStats {
  Eigen::VectorXd gamma;              // K
  Eigen::MatrixXd yhat;               // D x K, observed entries copied
  std::vector<Eigen::MatrixXd> Shat;  // K matrices, D x D, zero outside missing x missing
  double loglik = 0.0;
};

EcmPatchStats ecm_e_step(const PatchSample& p, const FullCovModel& model);

// Aggregated E-step over a patch set. Conditional covariances are summed per
// cluster instead of being stored per patch.
struct EcmStats {
  Eigen::MatrixXd gamma;              // N x K
  std::vector<Eigen::MatrixXd> yhat;  // K matrices, D x N
  std::vector<Eigen::MatrixXd> S_sum; // K matrices, sum_i gamma_ik Shat_ik
  double loglik = 0.0;
};

EcmStats ecm_e_step(std::span<const PatchSample> patches, const FullCovModel& model);

struct EcmOptions {
  double sigma2_floor = 1e-6;
  // When set, each covariance is replaced by its rank-d plus isotropic
  // approximation after the update.
  std::optional<int> low_rank;
};

FullCovModel ecm_m_step(std::span<const PatchSample> patches, const EcmStats& stats, const FullCovModel& prev,
                        const EcmOptions& opts = {});

struct LowRankFactors {
  Eigen::MatrixXd W;  // D x d
  double sigma2 = 0.0;
};

// sigma2 = mean of the trailing D - d eigenvalues, W = U_d (L_d - sigma2 I)^{1/2}.
LowRankFactors low_rank_project(const Eigen::MatrixXd& Sigma, int d);

MixtureModel to_factored(const FullCovModel& model, int d, double sigma2_floor);

double ecm_observed_loglik(std::span<const PatchSample> patches, const FullCovModel& model);

struct EcmFitResult {
  FullCovModel model;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> events;
};

// Uses cfg.max_iters, cfg.loglik_rel_tol, cfg.sigma2_floor, cfg.min_cluster_weight.
EcmFitResult ecm_fit(std::span<const PatchSample> patches, const TrainConfig& cfg, const FullCovModel& init,
                     const EcmOptions& opts = {});

}  // namespace patchgmm

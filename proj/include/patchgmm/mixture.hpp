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

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "patchgmm/patches.hpp"

namespace patchgmm {

// Mixture of probabilistic PCA components: cluster k has mean mu.col(k),
// factor W[k] (D x d) and isotropic noise sigma2[k], so its covariance is
// C_k = W_k W_k^T + sigma2_k I.
struct MixtureModel {
  Eigen::VectorXd pi;              // K
  Eigen::MatrixXd mu;              // D x K
  std::vector<Eigen::MatrixXd> W;  // K matrices, D x d
  Eigen::VectorXd sigma2;          // K

  int clusters() const { return static_cast<int>(pi.size()); }
  int dim() const { return static_cast<int>(mu.rows()); }
  int latent_dim() const { return W.empty() ? 0 : static_cast<int>(W.front().cols()); }

  // Checks shapes, finiteness, sum(pi) == 1 within 1e-12 and sigma2 >= floor.
  void validate(double sigma2_floor = 0.0) const;

  static MixtureModel isotropic(int K, int D, int d, double sigma2);
};

double log_sum_exp(std::span<const double> values);

// Per-(observed set, cluster) quantities shared by every patch with the same
// observation pattern: the Cholesky factor of M = W_O^T W_O + sigma2 I and
// log det C_OO. C_OO itself is never formed.
struct ObservedSystem {
  Eigen::LLT<Eigen::MatrixXd> chol;
  double logdet_cov = 0.0;
  double sigma2 = 1.0;
  int n_obs = 0;

  // S = sigma2 M^{-1}
  Eigen::MatrixXd posterior_covariance() const;
};

ObservedSystem make_observed_system(const MixtureModel& model, int k, std::span<const int> observed);

struct ClusterTerms {
  double log_density = 0.0;  // log N(y_O; mu_O, C_OO)
  Eigen::VectorXd xhat;
};

ClusterTerms cluster_terms(const MixtureModel& model, int k, const ObservedSystem& sys, const PatchSample& p);

// log sum_k pi_k N(y_O; mu_k^O, C_k^OO)
double observed_loglik(const PatchSample& p, const MixtureModel& model);

// Posterior cluster probabilities, computed in log space.
Eigen::VectorXd responsibilities(const PatchSample& p, const MixtureModel& model);

struct LatentPosterior {
  Eigen::VectorXd xhat;  // E[x | y_O, k]
  Eigen::MatrixXd S;     // Cov[x | y_O, k]
};

LatentPosterior latent_posterior(const PatchSample& p, const MixtureModel& model, int k);

// Dense C_k. Diagnostics and oracles only.
Eigen::MatrixXd assemble_covariance(const MixtureModel& model, int k);

// Per-patch, per-cluster posterior statistics. S depends only on the
// observation pattern and the cluster, so it is stored once per pattern.
struct LatentStats {
  Eigen::MatrixXd gamma;                              // N x K
  std::vector<Eigen::MatrixXd> xhat;                  // K matrices, d x N
  std::vector<int> pattern;                           // N, index into pattern_S
  std::vector<std::vector<Eigen::MatrixXd>> pattern_S;  // [pattern][k], d x d
  Eigen::VectorXd patch_loglik;                       // N
  double loglik = 0.0;

  int patches() const { return static_cast<int>(gamma.rows()); }
  const Eigen::MatrixXd& S(int i, int k) const { return pattern_S[pattern[i]][k]; }
};

// Groups patches by identical observed index sets.
struct PatternIndex {
  std::vector<int> pattern_of_patch;
  std::vector<int> representative;  // first patch of each pattern
};

PatternIndex group_patterns(std::span<const PatchSample> patches);

}  // namespace patchgmm

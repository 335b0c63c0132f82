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

#include "patchgmm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "patchgmm/error.hpp"

namespace patchgmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::string cluster_diagnostics(const MixtureModel& model, int k) {
  std::ostringstream os;
  os << "cluster " << k << " (pi=" << model.pi[k] << ", sigma2=" << model.sigma2[k]
     << ", |W|=" << model.W[k].norm() << ")";
  return os.str();
}

}  // namespace

void MixtureModel::validate(double sigma2_floor) const {
  const int K = clusters();
  if (K < 1) throw ValidationError("mixture needs at least one cluster");
  if (mu.cols() != K || sigma2.size() != K || static_cast<int>(W.size()) != K)
    throw ShapeError("mixture parameter shapes disagree on K");
  const int d = latent_dim();
  for (const auto& w : W)
    if (w.rows() != dim() || w.cols() != d) throw ShapeError("factor matrices must all be D x d");
  if (!pi.allFinite() || !mu.allFinite() || !sigma2.allFinite())
    throw ValidationError("mixture parameters must be finite");
  for (const auto& w : W)
    if (!w.allFinite()) throw ValidationError("mixture parameters must be finite");
  if ((pi.array() < 0.0).any()) throw ValidationError("mixture weights must be non-negative");
  if (std::abs(pi.sum() - 1.0) > 1e-12) throw ValidationError("mixture weights must sum to 1");
  if ((sigma2.array() < sigma2_floor).any() || (sigma2.array() <= 0.0).any())
    throw ValidationError("noise variance below floor");
}

MixtureModel MixtureModel::isotropic(int K, int D, int d, double sigma2) {
  MixtureModel m;
  m.pi = Eigen::VectorXd::Constant(K, 1.0 / K);
  m.mu = Eigen::MatrixXd::Zero(D, K);
  m.W.assign(static_cast<std::size_t>(K), Eigen::MatrixXd::Zero(D, d));
  m.sigma2 = Eigen::VectorXd::Constant(K, sigma2);
  return m;
}

double log_sum_exp(std::span<const double> values) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : values) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : values) s += std::exp(v - mx);
  return mx + std::log(s);
}

Eigen::MatrixXd ObservedSystem::posterior_covariance() const {
  const auto d = chol.matrixLLT().rows();
  return sigma2 * chol.solve(Eigen::MatrixXd::Identity(d, d));
}

ObservedSystem make_observed_system(const MixtureModel& model, int k, std::span<const int> observed) {
  const Eigen::MatrixXd& W = model.W[static_cast<std::size_t>(k)];
  const auto d = W.cols();
  const auto n = static_cast<Eigen::Index>(observed.size());
  Eigen::MatrixXd wo(n, d);
  for (Eigen::Index t = 0; t < n; ++t) wo.row(t) = W.row(observed[static_cast<std::size_t>(t)]);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d) * model.sigma2[k];
  M.selfadjointView<Eigen::Lower>().rankUpdate(wo.transpose());
  M.triangularView<Eigen::StrictlyUpper>() = M.transpose();

  ObservedSystem sys;
  sys.sigma2 = model.sigma2[k];
  sys.n_obs = static_cast<int>(n);
  sys.chol.compute(M);
  if (sys.chol.info() != Eigen::Success)
    throw NumericalError("latent system factorization failed for " + cluster_diagnostics(model, k));
  const double logdet_m = 2.0 * sys.chol.matrixL().toDenseMatrix().diagonal().array().log().sum();
  sys.logdet_cov = static_cast<double>(n - d) * std::log(model.sigma2[k]) + logdet_m;
  return sys;
}

ClusterTerms cluster_terms(const MixtureModel& model, int k, const ObservedSystem& sys, const PatchSample& p) {
  const Eigen::MatrixXd& W = model.W[static_cast<std::size_t>(k)];
  const auto d = W.cols();
  Eigen::VectorXd t = Eigen::VectorXd::Zero(d);
  double rr = 0.0;
  for (int j : p.observed) {
    const double r = p.values[j] - model.mu(j, k);
    rr += r * r;
    t.noalias() += r * W.row(j).transpose();
  }
  ClusterTerms out;
  out.xhat = sys.chol.solve(t);
  const double quad = (rr - t.dot(out.xhat)) / sys.sigma2;
  out.log_density = -0.5 * (sys.n_obs * kLog2Pi + sys.logdet_cov + quad);
  if (!std::isfinite(out.log_density))
    throw NumericalError("non-finite log density for " + cluster_diagnostics(model, k));
  return out;
}

namespace {

std::vector<double> weighted_log_densities(const PatchSample& p, const MixtureModel& model) {
  std::vector<double> lw(static_cast<std::size_t>(model.clusters()));
  for (int k = 0; k < model.clusters(); ++k) {
    const auto sys = make_observed_system(model, k, p.observed);
    lw[static_cast<std::size_t>(k)] = std::log(model.pi[k]) + cluster_terms(model, k, sys, p).log_density;
  }
  return lw;
}

}  // namespace

double observed_loglik(const PatchSample& p, const MixtureModel& model) {
  validate_patch(p);
  const double ll = log_sum_exp(weighted_log_densities(p, model));
  if (!std::isfinite(ll)) throw NumericalError("observed log-likelihood is not finite");
  return ll;
}

Eigen::VectorXd responsibilities(const PatchSample& p, const MixtureModel& model) {
  validate_patch(p);
  const auto lw = weighted_log_densities(p, model);
  const double norm = log_sum_exp(lw);
  if (!std::isfinite(norm)) throw NumericalError("all mixture components underflow for this patch");
  Eigen::VectorXd g(model.clusters());
  for (int k = 0; k < model.clusters(); ++k) g[k] = std::exp(lw[static_cast<std::size_t>(k)] - norm);
  return g;
}

LatentPosterior latent_posterior(const PatchSample& p, const MixtureModel& model, int k) {
  validate_patch(p);
  if (k < 0 || k >= model.clusters()) throw ParameterError("cluster index out of range");
  const auto sys = make_observed_system(model, k, p.observed);
  return {cluster_terms(model, k, sys, p).xhat, sys.posterior_covariance()};
}

Eigen::MatrixXd assemble_covariance(const MixtureModel& model, int k) {
  if (k < 0 || k >= model.clusters()) throw ParameterError("cluster index out of range");
  const Eigen::MatrixXd& W = model.W[static_cast<std::size_t>(k)];
  Eigen::MatrixXd C = W * W.transpose();
  C.diagonal().array() += model.sigma2[k];
  return C;
}

PatternIndex group_patterns(std::span<const PatchSample> patches) {
  PatternIndex idx;
  std::map<std::vector<int>, int> ids;
  idx.pattern_of_patch.reserve(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(patches[i].observed, static_cast<int>(idx.representative.size()));
    if (inserted) idx.representative.push_back(static_cast<int>(i));
    idx.pattern_of_patch.push_back(it->second);
  }
  return idx;
}

}  // namespace patchgmm

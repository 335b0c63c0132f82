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

#include "patchgmm/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "patchgmm/error.hpp"
#include "patchgmm/log.hpp"

namespace patchgmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& S, double floor) {
  Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

std::vector<int> missing_indices(const PatchSample& p) {
  std::vector<int> out;
  std::size_t t = 0;
  for (int j = 0; j < p.dim(); ++j) {
    if (t < p.observed.size() && p.observed[t] == j) ++t;
    else out.push_back(j);
  }
  return out;
}

struct ClusterConditional {
  double log_density = 0.0;
  Eigen::VectorXd y_missing;   // conditional mean of missing entries
  Eigen::MatrixXd S_missing;   // conditional covariance of missing entries
};

ClusterConditional condition_cluster(const PatchSample& p, const std::vector<int>& mis, const FullCovModel& model,
                                     int k) {
  const Eigen::MatrixXd& Sig = model.Sigma[static_cast<std::size_t>(k)];
  const auto no = static_cast<Eigen::Index>(p.observed.size());
  const auto nm = static_cast<Eigen::Index>(mis.size());
  Eigen::MatrixXd Soo(no, no), Smo(nm, no), Smm(nm, nm);
  Eigen::VectorXd ro(no);
  for (Eigen::Index a = 0; a < no; ++a) {
    const int ja = p.observed[static_cast<std::size_t>(a)];
    ro[a] = p.values[ja] - model.mu(ja, k);
    for (Eigen::Index b = 0; b < no; ++b) Soo(a, b) = Sig(ja, p.observed[static_cast<std::size_t>(b)]);
    for (Eigen::Index m = 0; m < nm; ++m) Smo(m, a) = Sig(mis[static_cast<std::size_t>(m)], ja);
  }
  for (Eigen::Index m = 0; m < nm; ++m)
    for (Eigen::Index q = 0; q < nm; ++q) Smm(m, q) = Sig(mis[static_cast<std::size_t>(m)], mis[static_cast<std::size_t>(q)]);

  Eigen::LLT<Eigen::MatrixXd> llt(Soo);
  if (llt.info() != Eigen::Success) {
    const double ridge = std::max(1e-8 * Soo.trace() / static_cast<double>(no), 1e-12);
    log().warn("observed covariance of cluster {} is near singular; adding ridge {:.3g}", k, ridge);
    Soo.diagonal().array() += ridge;
    llt.compute(Soo);
    if (llt.info() != Eigen::Success) throw NumericalError("observed covariance factorization failed");
  }
  ClusterConditional out;
  const Eigen::VectorXd alpha = llt.solve(ro);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.log_density = -0.5 * (static_cast<double>(no) * kLog2Pi + logdet + ro.dot(alpha));
  Eigen::VectorXd mu_m(nm);
  for (Eigen::Index m = 0; m < nm; ++m) mu_m[m] = model.mu(mis[static_cast<std::size_t>(m)], k);
  out.y_missing = mu_m + Smo * alpha;
  out.S_missing = Smm - Smo * llt.solve(Smo.transpose());
  out.S_missing = 0.5 * (out.S_missing + out.S_missing.transpose());
  return out;
}

}  // namespace

void FullCovModel::validate() const {
  const int K = clusters();
  if (K < 1) throw ValidationError("mixture needs at least one cluster");
  if (mu.cols() != K || static_cast<int>(Sigma.size()) != K) throw ShapeError("full-covariance shapes disagree on K");
  for (const auto& S : Sigma)
    if (S.rows() != dim() || S.cols() != dim()) throw ShapeError("covariances must be D x D");
  if ((pi.array() < 0.0).any() || std::abs(pi.sum() - 1.0) > 1e-12)
    throw ValidationError("mixture weights must be non-negative and sum to 1");
}

FullCovModel FullCovModel::from_mixture(const MixtureModel& m) {
  FullCovModel out;
  out.pi = m.pi;
  out.mu = m.mu;
  for (int k = 0; k < m.clusters(); ++k) out.Sigma.push_back(assemble_covariance(m, k));
  return out;
}

EcmPatchStats ecm_e_step(const PatchSample& p, const FullCovModel& model) {
  validate_patch(p);
  if (p.dim() != model.dim()) throw ShapeError("patch and model dimensions differ");
  if (model.dim() > kEcmMaxDim) throw ParameterError("full-covariance ECM is limited to small patch dimensions");
  const int K = model.clusters();
  const int D = model.dim();
  const auto mis = missing_indices(p);
  EcmPatchStats st;
  st.yhat.resize(D, K);
  std::vector<double> lw(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto c = condition_cluster(p, mis, model, k);
    lw[static_cast<std::size_t>(k)] = std::log(model.pi[k]) + c.log_density;
    Eigen::VectorXd y = p.values;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D, D);
    for (std::size_t m = 0; m < mis.size(); ++m) {
      y[mis[m]] = c.y_missing[static_cast<Eigen::Index>(m)];
      for (std::size_t q = 0; q < mis.size(); ++q)
        S(mis[m], mis[q]) = c.S_missing(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(q));
    }
    st.yhat.col(k) = y;
    st.Shat.push_back(std::move(S));
  }
  st.loglik = log_sum_exp(lw);
  if (!std::isfinite(st.loglik)) throw NumericalError("all mixture components underflow for this patch");
  st.gamma.resize(K);
  for (int k = 0; k < K; ++k) st.gamma[k] = std::exp(lw[static_cast<std::size_t>(k)] - st.loglik);
  return st;
}

EcmStats ecm_e_step(std::span<const PatchSample> patches, const FullCovModel& model) {
  if (patches.empty()) throw ValidationError("no patches");
  const int K = model.clusters();
  const int D = model.dim();
  const auto N = static_cast<Eigen::Index>(patches.size());
  EcmStats st;
  st.gamma.resize(N, K);
  st.yhat.assign(static_cast<std::size_t>(K), Eigen::MatrixXd(D, N));
  st.S_sum.assign(static_cast<std::size_t>(K), Eigen::MatrixXd::Zero(D, D));
  for (Eigen::Index i = 0; i < N; ++i) {
    EcmPatchStats ps;
    try {
      ps = ecm_e_step(patches[static_cast<std::size_t>(i)], model);
    } catch (const NumericalError& e) {
      throw NumericalError("patch " + std::to_string(i) + ": " + e.what());
    }
    st.loglik += ps.loglik;
    for (int k = 0; k < K; ++k) {
      st.gamma(i, k) = ps.gamma[k];
      st.yhat[static_cast<std::size_t>(k)].col(i) = ps.yhat.col(k);
      st.S_sum[static_cast<std::size_t>(k)].noalias() += ps.gamma[k] * ps.Shat[static_cast<std::size_t>(k)];
    }
  }
  return st;
}

FullCovModel ecm_m_step(std::span<const PatchSample> patches, const EcmStats& stats, const FullCovModel& prev,
                        const EcmOptions& opts) {
  const int K = prev.clusters();
  const int D = prev.dim();
  const auto N = static_cast<Eigen::Index>(patches.size());
  if (stats.gamma.rows() != N || stats.gamma.cols() != K) throw ShapeError("statistics do not match the patches");
  FullCovModel next = prev;
  for (int k = 0; k < K; ++k) {
    const double nk = stats.gamma.col(k).sum();
    next.pi[k] = nk / static_cast<double>(N);
    if (!(nk > 0.0)) continue;
    const Eigen::MatrixXd& Y = stats.yhat[static_cast<std::size_t>(k)];
    const Eigen::VectorXd m = Y * stats.gamma.col(k) / nk;
    const Eigen::MatrixXd centered = Y.colwise() - m;
    Eigen::MatrixXd S = stats.S_sum[static_cast<std::size_t>(k)];
    S.noalias() += centered * stats.gamma.col(k).asDiagonal() * centered.transpose();
    S /= nk;
    next.mu.col(k) = m;
    if (opts.low_rank) {
      const auto lr = low_rank_project(S, *opts.low_rank);
      Eigen::MatrixXd C = lr.W * lr.W.transpose();
      C.diagonal().array() += std::max(lr.sigma2, opts.sigma2_floor);
      next.Sigma[static_cast<std::size_t>(k)] = C;
    } else {
      next.Sigma[static_cast<std::size_t>(k)] = floor_eigenvalues(S, opts.sigma2_floor);
    }
  }
  next.pi /= next.pi.sum();
  (void)D;
  return next;
}

LowRankFactors low_rank_project(const Eigen::MatrixXd& Sigma, int d) {
  const auto D = Sigma.rows();
  if (Sigma.cols() != D) throw ShapeError("covariance must be square");
  if (d < 0 || d >= D) throw ParameterError("low-rank dimension must satisfy 0 <= d < D");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sigma + Sigma.transpose()));
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();  // ascending
  LowRankFactors out;
  out.sigma2 = lam.head(D - d).mean();
  out.W.resize(D, d);
  bool clamped = false;
  for (int c = 0; c < d; ++c) {
    const Eigen::Index src = D - 1 - c;
    double excess = lam[src] - out.sigma2;
    if (excess < 0.0) {
      excess = 0.0;
      clamped = true;
    }
    out.W.col(c) = es.eigenvectors().col(src) * std::sqrt(excess);
  }
  if (clamped) log().warn("low-rank projection clamped negative excess eigenvalues to zero");
  return out;
}

MixtureModel to_factored(const FullCovModel& model, int d, double sigma2_floor) {
  MixtureModel out;
  out.pi = model.pi;
  out.mu = model.mu;
  out.sigma2.resize(model.clusters());
  for (int k = 0; k < model.clusters(); ++k) {
    auto lr = low_rank_project(model.Sigma[static_cast<std::size_t>(k)], d);
    out.W.push_back(std::move(lr.W));
    out.sigma2[k] = std::max(lr.sigma2, sigma2_floor);
  }
  return out;
}

double ecm_observed_loglik(std::span<const PatchSample> patches, const FullCovModel& model) {
  double ll = 0.0;
  for (const auto& p : patches) ll += ecm_e_step(p, model).loglik;
  return ll;
}

EcmFitResult ecm_fit(std::span<const PatchSample> patches, const TrainConfig& cfg, const FullCovModel& init,
                     const EcmOptions& opts) {
  init.validate();
  if (init.dim() > kEcmMaxDim) throw ParameterError("full-covariance ECM is limited to small patch dimensions");
  if (static_cast<int>(patches.size()) < init.clusters()) throw ParameterError("ECM needs at least K patches");
  EcmFitResult res;
  FullCovModel model = init;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const EcmStats stats = ecm_e_step(patches, model);
    res.loglik_trace.push_back(stats.loglik);
    const auto n = res.loglik_trace.size();
    if (n >= 2) {
      const double prev = res.loglik_trace[n - 2];
      if (std::abs(stats.loglik - prev) / std::max(std::abs(prev), 1e-300) < cfg.loglik_rel_tol) {
        res.converged = true;
        break;
      }
    }
    model = ecm_m_step(patches, stats, model, opts);
    res.iterations = iter;
    for (int k = 0; k < model.clusters(); ++k) {
      if (cfg.min_cluster_weight <= 0.0 || model.pi[k] >= cfg.min_cluster_weight) continue;
      // Underflowed cluster: restart it at the worst explained patch.
      Eigen::Index worst = 0;
      stats.gamma.rowwise().maxCoeff().minCoeff(&worst);
      const auto& p = patches[static_cast<std::size_t>(worst)];
      for (int j : p.observed) model.mu(j, k) = p.values[j];
      Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(model.dim(), model.dim());
      for (const auto& S : model.Sigma) avg += S;
      model.Sigma[static_cast<std::size_t>(k)] = avg / model.clusters();
      model.pi[k] = std::max(cfg.min_cluster_weight, 1.0 / static_cast<double>(patches.size()));
      model.pi /= model.pi.sum();
      res.events.push_back("iteration " + std::to_string(iter) + ": reseeded cluster " + std::to_string(k));
      log().info("{}", res.events.back());
    }
    if (iter == cfg.max_iters) res.loglik_trace.push_back(ecm_observed_loglik(patches, model));
  }
  res.model = std::move(model);
  return res;
}

}  // namespace patchgmm

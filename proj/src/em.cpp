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

#include "patchgmm/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "patchgmm/error.hpp"
#include "patchgmm/log.hpp"

namespace patchgmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kGrowthScale = 1e-3;

// Ridge-regularized Cholesky of a d x d normal matrix.
Eigen::LLT<Eigen::MatrixXd> factor_normal_matrix(Eigen::MatrixXd A, int j, int k) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt;
  const double d = static_cast<double>(A.rows());
  double ridge = 1e-8 * A.trace() / d;
  if (!(ridge > 0.0)) ridge = 1e-12;
  log().warn("singular latent moment matrix at voxel {} cluster {}; adding ridge {:.3g}", j, k, ridge);
  A.diagonal().array() += ridge;
  llt.compute(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("latent moment matrix not positive definite at voxel " + std::to_string(j));
  return llt;
}

}  // namespace

void TrainConfig::validate(int D) const {
  if (K < 1) throw ParameterError("K must be at least 1");
  if (d_init < 1 || d_init > d_target) throw ParameterError("need 1 <= d_init <= d_target");
  if (d_target >= D) throw ParameterError("latent dimension must be smaller than the patch dimension");
  if (d_growth_per_iter < 0) throw ParameterError("d_growth_per_iter must be non-negative");
  if (d_growth_per_iter == 0 && d_init != d_target) throw ParameterError("zero growth requires d_init == d_target");
  if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (!(loglik_rel_tol >= 0.0)) throw ParameterError("loglik_rel_tol must be non-negative");
  if (!(sigma2_floor > 0.0)) throw ParameterError("sigma2_floor must be positive");
  if (!(min_cluster_weight >= 0.0) || min_cluster_weight >= 1.0)
    throw ParameterError("min_cluster_weight must lie in [0, 1)");
  if (!(min_latent_spread >= 0.0) || min_latent_spread >= 1.0)
    throw ParameterError("min_latent_spread must lie in [0, 1)");
}

int latent_dim_at_iteration(const TrainConfig& cfg, int iteration) {
  const long long d = cfg.d_init + static_cast<long long>(iteration - 1) * cfg.d_growth_per_iter;
  return static_cast<int>(std::min<long long>(d, cfg.d_target));
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

std::vector<int> kmeans_pp_seeds(std::span<const Eigen::VectorXd> x, int K, std::mt19937_64& rng) {
  const auto N = x.size();
  std::vector<int> seeds;
  std::uniform_int_distribution<std::size_t> uniform(0, N - 1);
  seeds.push_back(static_cast<int>(uniform(rng)));
  std::vector<double> dist2(N);
  for (std::size_t i = 0; i < N; ++i) dist2[i] = (x[i] - x[static_cast<std::size_t>(seeds[0])]).squaredNorm();
  while (static_cast<int>(seeds.size()) < K) {
    const double total = std::accumulate(dist2.begin(), dist2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double cum = 0.0;
      pick = N - 1;
      for (std::size_t i = 0; i < N; ++i) {
        cum += dist2[i];
        if (cum > target && dist2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform(rng);
    }
    seeds.push_back(static_cast<int>(pick));
    for (std::size_t i = 0; i < N; ++i) dist2[i] = std::min(dist2[i], (x[i] - x[pick]).squaredNorm());
  }
  return seeds;
}

}  // namespace

MixtureModel init_from_interpolation(std::span<const Eigen::VectorXd> patches, const TrainConfig& cfg) {
  const int K = cfg.K;
  if (patches.empty() || static_cast<int>(patches.size()) < K)
    throw InitializationError("need at least K interpolated patches to initialize");
  const int D = static_cast<int>(patches.front().size());
  cfg.validate(D);
  for (const auto& p : patches) {
    if (p.size() != D) throw ShapeError("interpolated patches differ in length");
    if (!p.allFinite()) throw InitializationError("interpolated patches must be fully valued");
  }
  const int N = static_cast<int>(patches.size());
  const double floor = cfg.sigma2_floor;

  std::mt19937_64 rng(cfg.seed);
  const auto seeds = kmeans_pp_seeds(patches, K, rng);

  Eigen::VectorXd global_mean = Eigen::VectorXd::Zero(D);
  for (const auto& p : patches) global_mean += p;
  global_mean /= N;
  Eigen::VectorXd global_var = Eigen::VectorXd::Zero(D);
  for (const auto& p : patches) global_var.array() += (p - global_mean).array().square();
  global_var = (global_var / N).cwiseMax(floor);

  Eigen::MatrixXd means(D, K), vars(D, K);
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(K, 1.0 / K);
  for (int k = 0; k < K; ++k) {
    means.col(k) = patches[static_cast<std::size_t>(seeds[static_cast<std::size_t>(k)])];
    vars.col(k) = global_var;
  }

  Eigen::MatrixXd X(D, N);
  for (int i = 0; i < N; ++i) X.col(i) = patches[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd X2 = X.array().square().matrix();

  Eigen::MatrixXd resp(N, K);
  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(static_cast<std::size_t>(K));
  for (int it = 0; it < cfg.init_gmm_iters; ++it) {
    // Mahalanobis terms for all (i, k) at once:
    // q_ik = sum_j x_ij^2 / v_jk - 2 x_ij m_jk / v_jk + m_jk^2 / v_jk
    const Eigen::MatrixXd inv_var = vars.cwiseInverse();
    const Eigen::MatrixXd scaled_means = means.cwiseProduct(inv_var);
    Eigen::MatrixXd q = X2.transpose() * inv_var - 2.0 * X.transpose() * scaled_means;
    Eigen::VectorXd offset(K);
    for (int k = 0; k < K; ++k)
      offset[k] = std::log(pi[k]) - 0.5 * (D * kLog2Pi + vars.col(k).array().log().sum()) -
                  0.5 * means.col(k).dot(scaled_means.col(k));
    double ll = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int k = 0; k < K; ++k) lw[static_cast<std::size_t>(k)] = offset[k] - 0.5 * q(i, k);
      const double norm = log_sum_exp(lw);
      ll += norm;
      for (int k = 0; k < K; ++k) resp(i, k) = std::exp(lw[static_cast<std::size_t>(k)] - norm);
    }
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    const Eigen::MatrixXd s1 = X * resp;
    const Eigen::MatrixXd s2 = X2 * resp;
    for (int k = 0; k < K; ++k) {
      if (!(nk[k] > 0.0)) continue;
      means.col(k) = s1.col(k) / nk[k];
      vars.col(k) = (s2.col(k) / nk[k] - means.col(k).cwiseAbs2()).cwiseMax(floor);
      pi[k] = nk[k] / N;
    }
    pi /= pi.sum();
    if (std::isfinite(prev_ll) && std::abs(ll - prev_ll) <= 1e-10 * std::abs(prev_ll)) break;
    prev_ll = ll;
  }

  MixtureModel model;
  model.pi = pi;
  model.mu = means;
  model.sigma2.resize(K);
  const int d = cfg.d_init;
  for (int k = 0; k < K; ++k) {
    std::vector<int> order(static_cast<std::size_t>(D));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vars(a, k) > vars(b, k); });
    double tail = 0.0;
    for (int t = d; t < D; ++t) tail += vars(order[static_cast<std::size_t>(t)], k);
    const double s2 = std::max(tail / (D - d), floor);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(D, d);
    for (int c = 0; c < d; ++c) {
      const int j = order[static_cast<std::size_t>(c)];
      W(j, c) = std::sqrt(std::max(vars(j, k) - s2, 0.0));
    }
    model.W.push_back(std::move(W));
    model.sigma2[k] = s2;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Prepared patch sets

PreparedPatches::PreparedPatches(std::span<const PatchSample> patches) : patches_(patches) {
  if (patches.empty()) throw ValidationError("no patches");
  dim_ = patches.front().dim();
  for (const auto& p : patches) {
    if (p.dim() != dim_) throw ShapeError("patches differ in dimension");
    validate_patch(p);
  }
  patterns_ = group_patterns(patches);
  offsets_.assign(static_cast<std::size_t>(dim_) + 1, 0);
  for (const auto& p : patches)
    for (int j : p.observed) ++offsets_[static_cast<std::size_t>(j) + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  observers_.resize(static_cast<std::size_t>(offsets_.back()));
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int i = 0; i < static_cast<int>(patches.size()); ++i)
    for (int j : patches[static_cast<std::size_t>(i)].observed)
      observers_[static_cast<std::size_t>(fill[static_cast<std::size_t>(j)]++)] = i;
}

std::span<const int> PreparedPatches::observers(int j) const {
  const auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(j)]);
  const auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(j) + 1]);
  return std::span<const int>(observers_).subspan(b, e - b);
}

int PreparedPatches::unobserved_voxels() const {
  int n = 0;
  for (int j = 0; j < dim_; ++j) n += offsets_[static_cast<std::size_t>(j)] == offsets_[static_cast<std::size_t>(j) + 1];
  return n;
}

// ---------------------------------------------------------------------------
// E-step

LatentStats e_step(const PreparedPatches& data, const MixtureModel& model) {
  if (model.dim() != data.dim()) throw ShapeError("model and patch dimensions differ");
  const int N = data.size();
  const int K = model.clusters();
  const int d = model.latent_dim();
  const auto& pat = data.patterns();
  const auto P = pat.representative.size();
  const auto patches = data.patches();

  std::vector<std::vector<ObservedSystem>> systems(P);
  LatentStats st;
  st.pattern_S.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    const auto& obs = patches[static_cast<std::size_t>(pat.representative[p])].observed;
    for (int k = 0; k < K; ++k) {
      systems[p].push_back(make_observed_system(model, k, obs));
      st.pattern_S[p].push_back(systems[p].back().posterior_covariance());
    }
  }
  st.pattern = pat.pattern_of_patch;
  st.gamma.resize(N, K);
  st.xhat.assign(static_cast<std::size_t>(K), Eigen::MatrixXd(d, N));
  st.patch_loglik.resize(N);

  std::vector<double> lw(static_cast<std::size_t>(K));
  for (int i = 0; i < N; ++i) {
    const auto& p = patches[static_cast<std::size_t>(i)];
    const auto& sys = systems[static_cast<std::size_t>(st.pattern[static_cast<std::size_t>(i)])];
    try {
      for (int k = 0; k < K; ++k) {
        auto terms = cluster_terms(model, k, sys[static_cast<std::size_t>(k)], p);
        lw[static_cast<std::size_t>(k)] = std::log(model.pi[k]) + terms.log_density;
        st.xhat[static_cast<std::size_t>(k)].col(i) = terms.xhat;
      }
    } catch (const NumericalError& e) {
      throw NumericalError("patch " + std::to_string(i) + ": " + e.what());
    }
    const double norm = log_sum_exp(lw);
    if (!std::isfinite(norm)) throw NumericalError("patch " + std::to_string(i) + ": all clusters underflow");
    st.patch_loglik[i] = norm;
    for (int k = 0; k < K; ++k) st.gamma(i, k) = std::exp(lw[static_cast<std::size_t>(k)] - norm);
  }
  st.loglik = st.patch_loglik.sum();
  return st;
}

LatentStats e_step(std::span<const PatchSample> patches, const MixtureModel& model) {
  return e_step(PreparedPatches(patches), model);
}

// ---------------------------------------------------------------------------
// M-step

MixtureModel m_step(const PreparedPatches& data, const LatentStats& stats, const MixtureModel& prev,
                    const MStepOptions& opts) {
  const int N = data.size();
  const int K = prev.clusters();
  const int D = prev.dim();
  const int d = prev.latent_dim();
  if (D != data.dim() || stats.patches() != N || stats.gamma.cols() != K)
    throw ShapeError("statistics do not match the patches and model");
  for (const auto& x : stats.xhat)
    if (x.rows() != d || x.cols() != N) throw ShapeError("latent statistics have the wrong shape");

  const auto patches = data.patches();
  const Eigen::MatrixXd gammaT = stats.gamma.transpose();  // K x N, one column per patch
  MixtureModel next = prev;
  const auto P = static_cast<Eigen::Index>(stats.pattern_S.size());

  // Per-voxel weighted sums over the observing patches, all clusters at once:
  // G = sum g, sy = sum g y, syy = sum g y^2, sx = sum g x, sxy = sum g y x,
  // sxx = sum g x x^T (lower triangle), pw = sum g per observation pattern.
  Eigen::VectorXd G(K), sy(K), syy(K);
  Eigen::MatrixXd sx(d, K), sxy(d, K);
  std::vector<Eigen::MatrixXd> sxx(static_cast<std::size_t>(K), Eigen::MatrixXd(d, d));
  Eigen::MatrixXd pw = Eigen::MatrixXd::Zero(K, P);
  std::vector<char> seen(static_cast<std::size_t>(P), 0);
  std::vector<Eigen::Index> touched;
  Eigen::VectorXd s2_num = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd s2_den = Eigen::VectorXd::Zero(K);
  int frozen = 0;

  for (int j = 0; j < D; ++j) {
    G.setZero();
    sy.setZero();
    syy.setZero();
    sx.setZero();
    sxy.setZero();
    for (auto& m : sxx) m.setZero();
    for (int i : data.observers(j)) {
      const double y = patches[static_cast<std::size_t>(i)].values[j];
      const auto p = static_cast<Eigen::Index>(stats.pattern[static_cast<std::size_t>(i)]);
      if (!seen[static_cast<std::size_t>(p)]) {
        seen[static_cast<std::size_t>(p)] = 1;
        touched.push_back(p);
      }
      for (int k = 0; k < K; ++k) {
        const double g = gammaT(k, i);
        if (g == 0.0) continue;
        G[k] += g;
        sy[k] += g * y;
        syy[k] += g * y * y;
        pw(k, p) += g;
        const double* x = stats.xhat[static_cast<std::size_t>(k)].col(i).data();
        double* bx = sx.col(k).data();
        double* bxy = sxy.col(k).data();
        double* A = sxx[static_cast<std::size_t>(k)].data();
        for (int a = 0; a < d; ++a) {
          const double gx = g * x[a];
          bx[a] += gx;
          bxy[a] += gx * y;
          for (int c = a; c < d; ++c) A[a * d + c] += gx * x[c];  // column a, rows c >= a
        }
      }
    }

    for (int k = 0; k < K; ++k) {
      const double g = G[k];
      if (!(g > 0.0)) continue;  // keeps the previous mu and W row
      Eigen::MatrixXd A_S = Eigen::MatrixXd::Zero(d, d);
      for (auto p : touched)
        if (pw(k, p) != 0.0) A_S.noalias() += pw(k, p) * stats.pattern_S[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
      A_S /= g;
      Eigen::MatrixXd Axx = sxx[static_cast<std::size_t>(k)].selfadjointView<Eigen::Lower>();
      Axx /= g;
      const Eigen::VectorXd b = sx.col(k) / g;
      const Eigen::VectorXd bxy = sxy.col(k) / g;
      const double my = sy[k] / g;
      const double myy = syy[k] / g;

      double mu_j = my;
      Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
      if (d > 0) {
        const auto llt = factor_normal_matrix(Axx + A_S, j, k);
        // mu = sum delta c y / sum delta c with c = 1 - x^T A^{-1} b
        const Eigen::VectorXd a = llt.solve(b);
        const double den = 1.0 - a.dot(b);
        if (den > opts.min_latent_spread) {
          mu_j = (my - a.dot(bxy)) / den;
          w = llt.solve(bxy - mu_j * b);
        } else {
          // The latent posteriors barely vary over this voxel's observers, so
          // the slope is unidentified. Keeping the previous row is still a
          // generalized M-step.
          mu_j = prev.mu(j, k);
          w = prev.W[static_cast<std::size_t>(k)].row(j).transpose();
          ++frozen;
        }
      }
      next.mu(j, k) = mu_j;
      next.W[static_cast<std::size_t>(k)].row(j) = w.transpose();

      // sum delta (y - mu - w^T x)^2 expanded in the moments
      double resid = myy + mu_j * mu_j - 2.0 * mu_j * my;
      if (d > 0) resid += w.dot(Axx * w) - 2.0 * w.dot(bxy) + 2.0 * mu_j * w.dot(b);
      s2_num[k] += g * (std::max(resid, 0.0) + w.dot(A_S * w));
      s2_den[k] += g;
    }
    for (auto p : touched) {
      pw.col(p).setZero();
      seen[static_cast<std::size_t>(p)] = 0;
    }
    touched.clear();
  }

  if (frozen > 0) log().debug("m_step kept {} voxel rows with too little latent spread", frozen);
  for (int k = 0; k < K; ++k) {
    if (s2_den[k] > 0.0) next.sigma2[k] = std::max(s2_num[k] / s2_den[k], opts.sigma2_floor);
    else next.sigma2[k] = std::max(prev.sigma2[k], opts.sigma2_floor);
    next.pi[k] = stats.gamma.col(k).sum() / N;
  }
  next.pi /= next.pi.sum();
  return next;
}

MixtureModel m_step(std::span<const PatchSample> patches, const LatentStats& stats, const MixtureModel& prev,
                    const MStepOptions& opts) {
  return m_step(PreparedPatches(patches), stats, prev, opts);
}

MixtureModel grow_latent_dim(const MixtureModel& model, int extra, double scale, std::uint64_t seed) {
  if (extra <= 0) return model;
  MixtureModel out = model;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x9e3779b9U};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, scale);
  for (auto& W : out.W) {
    const auto d = W.cols();
    W.conservativeResize(Eigen::NoChange, d + extra);
    for (Eigen::Index c = d; c < d + extra; ++c)
      for (Eigen::Index j = 0; j < W.rows(); ++j) W(j, c) = noise(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

// Replaces clusters whose weight fell below the threshold with the worst
// explained patches.
void reseed_small_clusters(MixtureModel& model, const LatentStats& stats, std::span<const PatchSample> patches,
                           const TrainConfig& cfg, int iteration, std::vector<std::string>& events) {
  if (cfg.min_cluster_weight <= 0.0) return;
  std::vector<int> order(static_cast<std::size_t>(stats.patches()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return stats.patch_loglik[a] < stats.patch_loglik[b]; });
  std::size_t next_patch = 0;
  bool changed = false;
  for (int k = 0; k < model.clusters(); ++k) {
    if (model.pi[k] >= cfg.min_cluster_weight || next_patch >= order.size()) continue;
    const auto& p = patches[static_cast<std::size_t>(order[next_patch++])];
    for (int j : p.observed) model.mu(j, k) = p.values[j];
    const auto grown = grow_latent_dim(MixtureModel::isotropic(1, model.dim(), 0, 1.0),
                                       model.latent_dim(), kGrowthScale,
                                       cfg.seed ^ (0x5bd1e995ULL * static_cast<std::uint64_t>(iteration * 131 + k)));
    model.W[static_cast<std::size_t>(k)] = grown.W.front();
    double s2 = 0.0;
    for (int c = 0; c < model.clusters(); ++c) s2 += model.sigma2[c];
    model.sigma2[k] = std::max(s2 / model.clusters(), cfg.sigma2_floor);
    model.pi[k] = std::max(cfg.min_cluster_weight, 1.0 / stats.patches());
    changed = true;
    std::string msg = "iteration " + std::to_string(iteration) + ": reseeded cluster " + std::to_string(k) +
                      " from patch " + std::to_string(order[next_patch - 1]);
    log().info("{}", msg);
    events.push_back(std::move(msg));
  }
  if (changed) model.pi /= model.pi.sum();
}

}  // namespace

FitResult fit(std::span<const PatchSample> patches, const TrainConfig& cfg, const MixtureModel& init,
              const IterationCallback& on_iteration) {
  const PreparedPatches data(patches);
  cfg.validate(data.dim());
  if (data.size() < cfg.K) throw ParameterError("fit needs at least K patches");
  init.validate();
  if (init.clusters() != cfg.K || init.dim() != data.dim()) throw ShapeError("initial model does not match config");
  if (init.latent_dim() > cfg.d_target) throw ShapeError("initial latent dimension exceeds d_target");

  FitResult res;
  if (const int missing = data.unobserved_voxels(); missing > 0) {
    std::string msg = std::to_string(missing) + " patch voxels are never observed and keep their initial parameters";
    log().warn("{}", msg);
    res.events.push_back(std::move(msg));
  }

  const auto start = std::chrono::steady_clock::now();
  auto record = [&](int iteration, const MixtureModel& m, double ll) {
    res.loglik_trace.push_back(ll);
    res.latent_dims.push_back(m.latent_dim());
    if (on_iteration) {
      IterationRecord r;
      r.iteration = iteration;
      r.latent_dim = m.latent_dim();
      r.loglik = ll;
      r.pi = m.pi;
      r.sigma2 = m.sigma2;
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      on_iteration(r);
    }
  };

  MixtureModel model = init;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const LatentStats stats = e_step(data, model);
    record(iter, model, stats.loglik);
    const auto n = res.loglik_trace.size();
    if (n >= 2 && res.latent_dims[n - 1] == res.latent_dims[n - 2]) {
      const double prev = res.loglik_trace[n - 2];
      const double rel = std::abs(stats.loglik - prev) / std::max(std::abs(prev), 1e-300);
      if (rel < cfg.loglik_rel_tol) {
        res.converged = true;
        break;
      }
    }
    MStepOptions mopts;
    mopts.sigma2_floor = cfg.sigma2_floor;
    mopts.min_latent_spread = cfg.min_latent_spread;
    model = m_step(data, stats, model, mopts);
    res.iterations = iter;
    reseed_small_clusters(model, stats, patches, cfg, iter, res.events);
    const int target = latent_dim_at_iteration(cfg, iter + 1);
    if (model.latent_dim() < target)
      model = grow_latent_dim(model, target - model.latent_dim(), kGrowthScale,
                              cfg.seed * 1000003ULL + static_cast<std::uint64_t>(iter));
    if (iter == cfg.max_iters) record(iter + 1, model, e_step(data, model).loglik);
  }
  res.model = std::move(model);
  return res;
}

}  // namespace patchgmm

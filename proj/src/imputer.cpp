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

#include "patchgmm/imputer.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "patchgmm/error.hpp"
#include "patchgmm/parallel.hpp"

namespace patchgmm {

namespace {

struct PatchPosterior {
  Eigen::VectorXd gamma;
  std::vector<Eigen::VectorXd> xhat;  // per cluster
  int best = 0;
};

PatchPosterior posterior(const PatchSample& p, const MixtureModel& model, const std::vector<ObservedSystem>& systems) {
  const int K = model.clusters();
  PatchPosterior out;
  std::vector<double> lw(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    auto t = cluster_terms(model, k, systems[static_cast<std::size_t>(k)], p);
    lw[static_cast<std::size_t>(k)] = std::log(model.pi[k]) + t.log_density;
    out.xhat.push_back(std::move(t.xhat));
  }
  const double norm = log_sum_exp(lw);
  if (!std::isfinite(norm)) throw NumericalError("all mixture components underflow for this patch");
  out.gamma.resize(K);
  for (int k = 0; k < K; ++k) {
    out.gamma[k] = std::exp(lw[static_cast<std::size_t>(k)] - norm);
    if (lw[static_cast<std::size_t>(k)] > lw[static_cast<std::size_t>(out.best)]) out.best = k;
  }
  return out;
}

std::vector<ObservedSystem> systems_for(const PatchSample& p, const MixtureModel& model) {
  std::vector<ObservedSystem> out;
  for (int k = 0; k < model.clusters(); ++k) out.push_back(make_observed_system(model, k, p.observed));
  return out;
}

Eigen::VectorXd reconstruct(const MixtureModel& model, int k, const Eigen::VectorXd& xhat) {
  return model.mu.col(k) + model.W[static_cast<std::size_t>(k)] * xhat;
}

Eigen::VectorXd soft_reconstruct(const MixtureModel& model, const PatchPosterior& post) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.dim());
  for (int k = 0; k < model.clusters(); ++k)
    out += post.gamma[k] * reconstruct(model, k, post.xhat[static_cast<std::size_t>(k)]);
  return out;
}

Eigen::VectorXd draw_sample(const MixtureModel& model, const PatchPosterior& post, const ObservedSystem& sys,
                            std::uint64_t seed, const SampleOptions& opts) {
  const int k = post.best;
  const Eigen::VectorXd& xhat = post.xhat[static_cast<std::size_t>(k)];
  const Eigen::MatrixXd& W = model.W[static_cast<std::size_t>(k)];
  const double s2 = opts.sigma2_override.value_or(model.sigma2[k]);
  if (s2 < 0.0) throw ParameterError("sampling variance must be non-negative");
  Eigen::MatrixXd latent = sys.posterior_covariance() + xhat * xhat.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(latent);
  if (llt.info() != Eigen::Success) throw NumericalError("sampling covariance factorization failed");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z1(model.dim()), z2(W.cols());
  for (Eigen::Index j = 0; j < z1.size(); ++j) z1[j] = normal(rng);
  for (Eigen::Index c = 0; c < z2.size(); ++c) z2[c] = normal(rng);
  return reconstruct(model, k, xhat) + std::sqrt(s2) * z1 + W * (llt.matrixL() * z2);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PatchImputation impute_patch_map(const PatchSample& p, const MixtureModel& model) {
  validate_patch(p);
  if (p.dim() != model.dim()) throw ShapeError("patch and model dimensions differ");
  const auto post = posterior(p, model, systems_for(p, model));
  return {reconstruct(model, post.best, post.xhat[static_cast<std::size_t>(post.best)]), post.best};
}

Eigen::VectorXd impute_patch_soft(const PatchSample& p, const MixtureModel& model) {
  validate_patch(p);
  if (p.dim() != model.dim()) throw ShapeError("patch and model dimensions differ");
  return soft_reconstruct(model, posterior(p, model, systems_for(p, model)));
}

Eigen::VectorXd impute_patch_sample(const PatchSample& p, const MixtureModel& model, std::uint64_t seed,
                                    const SampleOptions& opts) {
  validate_patch(p);
  if (p.dim() != model.dim()) throw ShapeError("patch and model dimensions differ");
  const auto systems = systems_for(p, model);
  const auto post = posterior(p, model, systems);
  return draw_sample(model, post, systems[static_cast<std::size_t>(post.best)], seed, opts);
}

const MixtureModel& ModelSet::at(const Index3& center) const {
  const auto it = models.find(center);
  if (it == models.end())
    throw ManifestError("no model for subvolume centered at (" + std::to_string(center[0]) + ", " +
                        std::to_string(center[1]) + ", " + std::to_string(center[2]) + ")");
  return it->second;
}

Volume restore_volume(const Volume& v, const ObservationMask& m, const ModelSet& models, const RestoreOptions& opts) {
  require_usable_mask(v, m);
  if (models.grid.volume_dims != v.dims()) throw ShapeError("model grid was trained for different volume dimensions");
  const auto centers = models.grid.centers();
  for (const auto& c : centers) (void)models.at(c);

  StitchAccumulator acc(v.dims(), models.grid.patch_size);
  const auto workers = std::max(opts.workers, 1);
  // Locations are imputed in parallel batches and accumulated in grid order.
  for (std::size_t start = 0; start < centers.size(); start += static_cast<std::size_t>(workers)) {
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), centers.size() - start);
    std::vector<std::vector<PlacedPatch>> batch(count);
    parallel_for(count, workers, [&](std::size_t b) {
      const std::size_t loc = start + b;
      const Index3& center = centers[loc];
      const MixtureModel& model = models.at(center);
      const auto patches = extract_restoration_patches(v, m, models.grid, center);
      const auto patterns = group_patterns(patches);
      std::vector<std::vector<ObservedSystem>> systems;
      for (int rep : patterns.representative) systems.push_back(systems_for(patches[static_cast<std::size_t>(rep)], model));
      auto& out = batch[b];
      out.reserve(patches.size());
      for (std::size_t i = 0; i < patches.size(); ++i) {
        const auto& p = patches[i];
        const auto& sys = systems[static_cast<std::size_t>(patterns.pattern_of_patch[i])];
        const auto post = posterior(p, model, sys);
        Eigen::VectorXd values;
        if (opts.mode == ImputeMode::kSample) {
          values = draw_sample(model, post, sys[static_cast<std::size_t>(post.best)],
                               mix_seed(mix_seed(opts.seed, loc), i), {});
        } else if (opts.soft) {
          values = soft_reconstruct(model, post);
        } else {
          values = reconstruct(model, post.best, post.xhat[static_cast<std::size_t>(post.best)]);
        }
        out.push_back({std::move(values), p.corner});
      }
    });
    for (const auto& placed : batch)
      for (const auto& p : placed) acc.add(p.values, p.corner);
  }
  Volume restored = acc.finish(v.spacing());
  if (!opts.keep_observed) return restored;
  std::vector<float> data(restored.data().begin(), restored.data().end());
  for (std::size_t i = 0; i < data.size(); ++i)
    if (m.observed(i)) data[i] = v[i];
  return Volume(v.dims(), v.spacing(), std::move(data));
}

}  // namespace patchgmm

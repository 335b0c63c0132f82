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

#include "patchgmm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "patchgmm/error.hpp"
#include "patchgmm/imputer.hpp"

namespace patchgmm {

MixtureModel plant_model(int D, const PlantSpec& spec, std::uint64_t seed) {
  if (spec.K < 1 || spec.d < 0 || spec.d >= D) throw ParameterError("invalid planted model size");
  std::mt19937_64 rng(seed);
  if (spec.mean_jitter < 0.0) throw ParameterError("mean jitter must be non-negative");
  std::uniform_real_distribution<double> jitter(-spec.mean_jitter, spec.mean_jitter);
  std::normal_distribution<double> normal;
  MixtureModel m = MixtureModel::isotropic(spec.K, D, spec.d, spec.sigma2);
  for (int k = 0; k < spec.K; ++k) {
    const double level = spec.mean_lo + (spec.mean_hi - spec.mean_lo) * (k + 0.5) / spec.K;
    for (int j = 0; j < D; ++j) m.mu(j, k) = std::clamp(level + jitter(rng), spec.mean_lo, spec.mean_hi);
    for (int c = 0; c < spec.d; ++c)
      for (int j = 0; j < D; ++j) m.W[static_cast<std::size_t>(k)](j, c) = spec.w_scale * normal(rng);
  }
  return m;
}

namespace {

Collection generate_model(int n_subjects, const Dims& dims, const GeneratorSpec& gen, std::uint64_t seed) {
  const Dims& b = gen.block;
  for (int a = 0; a < 3; ++a)
    if (b[a] < 1 || dims[a] % b[a] != 0) throw ShapeError("volume dimensions must be multiples of the block size");
  const int D = b[0] * b[1] * b[2];
  Collection out;
  for (int z = 0; z < dims[2]; z += b[2])
    for (int y = 0; y < dims[1]; y += b[1])
      for (int x = 0; x < dims[0]; x += b[0]) out.block_corners.push_back({x, y, z});
  const auto nblocks = out.block_corners.size();
  if (gen.planted.empty()) {
    for (std::size_t l = 0; l < nblocks; ++l) out.planted.push_back(plant_model(D, gen.plant, mix_seed(seed, 1000 + l)));
  } else if (gen.planted.size() == 1 || gen.planted.size() == nblocks) {
    for (std::size_t l = 0; l < nblocks; ++l) out.planted.push_back(gen.planted.size() == 1 ? gen.planted[0] : gen.planted[l]);
  } else {
    throw ParameterError("planted models must be one shared model or one per block");
  }
  for (const auto& m : out.planted) {
    if (m.dim() != D) throw ShapeError("planted model dimension does not match the block");
    if ((m.sigma2.array() < 0.0).any()) throw ParameterError("planted noise variance must be non-negative");
  }

  for (int s = 0; s < n_subjects; ++s) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<float> data(voxel_count(dims));
    std::vector<int> labels;
    for (std::size_t l = 0; l < nblocks; ++l) {
      const MixtureModel& m = out.planted[l];
      double u = unit(rng), cum = 0.0;
      int k = m.clusters() - 1;
      for (int c = 0; c < m.clusters(); ++c) {
        cum += m.pi[c];
        if (u < cum) {
          k = c;
          break;
        }
      }
      labels.push_back(k);
      Eigen::VectorXd x(m.latent_dim());
      for (Eigen::Index c = 0; c < x.size(); ++c) x[c] = normal(rng);
      Eigen::VectorXd y = m.mu.col(k) + m.W[static_cast<std::size_t>(k)] * x;
      const double sd = std::sqrt(m.sigma2[k]);
      for (Eigen::Index j = 0; j < y.size(); ++j) y[j] += sd * normal(rng);
      const Index3& c0 = out.block_corners[l];
      Eigen::Index t = 0;
      for (int kk = 0; kk < b[2]; ++kk)
        for (int jj = 0; jj < b[1]; ++jj)
          for (int ii = 0; ii < b[0]; ++ii, ++t)
            data[linear_index(dims, c0[0] + ii, c0[1] + jj, c0[2] + kk)] =
                static_cast<float>(std::clamp(y[t], 0.0, 1.0));
    }
    out.labels.push_back(std::move(labels));
    out.volumes.emplace_back(dims, std::move(data));
  }
  return out;
}

struct Ellipsoid {
  std::array<double, 3> center;
  std::array<double, 3> radius;
  double intensity;
};

struct Wave {
  std::array<double, 3> freq;
  double phase;
  double amplitude;
};

double smooth_step_edge(double r, double min_radius) {
  // Soft indicator of r < 1 with an edge roughly half a voxel wide.
  return 1.0 / (1.0 + std::exp(-(1.0 - r) * min_radius / 0.35));
}

Collection generate_structured(int n_subjects, const Dims& dims, const GeneratorSpec& gen, std::uint64_t seed) {
  std::mt19937_64 pop(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](std::mt19937_64& r, double lo, double hi) { return lo + (hi - lo) * unit(r); };

  std::vector<Ellipsoid> shapes;
  for (int e = 0; e < gen.structures; ++e) {
    Ellipsoid el{};
    for (int a = 0; a < 3; ++a) el.center[a] = uniform(pop, 0.15, 0.85) * (dims[a] - 1);
    el.radius[0] = uniform(pop, 2.0, 0.3 * dims[0]);
    el.radius[1] = uniform(pop, 2.0, 0.3 * dims[1]);
    // Many structures are thin along the slice axis.
    el.radius[2] = e % 2 == 0 ? uniform(pop, 1.0, 2.5) : uniform(pop, 2.0, 0.25 * dims[2]);
    el.intensity = uniform(pop, 0.15, 0.95);
    shapes.push_back(el);
  }
  std::vector<Wave> background;
  for (int w = 0; w < 3; ++w) {
    Wave wv{};
    for (int a = 0; a < 3; ++a) wv.freq[a] = uniform(pop, 0.0, 2.0) * std::numbers::pi / dims[a];
    wv.phase = uniform(pop, 0.0, 2.0 * std::numbers::pi);
    wv.amplitude = 0.05;
    background.push_back(wv);
  }

  Collection out;
  for (int s = 0; s < n_subjects; ++s) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(s) + 1));
    std::normal_distribution<double> normal;
    std::array<double, 3> shift{};
    for (auto& v : shift) v = gen.deformation * uniform(rng, -1.0, 1.0);
    std::vector<Ellipsoid> subj = shapes;
    for (auto& el : subj) {
      for (int a = 0; a < 3; ++a) {
        el.center[a] += shift[a] + 0.5 * gen.deformation * uniform(rng, -1.0, 1.0);
        el.radius[a] *= uniform(rng, 0.9, 1.1);
      }
      el.intensity = std::clamp(el.intensity + uniform(rng, -0.05, 0.05), 0.0, 1.0);
    }
    std::vector<Wave> field;
    for (int w = 0; w < 3; ++w) {
      Wave wv{};
      for (int a = 0; a < 3; ++a) wv.freq[a] = uniform(rng, 0.0, 2.0) * std::numbers::pi / dims[a];
      wv.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      wv.amplitude = gen.field_amplitude;
      field.push_back(wv);
    }
    std::vector<float> data(voxel_count(dims));
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          const std::array<double, 3> p{static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)};
          double value = 0.3;
          for (const auto& w : background)
            value += w.amplitude * std::cos(w.freq[0] * p[0] + w.freq[1] * p[1] + w.freq[2] * p[2] + w.phase);
          for (const auto& w : field)
            value += w.amplitude * std::cos(w.freq[0] * p[0] + w.freq[1] * p[1] + w.freq[2] * p[2] + w.phase);
          for (const auto& el : subj) {
            double r2 = 0.0;
            for (int a = 0; a < 3; ++a) {
              const double q = (p[a] - el.center[a]) / el.radius[a];
              r2 += q * q;
            }
            const double min_r = std::min({el.radius[0], el.radius[1], el.radius[2]});
            const double wgt = smooth_step_edge(std::sqrt(r2), min_r);
            value = (1.0 - wgt) * value + wgt * el.intensity;
          }
          value += gen.noise_sigma * normal(rng);
          data[linear_index(dims, i, j, k)] = static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
    out.volumes.emplace_back(dims, gen.spacing, std::move(data));
  }
  return out;
}

}  // namespace

Collection generate_collection(int n_subjects, const Dims& dims, const GeneratorSpec& gen, std::uint64_t seed) {
  if (n_subjects < 1) throw ParameterError("need at least one subject");
  check_dims(dims);
  if (gen.kind == GeneratorKind::kModel) return generate_model(n_subjects, dims, gen, seed);
  return generate_structured(n_subjects, dims, gen, seed);
}

}  // namespace patchgmm

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
#include <vector>

#include "patchgmm/mixture.hpp"
#include "patchgmm/volume.hpp"

namespace patchgmm {

enum class GeneratorKind {
  kModel,       // blocks sampled from planted low-rank mixtures
  kStructured,  // shared ellipsoids with per-subject deformation and smooth fields
};

struct PlantSpec {
  int K = 2;
  int d = 2;
  double mean_lo = 0.25;
  double mean_hi = 0.75;
  double mean_jitter = 0.1;
  double w_scale = 0.05;
  double sigma2 = 1e-3;
};

// Cluster k has intensity level mean_lo + (mean_hi - mean_lo)(k + 1/2)/K and
// every voxel mean adds a uniform jitter in +-mean_jitter, clipped to
// [mean_lo, mean_hi]. A level shared by the whole block keeps cluster labels
// identifiable when each patch observes a single plane. Factor entries are
// N(0, w_scale^2), weights equal.
MixtureModel plant_model(int D, const PlantSpec& spec, std::uint64_t seed);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kStructured;

  // kModel: the volume is tiled by non-overlapping blocks; every block of
  // every subject is an independent draw from its location's model. If
  // `planted` is empty one model per block location is planted from the seed;
  // a single entry is shared by all locations.
  Dims block{5, 5, 6};
  PlantSpec plant;
  std::vector<MixtureModel> planted;

  // kStructured
  int structures = 14;
  double deformation = 1.0;       // voxels, per-subject shift and jitter scale
  double field_amplitude = 0.04;  // smooth intensity field
  double noise_sigma = 0.01;
  Spacing spacing{1.0, 1.0, 1.0};
};

struct Collection {
  std::vector<Volume> volumes;
  // kModel only
  std::vector<MixtureModel> planted;            // one per block location
  std::vector<Index3> block_corners;
  std::vector<std::vector<int>> labels;         // [subject][block]
};

// Deterministic in (n_subjects, dims, gen, seed). Intensities are clipped to [0, 1].
Collection generate_collection(int n_subjects, const Dims& dims, const GeneratorSpec& gen, std::uint64_t seed);

}  // namespace patchgmm

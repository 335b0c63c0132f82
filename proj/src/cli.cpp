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

#include "patchgmm/cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

#include "CLI11.hpp"
#include "json.hpp"
#include "patchgmm/degradation.hpp"
#include "patchgmm/ecm.hpp"
#include "patchgmm/em.hpp"
#include "patchgmm/error.hpp"
#include "patchgmm/imputer.hpp"
#include "patchgmm/log.hpp"
#include "patchgmm/metrics.hpp"
#include "patchgmm/model_io.hpp"
#include "patchgmm/parallel.hpp"
#include "patchgmm/synth.hpp"

namespace patchgmm::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVolumeExt = ".miv";
constexpr const char* kMaskSuffix = ".mask.miv";
constexpr const char* kModelExt = ".mivm";
constexpr const char* kManifestName = "manifest.json";

// Each subcommand draws from its own stream so that reusing one --seed across
// the pipeline does not correlate, say, subject labels with slice offsets.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char ch : stream) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
  return mix_seed(seed, h);
}

struct Common {
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--workers", c.workers, "Worker threads (0: available parallelism)")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", c.out, "Output path")->required();
}

int resolve_workers(int w) { return w > 0 ? w : default_workers(); }

bool is_mask_file(const fs::path& p) {
  const auto name = p.filename().string();
  return name.size() > std::char_traits<char>::length(kMaskSuffix) &&
         name.ends_with(kMaskSuffix);
}

// Volume files of a directory in name order, mask files excluded.
std::vector<fs::path> list_volumes(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto& p = e.path();
    if (p.extension() == kVolumeExt && !is_mask_file(p)) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no volumes in " + dir.string());
  return out;
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

fs::path mask_path(const fs::path& dir, const std::string& stem) { return dir / (stem + kMaskSuffix); }

ObservationMask load_mask_or_full(const fs::path& dir, const std::string& stem, const Dims& dims) {
  const auto p = mask_path(dir, stem);
  if (!fs::exists(p)) return ObservationMask::all_observed(dims);
  auto m = load_mask(p);
  if (m.dims() != dims) throw ShapeError("mask " + p.string() + " does not match its volume");
  return m;
}

Dims to_dims(const std::vector<int>& v, const char* what) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw ConfigError(std::string(what) + " needs 1 or 3 values");
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

// synth -----------------------------------------------------------------

struct SynthArgs {
  Common common;
  int subjects = 10;
  std::vector<int> dims{33, 33, 33};
  std::string generator = "structured";
  std::vector<int> block{5, 5, 6};
  int clusters = 2;
  int latent_dim = 2;
  double w_scale = 0.05;
  double sigma2 = 1e-3;
  double mean_jitter = 0.1;
  int structures = 14;
  double deformation = 1.0;
  double field_amplitude = 0.04;
  double noise_sigma = 0.01;
};

void setup_synth(CLI::App& app, SynthArgs& a) {
  auto* sub = app.add_subcommand("synth", "Generate a synthetic collection with ground truth");
  add_common(sub, a.common);
  sub->add_option("--subjects", a.subjects)->check(CLI::PositiveNumber);
  sub->add_option("--dims", a.dims)->expected(1, 3);
  sub->add_option("--generator", a.generator)->check(CLI::IsMember({"structured", "model"}));
  sub->add_option("--block", a.block, "Block size of the planted model")->expected(1, 3);
  sub->add_option("--clusters", a.clusters)->check(CLI::PositiveNumber);
  sub->add_option("--latent-dim", a.latent_dim)->check(CLI::NonNegativeNumber);
  sub->add_option("--w-scale", a.w_scale)->check(CLI::NonNegativeNumber);
  sub->add_option("--sigma2", a.sigma2)->check(CLI::NonNegativeNumber);
  sub->add_option("--mean-jitter", a.mean_jitter, "Per-voxel spread of planted cluster means")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--structures", a.structures)->check(CLI::NonNegativeNumber);
  sub->add_option("--deformation", a.deformation)->check(CLI::NonNegativeNumber);
  sub->add_option("--field-amplitude", a.field_amplitude)->check(CLI::NonNegativeNumber);
  sub->add_option("--noise-sigma", a.noise_sigma)->check(CLI::NonNegativeNumber);
}

void run_synth(const SynthArgs& a, std::ostream& out) {
  GeneratorSpec gen;
  gen.kind = a.generator == "model" ? GeneratorKind::kModel : GeneratorKind::kStructured;
  gen.block = to_dims(a.block, "--block");
  gen.plant.K = a.clusters;
  gen.plant.d = a.latent_dim;
  gen.plant.w_scale = a.w_scale;
  gen.plant.sigma2 = a.sigma2;
  gen.plant.mean_jitter = a.mean_jitter;
  gen.structures = a.structures;
  gen.deformation = a.deformation;
  gen.field_amplitude = a.field_amplitude;
  gen.noise_sigma = a.noise_sigma;
  const Dims dims = to_dims(a.dims, "--dims");
  if (gen.kind == GeneratorKind::kModel)
    for (int ax = 0; ax < 3; ++ax)
      if (gen.block[ax] < 1 || dims[ax] % gen.block[ax] != 0)
        throw ConfigError("--dims must be a multiple of --block for the model generator");

  const Collection col = generate_collection(a.subjects, dims, gen, a.common.seed);
  const fs::path dir = a.common.out;
  ensure_dir(dir);
  char name[32];
  for (std::size_t s = 0; s < col.volumes.size(); ++s) {
    std::snprintf(name, sizeof name, "subject_%03zu", s);
    save_volume(col.volumes[s], dir / (std::string(name) + kVolumeExt));
  }

  json truth;
  truth["generator"] = a.generator;
  truth["subjects"] = a.subjects;
  truth["dims"] = json::array({dims[0], dims[1], dims[2]});
  truth["seed"] = a.common.seed;
  if (gen.kind == GeneratorKind::kModel) {
    ensure_dir(dir / "truth");
    truth["block"] = json::array({gen.block[0], gen.block[1], gen.block[2]});
    json blocks = json::array();
    for (std::size_t b = 0; b < col.planted.size(); ++b) {
      std::snprintf(name, sizeof name, "block_%03zu", b);
      const std::string file = std::string("truth/") + name + kModelExt;
      save_mixture(col.planted[b], dir / file);
      const auto& c = col.block_corners[b];
      json labels = json::array();
      for (const auto& per_subject : col.labels) labels.push_back(per_subject[b]);
      blocks.push_back({{"corner", json::array({c[0], c[1], c[2]})}, {"file", file}, {"labels", labels}});
    }
    truth["blocks"] = std::move(blocks);
  }
  std::ofstream(dir / "truth.json") << truth.dump(2) << "\n";
  out << "wrote " << col.volumes.size() << " volumes to " << dir.string() << "\n";
}

// simulate --------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string in;
  std::string recipe = "axial";
  int factor = 6;
  int offset = -1;
  std::vector<double> angles{0.0, 0.0, 0.0};
  double angle_spread = 0.0;
  double fraction = 0.0;
  double blur_sigma = 0.0;
  int blur_axis = 2;
};

void setup_simulate(CLI::App& app, SimulateArgs& a) {
  auto* sub = app.add_subcommand("simulate", "Apply a slice acquisition model to a directory of volumes");
  add_common(sub, a.common);
  sub->add_option("--in", a.in, "Directory of ground-truth volumes")->required();
  sub->add_option("--recipe", a.recipe)->check(CLI::IsMember({"axial", "rotated", "random"}));
  sub->add_option("--factor", a.factor, "Slice spacing in voxels")->check(CLI::PositiveNumber);
  sub->add_option("--offset", a.offset, "First observed plane (-1: drawn per subject)")->check(CLI::Range(-1, 1 << 20));
  sub->add_option("--angles", a.angles, "Plane rotation in degrees about x, y, z")->expected(3);
  sub->add_option("--angle-spread", a.angle_spread,
                  "Per-subject rotation: each angle gets a uniform draw in +-spread degrees")
      ->check(CLI::Range(0.0, 180.0));
  sub->add_option("--fraction", a.fraction, "Observed fraction for random masks (0: 1/factor)")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--blur-sigma", a.blur_sigma, "Slice thickness blur in mm")->check(CLI::NonNegativeNumber);
  sub->add_option("--blur-axis", a.blur_axis)->check(CLI::Range(0, 2));
}

void run_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto inputs = list_volumes(a.in);
  const fs::path dir = a.common.out;
  ensure_dir(dir);
  const double deg = std::numbers::pi / 180.0;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const std::uint64_t subject_seed = mix_seed(stream_seed(a.common.seed, "simulate"), s);
    Volume v = load_volume(inputs[s]);
    if (a.blur_sigma > 0.0) v = thickness_blur(v, a.blur_sigma, a.blur_axis);
    ObservationMask m = ObservationMask::all_observed(v.dims());
    if (a.recipe == "axial") {
      const int offset = a.offset >= 0 ? a.offset % a.factor : plane_offset_for_seed(a.factor, subject_seed);
      m = axial_slice_mask(v.dims(), a.factor, offset);
    } else if (a.recipe == "rotated") {
      std::array<double, 3> ang{a.angles[0], a.angles[1], a.angles[2]};
      if (a.angle_spread > 0.0) {
        std::mt19937_64 rng(mix_seed(subject_seed, 0xa9));
        std::uniform_real_distribution<double> u(-a.angle_spread, a.angle_spread);
        for (auto& x : ang) x += u(rng);
      }
      m = rotated_plane_mask(v.dims(), a.factor, {ang[0] * deg, ang[1] * deg, ang[2] * deg}, subject_seed);
    } else {
      const double f = a.fraction > 0.0 ? a.fraction : 1.0 / a.factor;
      m = random_mask(v.dims(), f, subject_seed);
    }
    const std::string stem = stem_of(inputs[s]);
    save_volume(apply_mask(v, m), dir / (stem + kVolumeExt));
    save_mask(m, mask_path(dir, stem), v.spacing());
  }
  out << "simulated " << inputs.size() << " volumes into " << dir.string() << "\n";
}

// train -----------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string in;
  std::string variant = "em";
  int clusters = 5;
  int latent_dim = 30;
  int latent_init = 1;
  int latent_growth = 1;
  int max_iters = 100;
  double tol = 1e-6;
  double sigma2_floor = 1e-6;
  double min_cluster_weight = 1e-4;
  int init_iters = 25;
  double min_latent_spread = 1e-6;
  int ecm_low_rank = 0;
  std::vector<int> patch{11};
  std::vector<int> subvolume{21};
  std::vector<int> stride{11};
};

void setup_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Fit one mixture model per subvolume location");
  add_common(sub, a.common);
  sub->add_option("--in", a.in, "Directory of degraded volumes and masks")->required();
  sub->add_option("--variant", a.variant)->check(CLI::IsMember({"em", "ecm"}));
  sub->add_option("--clusters", a.clusters)->check(CLI::PositiveNumber);
  sub->add_option("--latent-dim", a.latent_dim)->check(CLI::PositiveNumber);
  sub->add_option("--latent-init", a.latent_init)->check(CLI::PositiveNumber);
  sub->add_option("--latent-growth", a.latent_growth)->check(CLI::NonNegativeNumber);
  sub->add_option("--max-iters", a.max_iters)->check(CLI::PositiveNumber);
  sub->add_option("--tol", a.tol)->check(CLI::NonNegativeNumber);
  sub->add_option("--sigma2-floor", a.sigma2_floor)->check(CLI::PositiveNumber);
  sub->add_option("--min-cluster-weight", a.min_cluster_weight)->check(CLI::NonNegativeNumber);
  sub->add_option("--init-iters", a.init_iters)->check(CLI::NonNegativeNumber);
  sub->add_option("--min-latent-spread", a.min_latent_spread,
                  "Latent spread below which a voxel keeps its previous cluster row")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--ecm-low-rank", a.ecm_low_rank, "Project ECM covariances to this rank each iteration (0: off)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--patch", a.patch)->expected(1, 3);
  sub->add_option("--subvolume", a.subvolume)->expected(1, 3);
  sub->add_option("--stride", a.stride)->expected(1, 3);
}

struct Subject {
  std::string stem;
  Volume volume;
  ObservationMask mask;
  Volume dense;  // interpolated, for initialization
};

Volume interpolate(const Volume& v, const ObservationMask& m) {
  return planar_axis(m) >= 0 ? baseline_linear(v, m) : baseline_nearest(v, m);
}

std::vector<Subject> load_subjects(const fs::path& dir, bool with_dense) {
  std::vector<Subject> out;
  for (const auto& p : list_volumes(dir)) {
    Volume v = load_volume(p);
    ObservationMask m = load_mask_or_full(dir, stem_of(p), v.dims());
    require_usable_mask(v, m);
    Volume dense = with_dense ? interpolate(v, m) : v;
    if (!out.empty() && v.dims() != out.front().volume.dims())
      throw ShapeError("volume " + p.string() + " has different dimensions");
    out.push_back({stem_of(p), std::move(v), std::move(m), std::move(dense)});
  }
  return out;
}

json iteration_json(const std::string& loc, int iteration, int latent_dim, double loglik) {
  return {{"location", loc}, {"iteration", iteration}, {"latent_dim", latent_dim}, {"loglik", loglik}};
}

void run_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg;
  cfg.K = a.clusters;
  cfg.d_target = a.latent_dim;
  cfg.d_init = std::min(a.latent_init, a.latent_dim);
  cfg.d_growth_per_iter = a.latent_growth;
  cfg.max_iters = a.max_iters;
  cfg.loglik_rel_tol = a.tol;
  cfg.sigma2_floor = a.sigma2_floor;
  cfg.min_cluster_weight = a.min_cluster_weight;
  cfg.init_gmm_iters = a.init_iters;
  cfg.min_latent_spread = a.min_latent_spread;

  const auto subjects = load_subjects(a.in, true);
  SubvolumeGrid grid;
  grid.patch_size = to_dims(a.patch, "--patch");
  grid.subvolume_size = to_dims(a.subvolume, "--subvolume");
  grid.stride = to_dims(a.stride, "--stride");
  grid.volume_dims = subjects.front().volume.dims();
  grid.validate();
  cfg.validate(grid.patch_dim());
  const bool ecm = a.variant == "ecm";
  if (ecm && grid.patch_dim() > kEcmMaxDim)
    throw ConfigError("the ecm variant supports patches of at most " + std::to_string(kEcmMaxDim) + " voxels");

  const fs::path dir = a.common.out;
  ensure_dir(dir);
  const auto centers = grid.centers();
  std::vector<int> trained(centers.size(), 0);

  parallel_for(centers.size(), resolve_workers(a.common.workers), [&](std::size_t li) {
    const Index3& center = centers[li];
    const std::string stem = location_stem(center);
    const fs::path model_file = dir / (stem + kModelExt);
    if (fs::exists(model_file)) return;

    std::vector<PatchSample> patches;
    std::vector<Eigen::VectorXd> dense;
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      auto p = extract_patches(subjects[s].volume, subjects[s].mask, grid, center, static_cast<int>(s));
      std::move(p.begin(), p.end(), std::back_inserter(patches));
      auto d = extract_dense_patches(subjects[s].dense, grid, center);
      std::move(d.begin(), d.end(), std::back_inserter(dense));
    }
    if (patches.size() < static_cast<std::size_t>(cfg.K))
      throw CoverageError("location " + stem + " has fewer observed patches than clusters");

    TrainConfig loc_cfg = cfg;
    loc_cfg.seed = mix_seed(stream_seed(a.common.seed, "train"), li);
    const MixtureModel init = init_from_interpolation(dense, loc_cfg);

    std::ostringstream log_lines;
    const auto t0 = std::chrono::steady_clock::now();
    if (ecm) {
      EcmOptions opts;
      opts.sigma2_floor = cfg.sigma2_floor;
      if (a.ecm_low_rank > 0) opts.low_rank = a.ecm_low_rank;
      const auto res = ecm_fit(patches, loc_cfg, FullCovModel::from_mixture(init), opts);
      for (std::size_t i = 0; i < res.loglik_trace.size(); ++i)
        log_lines << iteration_json(stem, static_cast<int>(i + 1), 0, res.loglik_trace[i]).dump() << "\n";
      save_full_cov(res.model, model_file.string() + ".part");
    } else {
      const auto res = fit(patches, loc_cfg, init);
      for (std::size_t i = 0; i < res.loglik_trace.size(); ++i)
        log_lines << iteration_json(stem, static_cast<int>(i + 1), res.latent_dims[i], res.loglik_trace[i]).dump()
                  << "\n";
      for (const auto& e : res.events) log_lines << json{{"location", stem}, {"event", e}}.dump() << "\n";
      save_mixture(res.model, model_file.string() + ".part");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log().info("location {} fitted on {} patches in {:.2f}s", stem, patches.size(), secs);
    std::ofstream(dir / (stem + ".ndjson")) << log_lines.str();
    // The model file appears last so an interrupted location is redone.
    fs::rename(model_file.string() + ".part", model_file);
    trained[li] = 1;
  });

  Manifest manifest;
  manifest.variant = a.variant;
  manifest.grid = grid;
  manifest.latent_dim = ecm ? (a.ecm_low_rank > 0 ? a.ecm_low_rank : cfg.d_target) : cfg.d_target;
  manifest.sigma2_floor = cfg.sigma2_floor;
  for (const auto& c : centers) manifest.entries.push_back({c, location_stem(c) + kModelExt});
  write_manifest(manifest, dir / kManifestName);
  const auto fitted = std::count(trained.begin(), trained.end(), 1);
  out << "trained " << fitted << " of " << centers.size() << " locations ("
      << centers.size() - static_cast<std::size_t>(fitted) << " already present)\n";
}

// impute ----------------------------------------------------------------

struct ImputeArgs {
  Common common;
  std::string in;
  std::string models;
  std::string mode = "map";
  bool keep_observed = false;
  bool soft = false;
};

void setup_impute(CLI::App& app, ImputeArgs& a) {
  auto* sub = app.add_subcommand("impute", "Restore degraded volumes with trained models");
  add_common(sub, a.common);
  sub->add_option("--in", a.in, "Directory of degraded volumes and masks")->required();
  sub->add_option("--models", a.models, "Model directory or manifest file")->required();
  sub->add_option("--mode", a.mode)->check(CLI::IsMember({"map", "sample"}));
  sub->add_flag("--keep-observed", a.keep_observed, "Copy acquired voxels into the output");
  sub->add_flag("--soft", a.soft, "Responsibility-weighted reconstruction (map mode)");
}

void run_impute(const ImputeArgs& a, std::ostream& out) {
  fs::path manifest = a.models;
  if (fs::is_directory(manifest)) manifest /= kManifestName;
  const ModelSet models = load_model_set(manifest);
  const auto subjects = load_subjects(a.in, false);
  const fs::path dir = a.common.out;
  ensure_dir(dir);
  RestoreOptions opts;
  opts.mode = a.mode == "sample" ? ImputeMode::kSample : ImputeMode::kMap;
  opts.keep_observed = a.keep_observed;
  opts.soft = a.soft;
  opts.workers = resolve_workers(a.common.workers);
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    opts.seed = mix_seed(stream_seed(a.common.seed, "impute"), s);
    const Volume restored = restore_volume(subjects[s].volume, subjects[s].mask, models, opts);
    save_volume(restored, dir / (subjects[s].stem + kVolumeExt));
  }
  out << "restored " << subjects.size() << " volumes into " << dir.string() << "\n";
}

// evaluate --------------------------------------------------------------

struct EvaluateArgs {
  Common common;
  std::string truth;
  std::string in;
  std::string restored;
  std::string psnr = "log-ratio";
  std::string region = "all";
};

void setup_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* sub = app.add_subcommand("evaluate", "Compare restored volumes and baselines with ground truth");
  add_common(sub, a.common);
  sub->add_option("--truth", a.truth, "Directory of ground-truth volumes")->required();
  sub->add_option("--in", a.in, "Directory of degraded volumes and masks")->required();
  sub->add_option("--restored", a.restored, "Directory of restored volumes")->required();
  sub->add_option("--psnr", a.psnr)->check(CLI::IsMember({"log-ratio", "conventional"}));
  sub->add_option("--region", a.region, "Voxels scored: all, or missing only")->check(CLI::IsMember({"all", "missing"}));
}

ReportRow score(const std::string& subject, const std::string& method, const Volume& z, const Volume& z0,
                const std::optional<ObservationMask>& region, PsnrConvention conv) {
  ReportRow r{subject, method, mse(z, z0, region), 0.0, 0.0};
  r.psnr = r.mse > 0.0 ? psnr_from_mse(z0.max_value(), r.mse, conv) : std::numeric_limits<double>::infinity();
  return r;
}

void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto conv = a.psnr == "conventional" ? PsnrConvention::kConventional : PsnrConvention::kLogRatio;
  const auto degraded = load_subjects(a.in, false);
  std::vector<ReportRow> rows;
  for (const auto& s : degraded) {
    const Volume z0 = load_volume(fs::path(a.truth) / (s.stem + kVolumeExt));
    const Volume restored = load_volume(fs::path(a.restored) / (s.stem + kVolumeExt));
    if (z0.dims() != s.volume.dims() || restored.dims() != s.volume.dims())
      throw ShapeError("subject " + s.stem + " has mismatched volume dimensions");
    std::optional<ObservationMask> region;
    if (a.region == "missing") {
      std::vector<std::uint8_t> flags(s.mask.size());
      for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = s.mask.observed(i) ? 0 : 1;
      region = ObservationMask(s.mask.dims(), std::move(flags));
    }
    auto nearest = score(s.stem, "nearest", baseline_nearest(s.volume, s.mask), z0, region, conv);
    auto method = score(s.stem, "method", restored, z0, region, conv);
    method.improvement = improvement_over_baseline(method.mse, nearest.mse);
    rows.push_back(method);
    rows.push_back(nearest);
    if (planar_axis(s.mask) >= 0) {
      auto linear = score(s.stem, "linear", baseline_linear(s.volume, s.mask), z0, region, conv);
      linear.improvement = improvement_over_baseline(linear.mse, nearest.mse);
      rows.push_back(linear);
    }
  }
  const fs::path report = a.common.out;
  if (report.has_parent_path()) ensure_dir(report.parent_path());
  std::ofstream f(report, std::ios::binary);
  f << format_report(rows);
  if (!f) throw IoError("cannot write " + report.string());
  out << "wrote report for " << degraded.size() << " subjects to " << report.string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patch-based imputation of sparsely sliced volumes", "patchgmm"};
  app.set_config("--config", "", "Configuration file (INI or TOML); sections name subcommands");
  app.require_subcommand(1);
  app.fallthrough();

  SynthArgs synth;
  SimulateArgs simulate;
  TrainArgs train;
  ImputeArgs impute;
  EvaluateArgs evaluate;
  setup_synth(app, synth);
  setup_simulate(app, simulate);
  setup_train(app, train);
  setup_impute(app, impute);
  setup_evaluate(app, evaluate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);  // prints the help of the subcommand that asked
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }

  try {
    if (app.got_subcommand("synth")) run_synth(synth, out);
    else if (app.got_subcommand("simulate")) run_simulate(simulate, out);
    else if (app.got_subcommand("train")) run_train(train, out);
    else if (app.got_subcommand("impute")) run_impute(impute, out);
    else run_evaluate(evaluate, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace patchgmm::cli

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

#include "patchgmm/model_io.hpp"

#include <cstring>

#include "json.hpp"

#include "binary_io.hpp"
#include "patchgmm/error.hpp"

namespace patchgmm {

namespace {

using detail::get_le;
using detail::put_le;
using json = nlohmann::json;

constexpr char kMagic[4] = {'M', 'I', 'V', 'M'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

struct ModelHeader {
  ModelVariant variant;
  int K, D, d;
};

std::string encode_header(ModelVariant v, int K, int D, int d) {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(K));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(D));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  return out;
}

ModelHeader decode_header(const std::string& bytes, const std::filesystem::path& path) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(path.string() + ": not a model file");
  const char* p = bytes.data() + 4;
  const auto v = get_le<std::uint32_t>(p);
  if (v > 1) throw FormatError(path.string() + ": unknown model variant");
  ModelHeader h{static_cast<ModelVariant>(v), static_cast<int>(get_le<std::uint32_t>(p + 4)),
                static_cast<int>(get_le<std::uint32_t>(p + 8)), static_cast<int>(get_le<std::uint32_t>(p + 12))};
  if (h.K < 1 || h.D < 1 || h.d < 0 || h.d >= h.D + 1) throw FormatError(path.string() + ": invalid model sizes");
  return h;
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}
  double next() {
    if (pos_ + 8 > bytes_.size()) throw FormatError(path_.string() + ": truncated model file");
    const double v = get_le<double>(bytes_.data() + pos_);
    pos_ += 8;
    return v;
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw FormatError(path_.string() + ": trailing bytes in model file");
  }

 private:
  const std::string& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = kHeaderBytes;
};

}  // namespace

void save_mixture(const MixtureModel& m, const std::filesystem::path& path) {
  m.validate();
  const int K = m.clusters(), D = m.dim(), d = m.latent_dim();
  std::string out = encode_header(ModelVariant::kFactored, K, D, d);
  for (int k = 0; k < K; ++k) put_le<double>(out, m.pi[k]);
  for (int k = 0; k < K; ++k) put_le<double>(out, m.sigma2[k]);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < D; ++j) put_le<double>(out, m.mu(j, k));
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < D; ++j)
      for (int c = 0; c < d; ++c) put_le<double>(out, m.W[static_cast<std::size_t>(k)](j, c));
  detail::write_file_atomic(path, out);
}

MixtureModel load_mixture(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const auto h = decode_header(bytes, path);
  if (h.variant != ModelVariant::kFactored) throw FormatError(path.string() + ": expected a factored model");
  Reader r(bytes, path);
  MixtureModel m = MixtureModel::isotropic(h.K, h.D, h.d, 1.0);
  for (int k = 0; k < h.K; ++k) m.pi[k] = r.next();
  for (int k = 0; k < h.K; ++k) m.sigma2[k] = r.next();
  for (int k = 0; k < h.K; ++k)
    for (int j = 0; j < h.D; ++j) m.mu(j, k) = r.next();
  for (int k = 0; k < h.K; ++k)
    for (int j = 0; j < h.D; ++j)
      for (int c = 0; c < h.d; ++c) m.W[static_cast<std::size_t>(k)](j, c) = r.next();
  r.finish();
  m.validate();
  return m;
}

void save_full_cov(const FullCovModel& m, const std::filesystem::path& path) {
  m.validate();
  const int K = m.clusters(), D = m.dim();
  std::string out = encode_header(ModelVariant::kFullCovariance, K, D, 0);
  for (int k = 0; k < K; ++k) put_le<double>(out, m.pi[k]);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < D; ++j) put_le<double>(out, m.mu(j, k));
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) put_le<double>(out, m.Sigma[static_cast<std::size_t>(k)](a, b));
  detail::write_file_atomic(path, out);
}

FullCovModel load_full_cov(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  const auto h = decode_header(bytes, path);
  if (h.variant != ModelVariant::kFullCovariance)
    throw FormatError(path.string() + ": expected a full-covariance model");
  Reader r(bytes, path);
  FullCovModel m;
  m.pi.resize(h.K);
  m.mu.resize(h.D, h.K);
  m.Sigma.assign(static_cast<std::size_t>(h.K), Eigen::MatrixXd(h.D, h.D));
  for (int k = 0; k < h.K; ++k) m.pi[k] = r.next();
  for (int k = 0; k < h.K; ++k)
    for (int j = 0; j < h.D; ++j) m.mu(j, k) = r.next();
  for (int k = 0; k < h.K; ++k)
    for (int a = 0; a < h.D; ++a)
      for (int b = 0; b < h.D; ++b) m.Sigma[static_cast<std::size_t>(k)](a, b) = r.next();
  r.finish();
  m.validate();
  return m;
}

ModelVariant peek_model_variant(const std::filesystem::path& path) {
  return decode_header(detail::read_file(path), path).variant;
}

namespace {

json dims_json(const Dims& d) { return json::array({d[0], d[1], d[2]}); }

Dims dims_from(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw ManifestError(std::string("manifest field ") + key + " must have 3 entries");
  return {a[0].get<int>(), a[1].get<int>(), a[2].get<int>()};
}

}  // namespace

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  json j;
  j["format"] = "patchgmm-manifest";
  j["version"] = 1;
  j["variant"] = m.variant;
  j["latent_dim"] = m.latent_dim;
  j["sigma2_floor"] = m.sigma2_floor;
  j["grid"] = {{"subvolume_size", dims_json(m.grid.subvolume_size)},
               {"stride", dims_json(m.grid.stride)},
               {"patch_size", dims_json(m.grid.patch_size)},
               {"volume_dims", dims_json(m.grid.volume_dims)}};
  json locs = json::array();
  for (const auto& e : m.entries) locs.push_back({{"center", dims_json(e.center)}, {"file", e.file}});
  j["locations"] = std::move(locs);
  detail::write_file_atomic(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "patchgmm-manifest") throw ManifestError(path.string() + ": not a model manifest");
    Manifest m;
    m.variant = j.at("variant").get<std::string>();
    if (m.variant != "em" && m.variant != "ecm") throw ManifestError("unknown manifest variant " + m.variant);
    m.latent_dim = j.at("latent_dim").get<int>();
    m.sigma2_floor = j.at("sigma2_floor").get<double>();
    const auto& g = j.at("grid");
    m.grid.subvolume_size = dims_from(g, "subvolume_size");
    m.grid.stride = dims_from(g, "stride");
    m.grid.patch_size = dims_from(g, "patch_size");
    m.grid.volume_dims = dims_from(g, "volume_dims");
    for (const auto& e : j.at("locations")) m.entries.push_back({dims_from(e, "center"), e.at("file").get<std::string>()});
    return m;
  } catch (const json::exception& e) {
    throw ManifestError(path.string() + ": " + e.what());
  }
}

ModelSet load_model_set(const std::filesystem::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  ModelSet set;
  set.grid = m.grid;
  const auto dir = manifest_path.parent_path();
  for (const auto& e : m.entries) {
    const auto file = dir / e.file;
    if (!std::filesystem::exists(file)) throw ManifestError("model file missing: " + file.string());
    MixtureModel model = m.variant == "ecm" ? to_factored(load_full_cov(file), m.latent_dim, m.sigma2_floor)
                                            : load_mixture(file);
    set.models.emplace(e.center, std::move(model));
  }
  return set;
}

std::string location_stem(const Index3& c) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "loc_%03d_%03d_%03d", c[0], c[1], c[2]);
  return buf;
}

}  // namespace patchgmm

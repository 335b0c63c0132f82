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

// Python bindings. Volumes cross the boundary as numpy arrays indexed
// [i, j, k] with axis 0 fastest in memory (Fortran order), masks as uint8.

#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "patchgmm/cli.hpp"
#include "patchgmm/degradation.hpp"
#include "patchgmm/error.hpp"
#include "patchgmm/imputer.hpp"
#include "patchgmm/metrics.hpp"
#include "patchgmm/model_io.hpp"
#include "patchgmm/synth.hpp"
#include "patchgmm/volume.hpp"

namespace py = pybind11;
using namespace patchgmm;

namespace {

using FArray = py::array_t<float, py::array::f_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::f_style | py::array::forcecast>;

Dims dims_of(const py::array& a) {
  if (a.ndim() != 3) throw ShapeError("expected a 3-D array");
  return {static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))};
}

Volume to_volume(const FArray& a, const Spacing& spacing) {
  const Dims d = dims_of(a);
  return Volume(d, spacing, std::vector<float>(a.data(), a.data() + a.size()));
}

ObservationMask to_mask(const MaskArray& a) {
  const Dims d = dims_of(a);
  return ObservationMask(d, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

FArray from_volume(const Volume& v) {
  const auto& d = v.dims();
  FArray out({d[0], d[1], d[2]});
  std::copy(v.data().begin(), v.data().end(), out.mutable_data());
  return out;
}

MaskArray from_mask(const ObservationMask& m) {
  const auto& d = m.dims();
  MaskArray out({d[0], d[1], d[2]});
  std::copy(m.flags().begin(), m.flags().end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Patch-based mixture model imputation for sparsely sliced volumes";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::enum_<PsnrConvention>(m, "PsnrConvention")
      .value("LOG_RATIO", PsnrConvention::kLogRatio)
      .value("CONVENTIONAL", PsnrConvention::kConventional);

  m.def(
      "load_volume",
      [](const std::filesystem::path& p) {
        const Volume v = load_volume(p);
        return py::make_tuple(from_volume(v), py::tuple(py::cast(v.spacing())));
      },
      py::arg("path"), "Returns (array, spacing).");
  m.def(
      "save_volume",
      [](const std::filesystem::path& p, const FArray& a, const Spacing& spacing) {
        save_volume(to_volume(a, spacing), p);
      },
      py::arg("path"), py::arg("array"), py::arg("spacing") = Spacing{1.0, 1.0, 1.0});
  m.def(
      "load_mask", [](const std::filesystem::path& p) { return from_mask(load_mask(p)); }, py::arg("path"));

  m.def(
      "axial_slice_mask",
      [](const Dims& dims, int factor, int offset) { return from_mask(axial_slice_mask(dims, factor, offset)); },
      py::arg("dims"), py::arg("factor"), py::arg("offset"));
  m.def(
      "rotated_plane_mask",
      [](const Dims& dims, int factor, const EulerAngles& angles, std::uint64_t seed) {
        return from_mask(rotated_plane_mask(dims, factor, angles, seed));
      },
      py::arg("dims"), py::arg("factor"), py::arg("angles"), py::arg("seed"));
  m.def(
      "random_mask",
      [](const Dims& dims, double fraction, std::uint64_t seed) { return from_mask(random_mask(dims, fraction, seed)); },
      py::arg("dims"), py::arg("fraction"), py::arg("seed"));
  m.def(
      "thickness_blur",
      [](const FArray& a, double sigma_mm, int axis, const Spacing& spacing) {
        return from_volume(thickness_blur(to_volume(a, spacing), sigma_mm, axis));
      },
      py::arg("array"), py::arg("sigma_mm"), py::arg("axis") = 2, py::arg("spacing") = Spacing{1.0, 1.0, 1.0});

  m.def(
      "generate_collection",
      [](int n, const Dims& dims, const std::string& kind, std::uint64_t seed) {
        GeneratorSpec gen;
        if (kind == "model") gen.kind = GeneratorKind::kModel;
        else if (kind != "structured") throw ParameterError("generator must be 'structured' or 'model'");
        const auto col = generate_collection(n, dims, gen, seed);
        py::list out;
        for (const auto& v : col.volumes) out.append(from_volume(v));
        return out;
      },
      py::arg("n_subjects"), py::arg("dims"), py::arg("kind") = "structured", py::arg("seed") = 0);

  m.def(
      "mse",
      [](const FArray& z, const FArray& z0) { return mse(to_volume(z, {1, 1, 1}), to_volume(z0, {1, 1, 1})); },
      py::arg("z"), py::arg("z0"));
  m.def("psnr_from_mse", &psnr_from_mse, py::arg("max_value"), py::arg("mse"),
        py::arg("convention") = PsnrConvention::kLogRatio);
  m.def(
      "baseline_nearest",
      [](const FArray& v, const MaskArray& mask) { return from_volume(baseline_nearest(to_volume(v, {1, 1, 1}), to_mask(mask))); },
      py::arg("volume"), py::arg("mask"));
  m.def(
      "baseline_linear",
      [](const FArray& v, const MaskArray& mask) { return from_volume(baseline_linear(to_volume(v, {1, 1, 1}), to_mask(mask))); },
      py::arg("volume"), py::arg("mask"));

  py::class_<MixtureModel>(m, "MixtureModel")
      .def_readonly("pi", &MixtureModel::pi)
      .def_readonly("mu", &MixtureModel::mu)
      .def_readonly("sigma2", &MixtureModel::sigma2)
      .def_readonly("W", &MixtureModel::W)
      .def_property_readonly("clusters", &MixtureModel::clusters)
      .def_property_readonly("dim", &MixtureModel::dim)
      .def_property_readonly("latent_dim", &MixtureModel::latent_dim)
      .def(
          "impute_map",
          [](const MixtureModel& model, const Eigen::VectorXd& values, std::vector<int> observed) {
            PatchSample p;
            p.values = values;
            p.observed = std::move(observed);
            return impute_patch_map(p, model).values;
          },
          py::arg("values"), py::arg("observed"), "Conditional-mean reconstruction of one patch.");
  m.def("load_mixture", &load_mixture, py::arg("path"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}

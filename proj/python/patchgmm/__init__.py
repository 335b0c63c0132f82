# patchgmm: imputation of sparsely sliced volumes from image collections
#
# Copyright 2026 The patchgmm Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Patch-based mixture model imputation for sparsely sliced volumes."""

from ._core import (
    Error,
    MixtureModel,
    PsnrConvention,
    axial_slice_mask,
    baseline_linear,
    baseline_nearest,
    generate_collection,
    load_mask,
    load_mixture,
    load_volume,
    mse,
    psnr_from_mse,
    random_mask,
    rotated_plane_mask,
    run_cli,
    save_volume,
    thickness_blur,
)

__all__ = [
    "Error",
    "MixtureModel",
    "PsnrConvention",
    "axial_slice_mask",
    "baseline_linear",
    "baseline_nearest",
    "generate_collection",
    "load_mask",
    "load_mixture",
    "load_volume",
    "mse",
    "psnr_from_mse",
    "random_mask",
    "rotated_plane_mask",
    "run_cli",
    "save_volume",
    "thickness_blur",
]

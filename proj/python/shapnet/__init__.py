# Copyright 2026 The ShapNet Authors.
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

"""Shapley explanation networks with intrinsic per-feature attributions."""

from shapnet._shapnet import (
    DeepShapNet,
    ShallowShapNet,
    ShapNet,
    ShapNetError,
    attribution_stats,
    build_preset,
    evaluate_metric,
    exact_shapley,
    exact_shapley_fn,
    generate_synthetic,
    load_model,
    normalized_l1,
    presets,
    run_checks,
    run_cli,
    sampled_shapley,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "DeepShapNet",
    "ShallowShapNet",
    "ShapNet",
    "ShapNetError",
    "attribution_stats",
    "build_preset",
    "evaluate_metric",
    "exact_shapley",
    "exact_shapley_fn",
    "generate_synthetic",
    "load_model",
    "normalized_l1",
    "presets",
    "run_checks",
    "run_cli",
    "sampled_shapley",
    "save_model",
    "train",
]

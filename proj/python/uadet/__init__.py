# Copyright 2026 The uadet Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the uadet detection head, losses and synthetic bench."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    Error,
    NumericalAbort,
    assign,
    certainty,
    giou,
    giou_loss,
    iou,
    nll,
    nms,
    npll,
    offsets_from_box,
)

__all__ = [
    "ConfigError",
    "Error",
    "NumericalAbort",
    "assign",
    "certainty",
    "classification_loss",
    "generate_scene",
    "giou",
    "giou_loss",
    "gradcheck",
    "iou",
    "nll",
    "nms",
    "npll",
    "offsets_from_box",
    "resolve_config",
    "train_and_evaluate",
]


def _dump(config):
    return _json.dumps(config or {})


def classification_loss(kind, p, y, sigma=None, alpha=0.25, gamma=2.0):
    """One of "fl", "qfl", "vfl", "ufl" for a single prediction."""
    return _core.classification_loss(kind, p, y, sigma, alpha, gamma)


def resolve_config(config=None):
    """Run config dict with every default filled in."""
    return _json.loads(_core.resolve_config(_dump(config)))


def generate_scene(config=None, seed=0):
    """Synthetic scene; features come back as a (C, H, W) float64 array."""
    return _core.generate_scene(_dump(config), seed)


def gradcheck(seed=0, n_probes=100):
    return _core.gradcheck(seed, n_probes)


def train_and_evaluate(config=None):
    """Trains a head and evaluates it; returns the report plus the loss trace."""
    return _core.train_and_evaluate(_dump(config))

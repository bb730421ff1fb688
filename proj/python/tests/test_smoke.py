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

import math

import numpy as np
import pytest

import uadet


def test_box_overlap():
    assert uadet.iou((0, 0, 10, 10), (5, 0, 15, 10)) == pytest.approx(1 / 3)
    assert uadet.giou((0, 0, 1, 1), (2, 0, 3, 1)) == pytest.approx(-1 / 3)
    assert uadet.offsets_from_box(2, 3, (0, 0, 10, 10)) == [2, 8, 3, 7]
    with pytest.raises(uadet.Error):
        uadet.iou((1, 0, 0, 1), (0, 0, 1, 1))


def test_regression_losses():
    two_log_two_pi = 2 * math.log(2 * math.pi)
    assert uadet.nll((3, 4, 5, 6), (1, 1, 1, 1), (3, 4, 5, 6)) == pytest.approx(two_log_two_pi)
    base = uadet.nll((1, 2, 3, 4), (0.3, 0.5, 0.7, 0.9), (1.5, 2, 2, 4))
    assert uadet.npll((1, 2, 3, 4), (0.3, 0.5, 0.7, 0.9), (1.5, 2, 2, 4), 0.4) == pytest.approx(0.4 * base)
    assert uadet.giou_loss((0, 0, 5, 5), (0, 0, 5, 5)) == 0.0


def test_classification_losses():
    assert uadet.certainty((0.2, 0.4, 0.6, 0.8)) == pytest.approx(0.5)
    assert uadet.classification_loss("fl", 0.5, 1.0) == pytest.approx(0.0625 * math.log(2))
    bce = -(0.8 * math.log(0.4) + 0.2 * math.log(0.6))
    ufl = uadet.classification_loss("ufl", 0.4, 0.8, sigma=(0.1, 0.1, 0.3, 0.3))
    assert ufl == pytest.approx(0.8 * bce)
    with pytest.raises(uadet.ConfigError):
        uadet.classification_loss("dfl", 0.4, 0.8)


def test_assign_and_nms():
    out = uadet.assign([(0, 0, 40, 40), (18, 6, 26, 14)], [0, 2], 16, 16, 4.0)
    assert out["label"][2 * 16 + 5] == 2
    assert out["target"][2 * 16 + 5] == [4, 4, 4, 4]
    assert out["label"][-1] == -1
    kept = uadet.nms([(0, 0, 10, 10), (0, 0, 10, 10), (0, 0, 10, 10)], [0, 0, 1], [0.8, 0.9, 0.1])
    assert kept == [1, 2]


def test_scene_and_config():
    cfg = uadet.resolve_config({"scene": {"side_noise_std": [0, 0, 0, 3]}})
    assert cfg["train"]["loss_mode"] == "ufl"
    scene = uadet.generate_scene({"scene": {"feature_noise": 0.0}}, seed=4)
    assert isinstance(scene["features"], np.ndarray)
    assert scene["features"].shape == (16, 16, 16)
    assert scene["labels"] == scene["clean"]
    again = uadet.generate_scene({"scene": {"feature_noise": 0.0}}, seed=4)
    assert np.array_equal(scene["features"], again["features"])
    with pytest.raises(uadet.ConfigError):
        uadet.resolve_config({"train": {"lr": 1}})


def test_gradcheck_and_short_run():
    rows = uadet.gradcheck(seed=1, n_probes=1)
    assert [r["target"] for r in rows] == [
        "nll", "npll", "giou_loss", "fl", "qfl", "vfl", "ufl", "crn", "head"]
    assert all(r["passed"] for r in rows)
    report = uadet.train_and_evaluate(
        {"train": {"steps": 40, "num_scenes": 2}, "eval": {"num_scenes": 2}})
    assert len(report["loss_total"]) == 40
    assert all(math.isfinite(v) for v in report["loss_total"])
    assert 0.0 <= report["mini_ap"] <= 1.0

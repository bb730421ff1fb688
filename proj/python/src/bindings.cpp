/*
 * Copyright 2026 The uadet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uadet/assignment.hpp"
#include "uadet/box.hpp"
#include "uadet/config.hpp"
#include "uadet/error.hpp"
#include "uadet/experiments.hpp"
#include "uadet/focal_losses.hpp"
#include "uadet/inference.hpp"
#include "uadet/scene.hpp"
#include "uadet/uncertainty_losses.hpp"

namespace py = pybind11;

namespace {

using Quad = std::array<double, 4>;

uadet::Box to_box(const Quad& b) { return {b[0], b[1], b[2], b[3]}; }
Quad from_box(const uadet::Box& b) { return {b.x_lt, b.y_lt, b.x_rb, b.y_rb}; }

uadet::FocalConfig focal_config(double alpha, double gamma) {
  uadet::FocalConfig c;
  c.alpha = alpha;
  c.gamma = gamma;
  c.validate();
  return c;
}

py::dict report_dict(const uadet::EvalReport& r) {
  py::dict d;
  d["mini_ap"] = r.mini_ap;
  d["num_images"] = r.num_images;
  d["num_detections"] = r.num_detections;
  d["num_true_positives"] = r.num_true_positives;
  d["per_side_sigma_mean"] = r.per_side_sigma_mean;
  d["per_side_abs_error_mean"] = r.per_side_abs_error_mean;
  d["calibration_corr"] = r.calibration_corr;
  return d;
}

uadet::RunConfig run_config(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw uadet::ConfigError("run config is not valid JSON");
  return uadet::run_config_from_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "uadet core bindings";

  auto base = py::register_exception<uadet::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<uadet::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<uadet::NumericalAbort>(m, "NumericalAbort", base.ptr());

  m.def("iou", [](const Quad& a, const Quad& b) { return uadet::iou(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def("giou", [](const Quad& a, const Quad& b) { return uadet::giou(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def("offsets_from_box",
        [](double x, double y, const Quad& b) { return uadet::offsets_from_box({x, y}, to_box(b)).as_array(); },
        py::arg("x"), py::arg("y"), py::arg("box"));

  m.def("nll",
        [](const Quad& mu, const Quad& sigma, const Quad& target) {
          return uadet::nll({mu, sigma}, uadet::OffsetTarget::from_array(target));
        },
        py::arg("mu"), py::arg("sigma"), py::arg("target"));
  m.def("npll",
        [](const Quad& mu, const Quad& sigma, const Quad& target, double iou_weight) {
          return uadet::npll({mu, sigma}, uadet::OffsetTarget::from_array(target), iou_weight);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("target"), py::arg("iou_weight"));
  m.def("giou_loss", [](const Quad& p, const Quad& g) { return uadet::giou_loss(to_box(p), to_box(g)); },
        py::arg("pred"), py::arg("gt"));

  m.def("certainty", [](const Quad& s) { return uadet::certainty(s); }, py::arg("sigma"));
  m.def("classification_loss",
        [](const std::string& kind, double p, double y, std::optional<Quad> sigma, double alpha, double gamma) {
          return uadet::classification_loss(uadet::parse_focal_kind(kind), {p, y, sigma},
                                            focal_config(alpha, gamma));
        },
        py::arg("kind"), py::arg("p"), py::arg("y"), py::arg("sigma") = py::none(),
        py::arg("alpha") = 0.25, py::arg("gamma") = 2.0);

  m.def("assign",
        [](const std::vector<Quad>& boxes, const std::vector<int>& classes, std::size_t h, std::size_t w,
           double stride) {
          if (boxes.size() != classes.size()) throw uadet::Error("boxes and classes differ in length");
          std::vector<uadet::GroundTruth> gts;
          for (std::size_t i = 0; i < boxes.size(); ++i) gts.push_back({to_box(boxes[i]), classes[i]});
          const auto map = uadet::assign(gts, {h, w, stride});
          std::vector<Quad> targets;
          for (const auto& t : map.target) targets.push_back(t.as_array());
          py::dict d;
          d["label"] = map.label;
          d["matched"] = map.matched;
          d["target"] = targets;
          return d;
        },
        py::arg("boxes"), py::arg("classes"), py::arg("h"), py::arg("w"), py::arg("stride"));

  m.def("nms",
        [](const std::vector<Quad>& boxes, const std::vector<int>& classes, const std::vector<double>& scores,
           double iou_threshold) {
          if (boxes.size() != classes.size() || boxes.size() != scores.size()) {
            throw uadet::Error("boxes, classes and scores differ in length");
          }
          std::vector<uadet::DetectionCandidate> cands;
          for (std::size_t i = 0; i < boxes.size(); ++i) {
            uadet::DetectionCandidate c;
            c.box = to_box(boxes[i]);
            c.class_id = classes[i];
            c.score = scores[i];
            c.location = i;
            cands.push_back(c);
          }
          std::vector<std::size_t> kept;
          for (const auto& c : uadet::nms(std::move(cands), iou_threshold)) kept.push_back(c.location);
          return kept;
        },
        py::arg("boxes"), py::arg("classes"), py::arg("scores"), py::arg("iou_threshold") = 0.6,
        "Indices of the kept candidates in rank order.");

  m.def("generate_scene",
        [](const std::string& config_json, std::uint64_t seed) {
          const auto s = uadet::generate_scene(run_config(config_json).scene, seed);
          py::array_t<double> features({s.channels, s.h, s.w});
          std::copy(s.features.begin(), s.features.end(), features.mutable_data());
          auto boxes = [](const std::vector<uadet::GroundTruth>& gts) {
            py::list out;
            for (const auto& g : gts) out.append(py::make_tuple(from_box(g.box), g.class_id));
            return out;
          };
          py::dict d;
          d["features"] = features;
          d["labels"] = boxes(s.labels);
          d["clean"] = boxes(s.clean);
          d["occluded_side"] = s.occluded_side;
          return d;
        },
        py::arg("config_json"), py::arg("seed"));

  m.def("gradcheck",
        [](std::uint64_t seed, std::size_t n_probes) {
          py::list out;
          for (const auto& r : uadet::run_gradcheck_suite(seed, n_probes)) {
            py::dict d;
            d["target"] = r.target;
            d["max_rel_error"] = r.max_rel_error;
            d["tolerance"] = r.tolerance;
            d["passed"] = r.passed;
            out.append(d);
          }
          return out;
        },
        py::arg("seed") = 0, py::arg("n_probes") = 100);

  m.def("train_and_evaluate",
        [](const std::string& config_json) {
          uadet::RunOutcome run;
          {
            py::gil_scoped_release release;
            run = uadet::train_and_evaluate(run_config(config_json));
          }
          py::list trace;
          for (const auto& r : run.train.trace) trace.append(r.total);
          py::dict d = report_dict(run.report);
          d["loss_total"] = trace;
          return d;
        },
        py::arg("config_json"));

  m.def("resolve_config",
        [](const std::string& config_json) { return uadet::to_json(run_config(config_json)).dump(); },
        py::arg("config_json"), "Fills defaults and validates; returns the full config as JSON text.");
}

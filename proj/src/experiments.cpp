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

#include "uadet/experiments.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "uadet/error.hpp"
#include "uadet/focal_losses.hpp"
#include "uadet/uncertainty_losses.hpp"

namespace uadet {

using ad::Tensor;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Probe {
  std::mt19937_64 rng;
  double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  std::vector<double> many(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = u(lo, hi);
    return v;
  }
  Tensor leaf(ad::Shape s, double lo, double hi) {
    const std::size_t n = ad::numel(s);
    return Tensor::leaf(std::move(s), many(n, lo, hi));
  }
  Tensor constant(ad::Shape s, double lo, double hi) {
    const std::size_t n = ad::numel(s);
    return Tensor::constant(std::move(s), many(n, lo, hi));
  }
  Tensor mask(std::size_t n, double rate) {
    std::vector<double> v(n);
    for (auto& x : v) x = u(0.0, 1.0) < rate ? 1.0 : 0.0;
    return Tensor::constant({n}, v);
  }
};

using ProbeFn = std::function<ad::GradCheckResult(Probe&)>;

ad::GradCheckResult check_focal(Probe& pr, FocalKind kind) {
  const std::size_t n = 8;
  const FocalConfig cfg;
  const Tensor p = pr.leaf({n}, 0.01, 0.99);
  const Tensor pos = pr.mask(n, 0.5);
  std::vector<double> yv = pr.many(n, 0.05, 1.0);
  for (std::size_t i = 0; i < n; ++i) yv[i] *= pos.at(i);
  const Tensor y = Tensor::constant({n}, yv);
  if (kind == FocalKind::ufl) {
    const Tensor sigma = pr.leaf({4, n}, 0.0, 1.0);
    return ad::grad_check(
        [&](const ad::Inputs& in) {
          const Tensor w = ad::reshape(losses::certainty(in[1]), {n});
          return ad::sum(losses::ufl_terms(in[0], y, w, pos, cfg));
        },
        {p, sigma});
  }
  return ad::grad_check(
      [&](const ad::Inputs& in) {
        switch (kind) {
          case FocalKind::fl:
            return ad::sum(losses::fl_terms(in[0], pos, cfg));
          case FocalKind::qfl:
            return ad::sum(losses::qfl_terms(in[0], y, pos, cfg));
          default:
            return ad::sum(losses::vfl_terms(in[0], y, pos, cfg));
        }
      },
      {p});
}

// Tiny head on random features with one or two random boxes.
ad::GradCheckResult check_head(Probe& pr) {
  HeadConfig head;
  head.in_channels = 4;
  head.tower_depth = 1;
  head.num_classes = 2;
  head.grid_h = head.grid_w = 8;
  head.stride = 4.0;
  const HeadParams params = init_head(head, pr.rng());
  TrainConfig tc;
  tc.loss_mode = FocalKind::ufl;
  tc.regression_mode = RegressionMode::npll;
  // A detached certainty weight still moves with sigma under finite
  // differences, so the check runs the fully coupled path.
  tc.ufl_sigma_grad = true;
  Scene scene;
  scene.channels = 4;
  scene.h = scene.w = 8;
  scene.features = pr.many(4 * 64, -1.0, 1.0);
  const int objects = 1 + static_cast<int>(pr.rng() % 2);
  for (int i = 0; i < objects; ++i) {
    const double x = pr.u(0.0, 16.0), y = pr.u(0.0, 16.0);
    scene.labels.push_back({{x, y, x + pr.u(6.0, 14.0), y + pr.u(6.0, 14.0)}, i % 2});
  }
  const TrainSample sample = make_sample(scene, head);
  const std::vector<double> frozen = compute_loss(head, params, sample, tc).iou;

  std::vector<Tensor> leaves;
  std::vector<std::string> names;
  for (const auto& [name, t] : params.items()) {
    names.push_back(name);
    leaves.push_back(t);
  }
  return ad::grad_check(
      [&](const ad::Inputs& in) {
        HeadParams p;
        for (std::size_t i = 0; i < in.size(); ++i) p.add(names[i], in[i]);
        return compute_loss(head, p, sample, tc, &frozen).total;
      },
      leaves);
}

struct Target {
  const char* name;
  double tolerance;
  ProbeFn fn;
};

std::vector<Target> gradcheck_targets() {
  std::vector<Target> t;
  t.push_back({"nll", kLossGradTolerance, [](Probe& pr) {
                 const Tensor mu = pr.leaf({4}, 0.0, 10.0);
                 const Tensor sigma = pr.leaf({4}, 0.05, 1.0);
                 const Tensor target = Tensor::constant(
                     {4}, {mu.at(0) + pr.u(-1.5, 1.5), mu.at(1) + pr.u(-1.5, 1.5),
                           mu.at(2) + pr.u(-1.5, 1.5), mu.at(3) + pr.u(-1.5, 1.5)});
                 return ad::grad_check(
                     [&](const ad::Inputs& in) { return losses::nll(in[0], in[1], target); },
                     {mu, sigma});
               }});
  t.push_back({"npll", kLossGradTolerance, [](Probe& pr) {
                 const Tensor mu = pr.leaf({4}, 0.0, 10.0);
                 const Tensor sigma = pr.leaf({4}, 0.05, 1.0);
                 const Tensor target = Tensor::constant(
                     {4}, {mu.at(0) + pr.u(-1.5, 1.5), mu.at(1) + pr.u(-1.5, 1.5),
                           mu.at(2) + pr.u(-1.5, 1.5), mu.at(3) + pr.u(-1.5, 1.5)});
                 const Tensor w = Tensor::scalar(pr.u(0.0, 1.0));
                 return ad::grad_check(
                     [&](const ad::Inputs& in) { return losses::npll(in[0], in[1], target, w); },
                     {mu, sigma});
               }});
  t.push_back({"giou_loss", kLossGradTolerance, [](Probe& pr) {
                 const Tensor pred = pr.leaf({4, 3}, 0.5, 10.0);
                 const Tensor target = pr.constant({4, 3}, 0.5, 10.0);
                 return ad::grad_check(
                     [&](const ad::Inputs& in) { return losses::giou_loss(in[0], target); }, {pred});
               }});
  t.push_back({"fl", kLossGradTolerance, [](Probe& pr) { return check_focal(pr, FocalKind::fl); }});
  t.push_back({"qfl", kLossGradTolerance, [](Probe& pr) { return check_focal(pr, FocalKind::qfl); }});
  t.push_back({"vfl", kLossGradTolerance, [](Probe& pr) { return check_focal(pr, FocalKind::vfl); }});
  t.push_back({"ufl", kLossGradTolerance, [](Probe& pr) { return check_focal(pr, FocalKind::ufl); }});
  t.push_back({"crn", kLossGradTolerance, [](Probe& pr) {
                 const Tensor sigma = pr.leaf({4, 2, 2}, 0.05, 0.95);
                 const Tensor w1 = pr.leaf({4, 4}, -1.0, 1.0);
                 const Tensor b1 = pr.leaf({4}, -0.5, 0.5);
                 const Tensor w2 = pr.leaf({1, 4}, -1.0, 1.0);
                 const Tensor b2 = pr.leaf({1}, -0.5, 0.5);
                 const Tensor coef = pr.constant({1, 2, 2}, -1.0, 1.0);
                 return ad::grad_check(
                     [&](const ad::Inputs& in) {
                       return ad::sum(crn(in[0], in[1], in[2], in[3], in[4]) * coef);
                     },
                     {sigma, w1, b1, w2, b2});
               }});
  t.push_back({"head", kHeadGradTolerance, [](Probe& pr) { return check_head(pr); }});
  return t;
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck_suite(std::uint64_t seed, std::size_t n_probes) {
  if (n_probes < 1) throw ConfigError("gradcheck: n_probes must be >= 1");
  std::vector<GradcheckRow> rows;
  const auto targets = gradcheck_targets();
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    GradcheckRow row;
    row.target = targets[ti].name;
    row.tolerance = targets[ti].tolerance;
    row.probes = n_probes;
    for (std::size_t k = 0; k < n_probes; ++k) {
      const std::uint64_t ps = mix(mix(seed, ti), k);
      Probe pr{std::mt19937_64(ps)};
      const ad::GradCheckResult r = targets[ti].fn(pr);
      if (!r.finite) {
        if (row.finite) {
          row.finite = false;
          row.worst_probe_seed = ps;
          row.worst_input = r.nonfinite_input;
          row.worst_index = r.nonfinite_index;
        }
        continue;
      }
      if (row.finite && (k == 0 || r.max_rel_error > row.max_rel_error)) {
        row.max_rel_error = r.max_rel_error;
        row.worst_probe_seed = ps;
        row.worst_input = r.worst_input;
        row.worst_index = r.worst_index;
      }
    }
    row.passed = row.finite && row.max_rel_error <= row.tolerance;
    rows.push_back(row);
  }
  return rows;
}

void write_gradcheck_csv(std::ostream& os, std::span<const GradcheckRow> rows) {
  os << "target,probes,max_rel_error,tolerance,status,worst_probe_seed,worst_input,worst_index\n";
  for (const auto& r : rows) {
    os << r.target << ',' << r.probes << ',' << (r.finite ? num(r.max_rel_error) : "nonfinite")
       << ',' << num(r.tolerance) << ',' << (r.passed ? "pass" : "fail") << ','
       << r.worst_probe_seed << ',' << r.worst_input << ',' << r.worst_index << '\n';
  }
}

std::vector<Scene> training_scenes(const RunConfig& cfg) {
  return generate_scenes(cfg.scene, Split::train, cfg.train.num_scenes);
}

std::vector<Scene> evaluation_scenes(const RunConfig& cfg) {
  return generate_scenes(cfg.scene, cfg.eval.split, cfg.eval.num_scenes);
}

RunOutcome train_and_evaluate(const RunConfig& cfg) {
  cfg.validate();
  const HeadConfig head = cfg.head_config();
  const auto train_set = training_scenes(cfg);
  RunOutcome out;
  out.train = train(head, cfg.train, train_set);
  const auto eval_set = evaluation_scenes(cfg);
  out.report = evaluate(head, out.train.params, eval_set, cfg.inference);
  return out;
}

void write_loss_trace_csv(std::ostream& os, std::span<const LossRecord> trace, bool with_quality) {
  os << "step,L_uac,L_bbox,L_uc,total" << (with_quality ? ",L_quality" : "") << '\n';
  for (const auto& r : trace) {
    os << r.step << ',' << num(r.l_uac) << ',' << num(r.l_bbox) << ',' << num(r.l_uc) << ','
       << num(r.total);
    if (with_quality) os << ',' << num(r.l_quality);
    os << '\n';
  }
}

nlohmann::json report_to_json(const EvalReport& r, ScoringMode mode) {
  nlohmann::json j;
  j["scoring_mode"] = to_string(mode);
  j["mini_ap"] = r.mini_ap;
  j["num_images"] = r.num_images;
  j["num_detections"] = r.num_detections;
  j["num_true_positives"] = r.num_true_positives;
  j["per_side_sigma_mean"] = r.per_side_sigma_mean ? nlohmann::json(*r.per_side_sigma_mean) : nullptr;
  j["per_side_abs_error_mean"] =
      r.per_side_abs_error_mean ? nlohmann::json(*r.per_side_abs_error_mean) : nullptr;
  j["calibration_corr"] = r.calibration_corr ? nlohmann::json(*r.calibration_corr) : nullptr;
  j["note"] =
      "mini_ap: 11-point AP at IoU 0.5 against clean boxes. per_side_* are means over true "
      "positives in l, r, t, b order; sigma is in stride units, errors in pixels. "
      "calibration_corr (Pearson, mean sigma vs mean absolute edge error per detection) and the "
      "per-side sigma ordering are operational measures of uncertainty quality chosen here; "
      "they are not defined by the method itself.";
  return j;
}

AblationMatrix parse_ablation_matrix(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("ablation matrix must be a JSON object");
  AblationMatrix m;
  for (const auto& [k, v] : j.items()) {
    if (k != "base" && k != "loss_modes" && k != "regression_modes" && k != "seeds") {
      throw ConfigError("unknown ablation matrix key " + k);
    }
  }
  if (j.contains("base")) m.base = j.at("base");
  try {
    for (const auto& s : j.value("loss_modes", std::vector<std::string>{"fl", "ufl"})) {
      m.loss_modes.push_back(parse_focal_kind(s));
    }
    for (const auto& s : j.value("regression_modes", std::vector<std::string>{"npll"})) {
      m.regression_modes.push_back(parse_regression_mode(s));
    }
    m.seeds = j.value("seeds", std::vector<std::uint64_t>{1, 2, 3});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ablation matrix: ") + e.what());
  }
  if (m.loss_modes.empty() || m.regression_modes.empty() || m.seeds.empty()) {
    throw ConfigError("ablation matrix needs at least one loss mode, regression mode and seed");
  }
  // Validate the base once so typos fail before any cell runs.
  run_config_from_json(m.base);
  return m;
}

RunConfig ablation_cell_config(const AblationMatrix& m, FocalKind loss, RegressionMode reg,
                               std::uint64_t seed) {
  nlohmann::json j = m.base;
  apply_override(j, "train.loss_mode=\"" + std::string(to_string(loss)) + "\"");
  apply_override(j, "train.regression_mode=\"" + std::string(to_string(reg)) + "\"");
  apply_override(j, "train.seed=" + std::to_string(seed));
  apply_override(j, "scene.seed=" + std::to_string(seed));
  return run_config_from_json(j);
}

std::vector<AblationRow> run_ablation(const AblationMatrix& m) {
  std::vector<AblationRow> rows;
  for (auto loss : m.loss_modes) {
    for (auto reg : m.regression_modes) {
      for (auto seed : m.seeds) {
        AblationRow row;
        row.loss_mode = loss;
        row.regression_mode = reg;
        row.seed = seed;
        try {
          row.report = train_and_evaluate(ablation_cell_config(m, loss, reg, seed)).report;
          row.ok = true;
        } catch (const Error& e) {
          row.error = e.what();
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

std::string side(const std::optional<std::array<double, 4>>& v, std::size_t k) {
  return v ? num((*v)[k]) : "";
}

std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

}  // namespace

void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows) {
  os << "loss_mode,regression_mode,seed,status,mini_ap,calibration_corr,sigma_l,sigma_r,sigma_t,"
        "sigma_b,abs_err_l,abs_err_r,abs_err_t,abs_err_b,error\n";
  for (const auto& r : rows) {
    os << to_string(r.loss_mode) << ',' << to_string(r.regression_mode) << ',' << r.seed << ','
       << (r.ok ? "ok" : "failed") << ',' << (r.ok ? num(r.report.mini_ap) : "") << ','
       << (r.ok ? opt(r.report.calibration_corr) : "");
    for (std::size_t k = 0; k < 4; ++k) os << ',' << (r.ok ? side(r.report.per_side_sigma_mean, k) : "");
    for (std::size_t k = 0; k < 4; ++k) {
      os << ',' << (r.ok ? side(r.report.per_side_abs_error_mean, k) : "");
    }
    os << ',' << (r.error.empty() ? "" : csv_escape(r.error)) << '\n';
  }
  // One summary row per (loss, regression) pair: means over successful cells.
  std::vector<std::pair<FocalKind, RegressionMode>> modes;
  for (const auto& r : rows) {
    const auto key = std::pair{r.loss_mode, r.regression_mode};
    if (std::find(modes.begin(), modes.end(), key) == modes.end()) modes.push_back(key);
  }
  for (const auto& [loss, reg] : modes) {
    double ap = 0.0, corr = 0.0;
    std::array<double, 4> sig{}, err{};
    std::size_t n = 0, n_corr = 0, n_sig = 0;
    for (const auto& r : rows) {
      if (r.loss_mode != loss || r.regression_mode != reg || !r.ok) continue;
      ++n;
      ap += r.report.mini_ap;
      if (r.report.calibration_corr) {
        corr += *r.report.calibration_corr;
        ++n_corr;
      }
      if (r.report.per_side_sigma_mean) {
        ++n_sig;
        for (std::size_t k = 0; k < 4; ++k) {
          sig[k] += (*r.report.per_side_sigma_mean)[k];
          err[k] += (*r.report.per_side_abs_error_mean)[k];
        }
      }
    }
    os << to_string(loss) << ',' << to_string(reg) << ",mean," << (n ? "ok" : "failed") << ','
       << (n ? num(ap / static_cast<double>(n)) : "") << ','
       << (n_corr ? num(corr / static_cast<double>(n_corr)) : "");
    for (std::size_t k = 0; k < 4; ++k) os << ',' << (n_sig ? num(sig[k] / static_cast<double>(n_sig)) : "");
    for (std::size_t k = 0; k < 4; ++k) os << ',' << (n_sig ? num(err[k] / static_cast<double>(n_sig)) : "");
    os << ",\n";
  }
}

}  // namespace uadet

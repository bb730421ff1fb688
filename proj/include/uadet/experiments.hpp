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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uadet/config.hpp"
#include "uadet/eval.hpp"
#include "uadet/train.hpp"

namespace uadet {

// ---- gradient suite -------------------------------------------------------

struct GradcheckRow {
  std::string target;
  std::size_t probes = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  // Probe and coordinate with the largest error (or the first non-finite one).
  std::uint64_t worst_probe_seed = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  bool finite = true;
};

inline constexpr double kLossGradTolerance = 1e-4;
inline constexpr double kHeadGradTolerance = 1e-3;

// Targets in order: nll, npll, giou_loss, fl, qfl, vfl, ufl, crn, head.
std::vector<GradcheckRow> run_gradcheck_suite(std::uint64_t seed, std::size_t n_probes);
void write_gradcheck_csv(std::ostream& os, std::span<const GradcheckRow> rows);

// ---- single runs ----------------------------------------------------------

std::vector<Scene> training_scenes(const RunConfig& cfg);
std::vector<Scene> evaluation_scenes(const RunConfig& cfg);

struct RunOutcome {
  TrainResult train;
  EvalReport report;
};

RunOutcome train_and_evaluate(const RunConfig& cfg);

// Columns step, L_uac, L_bbox, L_uc, total; L_quality is appended when the
// head has a quality branch.
void write_loss_trace_csv(std::ostream& os, std::span<const LossRecord> trace, bool with_quality);

nlohmann::json report_to_json(const EvalReport& r, ScoringMode mode);

// ---- ablation matrix ------------------------------------------------------

struct AblationMatrix {
  nlohmann::json base = nlohmann::json::object();  // run config overrides shared by all cells
  std::vector<FocalKind> loss_modes;
  std::vector<RegressionMode> regression_modes;
  std::vector<std::uint64_t> seeds;
};

// {"base": {...run config...}, "loss_modes": [...], "regression_modes":
// [...], "seeds": [...]}; unknown keys rejected.
AblationMatrix parse_ablation_matrix(const nlohmann::json& j);

struct AblationRow {
  FocalKind loss_mode = FocalKind::ufl;
  RegressionMode regression_mode = RegressionMode::npll;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
};

// Cell config: base, then loss/regression modes, then the seed applied to
// both scene and train seeds.
RunConfig ablation_cell_config(const AblationMatrix& m, FocalKind loss, RegressionMode reg,
                               std::uint64_t seed);

// Cells in loss-major, regression, seed order. A failing cell is recorded
// and the rest still run.
std::vector<AblationRow> run_ablation(const AblationMatrix& m);
void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows);

}  // namespace uadet

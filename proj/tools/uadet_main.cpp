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

// uadet: train, evaluate and check the uncertainty-aware detection head on
// synthetic scenes.
//
// Exit codes: 0 success, 1 check or experiment failure, 2 configuration
// error, 3 numerical abort.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "uadet/config.hpp"
#include "uadet/error.hpp"
#include "uadet/experiments.hpp"
#include "uadet/head.hpp"
#include "uadet/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailed = 1, kConfig = 2, kNumerical = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "JSON run config (defaults apply when omitted)");
    cmd->add_option("--override", c.overrides, "key=value or section.key=value, repeatable");
  }
  cmd->add_option("--seed", c.seed, "sets scene.seed and train.seed");
  cmd->add_option("--out-dir", c.out_dir, "output directory (overrides out_dir)");
}

uadet::RunConfig resolve(const Common& c) {
  std::vector<std::string> ov = c.overrides;
  if (c.seed) {
    ov.push_back("scene.seed=" + std::to_string(*c.seed));
    ov.push_back("train.seed=" + std::to_string(*c.seed));
  }
  if (!c.out_dir.empty()) ov.push_back("out_dir=" + json(c.out_dir).dump());
  return uadet::resolve_run_config(c.config, ov);
}

fs::path prepare_dir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

// Keeps one manifest per output directory covering every artifact any
// command wrote there, sorted by path.
void update_manifest(const fs::path& dir, const std::vector<std::string>& written) {
  std::set<std::string> paths(written.begin(), written.end());
  const fs::path mpath = dir / "manifest.json";
  if (fs::exists(mpath)) {
    std::ifstream is(mpath);
    const json old = json::parse(is, nullptr, false);
    if (old.is_object() && old.contains("artifacts")) {
      for (const auto& a : old["artifacts"]) {
        const auto p = a.value("path", "");
        if (!p.empty() && fs::exists(dir / p)) paths.insert(p);
      }
    }
  }
  uadet::write_manifest(dir.string(), "uadet", {paths.begin(), paths.end()});
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc | std::ios::binary);
  if (!os) throw uadet::Error("cannot write " + p.string());
  os << text;
}

int cmd_train(const Common& c) {
  const uadet::RunConfig cfg = resolve(c);
  const fs::path dir = prepare_dir(cfg.out_dir);
  const uadet::HeadConfig head = cfg.head_config();
  const auto scenes = uadet::training_scenes(cfg);
  const uadet::TrainResult result = uadet::train(head, cfg.train, scenes);

  write_text(dir / "config.json", uadet::to_json(cfg).dump(2) + "\n");
  uadet::save_checkpoint((dir / "checkpoint.bin").string(), head, result.params);
  {
    std::ofstream os(dir / "loss_trace.csv", std::ios::trunc | std::ios::binary);
    uadet::write_loss_trace_csv(os, result.trace, head.quality != uadet::QualityBranch::none);
  }
  update_manifest(dir, {"config.json", "checkpoint.bin", "loss_trace.csv"});
  const auto& first = result.trace.front();
  const auto& last = result.trace.back();
  std::printf("steps %zu  initial total %.6g  final total %.6g (L_uac %.6g  L_bbox %.6g  L_uc %.6g)\n",
              result.trace.size(), first.total, last.total, last.l_uac, last.l_bbox, last.l_uc);
  std::printf("wrote %s\n", (dir / "checkpoint.bin").string().c_str());
  return kOk;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& mode) {
  Common cc = c;
  if (!mode.empty()) cc.overrides.push_back("inference.mode=" + json(mode).dump());
  const uadet::RunConfig cfg = resolve(cc);
  const fs::path dir = prepare_dir(cfg.out_dir);
  const std::string ck_path = checkpoint.empty() ? (dir / "checkpoint.bin").string() : checkpoint;
  uadet::Checkpoint ck;
  try {
    ck = uadet::load_checkpoint(ck_path);
  } catch (const uadet::ConfigError&) {
    throw;
  } catch (const uadet::Error& e) {
    throw uadet::ConfigError(e.what());
  }
  const uadet::HeadConfig head = cfg.head_config();
  if (!(ck.config == head)) {
    throw uadet::ConfigError("checkpoint head " + uadet::head_config_to_json(ck.config).dump() +
                             " does not match config head " +
                             uadet::head_config_to_json(head).dump());
  }
  const auto scenes = uadet::evaluation_scenes(cfg);
  const auto images = uadet::run_detector(head, ck.params, scenes, cfg.inference);
  const uadet::EvalReport report = uadet::summarize(images, head.num_classes);

  const std::string tag(uadet::to_string(cfg.inference.mode));
  const std::string report_name = "eval_" + tag + ".json";
  const std::string dets_name = "detections_" + tag + ".jsonl";
  write_text(dir / report_name, uadet::report_to_json(report, cfg.inference.mode).dump(2) + "\n");
  {
    std::ofstream os(dir / dets_name, std::ios::trunc | std::ios::binary);
    for (std::size_t i = 0; i < images.size(); ++i) {
      uadet::write_detections_jsonl(os, images[i].detections);
    }
  }
  update_manifest(dir, {report_name, dets_name});
  std::printf("mini_ap %.6f  detections %zu  true positives %zu\n", report.mini_ap,
              report.num_detections, report.num_true_positives);
  if (report.per_side_sigma_mean) {
    const auto& s = *report.per_side_sigma_mean;
    std::printf("sigma l %.4f r %.4f t %.4f b %.4f\n", s[0], s[1], s[2], s[3]);
  }
  if (report.calibration_corr) std::printf("calibration_corr %.4f\n", *report.calibration_corr);
  return kOk;
}

int cmd_gradcheck(const Common& c, std::size_t n_probes) {
  const std::uint64_t seed = c.seed.value_or(0);
  const auto rows = uadet::run_gradcheck_suite(seed, n_probes);
  std::printf("%-10s %7s %14s %10s  %s\n", "target", "probes", "max_rel_err", "tolerance", "status");
  bool ok = true;
  for (const auto& r : rows) {
    std::printf("%-10s %7zu %14.3e %10.1e  %s\n", r.target.c_str(), r.probes,
                r.finite ? r.max_rel_error : NAN, r.tolerance, r.passed ? "pass" : "FAIL");
    if (!r.passed) {
      ok = false;
      std::printf("  offending probe seed %llu, input %zu, coordinate %zu%s\n",
                  static_cast<unsigned long long>(r.worst_probe_seed), r.worst_input, r.worst_index,
                  r.finite ? "" : " (non-finite)");
    }
  }
  if (!c.out_dir.empty()) {
    const fs::path dir = prepare_dir(c.out_dir);
    {
      std::ofstream os(dir / "gradcheck.csv", std::ios::trunc | std::ios::binary);
      uadet::write_gradcheck_csv(os, rows);
    }
    update_manifest(dir, {"gradcheck.csv"});
  }
  return ok ? kOk : kFailed;
}

int cmd_ablation(const Common& c, const std::string& matrix_path) {
  std::ifstream is(matrix_path);
  if (!is) throw uadet::ConfigError("cannot open matrix file " + matrix_path);
  json mj = json::parse(is, nullptr, false);
  if (mj.is_discarded()) throw uadet::ConfigError("matrix file " + matrix_path + " is not valid JSON");
  const uadet::AblationMatrix m = uadet::parse_ablation_matrix(mj);
  const std::string out = !c.out_dir.empty() ? c.out_dir
                                             : uadet::run_config_from_json(m.base).out_dir;
  const fs::path dir = prepare_dir(out);
  const auto rows = uadet::run_ablation(m);
  {
    std::ofstream os(dir / "ablation.csv", std::ios::trunc | std::ios::binary);
    uadet::write_ablation_csv(os, rows);
  }
  update_manifest(dir, {"ablation.csv"});
  bool ok = true;
  for (const auto& r : rows) {
    std::printf("%-4s %-5s seed %-6llu %s", std::string(uadet::to_string(r.loss_mode)).c_str(),
                std::string(uadet::to_string(r.regression_mode)).c_str(),
                static_cast<unsigned long long>(r.seed), r.ok ? "ok" : "FAILED");
    if (r.ok) std::printf("  mini_ap %.4f", r.report.mini_ap);
    if (!r.ok) std::printf("  %s", r.error.c_str());
    std::printf("\n");
    ok = ok && r.ok;
  }
  std::printf("wrote %s\n", (dir / "ablation.csv").string().c_str());
  return ok ? kOk : kFailed;
}

int cmd_gen_scenes(const Common& c, const std::string& split, std::size_t count) {
  const uadet::RunConfig cfg = resolve(c);
  const fs::path dir = prepare_dir(cfg.out_dir);
  uadet::Split s;
  if (split == "train") {
    s = uadet::Split::train;
  } else if (split == "eval") {
    s = uadet::Split::eval;
  } else {
    throw uadet::ConfigError("--split must be train or eval");
  }
  const auto scenes = uadet::generate_scenes(cfg.scene, s, count);
  const std::string stem = "scenes_" + split;
  uadet::write_dataset((dir / stem).string(), cfg.scene, scenes);
  update_manifest(dir, {stem + ".jsonl", stem + ".bin"});
  std::printf("wrote %zu scenes to %s.{jsonl,bin}\n", scenes.size(), (dir / stem).string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uadet: uncertainty-aware anchor-free detection on synthetic scenes"};
  app.require_subcommand(1);

  Common train_opts, eval_opts, grad_opts, abl_opts, gen_opts;
  std::string checkpoint, mode, matrix, split = "train";
  std::size_t n_probes = 100, count = 16;

  auto* train = app.add_subcommand("train", "train a head; writes checkpoint and loss trace");
  add_common(train, train_opts);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint; writes an EvalReport");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", checkpoint, "checkpoint path (default <out_dir>/checkpoint.bin)");
  eval->add_option("--mode", mode,
                   "uncertainty_aware | centerness_product | iou_branch_product | raw_classification");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every loss and the head");
  add_common(grad, grad_opts, false);
  grad->add_option("--n-probes", n_probes, "random probes per target")->check(CLI::PositiveNumber);

  auto* abl = app.add_subcommand("ablation", "train and evaluate every cell of a mode x seed matrix");
  add_common(abl, abl_opts, false);
  abl->add_option("--matrix", matrix, "JSON matrix file")->required();

  auto* gen = app.add_subcommand("gen-scenes", "write a synthetic scene dataset");
  add_common(gen, gen_opts);
  gen->add_option("--split", split, "train | eval");
  gen->add_option("--count", count, "number of scenes")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*train) return cmd_train(train_opts);
    if (*eval) return cmd_eval(eval_opts, checkpoint, mode);
    if (*grad) return cmd_gradcheck(grad_opts, n_probes);
    if (*abl) return cmd_ablation(abl_opts, matrix);
    if (*gen) return cmd_gen_scenes(gen_opts, split, count);
  } catch (const uadet::ConfigError& e) {
    std::fprintf(stderr, "uadet: config error: %s\n", e.what());
    return kConfig;
  } catch (const uadet::NumericalAbort& e) {
    std::fprintf(stderr, "uadet: numerical abort at step %ld (parameter norm %.6g): %s\n", e.step(),
                 e.param_norm(), e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "uadet: error: %s\n", e.what());
    return kFailed;
  }
  return kOk;
}

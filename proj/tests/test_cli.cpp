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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "uadet/manifest.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "uadet_test_cli";

int cli(const std::string& args) {
  const std::string cmd = std::string(UADET_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t data_rows(const fs::path& csv) {
  std::ifstream is(csv);
  std::string line;
  std::size_t n = 0;
  std::getline(is, line);  // header
  while (std::getline(is, line)) n += !line.empty();
  return n;
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("sha256 known answer") {
  write(kRoot / "abc.txt", "abc");
  CHECK(uadet::sha256_file((kRoot / "abc.txt").string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config errors exit with 2") {
  const std::string out = " --out-dir " + (kRoot / "bad").string();
  CHECK(cli("train --override train.bogus=1" + out) == 2);
  CHECK(cli("train --override train.lambda_uc=0" + out) == 2);
  CHECK(cli("train --override seed=3" + out) == 2);
  write(kRoot / "broken.json", "{");
  CHECK(cli("train --config " + (kRoot / "broken.json").string() + out) == 2);
  CHECK(cli("train --override head.use_crn=false" + out) == 2);
  CHECK(cli("eval --mode centerness_product" + out) == 2);
}

TEST_CASE("a diverging run exits with 3") {
  CHECK(cli("train --override train.learning_rate=1e6 --override train.steps=50 --out-dir " +
            (kRoot / "diverge").string()) == 3);
}

TEST_CASE("train then eval writes the expected artifacts") {
  const fs::path d = kRoot / "run";
  const std::string common = " --seed 7 --out-dir " + d.string() +
                             " --override train.steps=120 --override train.num_scenes=4"
                             " --override eval.num_scenes=3";
  REQUIRE(cli("train" + common) == 0);
  CHECK(data_rows(d / "loss_trace.csv") == 120);
  REQUIRE(cli("eval" + common) == 0);
  CHECK(fs::exists(d / "eval_uncertainty_aware.json"));
  CHECK(fs::exists(d / "detections_uncertainty_aware.jsonl"));

  const auto m = nlohmann::json::parse(std::ifstream(d / "manifest.json"));
  std::size_t listed = 0;
  for (const auto& a : m.at("artifacts")) {
    const fs::path p = d / a.at("path").get<std::string>();
    CHECK(a.at("sha256").get<std::string>() == uadet::sha256_file(p.string()));
    CHECK(a.at("bytes").get<std::uintmax_t>() == fs::file_size(p));
    ++listed;
  }
  CHECK(listed == 5);
}

TEST_CASE("gradcheck and ablation tables") {
  REQUIRE(cli("gradcheck --n-probes 1 --out-dir " + (kRoot / "gc").string()) == 0);
  CHECK(data_rows(kRoot / "gc" / "gradcheck.csv") == 9);

  write(kRoot / "matrix.json",
        R"({"base": {"train": {"steps": 20, "num_scenes": 2}, "eval": {"num_scenes": 2}},)"
        R"( "loss_modes": ["fl", "ufl"], "regression_modes": ["npll", "nll"], "seeds": [1]})");
  REQUIRE(cli("ablation --matrix " + (kRoot / "matrix.json").string() + " --out-dir " +
              (kRoot / "abl").string()) == 0);
  // Four cells plus one mean row per (loss, regression) pair.
  CHECK(data_rows(kRoot / "abl" / "ablation.csv") == 8);
  CHECK(cli("ablation --matrix " + (kRoot / "missing.json").string()) == 2);
}

// Copyright 2026 The Veil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "veil/cli.hpp"
#include "veil/error.hpp"

using namespace veil;
namespace fs = std::filesystem;

namespace {

const fs::path kScenes = VEIL_SCENES;

fs::path temp_file(const std::string& stem) {
  return fs::temp_directory_path() / (stem + "_" + std::to_string(::getpid()));
}

// Drops every wall-clock field so two runs can be compared.
nlohmann::json without_timing(nlohmann::json j) {
  for (auto it = j.begin(); it != j.end();) {
    const std::string& k = it.key();
    if (k.ends_with("_ms") || k == "wall_s" || k == "fps") {
      it = j.erase(it);
    } else {
      ++it;
    }
  }
  return j;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

struct Run {
  int status;
  std::string out;
};

Run run_cli(const std::string& args) {
  const fs::path err = temp_file("veil_cli_err");
  const std::string cmd = std::string(VEIL_CLI) + " " + args + " 2>" + err.string();
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = ::pclose(pipe);
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  fs::remove(err);
  return {WEXITSTATUS(status), out + ss.str()};
}

}  // namespace

TEST_CASE("no private objects: no masked term") {
  RunConfig c;
  c.frames = 5;
  c.scripted_operator = false;
  const EvalReport r = run_eval(c);
  CHECK(r.frames.size() == 5);
  CHECK_FALSE(r.weighted_l1_mean.has_value());
  CHECK(r.masked_frames == 0);
  CHECK(r.fps > 0.0);
  CHECK(r.fps == doctest::Approx(5.0 / r.wall_s));
  const auto s = r.summary_json();
  CHECK(s["weighted_l1_mean"].is_null());
  CHECK(s["engine"] == "baseline");
}

TEST_CASE("constant background is filled almost exactly") {
  RunConfig c;
  c.scene_path = (kScenes / "constant_wall.json").string();
  c.frames = 6;
  const EvalReport r = run_eval(c);
  REQUIRE(r.masked_mae_mean.has_value());
  CHECK(r.masked_frames >= 4);
  CHECK(*r.masked_mae_mean < 2.0 / 255.0);
  CHECK(r.engine_failures == 0);
}

TEST_CASE("identical configs give identical reports") {
  RunConfig c;
  c.scene_path = (kScenes / "desk.json").string();
  c.frames = 8;
  c.dropout_prob = 0.2;
  c.jitter_px = 2;
  c.seed = 5;
  const EvalReport a = run_eval(c), b = run_eval(c);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) CHECK(without_timing(a.frame_json(i)) == without_timing(b.frame_json(i)));
  CHECK(without_timing(a.summary_json()) == without_timing(b.summary_json()));
  CHECK(a.weighted_l1_mean.has_value());

  c.seed = 6;
  const EvalReport other = run_eval(c);
  bool differs = false;
  for (std::size_t i = 0; i < a.frames.size(); ++i)
    differs = differs || without_timing(a.frame_json(i)) != without_timing(other.frame_json(i));
  CHECK(differs);
}

TEST_CASE("engine faults are recorded and the run continues") {
  class Broken : public InpaintBackend {
   public:
    BackendResult process(std::uint64_t, const RgbImage&, const BinaryMask&) override { return {}; }
    int width() const override { return 640; }
    int height() const override { return 360; }
  };
  RunConfig c;
  c.frames = 4;
  EvalHooks hooks;
  hooks.make_backend = [](std::shared_ptr<const InpaintEngine>) { return std::make_unique<Broken>(); };
  const EvalReport r = run_eval(c, hooks);
  CHECK(r.frames.size() == 4);
  CHECK(r.engine_failures == 4);
}

TEST_CASE("config overrides") {
  RunConfig base;
  base.frames = 3;
  base.engine = "dstt";
  const RunConfig c = run_config_from_json({{"frames", 12}, {"seed", 9}}, base);
  CHECK(c.frames == 12);
  CHECK(c.seed == 9);
  CHECK(c.engine == "dstt");
  CHECK(run_config_from_json(to_json(c)).frames == 12);
  CHECK_THROWS_AS(run_config_from_json({{"framez", 1}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"frames", "many"}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(nlohmann::json::array()), ConfigError);

  RunConfig bad;
  bad.scene_path = "/nonexistent/scene.json";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.engine = "magic";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.dropout_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("reports append and never rewrite") {
  const fs::path report = temp_file("veil_report.jsonl");
  fs::remove(report);
  RunConfig c;
  c.frames = 3;
  c.report_path = report.string();
  run_eval(c);
  const auto first = lines_of(report);
  REQUIRE(first.size() == 4);
  run_eval(c);
  const auto both = lines_of(report);
  REQUIRE(both.size() == 8);
  CHECK(std::equal(first.begin(), first.end(), both.begin()));
  int summaries = 0;
  for (const auto& line : both) {
    const auto j = nlohmann::json::parse(line);
    summaries += j["type"] == "summary";
    if (j["type"] == "frame") CHECK(j.contains("total_ms"));
  }
  CHECK(summaries == 2);
  fs::remove(report);
}

TEST_CASE("command line") {
  Run r = run_cli("simulate --frames 2");
  CHECK(r.status == 0);
  CHECK(nlohmann::json::parse(r.out)["frames"] == 2);

  r = run_cli("simulate --scene /nonexistent.json");
  CHECK(r.status == 2);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
  CHECK(nlohmann::json::parse(r.out)["error"] == "config");

  // Config file keys override flags.
  const fs::path cfg = temp_file("veil_cfg.json");
  std::ofstream(cfg) << R"({"frames": 1})";
  r = run_cli("simulate --frames 7 --config " + cfg.string());
  CHECK(r.status == 0);
  CHECK(nlohmann::json::parse(r.out)["frames"] == 1);
  std::ofstream(cfg) << R"({"frame": 1})";
  r = run_cli("simulate --config " + cfg.string());
  CHECK(r.status == 2);
  CHECK(nlohmann::json::parse(r.out)["message"].get<std::string>().find("frame") != std::string::npos);
  fs::remove(cfg);

  r = run_cli("bench --frames 2 --format json");
  CHECK(r.status == 0);
  std::istringstream lines(r.out);
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) CHECK(nlohmann::json::accept(line));
  CHECK(n == 3);

  r = run_cli("--help");
  CHECK(r.status == 0);
  r = run_cli("dance");
  CHECK(r.status == 2);
}

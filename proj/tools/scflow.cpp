// Command-line runner for scalar curvature flow scenarios.

#include "scflow/error.hpp"
#include "scflow/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace scflow;

namespace {

enum class Mode { kRun, kCheck };

ScenarioConfig configure(const fs::path& path, const std::vector<std::string>& overrides) {
  ScenarioConfig config = load_config(path);
  for (const auto& o : overrides) apply_override(config, o);
  validate(config);
  return config;
}

void print_summary(const fs::path& path, const ScenarioOutcome& out) {
  const ScenarioReport& r = out.report;
  std::printf("%s: n=%d N=%d", path.filename().string().c_str(), r.n, r.N);
  for (const char* c : {"i", "ii", "iii", "iv"}) {
    std::printf(" (%s)=%s", c, std::string(to_string(verdict_of(r.conditions, c))).c_str());
  }
  if (r.outcome) std::printf(" outcome=%s t=%.6g steps=%zu", r.outcome->c_str(), r.final_time, r.steps);
  std::printf(" exit=%d\n", out.exit_code);
  for (const auto& w : r.conditions.warnings) std::printf("  warning: %s\n", w.c_str());
  for (const auto& v : r.violations) std::printf("  violation: %s\n", v.c_str());
}

int execute(Mode mode, const fs::path& path, const std::vector<std::string>& overrides,
            const std::optional<fs::path>& isolate_dir, bool quiet) {
  try {
    ScenarioConfig config = configure(path, overrides);
    if (isolate_dir) {
      const fs::path dir = *isolate_dir / path.stem();
      config.csv = fs::absolute(dir / config.csv.filename());
      config.json = fs::absolute(dir / config.json.filename());
    }
    const ScenarioOutcome out = mode == Mode::kRun ? run_scenario(config) : check_only(config);
    if (!quiet) print_summary(path, out);
    return out.exit_code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_code::kUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "%s: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return e.code() == ErrorCode::kParse ? exit_code::kUsage : exit_code::kNumericalFault;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::kNumericalFault;
  }
}

int batch(const fs::path& dir, const std::vector<std::string>& overrides, Mode mode,
          const fs::path& out_dir, unsigned jobs) {
  if (!fs::is_directory(dir)) {
    std::fprintf(stderr, "batch: %s is not a directory\n", dir.string().c_str());
    return exit_code::kUsage;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".toml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::fprintf(stderr, "batch: no .toml scenarios in %s\n", dir.string().c_str());
    return exit_code::kUsage;
  }
  jobs = std::max(1u, jobs);
  std::vector<int> codes(files.size(), 0);
  for (std::size_t begin = 0; begin < files.size(); begin += jobs) {
    std::vector<std::future<int>> running;
    const std::size_t end = std::min(files.size(), begin + jobs);
    for (std::size_t i = begin; i < end; ++i) {
      running.push_back(std::async(std::launch::async, execute, mode, files[i], overrides,
                                   std::optional<fs::path>(out_dir), true));
    }
    for (std::size_t i = begin; i < end; ++i) codes[i] = running[i - begin].get();
  }
  int worst = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::printf("%-32s exit=%d\n", files[i].filename().string().c_str(), codes[i]);
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalar curvature flow on S^n: condition checks and flow runs"};
  app.require_subcommand(1);
  std::vector<std::string> overrides;
  app.add_option("--override", overrides, "Override a scenario key (key=value)")->take_all();

  fs::path run_path, check_path, batch_dir;
  auto* run_cmd = app.add_subcommand("run", "Check conditions, run the flow, write CSV and JSON");
  run_cmd->add_option("config", run_path, "Scenario file")->required();
  run_cmd->add_option("--override", overrides, "Override a scenario key (key=value)");

  auto* check_cmd = app.add_subcommand("check", "Evaluate conditions and bounds only");
  check_cmd->add_option("config", check_path, "Scenario file")->required();
  check_cmd->add_option("--override", overrides, "Override a scenario key (key=value)");

  bool batch_check = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  fs::path out_dir = "batch-out";
  auto* batch_cmd = app.add_subcommand("batch", "Run every *.toml scenario in a directory in parallel");
  batch_cmd->add_option("dir", batch_dir, "Scenario directory")->required();
  batch_cmd->add_option("--override", overrides, "Override a scenario key (key=value)");
  batch_cmd->add_option("--out", out_dir, "Output root; each scenario writes to <out>/<stem>/");
  batch_cmd->add_option("-j,--jobs", jobs, "Parallel scenarios");
  batch_cmd->add_flag("--check", batch_check, "Condition checks only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code::kUsage;
  }

  if (*run_cmd) return execute(Mode::kRun, run_path, overrides, std::nullopt, false);
  if (*check_cmd) return execute(Mode::kCheck, check_path, overrides, std::nullopt, false);
  return batch(batch_dir, overrides, batch_check ? Mode::kCheck : Mode::kRun, output_path(out_dir), jobs);
}

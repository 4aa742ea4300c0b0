#pragma once

// Scenario files and the experiment runner behind the command-line tool.
//
// A scenario is a flat key = value file (TOML syntax subset: numbers,
// booleans, "strings", [number arrays], # comments). Unknown keys are errors.

#include "scflow/conditions.hpp"
#include "scflow/flow.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scflow {

struct ScenarioConfig {
  std::string name = "scenario";
  int n = 4;
  int N = 256;
  /// Polynomial coefficients of f in mu (constant term first), or empty when
  /// f_preset is set.
  std::vector<double> f_coeffs;
  /// "round": f = n(n-1).
  std::string f_preset;
  /// "constant", "bubble:<eps>" (north pole), or "" when u0_coeffs is used.
  std::string u0_spec = "constant";
  std::vector<double> u0_coeffs;
  FlowParams flow;
  std::filesystem::path csv;
  std::filesystem::path json;
  std::optional<std::filesystem::path> manifest;
  /// "poles" (axial rotations) or "empty".
  std::string sigma = "poles";
  bool strict_morse = false;
  /// Conditions that decide the exit status of check mode.
  std::vector<std::string> require = {"i", "ii", "iii", "iv"};
};

/// Parse failure with a location ("line 7", "key 'dt'").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses scenario text. Relative manifest paths resolve against base_dir.
ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);
/// Applies one "key=value" override with the same value syntax as the file.
void apply_override(ScenarioConfig& config, const std::string& assignment);
/// Checks ranges and that referenced files exist. Throws ConfigError.
void validate(const ScenarioConfig& config);

Profile make_f(const ScenarioConfig& config, const Grid& grid);
Profile make_u0(const ScenarioConfig& config, const Grid& grid);

/// Reads a manifest: JSON list of {label, f_value, laplacian_sign, morse_index}.
std::vector<CriticalPoint> load_manifest(const std::filesystem::path& path);
std::vector<CriticalPoint> parse_manifest(const std::string& text);

struct ConditionReport {
  int n = 0;
  ConditionIResult cond_i;
  std::optional<SimpleBubbleResult> cond_ii;  // absent when avg f <= 0
  NondegeneracyResult cond_iii;
  MorseConditionResult cond_iv;
  IndexCountResult index_count;
  SymmetryResult symmetry;
  std::optional<double> delta_n;
  /// "manifest" or "poles".
  std::string critical_point_source;
  std::vector<CriticalPoint> critical_points;
  std::vector<std::string> warnings;

  bool operator==(const ConditionReport&) const = default;
};

/// Final state pulled back to zero center of mass; the deviation is measured
/// after rescaling to unit volume.
struct NormalizationSummary {
  double eps = 1.0;
  int pole = 1;
  double residual = 0.0;
  double max_abs_v_minus_one = 0.0;

  bool operator==(const NormalizationSummary&) const = default;
};

ConditionReport evaluate_conditions(const Profile& f, const Grid& grid,
                                    const std::optional<std::vector<CriticalPoint>>& manifest,
                                    const FixedPointSet& sigma, bool strict_morse);

/// Verdict of one named condition ("i", "ii", "iii", "iv", "index", "symmetry").
Verdict verdict_of(const ConditionReport& report, const std::string& name);

struct ScenarioReport {
  std::string name;
  int n = 0;
  int N = 0;
  ConditionReport conditions;
  BoundsReport bounds;
  std::optional<std::string> outcome;
  double final_time = 0.0;
  std::size_t steps = 0;
  int halvings = 0;
  double max_abs_lambda_prime = 0.0;
  std::optional<ConcentrationReport> concentration;
  std::optional<NormalizationSummary> normalization;
  std::vector<std::string> violations;

  bool operator==(const ScenarioReport&) const = default;
};

nlohmann::json to_json(const ScenarioReport& report);
ScenarioReport report_from_json(const nlohmann::json& j);

/// Checks the monitored invariants on a finished run and returns one message
/// per violation.
std::vector<std::string> audit_run(const RunResult& run, const BoundsReport& bounds,
                                   const FlowParams& params, int n,
                                   const std::optional<ConcentrationReport>& concentration);

void write_csv(const std::vector<DiagnosticsRecord>& trajectory, const std::filesystem::path& path);
std::string csv_text(const std::vector<DiagnosticsRecord>& trajectory);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kConditionFail = 2;
inline constexpr int kIndeterminate = 3;
inline constexpr int kUsage = 64;
inline constexpr int kNumericalFault = 70;
}  // namespace exit_code

struct ScenarioOutcome {
  int exit_code = exit_code::kOk;
  ScenarioReport report;
  std::string message;
};

/// Full run: conditions, bounds, flow, audit; writes CSV and JSON.
ScenarioOutcome run_scenario(const ScenarioConfig& config);
/// Conditions and bounds only; writes JSON.
ScenarioOutcome check_only(const ScenarioConfig& config);

/// Resolves an output path against $SCFLOW_OUTPUT_DIR when it is set.
std::filesystem::path output_path(const std::filesystem::path& p);

}  // namespace scflow

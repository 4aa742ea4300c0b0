#include "scflow/scenario.hpp"

#include "scflow/conformal.hpp"
#include "scflow/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <variant>

namespace scflow {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config values

using Value = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::string> parse_string(const std::string& s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::nullopt;
  const std::string inner = s.substr(1, s.size() - 2);
  if (inner.find('"') != std::string::npos) return std::nullopt;
  return inner;
}

std::vector<std::string> split_list(const std::string& inner) {
  std::vector<std::string> items;
  std::string current;
  bool in_string = false;
  for (char c : inner) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!trim(current).empty()) items.push_back(trim(current));
  return items;
}

Value parse_value(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true") return true;
  if (s == "false") return false;
  if (auto str = parse_string(s)) return *str;
  if (auto num = parse_number(s)) return *num;
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') {
    const auto items = split_list(s.substr(1, s.size() - 2));
    if (items.empty()) return std::vector<double>{};
    if (parse_string(items.front())) {
      std::vector<std::string> out;
      for (const auto& item : items) {
        auto str = parse_string(item);
        if (!str) throw ConfigError("mixed or malformed array element '" + item + "'");
        out.push_back(*str);
      }
      return out;
    }
    std::vector<double> out;
    for (const auto& item : items) {
      auto num = parse_number(item);
      if (!num) throw ConfigError("malformed number '" + item + "' in array");
      out.push_back(*num);
    }
    return out;
  }
  throw ConfigError("cannot parse value '" + s + "'");
}

double as_number(const Value& v, const std::string& key) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("key '" + key + "' expects a number");
}

int as_int(const Value& v, const std::string& key) {
  const double d = as_number(v, key);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError("key '" + key + "' expects an integer");
  return static_cast<int>(d);
}

bool as_bool(const Value& v, const std::string& key) {
  if (auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError("key '" + key + "' expects true or false");
}

std::string as_string(const Value& v, const std::string& key) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("key '" + key + "' expects a string");
}

using Setter = std::function<void(ScenarioConfig&, const Value&, const fs::path& base)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](auto& c, const Value& v, auto&) { c.name = as_string(v, "name"); }},
      {"n", [](auto& c, const Value& v, auto&) { c.n = as_int(v, "n"); }},
      {"N", [](auto& c, const Value& v, auto&) { c.N = as_int(v, "N"); }},
      {"f",
       [](auto& c, const Value& v, auto&) {
         if (auto* coeffs = std::get_if<std::vector<double>>(&v)) {
           c.f_coeffs = *coeffs;
           c.f_preset.clear();
         } else {
           c.f_preset = as_string(v, "f");
           c.f_coeffs.clear();
         }
       }},
      {"u0",
       [](auto& c, const Value& v, auto&) {
         if (auto* coeffs = std::get_if<std::vector<double>>(&v)) {
           c.u0_coeffs = *coeffs;
           c.u0_spec.clear();
         } else {
           c.u0_spec = as_string(v, "u0");
           c.u0_coeffs.clear();
         }
       }},
      {"dt", [](auto& c, const Value& v, auto&) { c.flow.dt = as_number(v, "dt"); }},
      {"t_max", [](auto& c, const Value& v, auto&) { c.flow.t_max = as_number(v, "t_max"); }},
      {"vol_tol", [](auto& c, const Value& v, auto&) { c.flow.vol_tol = as_number(v, "vol_tol"); }},
      {"conv_F2", [](auto& c, const Value& v, auto&) { c.flow.conv_F2 = as_number(v, "conv_F2"); }},
      {"blowup_umax",
       [](auto& c, const Value& v, auto&) { c.flow.blowup_umax = as_number(v, "blowup_umax"); }},
      {"blowup_S", [](auto& c, const Value& v, auto&) { c.flow.blowup_S = as_number(v, "blowup_S"); }},
      {"sample_interval",
       [](auto& c, const Value& v, auto&) { c.flow.sample_interval = as_number(v, "sample_interval"); }},
      {"stability_fraction",
       [](auto& c, const Value& v, auto&) {
         c.flow.stability_fraction = as_number(v, "stability_fraction");
       }},
      {"max_halvings",
       [](auto& c, const Value& v, auto&) { c.flow.max_halvings = as_int(v, "max_halvings"); }},
      {"signature_tol",
       [](auto& c, const Value& v, auto&) { c.flow.signature_tol = as_number(v, "signature_tol"); }},
      {"csv", [](auto& c, const Value& v, auto&) { c.csv = as_string(v, "csv"); }},
      {"json", [](auto& c, const Value& v, auto&) { c.json = as_string(v, "json"); }},
      {"manifest",
       [](auto& c, const Value& v, const fs::path& base) {
         fs::path p = as_string(v, "manifest");
         if (p.is_relative() && !base.empty()) p = base / p;
         c.manifest = p;
       }},
      {"sigma", [](auto& c, const Value& v, auto&) { c.sigma = as_string(v, "sigma"); }},
      {"strict_morse",
       [](auto& c, const Value& v, auto&) { c.strict_morse = as_bool(v, "strict_morse"); }},
      {"require",
       [](auto& c, const Value& v, auto&) {
         if (auto* list = std::get_if<std::vector<std::string>>(&v)) {
           c.require = *list;
         } else if (auto* empty = std::get_if<std::vector<double>>(&v); empty && empty->empty()) {
           c.require.clear();
         } else {
           throw ConfigError("key 'require' expects an array of strings");
         }
       }},
  };
  return table;
}

void assign(ScenarioConfig& config, const std::string& key, const std::string& raw,
            const fs::path& base) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(config, parse_value(raw), base);
}

bool valid_key(const std::string& key) {
  if (key.empty() || !(std::isalpha(static_cast<unsigned char>(key[0])) || key[0] == '_')) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

json verdict_json(Verdict v) { return std::string(to_string(v)); }

Verdict verdict_from(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "PASS") return Verdict::kPass;
  if (s == "FAIL") return Verdict::kFail;
  if (s == "INDETERMINATE") return Verdict::kIndeterminate;
  throw Error(ErrorCode::kParse, "unknown verdict '" + s + "'");
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

json critical_point_json(const CriticalPoint& p) {
  return {{"label", p.label},
          {"f_value", p.f_value},
          {"laplacian_sign", p.laplacian_sign},
          {"morse_index", p.morse_index}};
}

CriticalPoint critical_point_from(const json& j) {
  CriticalPoint p;
  p.label = j.at("label").get<std::string>();
  p.f_value = j.at("f_value").get<double>();
  p.laplacian_sign = j.at("laplacian_sign").get<int>();
  p.morse_index = j.at("morse_index").get<int>();
  return p;
}

json conditions_json(const ConditionReport& c) {
  json j;
  j["n"] = c.n;
  j["cond_i"] = {{"verdict", verdict_json(c.cond_i.verdict)},
                 {"mean_f", c.cond_i.mean_f},
                 {"min_f", c.cond_i.min_f}};
  if (c.cond_ii) {
    j["cond_ii"] = {{"verdict", verdict_json(c.cond_ii->verdict)},
                    {"ratio", c.cond_ii->ratio},
                    {"bound", c.cond_ii->bound},
                    {"sigma", c.cond_ii->sigma}};
  } else {
    j["cond_ii"] = nullptr;
  }
  j["cond_iii"] = {{"verdict", verdict_json(c.cond_iii.verdict)},
                   {"min_witness", c.cond_iii.min_witness},
                   {"threshold", c.cond_iii.threshold}};
  j["cond_iv"] = {{"verdict", verdict_json(c.cond_iv.verdict)},
                  {"m", c.cond_iv.system.m},
                  {"k", c.cond_iv.solution.k},
                  {"solution_exists", c.cond_iv.solution.exists},
                  {"trivial", c.cond_iv.solution.trivial}};
  j["index_count"] = {{"verdict", verdict_json(c.index_count.verdict)}, {"sum", c.index_count.sum}};
  j["symmetry"] = {{"verdict", verdict_json(c.symmetry.verdict)},
                   {"sigma_empty", c.symmetry.sigma_empty},
                   {"max_sigma_f", c.symmetry.max_sigma_f},
                   {"mean_f", c.symmetry.mean_f},
                   {"maximizer", c.symmetry.maximizer},
                   {"lap_f_maximizer", c.symmetry.lap_f_maximizer},
                   {"alternative", c.symmetry.alternative}};
  j["delta_n"] = optional_json(c.delta_n);
  j["critical_point_source"] = c.critical_point_source;
  j["critical_points"] = json::array();
  for (const auto& p : c.critical_points) j["critical_points"].push_back(critical_point_json(p));
  j["warnings"] = c.warnings;
  return j;
}

ConditionReport conditions_from(const json& j) {
  ConditionReport c;
  c.n = j.at("n").get<int>();
  const json& ci = j.at("cond_i");
  c.cond_i = {verdict_from(ci.at("verdict")), ci.at("mean_f").get<double>(), ci.at("min_f").get<double>()};
  if (!j.at("cond_ii").is_null()) {
    const json& cii = j.at("cond_ii");
    c.cond_ii = SimpleBubbleResult{verdict_from(cii.at("verdict")), cii.at("ratio").get<double>(),
                                   cii.at("bound").get<double>(), cii.at("sigma").get<double>()};
  }
  const json& ciii = j.at("cond_iii");
  c.cond_iii = {verdict_from(ciii.at("verdict")), ciii.at("min_witness").get<double>(),
                ciii.at("threshold").get<double>()};
  const json& civ = j.at("cond_iv");
  c.cond_iv.verdict = verdict_from(civ.at("verdict"));
  c.cond_iv.system.m = civ.at("m").get<std::vector<int>>();
  c.cond_iv.system.n = static_cast<int>(c.cond_iv.system.m.size()) - 1;
  c.cond_iv.solution.k = civ.at("k").get<std::vector<int>>();
  c.cond_iv.solution.exists = civ.at("solution_exists").get<bool>();
  c.cond_iv.solution.trivial = civ.at("trivial").get<bool>();
  c.index_count = {verdict_from(j.at("index_count").at("verdict")),
                   j.at("index_count").at("sum").get<int>()};
  const json& s = j.at("symmetry");
  c.symmetry.verdict = verdict_from(s.at("verdict"));
  c.symmetry.sigma_empty = s.at("sigma_empty").get<bool>();
  c.symmetry.max_sigma_f = s.at("max_sigma_f").get<double>();
  c.symmetry.mean_f = s.at("mean_f").get<double>();
  c.symmetry.maximizer = s.at("maximizer").get<int>();
  c.symmetry.lap_f_maximizer = s.at("lap_f_maximizer").get<double>();
  c.symmetry.alternative = s.at("alternative").get<std::string>();
  c.delta_n = optional_from<double>(j.at("delta_n"));
  c.critical_point_source = j.at("critical_point_source").get<std::string>();
  for (const auto& p : j.at("critical_points")) c.critical_points.push_back(critical_point_from(p));
  c.warnings = j.at("warnings").get<std::vector<std::string>>();
  return c;
}

json bounds_json(const BoundsReport& b) {
  return {{"lambda1", b.lambda1},
          {"lambda2", b.lambda2},
          {"Lambda0", optional_json(b.Lambda0)},
          {"C0", b.C0_available ? json(b.C0) : json(nullptr)},
          {"C0_empirical", b.C0_empirical},
          {"sigma", b.sigma},
          {"gamma", optional_json(b.gamma)},
          {"fu_mass_floor", b.fu_mass_floor},
          {"Ef0", b.Ef0},
          {"vol0", b.vol0}};
}

BoundsReport bounds_from(const json& j) {
  BoundsReport b;
  b.lambda1 = j.at("lambda1").get<double>();
  b.lambda2 = j.at("lambda2").get<double>();
  b.Lambda0 = optional_from<double>(j.at("Lambda0"));
  b.C0_available = !j.at("C0").is_null();
  b.C0 = b.C0_available ? j.at("C0").get<double>() : 0.0;
  b.C0_empirical = j.at("C0_empirical").get<bool>();
  b.sigma = j.at("sigma").get<double>();
  b.gamma = optional_from<double>(j.at("gamma"));
  b.fu_mass_floor = j.at("fu_mass_floor").get<double>();
  b.Ef0 = j.at("Ef0").get<double>();
  b.vol0 = j.at("vol0").get<double>();
  return b;
}

json concentration_json(const ConcentrationReport& r) {
  return {{"Q", r.Q > 0 ? "north" : "south"},
          {"Sz", r.Sz},
          {"lambda", r.lambda},
          {"f_Q", r.f_Q},
          {"signature_defect", r.signature_defect},
          {"grad_f_Q", r.grad_f_Q},
          {"lap_f_Q", r.lap_f_Q},
          {"signature_holds", r.signature_holds},
          {"regime", r.in_regime ? "IN_REGIME" : "OUT_OF_REGIME"}};
}

ConcentrationReport concentration_from(const json& j) {
  ConcentrationReport r;
  r.Q = j.at("Q").get<std::string>() == "north" ? 1 : -1;
  r.Sz = j.at("Sz").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.f_Q = j.at("f_Q").get<double>();
  r.signature_defect = j.at("signature_defect").get<double>();
  r.grad_f_Q = j.at("grad_f_Q").get<double>();
  r.lap_f_Q = j.at("lap_f_Q").get<double>();
  r.signature_holds = j.at("signature_holds").get<bool>();
  r.in_regime = j.at("regime").get<std::string>() == "IN_REGIME";
  return r;
}

// ---------------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FixedPointSet fixed_point_set(const ScenarioConfig& config) {
  FixedPointSet s;
  s.empty = config.sigma == "empty";
  s.description = config.sigma;
  return s;
}

void write_report(const ScenarioReport& report, const fs::path& path) {
  write_text(output_path(path), to_json(report).dump(2) + "\n");
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ScenarioConfig parse_config(const std::string& text, const fs::path& base_dir) {
  ScenarioConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(where + "invalid key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      assign(config, key, body.substr(eq + 1), base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (config.csv.empty()) config.csv = config.name + ".csv";
  if (config.json.empty()) config.json = config.name + ".json";
  return config;
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(ScenarioConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  try {
    assign(config, key, assignment.substr(eq + 1), fs::current_path());
  } catch (const ConfigError& e) {
    throw ConfigError("override: " + std::string(e.what()));
  }
}

void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.n < 3) fail("key 'n': sphere dimension must be >= 3");
  if (c.N < 8 || c.N > 4096) fail("key 'N': node count must lie in [8, 4096]");
  if (c.f_preset.empty() == c.f_coeffs.empty()) fail("key 'f': give coefficients or a preset name");
  if (!c.f_preset.empty() && c.f_preset != "round") fail("key 'f': unknown preset '" + c.f_preset + "'");
  if (c.f_coeffs.size() > 13) fail("key 'f': polynomial degree must be <= 12");
  if (c.u0_coeffs.size() > 13) fail("key 'u0': polynomial degree must be <= 12");
  if (c.u0_coeffs.empty()) {
    if (c.u0_spec != "constant" && c.u0_spec.rfind("bubble:", 0) != 0) {
      fail("key 'u0': expected coefficients, \"constant\" or \"bubble:<eps>\"");
    }
    if (c.u0_spec.rfind("bubble:", 0) == 0) {
      auto eps = parse_number(c.u0_spec.substr(7));
      if (!eps || !(*eps > 0.0)) fail("key 'u0': bubble parameter must be a positive number");
    }
  }
  const FlowParams& p = c.flow;
  if (!(p.dt > 0.0)) fail("key 'dt': must be positive");
  if (!(p.t_max > 0.0)) fail("key 't_max': must be positive");
  if (!(p.vol_tol > 0.0)) fail("key 'vol_tol': must be positive");
  if (!(p.conv_F2 > 0.0)) fail("key 'conv_F2': must be positive");
  if (!(p.blowup_umax > 0.0)) fail("key 'blowup_umax': must be positive");
  if (!(p.blowup_S > 0.0 && p.blowup_S < 1.0)) fail("key 'blowup_S': must lie in (0, 1)");
  if (!(p.sample_interval >= 0.0)) fail("key 'sample_interval': must be >= 0");
  if (!(p.stability_fraction > 0.0 && p.stability_fraction <= 1.0)) {
    fail("key 'stability_fraction': must lie in (0, 1]");
  }
  if (p.max_halvings < 0 || p.max_halvings > 60) fail("key 'max_halvings': must lie in [0, 60]");
  if (!(p.signature_tol > 0.0)) fail("key 'signature_tol': must be positive");
  if (c.sigma != "poles" && c.sigma != "empty") fail("key 'sigma': expected \"poles\" or \"empty\"");
  static const std::set<std::string> known = {"i", "ii", "iii", "iv", "index", "symmetry"};
  for (const auto& r : c.require) {
    if (!known.count(r)) fail("key 'require': unknown condition '" + r + "'");
  }
  if (c.manifest && !fs::exists(*c.manifest)) {
    fail("key 'manifest': file " + c.manifest->string() + " does not exist");
  }
}

Profile make_f(const ScenarioConfig& c, const Grid& grid) {
  if (c.f_preset == "round") {
    return Profile::Constant(grid.size(), c.n * (c.n - 1.0));
  }
  return sample(grid, [&](double mu) { return eval_polynomial(c.f_coeffs, mu); });
}

Profile make_u0(const ScenarioConfig& c, const Grid& grid) {
  if (!c.u0_coeffs.empty()) {
    return sample(grid, [&](double mu) { return eval_polynomial(c.u0_coeffs, mu); });
  }
  if (c.u0_spec.rfind("bubble:", 0) == 0) {
    return bubble(Dilation{*parse_number(c.u0_spec.substr(7)), 1}, grid);
  }
  return Profile::Ones(grid.size());
}

std::vector<CriticalPoint> parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kParse, "manifest: expected a JSON list");
  std::vector<CriticalPoint> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      CriticalPoint p = critical_point_from(j[i]);
      if (p.laplacian_sign < -1 || p.laplacian_sign > 1) {
        throw Error(ErrorCode::kParse, "laplacian_sign must be -1, 0 or 1");
      }
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "manifest entry " + std::to_string(i) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "manifest entry " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<CriticalPoint> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot read manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

// ---------------------------------------------------------------------------
// Reports

ConditionReport evaluate_conditions(const Profile& f, const Grid& grid,
                                    const std::optional<std::vector<CriticalPoint>>& manifest,
                                    const FixedPointSet& sigma, bool strict_morse) {
  ConditionReport r;
  r.n = grid.n();
  r.cond_i = check_condition_i(f, grid);
  try {
    r.cond_ii = check_simple_bubble(f, grid);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonpositiveMean) throw;
    r.warnings.push_back("condition (ii) undefined: average of f is not positive");
  }
  r.cond_iii = check_nondegeneracy(f, grid);

  if (manifest) {
    r.critical_point_source = "manifest";
    r.critical_points = *manifest;
  } else {
    r.critical_point_source = "poles";
    PoleExtraction extracted = extract_pole_critical_points(f, grid);
    r.critical_points = std::move(extracted.points);
    if (!extracted.interior_critical_latitudes.empty()) {
      r.warnings.push_back("f has " + std::to_string(extracted.interior_critical_latitudes.size()) +
                           " interior critical latitude(s); these are critical circles and are "
                           "not represented in the Morse data");
    }
    if (r.critical_points.size() < 2) {
      r.warnings.push_back("a pole is a degenerate critical point and was omitted");
    }
  }
  r.cond_iv = check_morse_condition(r.critical_points, r.n, strict_morse);
  r.index_count = index_count(r.critical_points, r.n);
  r.symmetry = check_symmetry_conditions(f, sigma, grid);
  r.delta_n = delta_n(r.n);
  return r;
}

Verdict verdict_of(const ConditionReport& r, const std::string& name) {
  if (name == "i") return r.cond_i.verdict;
  if (name == "ii") return r.cond_ii ? r.cond_ii->verdict : Verdict::kFail;
  if (name == "iii") return r.cond_iii.verdict;
  if (name == "iv") return r.cond_iv.verdict;
  if (name == "index") return r.index_count.verdict;
  if (name == "symmetry") return r.symmetry.verdict;
  throw Error(ErrorCode::kInvalidArgument, "unknown condition '" + name + "'");
}

json to_json(const ScenarioReport& r) {
  json j;
  j["name"] = r.name;
  j["n"] = r.n;
  j["N"] = r.N;
  j["conditions"] = conditions_json(r.conditions);
  j["bounds"] = bounds_json(r.bounds);
  j["outcome"] = optional_json(r.outcome);
  j["final_time"] = r.final_time;
  j["steps"] = r.steps;
  j["halvings"] = r.halvings;
  j["max_abs_lambda_prime"] = r.max_abs_lambda_prime;
  j["concentration"] = r.concentration ? concentration_json(*r.concentration) : json(nullptr);
  if (r.normalization) {
    j["normalization"] = {{"eps", r.normalization->eps},
                          {"pole", r.normalization->pole},
                          {"residual", r.normalization->residual},
                          {"max_abs_v_minus_one", r.normalization->max_abs_v_minus_one}};
  } else {
    j["normalization"] = nullptr;
  }
  j["violations"] = r.violations;
  return j;
}

ScenarioReport report_from_json(const json& j) {
  ScenarioReport r;
  r.name = j.at("name").get<std::string>();
  r.n = j.at("n").get<int>();
  r.N = j.at("N").get<int>();
  r.conditions = conditions_from(j.at("conditions"));
  r.bounds = bounds_from(j.at("bounds"));
  r.outcome = optional_from<std::string>(j.at("outcome"));
  r.final_time = j.at("final_time").get<double>();
  r.steps = j.at("steps").get<std::size_t>();
  r.halvings = j.at("halvings").get<int>();
  r.max_abs_lambda_prime = j.at("max_abs_lambda_prime").get<double>();
  if (!j.at("concentration").is_null()) r.concentration = concentration_from(j.at("concentration"));
  if (!j.at("normalization").is_null()) {
    const json& nj = j.at("normalization");
    r.normalization = NormalizationSummary{nj.at("eps").get<double>(), nj.at("pole").get<int>(),
                                           nj.at("residual").get<double>(),
                                           nj.at("max_abs_v_minus_one").get<double>()};
  }
  r.violations = j.at("violations").get<std::vector<std::string>>();
  return r;
}

std::vector<std::string> audit_run(const RunResult& run, const BoundsReport& bounds,
                                   const FlowParams& params, int n,
                                   const std::optional<ConcentrationReport>& concentration) {
  std::vector<std::string> out;
  auto at = [](double t) { return " at t = " + format_double(t); };
  const double lo = bounds.lambda1 * (1 - 1e-6);
  const double hi = bounds.lambda2 * (1 + 1e-6);
  const double vol0 = run.trajectory.front().vol;
  double prev_t = -1.0;
  double prev_Ef = run.trajectory.front().Ef;
  for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
    const DiagnosticsRecord& d = run.trajectory[i];
    if (i > 0 && !(d.t > prev_t)) out.push_back("sample times not increasing" + at(d.t));
    if (d.lambda < lo || d.lambda > hi) {
      out.push_back("lambda = " + format_double(d.lambda) + " outside [lambda1, lambda2]" + at(d.t));
    }
    if (std::abs(d.vol - vol0) > params.vol_tol * vol0) {
      out.push_back("volume drift " + format_double((d.vol - vol0) / vol0) + at(d.t));
    }
    if (d.fu_mass < bounds.fu_mass_floor - 1e-8) {
      out.push_back("avg(f u^2*) = " + format_double(d.fu_mass) + " below its floor" + at(d.t));
    }
    if (bounds.C0_available && d.min_R_minus_lf < bounds.C0 - 1e-6 * std::abs(bounds.C0)) {
      out.push_back(std::string("min(R - lambda f) below ") + (bounds.C0_empirical ? "empirical " : "") +
                    "C0" + at(d.t));
    }
    // The step controller limits growth per step; across a sample interval
    // the same 10 dt^2 slack applies per step, bounded here by the interval.
    const double slack = 10.0 * params.dt * std::max(params.dt, d.t - prev_t);
    if (i > 0 && d.Ef > prev_Ef + slack) {
      out.push_back("E_f increased by " + format_double(d.Ef - prev_Ef) + at(d.t));
    }
    prev_t = d.t;
    prev_Ef = d.Ef;
  }
  (void)n;
  if (run.outcome == Outcome::kConcentrating) {
    if (!concentration) {
      out.push_back("concentrating run without a concentration point");
    } else if (!concentration->signature_holds) {
      out.push_back("concentration signature fails: lambda f(Q)/n(n-1) - 1 = " +
                    format_double(concentration->signature_defect) +
                    ", Laplacian f(Q) = " + format_double(concentration->lap_f_Q));
    }
  }
  return out;
}

std::string csv_text(const std::vector<DiagnosticsRecord>& trajectory) {
  std::string out = "t,E,Ef,F2,lambda,lambda_prime,vol,Sz,min_R_minus_lf,max_u,fu_mass\n";
  for (const auto& d : trajectory) {
    for (double v : {d.t, d.E, d.Ef, d.F2, d.lambda, d.lambda_prime, d.vol, d.Sz, d.min_R_minus_lf,
                     d.max_u}) {
      out += format_double(v);
      out += ',';
    }
    out += format_double(d.fu_mass);
    out += '\n';
  }
  return out;
}

void write_csv(const std::vector<DiagnosticsRecord>& trajectory, const fs::path& path) {
  write_text(path, csv_text(trajectory));
}

fs::path output_path(const fs::path& p) {
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv("SCFLOW_OUTPUT_DIR"); dir && *dir) return fs::path(dir) / p;
  return p;
}

namespace {

struct Prepared {
  Grid grid;
  Profile f;
  Profile u0;
  ScenarioReport report;
};

Prepared prepare(const ScenarioConfig& config) {
  validate(config);
  Prepared p{build_grid(config.n, config.N), {}, {}, {}};
  p.f = make_f(config, p.grid);
  p.u0 = make_u0(config, p.grid);
  std::optional<std::vector<CriticalPoint>> manifest;
  if (config.manifest) manifest = load_manifest(*config.manifest);

  p.report.name = config.name;
  p.report.n = config.n;
  p.report.N = config.N;
  p.report.conditions =
      evaluate_conditions(p.f, p.grid, manifest, fixed_point_set(config), config.strict_morse);
  return p;
}

}  // namespace

ScenarioOutcome check_only(const ScenarioConfig& config) {
  ScenarioOutcome out;
  Prepared p = prepare(config);
  try {
    p.report.bounds = bounds_report(p.u0, p.f, p.grid);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonpositiveFMass) throw;
    p.report.conditions.warnings.push_back("bounds undefined: avg(f u0^2*) is not positive");
  }
  bool any_fail = false, any_indeterminate = false;
  for (const auto& name : config.require) {
    const Verdict v = verdict_of(p.report.conditions, name);
    any_fail |= v == Verdict::kFail;
    any_indeterminate |= v == Verdict::kIndeterminate;
  }
  out.exit_code = any_fail ? exit_code::kConditionFail
                           : (any_indeterminate ? exit_code::kIndeterminate : exit_code::kOk);
  out.report = std::move(p.report);
  write_report(out.report, config.json);
  return out;
}

ScenarioOutcome run_scenario(const ScenarioConfig& config) {
  ScenarioOutcome out;
  Prepared p = prepare(config);
  ScenarioReport& report = p.report;

  try {
    report.bounds = bounds_report(p.u0, p.f, p.grid);
    RunResult result = run(p.u0, p.f, config.flow, p.grid);
    if (!report.bounds.Lambda0) {
      report.bounds = bounds_report(p.u0, p.f, p.grid, result.max_abs_lambda_prime);
    }
    report.outcome = std::string(to_string(result.outcome));
    report.final_time = result.final_state.t;
    report.steps = result.steps;
    report.halvings = result.halvings;
    report.max_abs_lambda_prime = result.max_abs_lambda_prime;
    try {
      report.concentration = detect_concentration(result.final_state, p.f, p.grid,
                                                  config.flow.signature_tol, report.bounds.Ef0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUndefinedQ) throw;
    }
    try {
      const NormalizationResult nr = normalize(result.final_state.u, p.grid);
      // Compare against the unit-volume constant.
      const double scale =
          std::pow(quad_average(nr.v.array().pow(p.grid.critical_exponent()).matrix(), p.grid),
                   -1.0 / p.grid.critical_exponent());
      report.normalization = NormalizationSummary{
          nr.eps, nr.pole, nr.residual, (scale * nr.v.array() - 1.0).abs().maxCoeff()};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRootNotBracketed) throw;
      report.conditions.warnings.push_back("final state could not be normalized: " +
                                           std::string(e.what()));
    }
    report.violations = audit_run(result, report.bounds, config.flow, config.n, report.concentration);
    write_csv(result.trajectory, output_path(config.csv));
  } catch (const Error& e) {
    report.violations.push_back(std::string("numerical fault: ") + e.what());
    out.exit_code = exit_code::kNumericalFault;
    out.message = e.what();
  }
  if (out.exit_code == exit_code::kOk && !report.violations.empty()) {
    out.exit_code = exit_code::kNumericalFault;
    out.message = report.violations.front();
  }
  out.report = report;
  write_report(out.report, config.json);
  return out;
}

}  // namespace scflow

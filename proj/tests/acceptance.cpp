// Acceptance gate: one PASS/FAIL line per criterion.

#include "scflow/conditions.hpp"
#include "scflow/conformal.hpp"
#include "scflow/error.hpp"
#include "scflow/flow.hpp"
#include "scflow/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

using namespace scflow;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double gegenbauer(int k, double alpha, double x) {
  double prev = 1.0;
  if (k == 0) return prev;
  double cur = 2.0 * alpha * x;
  for (int j = 2; j <= k; ++j) {
    const double next = (2.0 * x * (j + alpha - 1.0) * cur - (j + 2.0 * alpha - 2.0) * prev) / j;
    prev = cur;
    cur = next;
  }
  return cur;
}

double volume(const Profile& u, const Grid& g) {
  return quad_average(u.array().pow(g.critical_exponent()).matrix(), g);
}

struct PresetRun {
  ScenarioConfig config;
  Grid grid;
  Profile f;
  Profile u0;
  BoundsReport bounds;
  RunResult result;
  std::optional<ConcentrationReport> concentration;
  std::vector<std::string> violations;
};

std::vector<PresetRun> run_presets() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(SCFLOW_PRESET_DIR)) {
    if (e.path().extension() == ".toml") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<PresetRun> runs;
  for (const auto& path : files) {
    PresetRun r{load_config(path), build_grid(3, 8), {}, {}, {}, {}, {}, {}};
    validate(r.config);
    r.grid = build_grid(r.config.n, r.config.N);
    r.f = make_f(r.config, r.grid);
    r.u0 = make_u0(r.config, r.grid);
    RunOptions opts;
    opts.keep_profiles = true;
    r.result = run(r.u0, r.f, r.config.flow, r.grid, opts);
    r.bounds = bounds_report(r.u0, r.f, r.grid,
                             r.config.n == 3 ? std::nullopt
                                             : std::optional<double>(r.result.max_abs_lambda_prime));
    try {
      r.concentration = detect_concentration(r.result.final_state, r.f, r.grid,
                                             r.config.flow.signature_tol, r.bounds.Ef0);
    } catch (const Error&) {
    }
    r.violations = audit_run(r.result, r.bounds, r.config.flow, r.config.n, r.concentration);
    runs.push_back(std::move(r));
  }
  return runs;
}

void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int n : {3, 4, 5}) {
    const Grid g = build_grid(n, 256);
    const double alpha = (n - 1) / 2.0;
    for (int k = 0; k <= 20; ++k) {
      const Profile p = sample(g, [&](double mu) { return gegenbauer(k, alpha, mu); });
      const Profile lap = laplace_beltrami(p, g);
      const double lambda = -k * (k + n - 1.0);
      const double err = (lap - lambda * p).cwiseAbs().maxCoeff() /
                         (std::max(1.0, std::abs(lambda)) * p.cwiseAbs().maxCoeff());
      worst = std::max(worst, err);
    }
  }
  const double secs = seconds_since(start);
  report(1, "spectral fidelity", worst <= 1e-8 && secs < 1.0,
         fmt("max relative eigenvalue error %.3e (<= 1e-8), %.3f s (< 1 s)", worst, secs));
}

void criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  const int n = 4;
  const Grid g = build_grid(n, 32);
  const Profile f = Profile::Constant(g.size(), n * (n - 1.0));
  FlowState s = initial_state(Profile::Ones(g.size()), f, g);
  for (int i = 0; i < 10000; ++i) s = step(s, f, 1e-3, g);
  const double dev = (s.u.array() - 1.0).abs().maxCoeff();
  const double secs = seconds_since(start);
  report(2, "round fixed point", dev <= 1e-12 && s.diagnostics.F2 <= 1e-12 && secs < 10.0,
         fmt("after 1e4 steps max|u-1| = %.3e, F2 = %.3e, %.2f s", dev, s.diagnostics.F2, secs));
}

void criterion_3() {
  const auto start = std::chrono::steady_clock::now();
  ScenarioConfig c = load_config(fs::path(SCFLOW_PRESET_DIR) / "perturbed-round.toml");
  apply_override(c, "sample_interval=0");
  const Grid g = build_grid(c.n, c.N);
  const Profile f = make_f(c, g);
  const RunResult r = run(make_u0(c, g), f, c.flow, g);
  double worst = 0.0;
  int compared = 0;
  bool monotone = true;
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    const DiagnosticsRecord& a = r.trajectory[i - 1];
    const DiagnosticsRecord& b = r.trajectory[i];
    const double dt = b.t - a.t;
    if (b.Ef > a.Ef + 10 * dt * dt) monotone = false;
    if (std::min(a.F2, b.F2) < 1e-6) continue;
    const double measured = (b.Ef - a.Ef) / dt;
    const double predicted = 0.5 * (a.energy_rate + b.energy_rate);
    worst = std::max(worst, std::abs(measured - predicted) / std::abs(predicted));
    ++compared;
  }
  const double secs = seconds_since(start);
  report(3, "energy decay law", compared > 0 && worst <= 0.05 && monotone && secs < 30.0,
         fmt("%d intervals with F2 >= 1e-6, max relative error %.3e (<= 0.05), monotone %s, %.2f s",
             compared, worst, monotone ? "yes" : "no", secs));
}

void criterion_4(const std::vector<PresetRun>& runs) {
  bool pass = true;
  std::string detail;
  for (const auto& r : runs) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& d : r.result.trajectory) {
      lo = std::min(lo, d.lambda);
      hi = std::max(hi, d.lambda);
    }
    const bool ok = lo >= r.bounds.lambda1 * (1 - 1e-6) && hi <= r.bounds.lambda2 * (1 + 1e-6);
    pass &= ok;
    detail += fmt("%s [%.4g, %.4g] in [%.4g, %.4g]%s; ", r.config.name.c_str(), lo, hi,
                  r.bounds.lambda1, r.bounds.lambda2, ok ? "" : " VIOLATED");
  }
  report(4, "lambda bounds on every preset", pass, detail);
}

void criterion_5(const std::vector<PresetRun>& runs) {
  bool pass = true;
  std::string detail;
  for (const auto& r : runs) {
    double lowest = INFINITY;
    for (const auto& d : r.result.trajectory) lowest = std::min(lowest, d.fu_mass);
    const bool ok = lowest >= r.bounds.fu_mass_floor - 1e-8;
    pass &= ok;
    detail += fmt("%s min %.4g >= %.4g%s; ", r.config.name.c_str(), lowest, r.bounds.fu_mass_floor,
                  ok ? "" : " VIOLATED");
  }
  report(5, "positivity preservation", pass, detail);
}

void criterion_6(const std::vector<PresetRun>& runs) {
  bool pass = true;
  int checked = 0;
  std::string detail;
  for (const auto& r : runs) {
    if (r.config.n != 3) continue;
    ++checked;
    double lowest = INFINITY;
    for (const auto& d : r.result.trajectory) lowest = std::min(lowest, d.min_R_minus_lf);
    const bool ok = r.bounds.C0_available && !r.bounds.C0_empirical &&
                    lowest >= r.bounds.C0 - 1e-6 * std::abs(r.bounds.C0);
    pass &= ok;
    detail += fmt("%s min(R - lambda f) %.4g >= C0 %.4g; ", r.config.name.c_str(), lowest, r.bounds.C0);
  }
  report(6, "curvature floor (n = 3)", pass && checked > 0, detail);
}

void criterion_7() {
  const int n = 4;
  const Grid g = build_grid(n, 256);
  const std::vector<std::pair<std::string, Profile>> cases = {
      {"1 + 0.1 mu", sample(g, [](double mu) { return 1.0 + 0.1 * mu; })},
      {"bubble(0.3)", bubble(Dilation{0.3, 1}, g)}};
  double worst = 0.0;
  for (const auto& [name, u] : cases) {
    const double E = total_energy(u, g);
    const double V = volume(u, g);
    for (double eps : {0.1, 0.5, 2.0, 10.0}) {
      const Profile v = pullback(u, Dilation{eps, 1}, g);
      worst = std::max({worst, std::abs(total_energy(v, g) - E) / E, std::abs(volume(v, g) - V) / V});
    }
  }
  report(7, "conformal invariance", worst <= 1e-7,
         fmt("max relative change of E and volume %.3e (<= 1e-7)", worst));
}

void criterion_8() {
  const int n = 4;
  const Grid g = build_grid(n, 256);
  bool pass = true;
  std::string detail;
  for (double eps0 : {0.05, 0.2, 5.0}) {
    const NormalizationResult r = normalize(bubble(Dilation{eps0, 1}, g), g);
    // Express the result as a north-pole parameter.
    const double eps = r.pole == 1 ? r.eps : 1.0 / r.eps;
    const double rel = std::abs(eps * eps0 - 1.0);
    const bool ok = rel <= 1e-6 && std::abs(r.residual) <= 1e-10;
    pass &= ok;
    detail += fmt("eps0=%g -> eps=%.9g (rel err %.1e), residual %.1e; ", eps0, eps, rel, std::abs(r.residual));
  }
  report(8, "normalization recovery", pass, detail);
}

void criterion_9() {
  const auto start = std::chrono::steady_clock::now();
  long cases = 0, mismatches = 0;
  for (int n = 1; n <= 6; ++n) {
    MorseSystem sys{n, std::vector<int>(n + 1, 0)};
    while (true) {
      const MorseSolution s = solve_morse_system(sys);
      const int bound = *std::max_element(sys.m.begin(), sys.m.end()) + 1;
      const auto found = enumerate_morse_solutions(sys, bound);
      const bool agree = found.size() <= 1 && s.exists == (found.size() == 1) && (!s.exists || found[0] == s.k);
      if (!agree) ++mismatches;
      ++cases;
      int i = 0;
      while (i <= n && sys.m[i] == 5) sys.m[i++] = 0;
      if (i > n) break;
      ++sys.m[i];
    }
  }
  const double secs = seconds_since(start);
  report(9, "Morse solver oracle equivalence", mismatches == 0 && secs < 60.0,
         fmt("%ld systems (n = 1..6, m_i <= 5), %ld mismatches, %.2f s", cases, mismatches, secs));
}

void criterion_10(const std::vector<PresetRun>& runs) {
  bool pass = true;
  bool shipped = false;
  std::string detail;
  for (const auto& r : runs) {
    if (r.result.outcome != Outcome::kConcentrating) continue;
    const bool ok = r.concentration && std::abs(r.concentration->signature_defect) < 0.05 &&
                    r.concentration->lap_f_Q < 0.0 && r.violations.empty();
    if (r.config.name == "concentrating") shipped = ok;
    pass &= ok;
    if (r.concentration) {
      detail += fmt("%s: t=%.4g Q=%s defect %.3e, Laplacian f(Q) %.3g%s; ", r.config.name.c_str(),
                    r.result.final_state.t, r.concentration->Q > 0 ? "north" : "south",
                    r.concentration->signature_defect, r.concentration->lap_f_Q, ok ? "" : " FAULT");
    } else {
      detail += r.config.name + ": no concentration point FAULT; ";
    }
  }
  if (!shipped) detail += "shipped concentrating preset did not concentrate cleanly";
  report(10, "concentration signature", pass && shipped, detail);
}

void criterion_11(const std::vector<PresetRun>& runs) {
  const PresetRun* base = nullptr;
  for (const auto& r : runs) {
    if (r.config.name == "homotopy-base") base = &r;
  }
  if (!base) {
    report(11, "homotopy claims", false, "homotopy-base preset missing");
    return;
  }
  const Grid& g = base->grid;
  const double T = base->result.final_state.t;
  const auto& traj = base->result.trajectory;
  const auto& profiles = base->result.profiles;
  auto flow_at = [&](double t) -> Profile {
    for (std::size_t i = 0; i < traj.size(); ++i) {
      if (traj[i].t >= t) return profiles[i];
    }
    return profiles.back();
  };
  const double gamma0 = base->bounds.gamma.value_or(-INFINITY);
  const bool in_xf = std::abs(base->bounds.vol0 - 1.0) <= 1e-12 && base->bounds.Ef0 <= gamma0;
  bool pass = in_xf;
  std::string detail = fmt("T = %.3g, E_f[u0] = %.6f, gamma0 = %.6f; ", T, base->bounds.Ef0, gamma0);
  for (double s : {0.6, 0.8, 0.95}) {
    const Profile us = homotopy_path(flow_at, T, s, g);
    const double vol = volume(us, g);
    const double mass = f_mass(us, base->f, g);
    const double Ef = energy_functional(us, base->f, g);
    const bool ok = std::abs(vol - 1.0) <= 1e-10 && mass > 0.0 && Ef <= gamma0 + 1e-8;
    pass &= ok;
    detail += fmt("s=%.2f vol-1=%.1e fmass=%.4g E_f=%.6f%s; ", s, vol - 1.0, mass, Ef, ok ? "" : " VIOLATED");
  }
  report(11, "homotopy claims", pass, detail);
}

void criterion_12() {
  const Grid g = build_grid(4, 32);
  auto poly = [&](std::vector<double> c) { return sample(g, [&](double mu) { return eval_polynomial(c, mu); }); };
  const SimpleBubbleResult a = check_simple_bubble(poly({7}), g);
  const SimpleBubbleResult b = check_simple_bubble(poly({12, 6}), g);
  const SimpleBubbleResult c = check_simple_bubble(poly({12, 4}), g);
  const bool bubbles = std::abs(a.ratio - 1.0) < 1e-13 && a.verdict == Verdict::kPass &&
                       std::abs(b.ratio - 1.5) < 1e-13 && b.verdict == Verdict::kFail &&
                       std::abs(c.ratio - 4.0 / 3.0) < 1e-13 && c.verdict == Verdict::kPass &&
                       std::abs(b.bound - std::sqrt(2.0)) < 1e-15;
  const MorseSolution m1 = solve_morse_system({4, {1, 0, 0, 0, 0}});
  const MorseSolution m2 = solve_morse_system({4, {2, 1, 0, 0, 0}});
  const MorseSolution m3 = solve_morse_system({4, {1, 0, 1, 0, 0}});
  const bool morse = m1.exists && m1.trivial && m1.k == std::vector<int>{0, 0, 0, 0, 0} && m2.exists &&
                     !m2.trivial && m2.k == std::vector<int>{1, 0, 0, 0, 0} && !m3.exists && m3.k[3] < 0;
  const bool iv = check_morse_condition({{"a", 1, -1, 4}, {"b", 1, -1, 4}, {"c", 1, -1, 3}}, 4).verdict ==
                  Verdict::kFail;
  report(12, "condition-checker arithmetic", bubbles && morse && iv,
         fmt("ratios %.15g, %.15g, %.15g vs %.15g; Morse k = (%d,%d,%d,%d,%d), (%d,%d,%d,%d,%d), none",
             a.ratio, b.ratio, c.ratio, b.bound, m1.k[0], m1.k[1], m1.k[2], m1.k[3], m1.k[4], m2.k[0],
             m2.k[1], m2.k[2], m2.k[3], m2.k[4]));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  const std::vector<PresetRun> runs = run_presets();
  criterion_4(runs);
  criterion_5(runs);
  criterion_6(runs);
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10(runs);
  criterion_11(runs);
  criterion_12();
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

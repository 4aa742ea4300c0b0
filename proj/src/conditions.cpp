#include "scflow/conditions.hpp"

#include "scflow/error.hpp"

#include <algorithm>
#include <cmath>

namespace scflow {
namespace {

constexpr double kMembershipMargin = 1e-10;

double max_abs_with_poles(const Profile& f, const Grid& grid) {
  return std::max({f.cwiseAbs().maxCoeff(), std::abs(pole_value(f, grid, 1)),
                   std::abs(pole_value(f, grid, -1))});
}

double min_with_poles(const Profile& f, const Grid& grid) {
  return std::min({f.minCoeff(), pole_value(f, grid, 1), pole_value(f, grid, -1)});
}

void check_index(const CriticalPoint& p, int n) {
  if (p.morse_index < 0 || p.morse_index > n) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "critical point '" + p.label + "' has Morse index " +
                    std::to_string(p.morse_index) + " outside [0, " + std::to_string(n) + "]");
  }
}

double f_scale(const std::vector<CriticalPoint>& crit) {
  double scale = 0.0;
  for (const auto& p : crit) scale = std::max(scale, std::abs(p.f_value));
  return scale > 0.0 ? scale : 1.0;
}

bool in_filter(const CriticalPoint& p, double margin) {
  return p.f_value > margin && p.laplacian_sign < 0;
}

// Points whose membership in {f > 0, Laplacian f < 0} cannot be decided.
bool borderline(const CriticalPoint& p, double margin) {
  return std::abs(p.f_value) <= margin || (p.laplacian_sign == 0 && p.f_value > margin);
}

bool any_borderline(const std::vector<CriticalPoint>& crit) {
  const double margin = kMembershipMargin * f_scale(crit);
  return std::any_of(crit.begin(), crit.end(), [&](const auto& p) { return borderline(p, margin); });
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "PASS";
    case Verdict::kFail: return "FAIL";
    case Verdict::kIndeterminate: return "INDETERMINATE";
  }
  return "UNKNOWN";
}

ConditionIResult check_condition_i(const Profile& f, const Grid& grid) {
  ConditionIResult r;
  r.mean_f = quad_average(f, grid);
  r.min_f = min_with_poles(f, grid);
  const bool mean_positive = r.mean_f > 1e-12 * max_abs_with_poles(f, grid);
  const bool sign_ok = grid.n() >= 4 || r.min_f >= -1e-12;
  r.verdict = mean_positive && sign_ok ? Verdict::kPass : Verdict::kFail;
  return r;
}

SimpleBubbleResult check_simple_bubble(const Profile& f, const Grid& grid) {
  const double mean = quad_average(f, grid);
  const double max_abs = max_abs_with_poles(f, grid);
  if (!(mean > 1e-12 * max_abs)) {
    throw Error(ErrorCode::kNonpositiveMean, "avg f = " + std::to_string(mean));
  }
  const int n = grid.n();
  SimpleBubbleResult r;
  r.ratio = max_abs / mean;
  r.bound = std::pow(2.0, 2.0 / n);
  r.sigma = 0.5 * (r.bound / r.ratio - 1.0);
  r.verdict = r.ratio < r.bound ? Verdict::kPass : Verdict::kFail;
  return r;
}

NondegeneracyResult check_nondegeneracy(const Profile& f, const Grid& grid) {
  const Profile witness = gradient_sq(f, grid) + laplace_beltrami(f, grid).cwiseAbs2();
  double min_witness = witness.minCoeff();
  for (int pole : {1, -1}) {
    const double lap = pole_laplacian(f, grid, pole);
    min_witness = std::min(min_witness, lap * lap);
  }
  NondegeneracyResult r;
  const double scale = max_abs_with_poles(f, grid);
  r.min_witness = min_witness;
  r.threshold = 1e-8 * scale * scale;
  r.verdict = min_witness > r.threshold ? Verdict::kPass : Verdict::kFail;
  return r;
}

MorseSolution solve_morse_system(const MorseSystem& sys) {
  if (static_cast<int>(sys.m.size()) != sys.n + 1) {
    throw Error(ErrorCode::kInvalidArgument, "Morse system needs n + 1 counts");
  }
  MorseSolution s;
  s.k.resize(sys.m.size());
  s.k[0] = sys.m[0] - 1;
  for (int i = 1; i <= sys.n; ++i) s.k[i] = sys.m[i] - s.k[i - 1];
  s.exists = s.k[sys.n] == 0 && std::all_of(s.k.begin(), s.k.end(), [](int k) { return k >= 0; });
  s.trivial = s.exists && std::all_of(s.k.begin(), s.k.end(), [](int k) { return k == 0; });
  return s;
}

std::vector<std::vector<int>> enumerate_morse_solutions(const MorseSystem& sys, int bound) {
  const int n = sys.n;
  std::vector<std::vector<int>> found;
  std::vector<int> k(n + 1, 0);
  // Depth-first over the box [0, bound]^n (k_n = 0), rejecting a partial
  // assignment as soon as the equation it completes is violated.
  auto satisfied = [&](int i) {
    return i == 0 ? sys.m[0] == 1 + k[0] : sys.m[i] == k[i - 1] + k[i];
  };
  auto search = [&](auto&& self, int i) -> void {
    if (i == n) {
      k[n] = 0;
      if (satisfied(n)) found.push_back(k);
      return;
    }
    for (int v = 0; v <= bound; ++v) {
      k[i] = v;
      if (satisfied(i)) self(self, i + 1);
    }
  };
  search(search, 0);
  return found;
}

MorseSystem morse_counts(const std::vector<CriticalPoint>& crit, int n) {
  MorseSystem sys;
  sys.n = n;
  sys.m.assign(n + 1, 0);
  const double margin = kMembershipMargin * f_scale(crit);
  for (const auto& p : crit) {
    check_index(p, n);
    if (in_filter(p, margin)) ++sys.m[n - p.morse_index];
  }
  return sys;
}

MorseConditionResult check_morse_condition(const std::vector<CriticalPoint>& crit, int n,
                                           bool strict) {
  MorseConditionResult r;
  r.system = morse_counts(crit, n);
  r.solution = solve_morse_system(r.system);
  if (any_borderline(crit)) {
    r.verdict = Verdict::kIndeterminate;
    return r;
  }
  const bool violates = strict ? r.solution.exists : r.solution.exists && !r.solution.trivial;
  r.verdict = violates ? Verdict::kFail : Verdict::kPass;
  return r;
}

IndexCountResult index_count(const std::vector<CriticalPoint>& crit, int n) {
  IndexCountResult r;
  const double margin = kMembershipMargin * f_scale(crit);
  for (const auto& p : crit) {
    check_index(p, n);
    if (in_filter(p, margin)) r.sum += p.morse_index % 2 == 0 ? 1 : -1;
  }
  if (any_borderline(crit)) {
    r.verdict = Verdict::kIndeterminate;
    return r;
  }
  const int target = n % 2 == 0 ? 1 : -1;
  r.verdict = r.sum != target ? Verdict::kPass : Verdict::kFail;
  return r;
}

SymmetryResult check_symmetry_conditions(const Profile& f, const FixedPointSet& sigma,
                                         const Grid& grid) {
  SymmetryResult r;
  r.mean_f = quad_average(f, grid);
  r.sigma_empty = sigma.empty;
  if (sigma.empty) {
    r.verdict = Verdict::kPass;
    r.alternative = "a";
    return r;
  }
  const double f_north = pole_value(f, grid, 1);
  const double f_south = pole_value(f, grid, -1);
  const double lap_north = pole_laplacian(f, grid, 1);
  const double lap_south = pole_laplacian(f, grid, -1);
  r.max_sigma_f = std::max(f_north, f_south);
  const double tie = kMembershipMargin * max_abs_with_poles(f, grid);
  if (std::abs(f_north - f_south) <= tie) {
    // Either pole attains the maximum; prefer one with positive Laplacian.
    r.maximizer = lap_north >= lap_south ? 1 : -1;
  } else {
    r.maximizer = f_north > f_south ? 1 : -1;
  }
  r.lap_f_maximizer = r.maximizer > 0 ? lap_north : lap_south;

  if (r.max_sigma_f <= r.mean_f) {
    r.verdict = Verdict::kPass;
    r.alternative = "b1";
  } else if (r.lap_f_maximizer > 0.0) {
    r.verdict = Verdict::kPass;
    r.alternative = "b2";
  } else {
    r.verdict = Verdict::kFail;
  }
  return r;
}

PoleExtraction extract_pole_critical_points(const Profile& f, const Grid& grid) {
  PoleExtraction out;
  const int n = grid.n();
  const double margin = kMembershipMargin * max_abs_with_poles(f, grid);
  const Profile df = derivative(f, grid);

  for (int pole : {1, -1}) {
    const double slope = pole_value(df, grid, pole);
    // Along the geodesic distance r from the pole, f = f(pole) - pole * f'(pole) r^2 / 2.
    const double curvature = -pole * slope;
    if (std::abs(curvature) <= margin) continue;  // degenerate pole, not Morse
    CriticalPoint p;
    p.label = pole > 0 ? "north" : "south";
    p.f_value = pole_value(f, grid, pole);
    p.morse_index = curvature < 0 ? n : 0;
    p.laplacian_sign = curvature < 0 ? -1 : 1;
    out.points.push_back(p);
  }

  const Profile& mu = grid.nodes();
  for (int j = 0; j + 1 < grid.size(); ++j) {
    if (std::abs(df[j]) <= margin) {
      out.interior_critical_latitudes.push_back(mu[j]);
    } else if ((df[j] > 0) != (df[j + 1] > 0) && std::abs(df[j + 1]) > margin) {
      out.interior_critical_latitudes.push_back(mu[j] - df[j] * (mu[j + 1] - mu[j]) / (df[j + 1] - df[j]));
    }
  }
  return out;
}

std::optional<double> delta_n(int n) {
  if (n == 3 || n == 4) return std::pow(2.0, 2.0 / n);
  if (n >= 5) return std::pow(2.0, 2.0 / (n - 2));
  return std::nullopt;
}

}  // namespace scflow

#include "scflow/flow.hpp"

#include "scflow/conformal.hpp"
#include "scflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scflow {
namespace {

// Real-axis extent of the explicit RK4 stability region.
constexpr double kRk4StabilityLimit = 2.785;

void require_positive(const Profile& u) {
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (!(u[j] > 0.0) || !std::isfinite(u[j])) {
      throw Error(ErrorCode::kNonpositiveFactor,
                  "conformal factor is not positive at node " + std::to_string(j));
    }
  }
}

// Everything derived from one evaluation of u'' and u'.
struct Snapshot {
  Profile vol_density;  // u^(2*)
  Profile R;
  double E = 0.0;
  double M = 0.0;  // avg(f u^(2*))
  double lambda = 0.0;
};

Snapshot evaluate(const Profile& u, const Profile& f, const Grid& grid) {
  require_positive(u);
  if (f.size() != grid.size()) throw Error(ErrorCode::kLengthMismatch, "f does not match the grid");
  const int N = grid.size();
  const double n = grid.n();
  const double cn = grid.conformal_constant();
  const double crit = grid.critical_exponent();
  const double nn1 = n * (n - 1);
  const Profile& mu = grid.nodes();
  const Profile& w = grid.weights();

  const Profile d1 = derivative(u, grid);
  const Profile d2 = derivative(d1, grid);

  Snapshot s;
  s.vol_density.resize(N);
  s.R.resize(N);
  double energy = 0.0, mass = 0.0;
  for (int j = 0; j < N; ++j) {
    const double sin2 = (1 - mu[j]) * (1 + mu[j]);
    const double lap = sin2 * d2[j] - n * mu[j] * d1[j];
    const double density = std::pow(u[j], crit);
    s.vol_density[j] = density;
    s.R[j] = std::pow(u[j], 1 - crit) * (-cn * lap + nn1 * u[j]);
    energy += w[j] * (cn * sin2 * d1[j] * d1[j] + nn1 * u[j] * u[j]);
    mass += w[j] * f[j] * density;
  }
  s.E = energy;
  s.M = mass;
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::kNonpositiveFMass, "avg(f u^(2*)) = " + std::to_string(mass));
  }
  s.lambda = energy / mass;
  return s;
}

Profile velocity(const Profile& u, const Profile& f, const Grid& grid) {
  const Snapshot s = evaluate(u, f, grid);
  const double c = -(grid.n() - 2) / 4.0;
  return (c * (s.R - s.lambda * f).array() * u.array()).matrix();
}

double max_with_poles(const Profile& p, const Grid& grid) {
  return std::max({p.maxCoeff(), pole_value(p, grid, 1), pole_value(p, grid, -1)});
}

double max_abs_with_poles(const Profile& p, const Grid& grid) {
  return std::max({p.cwiseAbs().maxCoeff(), std::abs(pole_value(p, grid, 1)),
                   std::abs(pole_value(p, grid, -1))});
}

std::optional<double> gamma_level(double mean_f, double max_abs_f, int n) {
  if (!(mean_f > 0.0)) return std::nullopt;
  const double sigma = 0.5 * (std::pow(2.0, 2.0 / n) * (mean_f / max_abs_f) - 1.0);
  return n * (n - 1.0) * std::pow(1 + sigma, (n - 2.0) / n) * std::pow(mean_f, (2.0 - n) / n);
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kConverged: return "CONVERGED";
    case Outcome::kConcentrating: return "CONCENTRATING";
    case Outcome::kTimeOut: return "TIME_OUT";
  }
  return "UNKNOWN";
}

Profile scalar_curvature(const Profile& u, const Grid& grid) {
  require_positive(u);
  const double n = grid.n();
  const Profile lap = laplace_beltrami(u, grid);
  const double crit = grid.critical_exponent();
  Profile R(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    R[j] = std::pow(u[j], 1 - crit) * (-grid.conformal_constant() * lap[j] + n * (n - 1) * u[j]);
  }
  return R;
}

double total_energy(const Profile& u, const Grid& grid) {
  require_positive(u);
  const double n = grid.n();
  const Profile integrand =
      grid.conformal_constant() * gradient_sq(u, grid) + n * (n - 1) * u.cwiseProduct(u);
  return quad_average(integrand, grid);
}

double total_energy_curvature_form(const Profile& u, const Grid& grid) {
  const Profile R = scalar_curvature(u, grid);
  const Profile density = u.array().pow(grid.critical_exponent()).matrix();
  return quad_average(R.cwiseProduct(density), grid);
}

double f_mass(const Profile& u, const Profile& f, const Grid& grid) {
  const Profile density = u.array().pow(grid.critical_exponent()).matrix();
  return quad_average(f.cwiseProduct(density), grid);
}

double energy_functional(const Profile& u, const Profile& f, const Grid& grid) {
  require_positive(u);
  const double mass = f_mass(u, f, grid);
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::kNonpositiveFMass, "avg(f u^(2*)) = " + std::to_string(mass));
  }
  return total_energy(u, grid) / std::pow(mass, 2.0 / grid.critical_exponent());
}

double volume_multiplier(const Profile& u, const Profile& f, const Grid& grid) {
  return evaluate(u, f, grid).lambda;
}

double curvature_deviation(const Profile& u, const Profile& f, const Grid& grid) {
  const Snapshot s = evaluate(u, f, grid);
  const Profile dev = s.lambda * f - s.R;
  return quad_average(dev.cwiseProduct(dev).cwiseProduct(s.vol_density), grid);
}

double multiplier_rate(const Profile& u, const Profile& f, const Grid& grid) {
  return diagnose(0.0, u, f, grid).lambda_prime;
}

DiagnosticsRecord diagnose(double t, const Profile& u, const Profile& f, const Grid& grid) {
  const Snapshot s = evaluate(u, f, grid);
  const double n = grid.n();
  const Profile lf = s.lambda * f;
  const Profile dev = lf - s.R;

  DiagnosticsRecord d;
  d.t = t;
  d.E = s.E;
  d.fu_mass = s.M;
  d.Ef = s.E / std::pow(s.M, 2.0 / grid.critical_exponent());
  d.lambda = s.lambda;
  d.F2 = quad_average(dev.cwiseProduct(dev).cwiseProduct(s.vol_density), grid);
  const double cross = quad_average(lf.cwiseProduct(dev).cwiseProduct(s.vol_density), grid);
  d.lambda_prime = -(0.5 * (n - 2) * d.F2 + cross) / s.M;
  d.vol = quad_average(s.vol_density, grid);
  d.Sz = quad_average(grid.nodes().cwiseProduct(s.vol_density), grid) / d.vol;
  d.min_R_minus_lf = (-dev).minCoeff();
  d.max_u = max_with_poles(u, grid);
  d.energy_rate = -0.5 * (n - 2) * std::pow(s.M, -2.0 / grid.critical_exponent()) * d.F2;
  return d;
}

FlowState initial_state(const Profile& u0, const Profile& f, const Grid& grid) {
  FlowState state;
  state.t = 0.0;
  state.u = u0;
  state.diagnostics = diagnose(0.0, u0, f, grid);
  state.lambda = state.diagnostics.lambda;
  state.target_volume = state.diagnostics.vol;
  return state;
}

FlowState step(const FlowState& state, const Profile& f, double dt, const Grid& grid) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "time step must be positive");
  const Profile& u = state.u;
  const Profile k1 = velocity(u, f, grid);
  const Profile k2 = velocity(u + 0.5 * dt * k1, f, grid);
  const Profile k3 = velocity(u + 0.5 * dt * k2, f, grid);
  const Profile k4 = velocity(u + dt * k3, f, grid);
  Profile next = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  require_positive(next);

  const double crit = grid.critical_exponent();
  const double vol = quad_average(next.array().pow(crit).matrix(), grid);
  FlowState out;
  out.raw_volume_drift = (vol - state.target_volume) / state.target_volume;
  next *= std::pow(state.target_volume / vol, 1.0 / crit);

  out.t = state.t + dt;
  out.u = std::move(next);
  out.target_volume = state.target_volume;
  out.diagnostics = diagnose(out.t, out.u, f, grid);
  out.lambda = out.diagnostics.lambda;
  return out;
}

double stable_dt(const Profile& u, const FlowParams& params, const Grid& grid) {
  const double n = grid.n();
  const double umin = u.minCoeff();
  const double stiffness =
      (n - 1) * std::pow(umin, -4.0 / (n - 2)) * grid.max_laplace_eigenvalue();
  return params.stability_fraction * kRk4StabilityLimit / stiffness;
}

RunResult run(const Profile& u0, const Profile& f, const FlowParams& params, const Grid& grid,
              const RunOptions& options) {
  if (!(params.dt > 0.0) || !(params.t_max > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dt and t_max must be positive");
  }
  RunResult result;
  FlowState state = initial_state(u0, f, grid);

  double next_sample = 0.0;
  auto record = [&](const FlowState& s) {
    result.trajectory.push_back(s.diagnostics);
    if (options.keep_profiles) result.profiles.push_back(s.u);
    next_sample = s.t + params.sample_interval;
  };
  record(state);
  result.max_abs_lambda_prime = std::abs(state.diagnostics.lambda_prime);

  const double slack_factor = 10.0;
  while (true) {
    const DiagnosticsRecord& d = state.diagnostics;
    if (d.F2 < params.conv_F2) {
      result.outcome = Outcome::kConverged;
      break;
    }
    if (d.max_u > params.blowup_umax && std::abs(d.Sz) > params.blowup_S) {
      result.outcome = Outcome::kConcentrating;
      break;
    }
    if (state.t >= params.t_max * (1 - 1e-14)) {
      result.outcome = Outcome::kTimeOut;
      break;
    }

    double dt = std::min({params.dt, stable_dt(state.u, params, grid), params.t_max - state.t});
    std::optional<FlowState> accepted;
    for (int attempt = 0; attempt <= params.max_halvings; ++attempt) {
      try {
        FlowState trial = step(state, f, dt, grid);
        if (trial.diagnostics.Ef <= d.Ef + slack_factor * dt * dt) {
          accepted = std::move(trial);
          break;
        }
        if (attempt == params.max_halvings) {
          throw Error(ErrorCode::kStepRejected,
                      "E_f increased at t = " + std::to_string(state.t) +
                          " after " + std::to_string(attempt) + " halvings");
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonpositiveFactor || attempt == params.max_halvings) throw;
      }
      dt *= 0.5;
      ++result.halvings;
    }

    state = std::move(*accepted);
    ++result.steps;
    result.max_abs_lambda_prime =
        std::max(result.max_abs_lambda_prime, std::abs(state.diagnostics.lambda_prime));
    if (state.t >= next_sample * (1 - 1e-14)) record(state);
    if (options.observer && !options.observer(state)) break;
  }

  if (result.trajectory.back().t < state.t) record(state);
  result.final_state = std::move(state);
  return result;
}

BoundsReport bounds_report(const Profile& u0, const Profile& f, const Grid& grid,
                           std::optional<double> observed_lambda_prime) {
  const int n = grid.n();
  const double nn1 = n * (n - 1.0);
  const double crit = grid.critical_exponent();

  BoundsReport b;
  b.vol0 = quad_average(u0.array().pow(crit).matrix(), grid);
  b.Ef0 = energy_functional(u0, f, grid);

  const double max_f = max_with_poles(f, grid);
  const double max_abs_f = max_abs_with_poles(f, grid);
  const double mean_f = quad_average(f, grid);
  const double vol_factor = std::pow(b.vol0, -2.0 / n);

  b.lambda1 = nn1 / max_f * vol_factor;
  b.lambda2 = std::pow(b.Ef0 / std::pow(nn1, 2.0 / n), n / (n - 2.0)) * vol_factor;
  b.sigma = 0.5 * (std::pow(2.0, 2.0 / n) * (mean_f / max_abs_f) - 1.0);
  b.gamma = gamma_level(mean_f, max_abs_f, n);
  b.fu_mass_floor = std::pow(nn1 / b.Ef0, crit / 2.0) * b.vol0;

  const double lf = b.lambda2 * max_abs_f;
  if (n == 3) {
    b.Lambda0 = lf * lf / (n - 2.0) * std::pow(b.Ef0 / nn1, crit / 2.0);
  }
  std::optional<double> rate_bound = b.Lambda0;
  if (!rate_bound && observed_lambda_prime) {
    rate_bound = *observed_lambda_prime;
    b.C0_empirical = true;
  }
  if (rate_bound) {
    const double min_R0 = scalar_curvature(u0, grid).minCoeff();
    b.C0 = std::min(-std::sqrt(2 * lf * lf + 2 * *rate_bound * max_abs_f), min_R0 - lf);
  } else {
    b.C0_available = false;
  }
  return b;
}

ConcentrationReport detect_concentration(const FlowState& state, const Profile& f,
                                         const Grid& grid, double signature_tol,
                                         std::optional<double> Ef0) {
  const double Sz = center_of_mass(state.u, grid);
  if (std::abs(Sz) < 1e-12) {
    throw Error(ErrorCode::kUndefinedQ, "center of mass vanishes; no concentration point");
  }
  const double n = grid.n();
  ConcentrationReport r;
  r.Sz = Sz;
  r.Q = Sz > 0 ? 1 : -1;
  r.lambda = volume_multiplier(state.u, f, grid);
  r.f_Q = pole_value(f, grid, r.Q);
  r.signature_defect = r.lambda * r.f_Q / (n * (n - 1)) - 1.0;
  r.grad_f_Q = 0.0;
  r.lap_f_Q = pole_laplacian(f, grid, r.Q);
  r.signature_holds = std::abs(r.signature_defect) < signature_tol && r.lap_f_Q < 0.0;
  if (Ef0) {
    const auto gamma = gamma_level(quad_average(f, grid), max_abs_with_poles(f, grid), grid.n());
    r.in_regime = gamma && *Ef0 <= *gamma;
  }
  return r;
}

Profile homotopy_path(const std::function<Profile(double)>& flow_at, double T, double s,
                      const Grid& grid) {
  if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "s must lie in [0, 1]");
  if (s <= 0.5) return flow_at(2 * s * T);

  const Profile uT = flow_at(T);
  require_positive(uT);
  const double crit = grid.critical_exponent();
  const double beta = 1.0 / uT.maxCoeff();
  const double a = 2 - 2 * s;
  const double b = 2 * s - 1;
  const double denom = a * std::pow(beta, crit) + b;
  Profile out(uT.size());
  for (Eigen::Index j = 0; j < uT.size(); ++j) {
    out[j] = std::pow((a * std::pow(beta * uT[j], crit) + b) / denom, 1.0 / crit);
  }
  return out;
}

}  // namespace scflow

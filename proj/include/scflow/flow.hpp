#pragma once

// Volume-normalized scalar curvature flow on S^n,
//
//   du/dt = -((n-2)/4) (R - lambda(t) f) u,
//   lambda(t) = E[u] / avg(f u^(2*)),
//
// together with the functionals and a priori quantities monitored along it.

#include "scflow/sphere.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scflow {

struct FlowParams {
  double dt = 1e-4;
  double t_max = 10.0;
  double vol_tol = 1e-12;
  double conv_F2 = 1e-10;
  double blowup_umax = 1e3;
  double blowup_S = 0.9;
  /// Time between emitted diagnostics records; 0 records every step.
  double sample_interval = 0.0;
  /// Fraction of the RK4 real-axis stability limit used to cap dt against the
  /// stiffness of the linearized operator (n-1) u^(-4/(n-2)) Laplacian.
  double stability_fraction = 0.7;
  int max_halvings = 20;
  /// Tolerance on |lambda f(Q) / (n(n-1)) - 1| for the concentration signature.
  double signature_tol = 0.05;
};

struct DiagnosticsRecord {
  double t = 0.0;
  double E = 0.0;
  double Ef = 0.0;
  double F2 = 0.0;
  double lambda = 0.0;
  double lambda_prime = 0.0;
  double vol = 0.0;
  double Sz = 0.0;
  double min_R_minus_lf = 0.0;
  double max_u = 0.0;
  double fu_mass = 0.0;
  /// Analytic dE_f/dt = -((n-2)/2) fu_mass^(-2/2*) F2.
  double energy_rate = 0.0;

  bool operator==(const DiagnosticsRecord&) const = default;
};

struct FlowState {
  double t = 0.0;
  Profile u;
  double lambda = 0.0;
  DiagnosticsRecord diagnostics;
  /// Volume avg(u^(2*)) restored after every step.
  double target_volume = 1.0;
  /// Relative volume drift of the last step before projection.
  double raw_volume_drift = 0.0;
};

enum class Outcome { kConverged, kConcentrating, kTimeOut };
std::string_view to_string(Outcome outcome);

struct BoundsReport {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::optional<double> Lambda0;
  double C0 = 0.0;
  /// C0 was built from an observed max |lambda'| rather than a closed form.
  bool C0_empirical = false;
  /// C0 could not be formed (n >= 4 and no observed lambda' supplied).
  bool C0_available = true;
  double sigma = 0.0;
  std::optional<double> gamma;  // absent when avg f <= 0
  /// Closed-form floor for avg(f u^(2*)) along the flow.
  double fu_mass_floor = 0.0;
  double Ef0 = 0.0;
  double vol0 = 0.0;

  bool operator==(const BoundsReport&) const = default;
};

struct ConcentrationReport {
  int Q = 0;  // +1 north, -1 south
  double Sz = 0.0;
  double lambda = 0.0;
  double f_Q = 0.0;
  /// lambda f(Q) / (n(n-1)) - 1.
  double signature_defect = 0.0;
  double grad_f_Q = 0.0;
  double lap_f_Q = 0.0;
  bool signature_holds = false;
  /// False when E_f[u0] exceeds gamma; the signature is then informational.
  bool in_regime = true;

  bool operator==(const ConcentrationReport&) const = default;
};

struct RunResult {
  std::vector<DiagnosticsRecord> trajectory;
  FlowState final_state;
  Outcome outcome = Outcome::kTimeOut;
  std::size_t steps = 0;
  int halvings = 0;
  double max_abs_lambda_prime = 0.0;
  /// Profiles at the emitted samples, when requested.
  std::vector<Profile> profiles;
};

/// R = u^(1-2*) (-c_n Laplacian u + n(n-1) u). Throws kNonpositiveFactor.
Profile scalar_curvature(const Profile& u, const Grid& grid);

/// E[u] = avg(c_n |grad u|^2 + n(n-1) u^2).
double total_energy(const Profile& u, const Grid& grid);
/// avg(R u^(2*)); equal to total_energy for smooth u.
double total_energy_curvature_form(const Profile& u, const Grid& grid);

/// avg(f u^(2*)).
double f_mass(const Profile& u, const Profile& f, const Grid& grid);

/// E_f[u] = E[u] / avg(f u^(2*))^(2/2*). Throws kNonpositiveFMass.
double energy_functional(const Profile& u, const Profile& f, const Grid& grid);

/// lambda = E[u] / avg(f u^(2*)).
double volume_multiplier(const Profile& u, const Profile& f, const Grid& grid);

/// F2 = avg((lambda f - R)^2 u^(2*)).
double curvature_deviation(const Profile& u, const Profile& f, const Grid& grid);

/// Analytic d lambda / dt.
double multiplier_rate(const Profile& u, const Profile& f, const Grid& grid);

/// All monitored quantities of one snapshot.
DiagnosticsRecord diagnose(double t, const Profile& u, const Profile& f, const Grid& grid);

FlowState initial_state(const Profile& u0, const Profile& f, const Grid& grid);

/// One RK4 step of size dt followed by volume projection.
FlowState step(const FlowState& state, const Profile& f, double dt, const Grid& grid);

/// Largest dt within params.stability_fraction of the RK4 stability limit.
double stable_dt(const Profile& u, const FlowParams& params, const Grid& grid);

struct RunOptions {
  bool keep_profiles = false;
  /// Called after every accepted step; return false to stop early.
  std::function<bool(const FlowState&)> observer;
};

RunResult run(const Profile& u0, const Profile& f, const FlowParams& params, const Grid& grid,
              const RunOptions& options = {});

/// lambda_1, lambda_2, Lambda_0 (n = 3 only), C0, sigma, gamma. C0 uses
/// Lambda_0 when it exists, else observed_lambda_prime when given.
BoundsReport bounds_report(const Profile& u0, const Profile& f, const Grid& grid,
                           std::optional<double> observed_lambda_prime = std::nullopt);

/// Radial projection of the center of mass onto a pole and the asymptotic
/// signature there. Throws kUndefinedQ when |Sz| < 1e-12.
ConcentrationReport detect_concentration(const FlowState& state, const Profile& f,
                                         const Grid& grid, double signature_tol = 0.05,
                                         std::optional<double> Ef0 = std::nullopt);

/// The contraction path: the flow itself up to s = 1/2, then a blend of
/// (beta u_T)^(2*) with the constant 1, beta = 1 / max u_T.
/// flow_at(t) must return the flow profile at time t in [0, T].
Profile homotopy_path(const std::function<Profile(double)>& flow_at, double T, double s,
                      const Grid& grid);

}  // namespace scflow

#include "scflow/conformal.hpp"

#include "scflow/error.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace scflow {
namespace {

constexpr double kResidualTol = 1e-10;
constexpr int kMaxIterations = 200;
const double kLogEpsMax = std::log(1e8);

void check_dilation(const Dilation& d) {
  if (!(d.eps > 0.0) || !std::isfinite(d.eps)) {
    throw Error(ErrorCode::kInvalidArgument, "dilation parameter must be positive and finite");
  }
  if (d.pole != 1 && d.pole != -1) throw Error(ErrorCode::kInvalidArgument, "pole must be +1 or -1");
}

}  // namespace

std::pair<Profile, Profile> dilation_map(const Dilation& d, const Grid& grid) {
  check_dilation(d);
  const int N = grid.size();
  const double n = grid.n();
  const double e2 = d.eps * d.eps;
  Profile image(N), jac(N);
  for (int j = 0; j < N; ++j) {
    // Work in the latitude seen from the chosen pole.
    const double m = d.pole * grid.nodes()[j];
    const double denom = e2 * (1 + m) + (1 - m);
    image[j] = d.pole * (e2 * (1 + m) - (1 - m)) / denom;
    jac[j] = std::pow(2 * d.eps / denom, n);
  }
  return {image, jac};
}

Profile bubble(const Dilation& d, const Grid& grid) {
  const auto [image, jac] = dilation_map(d, grid);
  return jac.array().pow(1.0 / grid.critical_exponent()).matrix();
}

Profile pullback(const Profile& u, const Dilation& d, const Grid& grid) {
  if (d.eps == 1.0) {
    check_dilation(d);
    return u;
  }
  const auto [image, jac] = dilation_map(d, grid);
  const double power = (grid.n() - 2.0) / (2.0 * grid.n());
  Profile v(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    assert(image[j] >= -1.0 && image[j] <= 1.0);
    v[j] = interpolate(u, grid, image[j]) * std::pow(jac[j], power);
  }
  return v;
}

double center_of_mass(const Profile& u, const Grid& grid) {
  const Profile vol = u.array().pow(grid.critical_exponent()).matrix();
  const Profile moment = grid.nodes().cwiseProduct(vol);
  return quad_average(moment, grid) / quad_average(vol, grid);
}

NormalizationResult normalize(const Profile& u, const Grid& grid) {
  const double s0 = center_of_mass(u, grid);
  NormalizationResult out;
  out.pole = s0 >= 0 ? 1 : -1;
  if (std::abs(s0) <= kResidualTol) {
    out.v = u;
    out.residual = std::abs(s0);
    return out;
  }

  // g(x) = pole * S_z(pullback(u, e^x)); g(0) > 0 and g decreases in x.
  const int pole = out.pole;
  auto g = [&](double x) {
    return pole * center_of_mass(pullback(u, Dilation{std::exp(x), pole}, grid), grid);
  };

  double lo = 0.0, g_lo = std::abs(s0);
  double hi = 0.0, g_hi = g_lo;
  for (double step = 0.5; g_hi > 0.0; step *= 2.0) {
    lo = hi;
    g_lo = g_hi;
    if (hi >= kLogEpsMax) {
      throw Error(ErrorCode::kRootNotBracketed,
                  "center of mass keeps its sign for eps in [1e-8, 1e8]");
    }
    hi = std::min(hi + step, kLogEpsMax);
    g_hi = g(hi);
  }

  // Bisection with secant (regula falsi, Illinois weighting) polish.
  double x = hi, gx = g_hi;
  int side = 0;
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    if (std::abs(gx) <= kResidualTol) break;
    double trial = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
    if (!(trial > lo && trial < hi) || it % 8 == 7) trial = 0.5 * (lo + hi);
    x = trial;
    gx = g(x);
    if (gx > 0.0) {
      lo = x;
      g_lo = gx;
      if (side == -1) g_hi *= 0.5;
      side = -1;
    } else {
      hi = x;
      g_hi = gx;
      if (side == 1) g_lo *= 0.5;
      side = 1;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
  }

  out.eps = std::exp(x);
  out.v = pullback(u, Dilation{out.eps, pole}, grid);
  out.residual = std::abs(center_of_mass(out.v, grid));
  out.iterations = it;
  return out;
}

}  // namespace scflow

#include "scflow/conformal.hpp"
#include "scflow/error.hpp"
#include "scflow/flow.hpp"

#include <doctest.h>

using namespace scflow;

namespace {

double volume(const Profile& u, const Grid& g) {
  return quad_average(u.array().pow(g.critical_exponent()).matrix(), g);
}

}  // namespace

TEST_CASE("identity dilation") {
  const Grid g = build_grid(4, 32);
  const auto [image, jac] = dilation_map(Dilation{1.0, 1}, g);
  CHECK((image - g.nodes()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((jac.array() - 1.0).abs().maxCoeff() < 1e-15);
  const Profile u = sample(g, [](double mu) { return 1.0 + 0.3 * mu * mu; });
  CHECK(pullback(u, Dilation{1.0, -1}, g) == u);
}

TEST_CASE("dilation Jacobian integrates to one") {
  for (int n : {3, 4, 6}) {
    const Grid g = build_grid(n, 96);
    for (double eps : {0.3, 0.7, 2.5}) {
      CHECK(quad_average(dilation_map(Dilation{eps, 1}, g).second, g) ==
            doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("bubbles concentrate at their pole") {
  const Grid g = build_grid(4, 64);
  const Profile north = bubble(Dilation{0.3, 1}, g);
  const Profile south = bubble(Dilation{0.3, -1}, g);
  CHECK(pole_value(north, g, 1) > pole_value(north, g, -1));
  CHECK(center_of_mass(north, g) > 0.1);
  CHECK(center_of_mass(south, g) == doctest::Approx(-center_of_mass(north, g)));
  CHECK(volume(north, g) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("bubble maxima follow the closed form") {
  // u_eps(north) = eps^(-(n-2)/2), u_eps(south) = eps^((n-2)/2).
  const int n = 5;
  const Grid g = build_grid(n, 96);
  const double eps = 0.5;
  const Profile b = bubble(Dilation{eps, 1}, g);
  CHECK(pole_value(b, g, 1) == doctest::Approx(std::pow(eps, -(n - 2) / 2.0)).epsilon(1e-8));
  CHECK(pole_value(b, g, -1) == doctest::Approx(std::pow(eps, (n - 2) / 2.0)).epsilon(1e-8));
}

TEST_CASE("dilations compose multiplicatively") {
  const Grid g = build_grid(4, 128);
  const Profile composed = pullback(bubble(Dilation{0.5, 1}, g), Dilation{0.8, 1}, g);
  const Profile direct = bubble(Dilation{0.4, 1}, g);
  CHECK((composed - direct).cwiseAbs().maxCoeff() < 1e-9);
  const Profile back = pullback(bubble(Dilation{0.5, 1}, g), Dilation{2.0, 1}, g);
  CHECK((back.array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("pullback preserves volume and energy") {
  const Grid g = build_grid(4, 192);
  const Profile u = sample(g, [](double mu) { return 1.0 + 0.1 * mu; });
  for (double eps : {0.2, 3.0}) {
    for (int pole : {1, -1}) {
      const Profile v = pullback(u, Dilation{eps, pole}, g);
      CHECK(volume(v, g) == doctest::Approx(volume(u, g)).epsilon(1e-9));
      CHECK(total_energy(v, g) == doctest::Approx(total_energy(u, g)).epsilon(1e-9));
    }
  }
}

TEST_CASE("normalize zeroes the center of mass") {
  const Grid g = build_grid(4, 128);
  const Profile u = sample(g, [](double mu) { return 1.0 + 0.2 * mu + 0.1 * mu * mu; });
  const NormalizationResult r = normalize(u, g);
  CHECK(std::abs(r.residual) <= 1e-10);
  CHECK(std::abs(center_of_mass(r.v, g)) <= 1e-10);
  CHECK(r.pole == 1);
}

TEST_CASE("normalize inverts a bubble") {
  const Grid g = build_grid(4, 256);
  for (double eps0 : {0.2, 5.0}) {
    const NormalizationResult r = normalize(bubble(Dilation{eps0, 1}, g), g);
    const double effective = r.pole == 1 ? r.eps : 1.0 / r.eps;
    CHECK(effective == doctest::Approx(1.0 / eps0).epsilon(1e-6));
    CHECK((r.v.array() - 1.0).abs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("normalize is the identity on centered data") {
  const Grid g = build_grid(4, 32);
  const Profile u = sample(g, [](double mu) { return 1.0 + 0.2 * mu * mu; });
  const NormalizationResult r = normalize(u, g);
  CHECK(r.eps == 1.0);
  CHECK(r.v == u);
}

TEST_CASE("bubble center of mass moves toward the pole") {
  const Grid g = build_grid(4, 256);
  CHECK(std::abs(center_of_mass(bubble(Dilation{1.0, 1}, g), g)) < 1e-15);
  double prev = 0.0;
  for (double eps : {0.5, 0.2, 0.05}) {
    const double s = center_of_mass(bubble(Dilation{eps, 1}, g), g);
    CHECK(s > prev);
    CHECK(s < 1.0);
    prev = s;
  }
  CHECK(prev > 0.9);
}

TEST_CASE("normalization is invariant under prior dilation") {
  const Grid g = build_grid(4, 256);
  const Profile u = sample(g, [](double mu) { return 1.0 + 0.2 * mu + 0.1 * mu * mu; });
  const Profile v = normalize(u, g).v;
  for (double eps : {0.5, 3.0}) {
    const Profile w = normalize(pullback(u, Dilation{eps, 1}, g), g).v;
    CHECK((w - v).cwiseAbs().maxCoeff() < 1e-6);
  }
}

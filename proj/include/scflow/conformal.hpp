#pragma once

// Moebius dilations of S^n along the symmetry axis.
//
// A dilation with parameter eps and pole p acts in the stereographic
// coordinate rho = tan(theta_p / 2) measured from p by rho -> rho / eps. For
// eps < 1 the pulled-back metric concentrates at p, so bubble(eps -> 0)
// concentrates at p. Composition multiplies the parameters.

#include "scflow/sphere.hpp"

#include <utility>

namespace scflow {

struct Dilation {
  double eps = 1.0;
  int pole = +1;  // +1 north (mu = 1), -1 south
};

struct NormalizationResult {
  Profile v;
  double eps = 1.0;
  int pole = +1;
  double residual = 0.0;  // |center of mass| of v
  int iterations = 0;
};

/// (image latitude mu', Jacobian |det dphi|) at every node.
std::pair<Profile, Profile> dilation_map(const Dilation& d, const Grid& grid);

/// Standard bubble J^(1/2*); it concentrates at d.pole as eps -> 0.
Profile bubble(const Dilation& d, const Grid& grid);

/// v = (u o phi) J^((n-2)/(2n)).
Profile pullback(const Profile& u, const Dilation& d, const Grid& grid);

/// Axis component of the center of mass of g = u^(4/(n-2)) g_round.
double center_of_mass(const Profile& u, const Grid& grid);

/// Finds the axis dilation zeroing the center of mass. Throws
/// kRootNotBracketed when no sign change exists for eps in [1e-8, 1e8].
NormalizationResult normalize(const Profile& u, const Grid& grid);

}  // namespace scflow

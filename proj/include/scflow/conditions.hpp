#pragma once

// Solvability hypotheses for the prescribed scalar curvature problem:
// sign/mean conditions on f, the simple-bubble ratio bound, nondegeneracy of
// f, the Morse algebraic system, index counting, and the symmetry
// alternatives for a group with fixed-point set Sigma.

#include "scflow/sphere.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scflow {

enum class Verdict { kPass, kFail, kIndeterminate };
std::string_view to_string(Verdict v);

struct CriticalPoint {
  std::string label;
  double f_value = 0.0;
  int laplacian_sign = 0;  // sign of Laplacian f at the point
  int morse_index = 0;     // in [0, n]

  bool operator==(const CriticalPoint&) const = default;
};

struct MorseSystem {
  int n = 0;
  std::vector<int> m;  // m_0..m_n

  bool operator==(const MorseSystem&) const = default;
};

struct MorseSolution {
  /// Forward substitution produced k_i >= 0 for all i and k_n = 0.
  bool exists = false;
  /// k_0..k_n from forward substitution, whether or not admissible.
  std::vector<int> k;
  /// The admissible solution is identically zero.
  bool trivial = false;

  bool operator==(const MorseSolution&) const = default;
};

struct ConditionIResult {
  Verdict verdict = Verdict::kFail;
  double mean_f = 0.0;
  double min_f = 0.0;

  bool operator==(const ConditionIResult&) const = default;
};

struct SimpleBubbleResult {
  Verdict verdict = Verdict::kFail;
  double ratio = 0.0;  // max|f| / avg f
  double bound = 0.0;  // 2^(2/n)
  double sigma = 0.0;

  bool operator==(const SimpleBubbleResult&) const = default;
};

struct NondegeneracyResult {
  Verdict verdict = Verdict::kFail;
  double min_witness = 0.0;  // min of |grad f|^2 + (Laplacian f)^2
  double threshold = 0.0;

  bool operator==(const NondegeneracyResult&) const = default;
};

struct MorseConditionResult {
  Verdict verdict = Verdict::kFail;
  MorseSystem system;
  MorseSolution solution;

  bool operator==(const MorseConditionResult&) const = default;
};

struct IndexCountResult {
  Verdict verdict = Verdict::kFail;
  int sum = 0;

  bool operator==(const IndexCountResult&) const = default;
};

/// Fixed-point set of the symmetry group. The built-in axial rotation group
/// fixes exactly the two poles.
struct FixedPointSet {
  bool empty = false;
  std::string description = "poles";
};

struct SymmetryResult {
  Verdict verdict = Verdict::kFail;
  bool sigma_empty = false;
  double max_sigma_f = 0.0;
  double mean_f = 0.0;
  int maximizer = 0;  // +1 / -1 pole of the Sigma-maximizer
  double lap_f_maximizer = 0.0;
  /// Which alternative passed: "a", "b1", "b2", or empty.
  std::string alternative;

  bool operator==(const SymmetryResult&) const = default;
};

/// Pole critical points extracted from an axisymmetric f, plus a warning
/// when interior critical latitudes (critical circles) are present.
struct PoleExtraction {
  std::vector<CriticalPoint> points;
  std::vector<double> interior_critical_latitudes;
};

ConditionIResult check_condition_i(const Profile& f, const Grid& grid);

/// Throws kNonpositiveMean when avg f <= 0.
SimpleBubbleResult check_simple_bubble(const Profile& f, const Grid& grid);

NondegeneracyResult check_nondegeneracy(const Profile& f, const Grid& grid);

MorseSolution solve_morse_system(const MorseSystem& sys);

/// Exhaustive search over 0 <= k_i <= bound. Test oracle for solve_morse_system.
std::vector<std::vector<int>> enumerate_morse_solutions(const MorseSystem& sys, int bound);

/// m_i = #{f > 0, Laplacian f < 0, index = n - i}. Throws kIndexOutOfRange.
MorseSystem morse_counts(const std::vector<CriticalPoint>& crit, int n);

/// Condition (iv): passes unless a solution with some k_i > 0 exists. With
/// strict = true any solution at all fails it.
MorseConditionResult check_morse_condition(const std::vector<CriticalPoint>& crit, int n,
                                           bool strict = false);

/// Sum of (-1)^index over the filtered points; passes iff sum != (-1)^n.
IndexCountResult index_count(const std::vector<CriticalPoint>& crit, int n);

SymmetryResult check_symmetry_conditions(const Profile& f, const FixedPointSet& sigma,
                                         const Grid& grid);

PoleExtraction extract_pole_critical_points(const Profile& f, const Grid& grid);

/// Threshold quoted alongside condition (ii) for n = 3, 4 (not used by any check).
std::optional<double> delta_n(int n);

}  // namespace scflow

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spsa/combinatorics.hpp"
#include "spsa/core.hpp"

namespace spsa::oracles {

/// Largest dimension the brute-force enumerations accept.
inline constexpr Index kMaxEnumerationDimension = 20;

/// All d in {-1,1}^n with d^T g >= 0, stored as bit masks (bit i set means d_i = +1).
struct DescentSet {
  Index n = 0;
  std::vector<std::uint32_t> members;
  /// Component-wise sum of all members (exact integers).
  std::vector<std::int64_t> signed_sum;

  std::size_t cardinality() const noexcept { return members.size(); }
  Vector member(std::size_t idx) const;
};

/// Exhaustive enumeration. g must have nonzero entries of equal magnitude;
/// n > 20 raises CapacityError.
DescentSet enumerate_descent_set(const Vector& g_hat);

/// Closed-form cardinality: 2^(n-1) + C(n, n/2)/2 for even n, 2^(n-1) for odd n.
std::uint64_t descent_set_cardinality(Index n);

/// Exact common component of the mean of the uniform law on the descent set
/// for g = (1, ..., 1).
Rational rho_bruteforce(Index n);

struct BiasRow {
  double c = 0.0;
  /// Plain Monte Carlo: mean of (g_hat + xi_hat)/(1 + rho_k) - g(x).
  Vector raw_bias;
  Vector raw_se;
  double raw_norm = 0.0;
  double raw_norm_se = 0.0;
  /// Same draws with zero-mean control variates removed:
  /// (xi_hat - rho_k g_hat)/(1 + rho_k) and xi xi^T g - g.
  Vector cv_bias;
  Vector cv_se;
  double cv_norm = 0.0;
  double cv_norm_se = 0.0;
  /// False when the norm is within 4 standard errors of zero.
  bool raw_resolved = false;
  bool cv_resolved = false;
};

struct BiasScan {
  std::vector<BiasRow> rows;
  /// Least-squares slope of log(bias norm) against log(c), over rows with a
  /// positive norm; NaN with fewer than two such rows.
  double raw_slope = 0.0;
  double cv_slope = 0.0;
};

/// Monte Carlo estimate of the bias of the averaged SPSA1-A direction at x,
/// noiseless, for each c. Needs analytic gradients.
BiasScan bias_scan(std::shared_ptr<const Problem> problem, const Vector& x, const std::vector<double>& c_values,
                   std::uint64_t replications, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace spsa::oracles

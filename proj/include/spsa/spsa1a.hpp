#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spsa/combinatorics.hpp"
#include "spsa/core.hpp"
#include "spsa/estimators.hpp"

namespace spsa {

// ---------------------------------------------------------------------------
// The rho constant and its per-iteration scaling
// ---------------------------------------------------------------------------

/// Conditional-mean constant of the descent-side sampler:
///   odd n:  C(n-1, (n-1)/2) / 2^(n-1)
///   even n: C(n-1, n/2) / (2^(n-1) + C(n, n/2)/2)
struct RhoConstant {
  Index n = 0;
  double rho = 0.0;
  /// Exact value for n <= 64; beyond that rho is computed in the log domain.
  std::optional<Rational> exact;
};

RhoConstant rho_constant(Index n);

/// rho / ||g||_inf, or +infinity when g = 0 (the degenerate case, in which
/// both half-steps of an iteration are skipped).
double rho_k(const RhoConstant& rho, const Vector& g_hat);

inline bool is_degenerate_rho(double rho_k) noexcept { return rho_k == std::numeric_limits<double>::infinity(); }

/// Uniform draw from {d in {-1,1}^n : d^T g >= 0} by rejection from the
/// full cube. Ties (d^T g = 0) are accepted. When g has equal-magnitude
/// entries the test is done on signs so ties are detected exactly.
Perturbation sample_descent_side(const Vector& g_hat, RandomSource& rng);

// ---------------------------------------------------------------------------
// Iteration
// ---------------------------------------------------------------------------

enum class Algorithm { spsa, spsa1, spsa1a, fdsa, rdsa };

std::string_view to_string(Algorithm alg) noexcept;
Algorithm parse_algorithm(std::string_view text);

/// Measurements consumed by one iteration in dimension n.
std::uint64_t per_iteration_cost(Algorithm alg, Index n) noexcept;

struct IterateState {
  std::size_t k = 0;
  Vector x;
  std::uint64_t measurements = 0;
  RandomSource rng;
};

/// Everything one SPSA1-A iteration computed, for tests and diagnostics.
struct Spsa1aStepDetail {
  double a_k = 0.0;
  double c_k = 0.0;
  double rho_k = 0.0;
  GradientEstimate estimate;
  Vector x_half;
  /// Empty when the iteration was degenerate.
  Vector xi_hat;
};

/// One iteration: c_k, xi_k, two measurements, g_k, rho_k, a_k, then
///   x_{k+1/2} = x_k - a_k g_k / (1 + rho_k)
///   x_{k+1}   = x_{k+1/2} - a_k xi_hat_k / (1 + rho_k).
IterateState spsa1a_step(IterateState state, const GainSchedule& schedule, MeasuredObjective& obj,
                         const RhoConstant& rho, Spsa1aStepDetail* detail = nullptr);

struct TraceRecord {
  std::size_t iteration = 0;
  std::uint64_t measurements = 0;
  double error = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct IterateTrace {
  std::size_t replication = 0;
  std::vector<TraceRecord> records;
  Vector final_x;
  bool diverged = false;
  std::string failure;
};

/// Non-finite iterate or measurement; carries the trace up to the failure.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, IterateTrace partial)
      : std::runtime_error(what), trace_(std::move(partial)) {}
  const IterateTrace& trace() const noexcept { return trace_; }

 private:
  IterateTrace trace_;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::spsa1a;
  GainSchedule schedule;
  Vector x0;
  std::size_t max_iterations = 0;
  std::optional<double> error_threshold;
  /// Seed of the perturbation stream.
  std::uint64_t seed = 0;
  Spsa1Divisor spsa1_divisor = Spsa1Divisor::two_c;
  DirectionDistribution rdsa_direction = DirectionDistribution::bernoulli;

  void validate(Index n) const;
};

/// Runs any algorithm until max_iterations or e_k <= error_threshold.
/// Records (k, cumulative measurements, |f(x_k) - f*|) for k = 0, 1, ...;
/// the error uses true_value and is never counted.
IterateTrace run(const RunConfig& config, MeasuredObjective& obj);

/// Plain x_{k+1} = x_k - a_k g_k with the selected estimator (spsa, spsa1,
/// fdsa, rdsa). Gains always follow the standard schedule.
IterateTrace run_baseline(const RunConfig& config, MeasuredObjective& obj);

}  // namespace spsa

#pragma once

#include <cstdint>
#include <optional>

#include "spsa/core.hpp"

namespace spsa {

/// A direction in {-1, +1}^n.
class Perturbation {
 public:
  /// Throws ArgumentError unless every entry is exactly -1 or +1.
  explicit Perturbation(Vector signs);

  const Vector& vector() const noexcept { return xi_; }
  Index size() const noexcept { return xi_.size(); }
  double operator[](Index i) const { return xi_[i]; }

 private:
  Vector xi_;
};

/// Independent symmetric Bernoulli signs. n = 0 is an ArgumentError.
Perturbation sample_perturbation(Index n, RandomSource& rng);

struct GradientEstimate {
  Vector g_hat;
  /// Perturbation or direction the estimate was built from (empty for FDSA).
  Vector xi;
  std::uint64_t measurements_used = 0;
  std::optional<double> y_plus;
  std::optional<double> y_minus;
};

/// Divisor used by the one-measurement estimator.
enum class Spsa1Divisor { two_c, c };

Spsa1Divisor parse_spsa1_divisor(std::string_view text);
std::string_view to_string(Spsa1Divisor divisor) noexcept;

/// Two-sided simultaneous perturbation:
///   g = [y(x + c xi) - y(x - c xi)] / (2c) * xi^{-1}   (element-wise reciprocal).
GradientEstimate spsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                               const Perturbation& xi);

/// Same estimator for an arbitrary direction with nonzero entries.
GradientEstimate spsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                               const Vector& direction);

/// One-measurement estimator g = y(x + c xi) / (divisor) * xi^{-1}.
GradientEstimate spsa1_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                                const Perturbation& xi,
                                Spsa1Divisor divisor = Spsa1Divisor::two_c);

/// Coordinate-wise central differences, 2n measurements.
GradientEstimate fdsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k);

/// Random-direction estimate: the measured difference multiplies the direction.
GradientEstimate rdsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                               const Vector& direction);

enum class DirectionDistribution { bernoulli, gaussian };

DirectionDistribution parse_direction_distribution(std::string_view text);
std::string_view to_string(DirectionDistribution dist) noexcept;

/// Draws an RDSA direction.
Vector sample_direction(Index n, DirectionDistribution dist, RandomSource& rng);

}  // namespace spsa

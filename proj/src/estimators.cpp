#include "spsa/estimators.hpp"

#include <cmath>

#include <fmt/format.h>

namespace spsa {

namespace {

void require_positive_c(double c_k) {
  if (!(c_k > 0.0) || !std::isfinite(c_k)) {
    throw ArgumentError(fmt::format("perturbation size must be positive, got {}", c_k));
  }
}

void require_dim(const MeasuredObjective& obj, const Vector& v) {
  if (v.size() != obj.dimension()) {
    throw ArgumentError(
        fmt::format("dimension mismatch: expected {}, got {}", obj.dimension(), v.size()));
  }
}

// Every estimator checks that it consumed exactly what it reports.
void check_cost(const MeasuredObjective& obj, std::uint64_t before, std::uint64_t expected) {
  if (obj.measurements() - before != expected) {
    throw std::logic_error(fmt::format("measurement accounting broken: used {}, documented {}",
                                       obj.measurements() - before, expected));
  }
}

bool is_sign_vector(const Vector& v) { return (v.array().abs() == 1.0).all(); }

Vector reciprocal(const Vector& v) {
  if (is_sign_vector(v)) return v;
  return v.cwiseInverse();
}

}  // namespace

Perturbation::Perturbation(Vector signs) : xi_(std::move(signs)) {
  if (xi_.size() == 0) throw ArgumentError("perturbation must be nonempty");
  if (!((xi_.array() == 1.0) || (xi_.array() == -1.0)).all()) {
    throw ArgumentError("perturbation entries must be exactly -1 or +1");
  }
}

Perturbation sample_perturbation(Index n, RandomSource& rng) {
  if (n < 1) throw ArgumentError("perturbation dimension must be at least 1");
  Vector xi(n);
  rng.fill_signs(xi);
  return Perturbation(std::move(xi));
}

Spsa1Divisor parse_spsa1_divisor(std::string_view text) {
  if (text == "2c") return Spsa1Divisor::two_c;
  if (text == "c") return Spsa1Divisor::c;
  throw ConfigError(fmt::format("unknown spsa1 divisor '{}' (expected 2c or c)", text));
}

std::string_view to_string(Spsa1Divisor divisor) noexcept {
  return divisor == Spsa1Divisor::two_c ? "2c" : "c";
}

GradientEstimate spsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                               const Perturbation& xi) {
  return spsa_gradient(obj, x, c_k, xi.vector());
}

GradientEstimate spsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                               const Vector& direction) {
  require_positive_c(c_k);
  require_dim(obj, x);
  require_dim(obj, direction);
  if ((direction.array() == 0.0).any()) {
    throw ArgumentError("simultaneous perturbation needs nonzero direction entries");
  }
  const auto before = obj.measurements();
  const double y_plus = obj.measure(x + c_k * direction);
  const double y_minus = obj.measure(x - c_k * direction);
  check_cost(obj, before, 2);

  GradientEstimate est;
  est.g_hat = ((y_plus - y_minus) / (2.0 * c_k)) * reciprocal(direction);
  est.xi = direction;
  est.measurements_used = 2;
  est.y_plus = y_plus;
  est.y_minus = y_minus;
  return est;
}

GradientEstimate spsa1_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                                const Perturbation& xi, Spsa1Divisor divisor) {
  require_positive_c(c_k);
  require_dim(obj, x);
  require_dim(obj, xi.vector());
  const auto before = obj.measurements();
  const double y_plus = obj.measure(x + c_k * xi.vector());
  check_cost(obj, before, 1);

  const double denom = divisor == Spsa1Divisor::two_c ? 2.0 * c_k : c_k;
  GradientEstimate est;
  est.g_hat = (y_plus / denom) * xi.vector();
  est.xi = xi.vector();
  est.measurements_used = 1;
  est.y_plus = y_plus;
  return est;
}

GradientEstimate fdsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k) {
  require_positive_c(c_k);
  require_dim(obj, x);
  const Index n = x.size();
  const auto before = obj.measurements();
  GradientEstimate est;
  est.g_hat.resize(n);
  Vector probe = x;
  for (Index i = 0; i < n; ++i) {
    probe[i] = x[i] + c_k;
    const double y_plus = obj.measure(probe);
    probe[i] = x[i] - c_k;
    const double y_minus = obj.measure(probe);
    probe[i] = x[i];
    est.g_hat[i] = (y_plus - y_minus) / (2.0 * c_k);
  }
  est.measurements_used = static_cast<std::uint64_t>(2 * n);
  check_cost(obj, before, est.measurements_used);
  return est;
}

GradientEstimate rdsa_gradient(MeasuredObjective& obj, const Vector& x, double c_k,
                               const Vector& direction) {
  require_positive_c(c_k);
  require_dim(obj, x);
  require_dim(obj, direction);
  const auto before = obj.measurements();
  const double y_plus = obj.measure(x + c_k * direction);
  const double y_minus = obj.measure(x - c_k * direction);
  check_cost(obj, before, 2);

  GradientEstimate est;
  est.g_hat = ((y_plus - y_minus) / (2.0 * c_k)) * direction;
  est.xi = direction;
  est.measurements_used = 2;
  est.y_plus = y_plus;
  est.y_minus = y_minus;
  return est;
}

DirectionDistribution parse_direction_distribution(std::string_view text) {
  if (text == "bernoulli") return DirectionDistribution::bernoulli;
  if (text == "gaussian") return DirectionDistribution::gaussian;
  throw ConfigError(fmt::format("unknown direction distribution '{}'", text));
}

std::string_view to_string(DirectionDistribution dist) noexcept {
  return dist == DirectionDistribution::bernoulli ? "bernoulli" : "gaussian";
}

Vector sample_direction(Index n, DirectionDistribution dist, RandomSource& rng) {
  if (n < 1) throw ArgumentError("direction dimension must be at least 1");
  if (dist == DirectionDistribution::bernoulli) return sample_perturbation(n, rng).vector();
  Vector d(n);
  for (Index i = 0; i < n; ++i) d[i] = rng.normal();
  return d;
}

}  // namespace spsa

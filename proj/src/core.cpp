#include "spsa/core.hpp"

#include <cmath>

#include <fmt/format.h>

namespace spsa {

void check_point(const Vector& x, Index n) {
  if (x.size() != n) {
    throw ArgumentError(fmt::format("dimension mismatch: expected {}, got {}", n, x.size()));
  }
  if (!x.allFinite()) {
    throw ArgumentError("point has non-finite coordinates");
  }
}

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(mix64(master) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

void RandomSource::fill_signs(Eigen::Ref<Vector> out) {
  std::uint64_t bits = 0;
  int left = 0;
  for (Index i = 0; i < out.size(); ++i) {
    if (left == 0) {
      bits = engine_();
      left = 64;
    }
    out[i] = (bits & 1U) ? 1.0 : -1.0;
    bits >>= 1;
    --left;
  }
}

std::string_view to_string(GainMode mode) noexcept {
  return mode == GainMode::standard ? "standard" : "rho_adaptive";
}

GainMode parse_gain_mode(std::string_view text) {
  if (text == "standard") return GainMode::standard;
  if (text == "rho_adaptive") return GainMode::rho_adaptive;
  throw ConfigError(fmt::format("unknown gain mode '{}'", text));
}

void GainSchedule::validate() const {
  if (!(a > 0.0) || !(c > 0.0)) throw ConfigError("gain schedule needs a > 0 and c > 0");
  if (!(A >= 0.0)) throw ConfigError("gain schedule needs A >= 0");
  if (!(alpha > 0.0) || !(gamma > 0.0)) throw ConfigError("gain schedule needs alpha > 0 and gamma > 0");
}

std::vector<std::string> GainSchedule::assumption_warnings() const {
  std::vector<std::string> out;
  if (alpha > 1.0) {
    out.push_back(fmt::format("alpha = {} > 1: sum of a_k is finite", alpha));
  }
  if (2.0 * (alpha - gamma) <= 1.0) {
    out.push_back(fmt::format("2(alpha - gamma) = {} <= 1: sum of (a_k/c_k)^2 diverges",
                              2.0 * (alpha - gamma)));
  }
  return out;
}

double perturbation_gain(const GainSchedule& schedule, std::size_t k) {
  return schedule.c / std::pow(static_cast<double>(k) + 1.0, schedule.gamma);
}

Gains gains(const GainSchedule& schedule, std::size_t k, std::optional<double> rho_k) {
  const double base = schedule.a / std::pow(static_cast<double>(k) + 1.0 + schedule.A, schedule.alpha);
  double a_k = base;
  if (schedule.mode == GainMode::rho_adaptive) {
    if (!rho_k) throw ConfigError("rho-adaptive gain requested without rho_k");
    if (!(*rho_k >= 0.0)) throw ConfigError("rho_k must be nonnegative");
    a_k = base * (1.0 + *rho_k);
  }
  return {a_k, perturbation_gain(schedule, k)};
}

Vector Problem::gradient(const Vector&) const {
  throw ArgumentError(fmt::format("problem '{}' has no analytic gradient", id()));
}

Matrix Problem::hessian(const Vector&) const {
  throw ArgumentError(fmt::format("problem '{}' has no analytic Hessian", id()));
}

double Problem::third(const Vector&, Index, Index, Index) const {
  throw ArgumentError(fmt::format("problem '{}' has no analytic third derivatives", id()));
}

NoiseModel NoiseModel::gaussian(double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise sigma must be nonnegative");
  return {NoiseKind::gaussian, sigma};
}

MeasuredObjective::MeasuredObjective(std::shared_ptr<const Problem> problem, NoiseModel noise,
                                     std::uint64_t seed)
    : problem_(std::move(problem)), noise_(noise), rng_(seed) {
  if (!problem_) throw ArgumentError("objective needs a problem");
  if (!(noise_.sigma >= 0.0)) throw ArgumentError("noise sigma must be nonnegative");
}

double MeasuredObjective::measure(const Vector& x) {
  if (x.size() != problem_->dimension()) {
    throw ArgumentError(
        fmt::format("dimension mismatch: expected {}, got {}", problem_->dimension(), x.size()));
  }
  ++counter_;
  const double fx = problem_->value(x);
  if (!std::isfinite(fx)) {
    throw EvaluationError(fmt::format("non-finite value of '{}'", problem_->id()), x);
  }
  const double sigma = noise_.effective_sigma();
  // The noise stream is consumed only when noise is active, so sigma = 0
  // under the gaussian kind gives the same values as kind none.
  if (sigma > 0.0) return fx + sigma * rng_.normal();
  return fx;
}

double MeasuredObjective::true_value(const Vector& x) const {
  if (x.size() != problem_->dimension()) {
    throw ArgumentError(
        fmt::format("dimension mismatch: expected {}, got {}", problem_->dimension(), x.size()));
  }
  return problem_->value(x);
}

}  // namespace spsa

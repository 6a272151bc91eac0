#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spsa/errors.hpp"

namespace spsa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Throws ArgumentError unless x has n entries, all finite.
void check_point(const Vector& x, Index n);

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Child seed as a pure function of (master, a, b). Used for
/// (master seed, algorithm index, replication index) and for splitting one
/// replication seed into independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Seeded 64-bit stream. Sign draws take raw engine bits, so sequences are
/// identical across standard library implementations.
class RandomSource {
 public:
  using engine_type = std::mt19937_64;

  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Fills out with independent symmetric +-1 draws.
  void fill_signs(Eigen::Ref<Vector> out);

  /// Standard normal draw.
  double normal() { return normal_(engine_); }

  engine_type& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Gain sequences
// ---------------------------------------------------------------------------

enum class GainMode { standard, rho_adaptive };

std::string_view to_string(GainMode mode) noexcept;
GainMode parse_gain_mode(std::string_view text);

struct GainSchedule {
  double a = 0.0;
  double A = 0.0;
  double c = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  GainMode mode = GainMode::standard;

  /// Throws ConfigError unless a, c, alpha, gamma > 0 and A >= 0.
  void validate() const;

  /// Human-readable notes for every step-size condition the constants fail:
  /// sum a_k = inf needs alpha <= 1, sum (a_k/c_k)^2 < inf needs 2(alpha - gamma) > 1.
  std::vector<std::string> assumption_warnings() const;
};

struct Gains {
  double a_k;
  double c_k;
};

/// a_k = a/(k+1+A)^alpha, or a(1+rho_k)/(k+1+A)^alpha in rho-adaptive mode;
/// c_k = c/(k+1)^gamma. k is zero-based.
Gains gains(const GainSchedule& schedule, std::size_t k, std::optional<double> rho_k = std::nullopt);

/// c_k alone; never needs rho_k.
double perturbation_gain(const GainSchedule& schedule, std::size_t k);

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

/// A deterministic test function. Derivative accessors are optional and
/// throw ArgumentError when a problem does not provide them.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string id() const = 0;
  virtual Index dimension() const = 0;
  virtual double value(const Vector& x) const = 0;

  virtual bool has_derivatives() const { return false; }
  virtual Vector gradient(const Vector& x) const;
  virtual Matrix hessian(const Vector& x) const;
  /// Third partial derivative d^3 f / dx_i dx_j dx_l.
  virtual double third(const Vector& x, Index i, Index j, Index l) const;

  virtual std::optional<Vector> minimizer() const { return std::nullopt; }
  virtual double optimal_value() const { return 0.0; }
  virtual std::optional<Vector> default_start() const { return std::nullopt; }
};

enum class NoiseKind { none, gaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double sigma = 0.0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma);

  double effective_sigma() const noexcept { return kind == NoiseKind::none ? 0.0 : sigma; }
};

/// The only gateway through which algorithms observe function values.
/// Single-threaded; each replication owns its own instance.
class MeasuredObjective {
 public:
  MeasuredObjective(std::shared_ptr<const Problem> problem, NoiseModel noise, std::uint64_t seed);

  /// f(x) + eps, eps drawn independently per call; increments the counter by 1.
  double measure(const Vector& x);

  /// Noiseless f(x). Never counted.
  double true_value(const Vector& x) const;

  std::uint64_t measurements() const noexcept { return counter_; }
  Index dimension() const noexcept { return problem_->dimension(); }
  const Problem& problem() const noexcept { return *problem_; }
  std::shared_ptr<const Problem> problem_ptr() const noexcept { return problem_; }
  const NoiseModel& noise() const noexcept { return noise_; }

 private:
  std::shared_ptr<const Problem> problem_;
  NoiseModel noise_;
  RandomSource rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace spsa

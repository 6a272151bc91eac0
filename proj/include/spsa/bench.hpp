#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "spsa/core.hpp"

namespace spsa::bench {

/// f(x) = 100 (x2 - x1^2)^2 + (1 - x1)^2, minimizer (1, 1).
class Rosenbrock final : public Problem {
 public:
  std::string id() const override { return "rosenbrock"; }
  Index dimension() const override { return 2; }
  double value(const Vector& x) const override;
  bool has_derivatives() const override { return true; }
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  double third(const Vector& x, Index i, Index j, Index l) const override;
  std::optional<Vector> minimizer() const override { return Vector::Ones(2); }
  std::optional<Vector> default_start() const override { return Vector{{-1.2, 1.0}}; }
};

/// Sum of three squared residuals y_i - x1 (1 - x2^i), minimizer (3, 0.5).
class Beale final : public Problem {
 public:
  std::string id() const override { return "beale"; }
  Index dimension() const override { return 2; }
  double value(const Vector& x) const override;
  bool has_derivatives() const override { return true; }
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  double third(const Vector& x, Index i, Index j, Index l) const override;
  std::optional<Vector> minimizer() const override { return Vector{{3.0, 0.5}}; }
  std::optional<Vector> default_start() const override { return Vector{{1.0, 1.0}}; }
};

/// (x1 + 10 x2)^2 + 5 (x3 - x4)^2 + (x2 - 2 x3)^4 + 10 (x1 - x4)^4.
/// The Hessian at the minimizer (origin) has rank 2.
class PowellSingular final : public Problem {
 public:
  std::string id() const override { return "powell_singular"; }
  Index dimension() const override { return 4; }
  double value(const Vector& x) const override;
  bool has_derivatives() const override { return true; }
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  double third(const Vector& x, Index i, Index j, Index l) const override;
  std::optional<Vector> minimizer() const override { return Vector::Zero(4); }
  std::optional<Vector> default_start() const override { return Vector{{3.0, -1.0, 0.0, 1.0}}; }
};

/// x^T x + 0.1 sum x_i^3 + 0.01 sum x_i^4 in five dimensions. Separable, so
/// every mixed third derivative vanishes.
class Quartic final : public Problem {
 public:
  std::string id() const override { return "quartic"; }
  Index dimension() const override { return 5; }
  double value(const Vector& x) const override;
  bool has_derivatives() const override { return true; }
  Vector gradient(const Vector& x) const override;
  Matrix hessian(const Vector& x) const override;
  double third(const Vector& x, Index i, Index j, Index l) const override;
  std::optional<Vector> minimizer() const override { return Vector::Zero(5); }
  /// The four printed start coordinates padded with a zero.
  std::optional<Vector> default_start() const override { return Vector{{3.0, -1.0, 0.0, 1.0, 0.0}}; }
};

/// x^T x; the quadratic reference used for bias and normality checks.
class Sphere final : public Problem {
 public:
  explicit Sphere(Index n);
  std::string id() const override { return "sphere"; }
  Index dimension() const override { return n_; }
  double value(const Vector& x) const override { return x.squaredNorm(); }
  bool has_derivatives() const override { return true; }
  Vector gradient(const Vector& x) const override { return 2.0 * x; }
  Matrix hessian(const Vector&) const override { return 2.0 * Matrix::Identity(n_, n_); }
  double third(const Vector&, Index, Index, Index) const override { return 0.0; }
  std::optional<Vector> minimizer() const override { return Vector::Zero(n_); }
  std::optional<Vector> default_start() const override { return Vector::Ones(n_); }

 private:
  Index n_;
};

/// Wraps an arbitrary callable; no derivatives, no known optimum.
class FunctionProblem final : public Problem {
 public:
  FunctionProblem(std::string id, Index n, std::function<double(const Vector&)> f);
  std::string id() const override { return id_; }
  Index dimension() const override { return n_; }
  double value(const Vector& x) const override { return f_(x); }

 private:
  std::string id_;
  Index n_;
  std::function<double(const Vector&)> f_;
};

/// Stable problem ids accepted in config files.
std::vector<std::string> problem_ids();

/// Builds a problem by id. `dimension` is only consulted for "sphere"
/// (0 selects the default of 5).
std::shared_ptr<const Problem> make_problem(std::string_view id, Index dimension = 0);

/// Checked evaluation of a problem (throws ArgumentError on dimension mismatch).
double evaluate(const Problem& problem, const Vector& x);

// ---------------------------------------------------------------------------
// Parameter presets
// ---------------------------------------------------------------------------

struct ParameterPreset {
  std::string table_id;
  std::string problem;
  /// Algorithms the row was reported for.
  std::vector<std::string> algorithms;
  GainSchedule schedule;
};

std::vector<std::string> preset_ids();

/// Exact constants of one table row; throws ArgumentError on unknown id.
ParameterPreset preset(std::string_view table_id);

/// Maps a table group to a row for one algorithm: "T3" picks T3_spsa1a for
/// spsa1a and T3_spsa otherwise; full row ids pass through unchanged.
ParameterPreset preset_for(std::string_view table, std::string_view algorithm);

}  // namespace spsa::bench

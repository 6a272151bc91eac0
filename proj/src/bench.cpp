#include "spsa/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace spsa::bench {

namespace {

void require_dim(const Vector& x, Index n) {
  if (x.size() != n) {
    throw ArgumentError(fmt::format("dimension mismatch: expected {}, got {}", n, x.size()));
  }
}

// Sorted index triple so third-derivative lookups ignore argument order.
std::array<Index, 3> sorted(Index i, Index j, Index l) {
  std::array<Index, 3> t{i, j, l};
  std::sort(t.begin(), t.end());
  return t;
}

// Beale residual r_m(x) = y_m - x1 (1 - x2^m), m = 1..3, with its partial
// derivatives up to third order.
constexpr std::array<double, 3> kBealeTargets{1.5, 2.25, 2.625};

struct BealeResidual {
  double r;
  Eigen::Vector2d d1;
  Eigen::Matrix2d d2;
  double d122;  // r_{x1 x2 x2}
  double d222;
};

BealeResidual beale_residual(const Vector& x, int m) {
  const double x1 = x[0];
  const double x2 = x[1];
  const double md = m;
  const double p0 = std::pow(x2, m);
  const double p1 = m >= 1 ? std::pow(x2, m - 1) : 0.0;
  const double p2 = m >= 2 ? std::pow(x2, m - 2) : 0.0;
  const double p3 = m >= 3 ? std::pow(x2, m - 3) : 0.0;
  BealeResidual out;
  out.r = kBealeTargets[m - 1] - x1 * (1.0 - p0);
  out.d1 = Eigen::Vector2d(-(1.0 - p0), x1 * md * p1);
  out.d2 << 0.0, md * p1, md * p1, x1 * md * (md - 1.0) * p2;
  out.d122 = md * (md - 1.0) * p2;
  out.d222 = x1 * md * (md - 1.0) * (md - 2.0) * p3;
  return out;
}

double beale_r3(const BealeResidual& res, Index i, Index j, Index l) {
  const auto t = sorted(i, j, l);
  const int ones = static_cast<int>(std::count(t.begin(), t.end(), Index{1}));
  if (ones == 2) return res.d122;
  if (ones == 3) return res.d222;
  return 0.0;
}

// Powell singular pieces: f = p^2 + 5 q^2 + s^4 + 10 t^4 with linear forms
// p = u.x, q = v.x, s = w.x, t = z.x.
const Eigen::Vector4d kPowellU(1.0, 10.0, 0.0, 0.0);
const Eigen::Vector4d kPowellV(0.0, 0.0, 1.0, -1.0);
const Eigen::Vector4d kPowellW(0.0, 1.0, -2.0, 0.0);
const Eigen::Vector4d kPowellZ(1.0, 0.0, 0.0, -1.0);

}  // namespace

// ----- Rosenbrock ----------------------------------------------------------

double Rosenbrock::value(const Vector& x) const {
  require_dim(x, 2);
  const double u = x[1] - x[0] * x[0];
  const double v = 1.0 - x[0];
  return 100.0 * u * u + v * v;
}

Vector Rosenbrock::gradient(const Vector& x) const {
  require_dim(x, 2);
  const double u = x[1] - x[0] * x[0];
  return Vector{{-400.0 * x[0] * u - 2.0 * (1.0 - x[0]), 200.0 * u}};
}

Matrix Rosenbrock::hessian(const Vector& x) const {
  require_dim(x, 2);
  Matrix h(2, 2);
  h << 1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0, -400.0 * x[0], -400.0 * x[0], 200.0;
  return h;
}

double Rosenbrock::third(const Vector& x, Index i, Index j, Index l) const {
  require_dim(x, 2);
  const auto t = sorted(i, j, l);
  if (t == std::array<Index, 3>{0, 0, 0}) return 2400.0 * x[0];
  if (t == std::array<Index, 3>{0, 0, 1}) return -400.0;
  return 0.0;
}

// ----- Beale ---------------------------------------------------------------

double Beale::value(const Vector& x) const {
  require_dim(x, 2);
  double f = 0.0;
  for (int m = 1; m <= 3; ++m) {
    const double r = kBealeTargets[m - 1] - x[0] * (1.0 - std::pow(x[1], m));
    f += r * r;
  }
  return f;
}

Vector Beale::gradient(const Vector& x) const {
  require_dim(x, 2);
  Vector g = Vector::Zero(2);
  for (int m = 1; m <= 3; ++m) {
    const auto res = beale_residual(x, m);
    g += 2.0 * res.r * res.d1;
  }
  return g;
}

Matrix Beale::hessian(const Vector& x) const {
  require_dim(x, 2);
  Matrix h = Matrix::Zero(2, 2);
  for (int m = 1; m <= 3; ++m) {
    const auto res = beale_residual(x, m);
    h += 2.0 * (res.d1 * res.d1.transpose() + res.r * res.d2);
  }
  return h;
}

double Beale::third(const Vector& x, Index i, Index j, Index l) const {
  require_dim(x, 2);
  double t = 0.0;
  for (int m = 1; m <= 3; ++m) {
    const auto res = beale_residual(x, m);
    t += 2.0 * (res.d2(i, l) * res.d1[j] + res.d1[i] * res.d2(j, l) + res.d1[l] * res.d2(i, j) +
                res.r * beale_r3(res, i, j, l));
  }
  return t;
}

// ----- Powell singular -----------------------------------------------------

double PowellSingular::value(const Vector& x) const {
  require_dim(x, 4);
  const double p = x[0] + 10.0 * x[1];
  const double q = x[2] - x[3];
  const double s = x[1] - 2.0 * x[2];
  const double t = x[0] - x[3];
  return p * p + 5.0 * q * q + std::pow(s, 4) + 10.0 * std::pow(t, 4);
}

Vector PowellSingular::gradient(const Vector& x) const {
  require_dim(x, 4);
  const double p = kPowellU.dot(x);
  const double q = kPowellV.dot(x);
  const double s = kPowellW.dot(x);
  const double t = kPowellZ.dot(x);
  return 2.0 * p * kPowellU + 10.0 * q * kPowellV + 4.0 * s * s * s * kPowellW +
         40.0 * t * t * t * kPowellZ;
}

Matrix PowellSingular::hessian(const Vector& x) const {
  require_dim(x, 4);
  const double s = kPowellW.dot(x);
  const double t = kPowellZ.dot(x);
  return 2.0 * kPowellU * kPowellU.transpose() + 10.0 * kPowellV * kPowellV.transpose() +
         12.0 * s * s * kPowellW * kPowellW.transpose() + 120.0 * t * t * kPowellZ * kPowellZ.transpose();
}

double PowellSingular::third(const Vector& x, Index i, Index j, Index l) const {
  require_dim(x, 4);
  const double s = kPowellW.dot(x);
  const double t = kPowellZ.dot(x);
  return 24.0 * s * kPowellW[i] * kPowellW[j] * kPowellW[l] +
         240.0 * t * kPowellZ[i] * kPowellZ[j] * kPowellZ[l];
}

// ----- Quartic -------------------------------------------------------------

double Quartic::value(const Vector& x) const {
  require_dim(x, 5);
  const auto a = x.array();
  return (a.square() + 0.1 * a.cube() + 0.01 * a.square().square()).sum();
}

Vector Quartic::gradient(const Vector& x) const {
  require_dim(x, 5);
  const auto a = x.array();
  return (2.0 * a + 0.3 * a.square() + 0.04 * a.cube()).matrix();
}

Matrix Quartic::hessian(const Vector& x) const {
  require_dim(x, 5);
  const auto a = x.array();
  return (2.0 + 0.6 * a + 0.12 * a.square()).matrix().asDiagonal();
}

double Quartic::third(const Vector& x, Index i, Index j, Index l) const {
  require_dim(x, 5);
  if (i != j || j != l) return 0.0;
  return 0.6 + 0.24 * x[i];
}

// ----- Sphere / FunctionProblem --------------------------------------------

Sphere::Sphere(Index n) : n_(n) {
  if (n < 1) throw ArgumentError("sphere dimension must be positive");
}

FunctionProblem::FunctionProblem(std::string id, Index n, std::function<double(const Vector&)> f)
    : id_(std::move(id)), n_(n), f_(std::move(f)) {
  if (n < 1) throw ArgumentError("problem dimension must be positive");
  if (!f_) throw ArgumentError("function problem needs a callable");
}

// ----- registry ------------------------------------------------------------

std::vector<std::string> problem_ids() {
  return {"rosenbrock", "beale", "powell_singular", "quartic", "sphere"};
}

std::shared_ptr<const Problem> make_problem(std::string_view id, Index dimension) {
  if (id == "rosenbrock") return std::make_shared<Rosenbrock>();
  if (id == "beale") return std::make_shared<Beale>();
  if (id == "powell_singular") return std::make_shared<PowellSingular>();
  if (id == "quartic") return std::make_shared<Quartic>();
  if (id == "sphere") return std::make_shared<Sphere>(dimension > 0 ? dimension : 5);
  throw ArgumentError(fmt::format("unknown problem id '{}'", id));
}

double evaluate(const Problem& problem, const Vector& x) {
  require_dim(x, problem.dimension());
  return problem.value(x);
}

std::vector<std::string> preset_ids() { return {"T1", "T2", "T3_spsa", "T3_spsa1a", "T4", "T5"}; }

ParameterPreset preset(std::string_view table_id) {
  auto row = [](std::string id, std::string problem, std::vector<std::string> algs, double a,
                double A, double c, double alpha, double gamma) {
    return ParameterPreset{std::move(id), std::move(problem), std::move(algs),
                           GainSchedule{a, A, c, alpha, gamma, GainMode::standard}};
  };
  if (table_id == "T1") return row("T1", "rosenbrock", {"spsa", "spsa1a"}, 0.1, 2200, 0.1, 0.602, 0.101);
  if (table_id == "T2") return row("T2", "beale", {"spsa", "spsa1a"}, 1, 30, 0.1, 1, 0.16667);
  if (table_id == "T3_spsa") return row("T3_spsa", "powell_singular", {"spsa"}, 0.08, 1000, 0.1, 0.602, 0.101);
  if (table_id == "T3_spsa1a")
    return row("T3_spsa1a", "powell_singular", {"spsa1a"}, 0.02, 100, 0.1, 0.602, 0.101);
  if (table_id == "T4") return row("T4", "quartic", {"spsa", "spsa1", "spsa1a"}, 0.17, 20, 0.06, 1, 0.16667);
  if (table_id == "T5") return row("T5", "quartic", {"spsa", "spsa1", "spsa1a"}, 0.27, 100, 0.06, 1, 0.16667);
  throw ArgumentError(fmt::format("unknown preset id '{}'", table_id));
}

ParameterPreset preset_for(std::string_view table, std::string_view algorithm) {
  if (table == "T3") return preset(algorithm == "spsa1a" ? "T3_spsa1a" : "T3_spsa");
  return preset(table);
}

}  // namespace spsa::bench

#include "spsa/oracles.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "spsa/estimators.hpp"
#include "spsa/spsa1a.hpp"

namespace spsa::oracles {

Vector DescentSet::member(std::size_t idx) const {
  Vector d(n);
  const auto mask = members.at(idx);
  for (Index i = 0; i < n; ++i) d[i] = (mask >> i) & 1U ? 1.0 : -1.0;
  return d;
}

DescentSet enumerate_descent_set(const Vector& g_hat) {
  const Index n = g_hat.size();
  if (n < 1) throw ArgumentError("enumeration needs n >= 1");
  if (n > kMaxEnumerationDimension) {
    throw CapacityError(fmt::format("enumeration limited to n <= {}, got {}", kMaxEnumerationDimension, n));
  }
  const double mag = std::abs(g_hat[0]);
  if (mag == 0.0 || !(g_hat.array().abs() == mag).all()) {
    throw ArgumentError("enumeration needs nonzero entries of equal magnitude");
  }
  std::vector<int> sign(n);
  for (Index i = 0; i < n; ++i) sign[i] = g_hat[i] > 0 ? 1 : -1;

  DescentSet set;
  set.n = n;
  set.signed_sum.assign(n, 0);
  const std::uint32_t total = std::uint32_t{1} << n;
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    int score = 0;
    for (Index i = 0; i < n; ++i) score += ((mask >> i) & 1U ? 1 : -1) * sign[i];
    if (score < 0) continue;
    set.members.push_back(mask);
    for (Index i = 0; i < n; ++i) set.signed_sum[i] += (mask >> i) & 1U ? 1 : -1;
  }
  return set;
}

std::uint64_t descent_set_cardinality(Index n) {
  if (n < 1) throw ArgumentError("cardinality needs n >= 1");
  const auto un = static_cast<unsigned>(n);
  const std::uint64_t half_cube = std::uint64_t{1} << (un - 1);
  if (un % 2 == 1) return half_cube;
  return half_cube + binomial(un, un / 2) / 2;
}

Rational rho_bruteforce(Index n) {
  const DescentSet set = enumerate_descent_set(Vector::Ones(n));
  // With g = (1,...,1) every component of the sum is the same positive count.
  return Rational::make(static_cast<std::uint64_t>(set.signed_sum.front()), set.cardinality());
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double md = static_cast<double>(m);
  return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

namespace {

// Streaming per-component mean and variance.
struct Moments {
  explicit Moments(Index n) : sum(Vector::Zero(n)), sumsq(Vector::Zero(n)) {}
  void add(const Vector& v) {
    sum += v;
    sumsq += v.cwiseAbs2();
    ++count;
  }
  Vector mean() const { return sum / static_cast<double>(count); }
  Vector standard_error() const {
    const double r = static_cast<double>(count);
    const Vector m = mean();
    const Vector var = ((sumsq / r - m.cwiseAbs2()) * (r / (r - 1.0))).cwiseMax(0.0);
    return (var / r).cwiseSqrt();
  }
  Vector sum;
  Vector sumsq;
  std::uint64_t count = 0;
};

// Delta-method standard error of ||m||.
double norm_se(const Vector& m, const Vector& se) {
  const double norm = m.norm();
  if (norm == 0.0) return se.norm();
  return std::sqrt((m.cwiseAbs2().cwiseProduct(se.cwiseAbs2())).sum()) / norm;
}

}  // namespace

BiasScan bias_scan(std::shared_ptr<const Problem> problem, const Vector& x,
                   const std::vector<double>& c_values, std::uint64_t replications, std::uint64_t seed) {
  if (!problem) throw ArgumentError("bias scan needs a problem");
  if (!problem->has_derivatives()) {
    throw ArgumentError(fmt::format("bias scan needs an analytic gradient; '{}' has none", problem->id()));
  }
  check_point(x, problem->dimension());
  if (replications < 2) throw ArgumentError("bias scan needs at least two replications");
  const Index n = x.size();
  const Vector g = problem->gradient(x);
  const RhoConstant rho = rho_constant(n);

  BiasScan scan;
  std::vector<double> cs, raw_norms, cv_norms;
  for (std::size_t ci = 0; ci < c_values.size(); ++ci) {
    const double c = c_values[ci];
    if (!(c > 0.0)) throw ArgumentError("bias scan c values must be positive");
    MeasuredObjective obj(problem, NoiseModel::none(), derive_seed(seed, ci, 1));
    RandomSource rng(derive_seed(seed, ci, 2));
    Moments raw(n), cv(n);
    Vector v(n), control(n);
    for (std::uint64_t r = 0; r < replications; ++r) {
      const Perturbation xi = sample_perturbation(n, rng);
      const GradientEstimate est = spsa_gradient(obj, x, c, xi);
      const double rk = rho_k(rho, est.g_hat);
      if (is_degenerate_rho(rk)) {
        v.setZero();
        control = -xi.vector() * xi.vector().dot(g) + g;
      } else {
        const Vector xi_hat = sample_descent_side(est.g_hat, rng).vector();
        v = (est.g_hat + xi_hat) / (1.0 + rk);
        control = (xi_hat - rk * est.g_hat) / (1.0 + rk) + xi.vector() * xi.vector().dot(g) - g;
      }
      raw.add(v - g);
      cv.add(v - g - control);
    }
    BiasRow row;
    row.c = c;
    row.raw_bias = raw.mean();
    row.raw_se = raw.standard_error();
    row.raw_norm = row.raw_bias.norm();
    row.raw_norm_se = norm_se(row.raw_bias, row.raw_se);
    row.cv_bias = cv.mean();
    row.cv_se = cv.standard_error();
    row.cv_norm = row.cv_bias.norm();
    row.cv_norm_se = norm_se(row.cv_bias, row.cv_se);
    row.raw_resolved = row.raw_norm > 4.0 * row.raw_norm_se;
    row.cv_resolved = row.cv_norm > 4.0 * row.cv_norm_se;
    cs.push_back(c);
    raw_norms.push_back(row.raw_norm);
    cv_norms.push_back(row.cv_norm);
    scan.rows.push_back(std::move(row));
  }
  scan.raw_slope = log_log_slope(cs, raw_norms);
  scan.cv_slope = log_log_slope(cs, cv_norms);
  return scan;
}

}  // namespace spsa::oracles

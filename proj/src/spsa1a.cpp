#include "spsa/spsa1a.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace spsa {

RhoConstant rho_constant(Index n) {
  if (n < 1) throw ArgumentError("rho constant needs n >= 1");
  RhoConstant out;
  out.n = n;
  const auto un = static_cast<unsigned>(n);
  if (un <= kExactCombinatoricsLimit) {
    const std::uint64_t pow2 = std::uint64_t{1} << (un - 1);
    Rational r;
    if (un % 2 == 1) {
      r = Rational::make(binomial(un - 1, (un - 1) / 2), pow2);
    } else {
      r = Rational::make(binomial(un - 1, un / 2), pow2 + binomial(un, un / 2) / 2);
    }
    out.exact = r;
    out.rho = r.to_double();
    return out;
  }
  const double ln2 = std::numbers::ln2;
  if (un % 2 == 1) {
    out.rho = std::exp(log_binomial(un - 1, (un - 1) / 2) - (un - 1) * ln2);
  } else {
    const double head = std::exp(log_binomial(un - 1, un / 2) - (un - 1) * ln2);
    const double central = std::exp(log_binomial(un, un / 2) - un * ln2);
    out.rho = head / (1.0 + central);
  }
  return out;
}

double rho_k(const RhoConstant& rho, const Vector& g_hat) {
  if (g_hat.size() != rho.n) {
    throw ArgumentError(fmt::format("gradient has {} entries, rho built for n = {}", g_hat.size(), rho.n));
  }
  const double norm = g_hat.lpNorm<Eigen::Infinity>();
  if (norm == 0.0) return std::numeric_limits<double>::infinity();
  return rho.rho / norm;
}

Perturbation sample_descent_side(const Vector& g_hat, RandomSource& rng) {
  const Index n = g_hat.size();
  if (n < 1) throw ArgumentError("descent-side sampling needs n >= 1");
  const double mag = std::abs(g_hat[0]);
  const bool equal_magnitude = (g_hat.array().abs() == mag).all();
  const Vector signs = g_hat.array().sign().matrix();

  Vector d(n);
  for (;;) {
    rng.fill_signs(d);
    // Sums of +-1 are exact in double, so the sign test has no rounding.
    const double score = equal_magnitude ? d.dot(signs) : d.dot(g_hat);
    if (score >= 0.0) return Perturbation(d);
  }
}

std::string_view to_string(Algorithm alg) noexcept {
  switch (alg) {
    case Algorithm::spsa: return "spsa";
    case Algorithm::spsa1: return "spsa1";
    case Algorithm::spsa1a: return "spsa1a";
    case Algorithm::fdsa: return "fdsa";
    case Algorithm::rdsa: return "rdsa";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view text) {
  for (auto alg : {Algorithm::spsa, Algorithm::spsa1, Algorithm::spsa1a, Algorithm::fdsa, Algorithm::rdsa}) {
    if (text == to_string(alg)) return alg;
  }
  throw ConfigError(fmt::format("unknown algorithm '{}'", text));
}

std::uint64_t per_iteration_cost(Algorithm alg, Index n) noexcept {
  switch (alg) {
    case Algorithm::spsa1: return 1;
    case Algorithm::fdsa: return static_cast<std::uint64_t>(2 * n);
    case Algorithm::spsa:
    case Algorithm::spsa1a:
    case Algorithm::rdsa: return 2;
  }
  return 0;
}

IterateState spsa1a_step(IterateState state, const GainSchedule& schedule, MeasuredObjective& obj,
                         const RhoConstant& rho, Spsa1aStepDetail* detail) {
  const Index n = state.x.size();
  const double c_k = perturbation_gain(schedule, state.k);
  const Perturbation xi = sample_perturbation(n, state.rng);
  GradientEstimate est = spsa_gradient(obj, state.x, c_k, xi);
  const double r_k = rho_k(rho, est.g_hat);
  state.measurements += est.measurements_used;

  double a_k = 0.0;
  Vector x_half = state.x;
  Vector xi_hat;
  if (!is_degenerate_rho(r_k)) {
    a_k = gains(schedule, state.k, r_k).a_k;
    const double scale = a_k / (1.0 + r_k);
    x_half = state.x - scale * est.g_hat;
    xi_hat = sample_descent_side(est.g_hat, state.rng).vector();
    state.x = x_half - scale * xi_hat;
  }
  if (detail) {
    detail->a_k = a_k;
    detail->c_k = c_k;
    detail->rho_k = r_k;
    detail->estimate = std::move(est);
    detail->x_half = std::move(x_half);
    detail->xi_hat = std::move(xi_hat);
  }
  ++state.k;
  return state;
}

void RunConfig::validate(Index n) const {
  schedule.validate();
  if (x0.size() != n) {
    throw ConfigError(fmt::format("x0 has {} entries, problem dimension is {}", x0.size(), n));
  }
  if (!x0.allFinite()) throw ConfigError("x0 has non-finite entries");
  if (max_iterations == 0 && !error_threshold) {
    throw ConfigError("run needs max_iterations > 0 or an error threshold");
  }
  if (error_threshold && !(*error_threshold >= 0.0)) throw ConfigError("error threshold must be >= 0");
}

namespace {

double error_at(const MeasuredObjective& obj, const Vector& x) {
  return std::abs(obj.true_value(x) - obj.problem().optimal_value());
}

// Shared loop: `advance` performs one iteration on the state.
template <typename Advance>
IterateTrace drive(const RunConfig& config, MeasuredObjective& obj, Advance&& advance) {
  config.validate(obj.dimension());
  IterateState state{0, config.x0, 0, RandomSource(config.seed)};
  IterateTrace trace;
  auto reached = [&](double e) { return config.error_threshold && e <= *config.error_threshold; };

  double e = error_at(obj, state.x);
  trace.records.push_back({0, 0, e});
  trace.final_x = state.x;
  if (reached(e)) return trace;

  while (state.k < config.max_iterations) {
    const std::size_t k = state.k;
    try {
      state = advance(std::move(state));
    } catch (const EvaluationError& err) {
      trace.diverged = true;
      trace.failure = err.what();
      throw DivergenceError(fmt::format("iteration {}: {}", k, err.what()), std::move(trace));
    }
    if (!state.x.allFinite()) {
      trace.diverged = true;
      trace.failure = "non-finite iterate";
      throw DivergenceError(fmt::format("iteration {}: non-finite iterate", state.k), std::move(trace));
    }
    e = error_at(obj, state.x);
    trace.records.push_back({state.k, state.measurements, e});
    trace.final_x = state.x;
    if (!std::isfinite(e)) {
      trace.diverged = true;
      trace.failure = "non-finite error";
      throw DivergenceError(fmt::format("iteration {}: non-finite error", state.k), std::move(trace));
    }
    if (reached(e)) break;
  }
  return trace;
}

}  // namespace

IterateTrace run_baseline(const RunConfig& config, MeasuredObjective& obj) {
  if (config.algorithm == Algorithm::spsa1a) {
    throw ConfigError("run_baseline does not run spsa1a");
  }
  GainSchedule schedule = config.schedule;
  schedule.mode = GainMode::standard;
  const Index n = obj.dimension();
  return drive(config, obj, [&](IterateState s) {
    const Gains g = gains(schedule, s.k);
    GradientEstimate est;
    switch (config.algorithm) {
      case Algorithm::spsa:
        est = spsa_gradient(obj, s.x, g.c_k, sample_perturbation(n, s.rng));
        break;
      case Algorithm::spsa1:
        est = spsa1_gradient(obj, s.x, g.c_k, sample_perturbation(n, s.rng), config.spsa1_divisor);
        break;
      case Algorithm::fdsa:
        est = fdsa_gradient(obj, s.x, g.c_k);
        break;
      case Algorithm::rdsa:
        est = rdsa_gradient(obj, s.x, g.c_k, sample_direction(n, config.rdsa_direction, s.rng));
        break;
      case Algorithm::spsa1a:
        break;
    }
    s.x -= g.a_k * est.g_hat;
    s.measurements += est.measurements_used;
    ++s.k;
    return s;
  });
}

IterateTrace run(const RunConfig& config, MeasuredObjective& obj) {
  if (config.algorithm != Algorithm::spsa1a) return run_baseline(config, obj);
  const RhoConstant rho = rho_constant(obj.dimension());
  return drive(config, obj, [&](IterateState s) {
    return spsa1a_step(std::move(s), config.schedule, obj, rho);
  });
}

}  // namespace spsa

#include <doctest.h>

#include <cmath>
#include <map>

#include "spsa/bench.hpp"
#include "spsa/oracles.hpp"
#include "spsa/spsa1a.hpp"

using namespace spsa;

namespace {

std::shared_ptr<const Problem> fn(Index n, std::function<double(const Vector&)> f) {
  return std::make_shared<bench::FunctionProblem>("fn", n, std::move(f));
}

std::uint32_t mask_of(const Vector& d) {
  std::uint32_t m = 0;
  for (Index i = 0; i < d.size(); ++i)
    if (d[i] > 0) m |= 1U << i;
  return m;
}

// Upper 1e-3 quantiles of chi-square (scipy.stats.chi2.ppf(0.999, df)).
double chi2_critical(std::size_t df) {
  static const std::map<std::size_t, double> table{
      {1, 10.827566170662733}, {2, 13.815510557964274}, {3, 16.26623619623813}, {10, 29.58829844507442}};
  return table.at(df);
}

}  // namespace

TEST_CASE("rho constant closed form") {
  CHECK(rho_constant(1).rho == 1.0);
  CHECK(*rho_constant(2).exact == Rational{1, 3});
  CHECK(*rho_constant(3).exact == Rational{1, 2});
  CHECK(*rho_constant(4).exact == Rational{3, 11});
  CHECK(*rho_constant(5).exact == Rational{3, 8});
  CHECK_THROWS_AS(rho_constant(0), ArgumentError);
}

TEST_CASE("rho constant decreases toward zero") {
  double prev = rho_constant(1).rho;
  for (Index n = 2; n <= 400; ++n) {
    const double r = rho_constant(n).rho;
    REQUIRE(r > 0.0);
    REQUIRE(r <= 1.0);
    // Odd n and the following even n are not ordered pairwise (rho(3) = 1/2 > rho(2) = 1/3),
    // but each parity class decreases and the whole sequence tends to zero.
    if (n >= 3) REQUIRE(r < rho_constant(n - 2).rho);
    prev = r;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("log-domain rho continues the exact branch") {
  // n = 63/64 exact, 65/66 log domain; rho ~ sqrt(2/(pi n)) asymptotically.
  for (Index n : {62, 63, 64}) {
    REQUIRE(rho_constant(n).exact);
  }
  CHECK(!rho_constant(65).exact);
  CHECK(rho_constant(65).rho < rho_constant(63).rho);
  CHECK(rho_constant(66).rho < rho_constant(64).rho);
  CHECK(rho_constant(65).rho == doctest::Approx(std::sqrt(2.0 / (M_PI * 64))).epsilon(0.01));
  CHECK(rho_constant(1001).rho == doctest::Approx(std::sqrt(2.0 / (M_PI * 1000))).epsilon(0.001));
}

TEST_CASE("rho_k") {
  const auto rho2 = rho_constant(2);
  CHECK(rho_k(rho2, Vector{{2.0, -2.0}}) == doctest::Approx(1.0 / 6.0));
  CHECK(rho_k(rho2, Vector{{1.0, -0.5}}) == rho2.rho);
  CHECK(is_degenerate_rho(rho_k(rho2, Vector::Zero(2))));
  CHECK_THROWS_AS(rho_k(rho2, Vector::Zero(3)), ArgumentError);
}

TEST_CASE("descent-side sampling on g = (2, -2)") {
  RandomSource rng(31);
  const Vector g{{2.0, -2.0}};
  std::map<std::uint32_t, int> counts;
  const int R = 1000000;
  Vector sum = Vector::Zero(2);
  for (int i = 0; i < R; ++i) {
    const Vector d = sample_descent_side(g, rng).vector();
    REQUIRE(d.dot(g) >= 0.0);
    ++counts[mask_of(d)];
    sum += d;
  }
  // (-1, 1) is mask 0b10 and is the only excluded vector.
  CHECK(counts.size() == 3);
  CHECK(counts.count(0b10) == 0);
  double chi2 = 0.0;
  for (auto [mask, cnt] : counts) {
    const double e = R / 3.0;
    chi2 += (cnt - e) * (cnt - e) / e;
  }
  CHECK(chi2 < chi2_critical(2));

  // Mean (1/3)(1, -1); per-component variance 1 - 1/9.
  const Vector mean = sum / R;
  const double se = std::sqrt((1.0 - 1.0 / 9.0) / R);
  CHECK(std::abs(mean[0] - 1.0 / 3.0) < 3 * se);
  CHECK(std::abs(mean[1] + 1.0 / 3.0) < 3 * se);
}

TEST_CASE("descent-side sampling is uniform on the enumerated set for n <= 4") {
  RandomSource rng(8);
  for (const Vector& g : {Vector{{5.0}}, Vector{{1.0, -1.0, 1.0}}, Vector{{0.5, 0.5, -0.5, 0.5}}}) {
    CAPTURE(g.size());
    const auto set = oracles::enumerate_descent_set(g);
    std::map<std::uint32_t, int> counts;
    for (auto m : set.members) counts[m] = 0;
    const int R = 1000000;
    for (int i = 0; i < R; ++i) {
      const auto m = mask_of(sample_descent_side(g, rng).vector());
      REQUIRE(counts.count(m) == 1);
      ++counts[m];
    }
    if (set.cardinality() == 1) continue;
    double chi2 = 0.0;
    const double e = double(R) / set.cardinality();
    for (auto [mask, cnt] : counts) chi2 += (cnt - e) * (cnt - e) / e;
    CHECK(chi2 < chi2_critical(set.cardinality() - 1));
  }
}

TEST_CASE("zero gradient accepts the whole cube") {
  RandomSource rng(3);
  std::map<std::uint32_t, int> counts;
  for (int i = 0; i < 80000; ++i) ++counts[mask_of(sample_descent_side(Vector::Zero(3), rng).vector())];
  CHECK(counts.size() == 8);
  for (auto [m, c] : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("ties on even n are accepted") {
  // g with equal magnitudes that are not exactly representable sums.
  RandomSource rng(12);
  const double m = 0.1 + 0.2;
  const Vector g{{m, -m, m, -m}};
  int ties = 0;
  for (int i = 0; i < 20000; ++i) {
    const Vector d = sample_descent_side(g, rng).vector();
    REQUIRE(d.dot(g.array().sign().matrix()) >= 0);
    ties += d.dot(g.array().sign().matrix()) == 0;
  }
  // 6 of the 11 members are ties.
  CHECK(ties / 20000.0 == doctest::Approx(6.0 / 11.0).epsilon(0.03));
}

TEST_CASE("spsa1a step hand arithmetic") {
  // f = x1 - x2 makes g either (2, -2) (xi = +-(1, -1)) or 0 (xi = +-(1, 1)).
  auto obj_problem = fn(2, [](const Vector& x) { return x[0] - x[1]; });
  const GainSchedule s{0.1, 0.0, 0.5, 1.0, 0.101, GainMode::standard};
  const auto rho = rho_constant(2);
  bool seen_regular = false, seen_degenerate = false;
  for (std::uint64_t seed = 0; seed < 64 && !(seen_regular && seen_degenerate); ++seed) {
    MeasuredObjective obj(obj_problem, NoiseModel::none(), 0);
    IterateState st{0, Vector::Zero(2), 0, RandomSource(seed)};
    Spsa1aStepDetail d;
    const auto next = spsa1a_step(st, s, obj, rho, &d);
    CHECK(next.k == 1);
    CHECK(next.measurements == 2);
    CHECK(obj.measurements() == 2);
    if (is_degenerate_rho(d.rho_k)) {
      seen_degenerate = true;
      CHECK(next.x == Vector::Zero(2));
      CHECK(d.xi_hat.size() == 0);
    } else {
      seen_regular = true;
      CHECK(d.estimate.g_hat == Vector{{2.0, -2.0}});
      CHECK(d.rho_k == doctest::Approx(1.0 / 6.0));
      CHECK(d.a_k == 0.1);
      CHECK(d.x_half[0] == doctest::Approx(-6.0 / 35.0).epsilon(1e-14));
      CHECK(d.x_half[1] == doctest::Approx(6.0 / 35.0).epsilon(1e-14));
      CHECK(d.xi_hat.dot(d.estimate.g_hat) >= 0.0);
    }
  }
  CHECK(seen_regular);
  CHECK(seen_degenerate);
}

TEST_CASE("constant objective gives zero steps") {
  MeasuredObjective obj(fn(3, [](const Vector&) { return 1.0; }), NoiseModel::none(), 0);
  const GainSchedule s{0.3, 0.0, 0.1, 0.602, 0.101, GainMode::rho_adaptive};
  IterateState st{0, Vector{{1.0, 2.0, 3.0}}, 0, RandomSource(4)};
  for (int i = 0; i < 5; ++i) st = spsa1a_step(std::move(st), s, obj, rho_constant(3));
  CHECK(st.x == Vector{{1.0, 2.0, 3.0}});
  CHECK(st.k == 5);
  CHECK(st.measurements == 10);
}

TEST_CASE("half-step identities") {
  MeasuredObjective obj(bench::make_problem("powell_singular"), NoiseModel::gaussian(0.01), 17);
  const auto rho = rho_constant(4);
  for (GainMode mode : {GainMode::standard, GainMode::rho_adaptive}) {
    const GainSchedule s{0.02, 100.0, 0.1, 0.602, 0.101, mode};
    IterateState st{0, Vector{{3.0, -1.0, 0.0, 1.0}}, 0, RandomSource(99)};
    for (int i = 0; i < 500; ++i) {
      const Vector x_prev = st.x;
      const std::size_t k = st.k;
      Spsa1aStepDetail d;
      st = spsa1a_step(std::move(st), s, obj, rho, &d);
      if (is_degenerate_rho(d.rho_k)) continue;
      REQUIRE(d.xi_hat.dot(d.estimate.g_hat) >= 0.0);
      const Vector full = -d.a_k * (d.estimate.g_hat + d.xi_hat) / (1.0 + d.rho_k);
      REQUIRE((st.x - x_prev - full).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, x_prev.cwiseAbs().maxCoeff()));
      if (mode == GainMode::rho_adaptive) {
        const double base = s.a / std::pow(k + 1.0 + s.A, s.alpha);
        REQUIRE((d.x_half - x_prev).norm() ==
                doctest::Approx(base * d.estimate.g_hat.norm()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("run terminates and records") {
  const auto quartic = bench::make_problem("quartic");
  RunConfig cfg;
  cfg.schedule = bench::preset("T4").schedule;
  cfg.schedule.mode = GainMode::rho_adaptive;
  cfg.seed = 5;

  SUBCASE("already optimal") {
    cfg.x0 = Vector::Zero(5);
    cfg.max_iterations = 100;
    cfg.error_threshold = 0.0;
    MeasuredObjective obj(quartic, NoiseModel::gaussian(0.01), 1);
    const auto trace = run(cfg, obj);
    REQUIRE(trace.records.size() == 1);
    CHECK(trace.records[0].iteration == 0);
    CHECK(trace.records[0].measurements == 0);
    CHECK(obj.measurements() == 0);
  }
  SUBCASE("length bound and accounting for every algorithm") {
    cfg.x0 = *quartic->default_start();
    cfg.max_iterations = 300;
    for (auto alg : {Algorithm::spsa, Algorithm::spsa1, Algorithm::spsa1a, Algorithm::fdsa, Algorithm::rdsa}) {
      CAPTURE(to_string(alg));
      cfg.algorithm = alg;
      MeasuredObjective obj(quartic, NoiseModel::gaussian(0.01), 1);
      // The one-measurement estimate does not cancel f(x) and may blow up here; the
      // partial trace must still be consistent.
      IterateTrace trace;
      try {
        trace = run(cfg, obj);
      } catch (const DivergenceError& e) {
        CHECK(alg == Algorithm::spsa1);
        trace = e.trace();
      }
      CHECK(trace.records.size() <= cfg.max_iterations + 1);
      for (std::size_t i = 0; i < trace.records.size(); ++i) {
        REQUIRE(trace.records[i].iteration == i);
        REQUIRE(trace.records[i].measurements == i * per_iteration_cost(alg, 5));
        REQUIRE(trace.records[i].error >= 0.0);
      }
      if (trace.diverged)
        CHECK(obj.measurements() >= trace.records.back().measurements);
      else
        CHECK(obj.measurements() == trace.records.back().measurements);
    }
  }
  SUBCASE("deterministic") {
    cfg.x0 = *quartic->default_start();
    cfg.max_iterations = 2000;
    cfg.error_threshold = 1e-3;
    MeasuredObjective a(quartic, NoiseModel::gaussian(0.01), 77);
    MeasuredObjective b(quartic, NoiseModel::gaussian(0.01), 77);
    const auto ta = run(cfg, a);
    const auto tb = run(cfg, b);
    CHECK(ta.records == tb.records);
    CHECK(ta.final_x == tb.final_x);
  }
  SUBCASE("invalid configs") {
    cfg.x0 = Vector::Zero(4);
    cfg.max_iterations = 10;
    MeasuredObjective obj(quartic, NoiseModel::none(), 1);
    CHECK_THROWS_AS(run(cfg, obj), ConfigError);
    cfg.x0 = Vector::Zero(5);
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(run(cfg, obj), ConfigError);
    cfg.algorithm = Algorithm::spsa1a;
    cfg.max_iterations = 3;
    CHECK_THROWS_AS(run_baseline(cfg, obj), ConfigError);
  }
}

TEST_CASE("baseline spsa decreases the error monotonically on a quadratic") {
  const auto sphere = std::make_shared<bench::Sphere>(5);
  RunConfig cfg;
  cfg.algorithm = Algorithm::spsa;
  cfg.schedule = GainSchedule{1.0, 1000.0, 0.1, 0.602, 0.101, GainMode::standard};
  cfg.x0 = Vector{{1.0, -2.0, 0.5, 3.0, -1.0}};
  cfg.max_iterations = 100;
  int monotone = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    cfg.seed = seed;
    MeasuredObjective obj(sphere, NoiseModel::none(), seed);
    const auto trace = run_baseline(cfg, obj);
    bool ok = true;
    for (std::size_t i = 1; i < trace.records.size(); ++i) ok = ok && trace.records[i].error <= trace.records[i - 1].error;
    monotone += ok;
  }
  CHECK(monotone >= 45);
}

TEST_CASE("baseline costs") {
  RunConfig cfg;
  cfg.schedule = GainSchedule{0.01, 10.0, 0.1, 0.602, 0.101, GainMode::standard};
  cfg.x0 = Vector{{3.0, -1.0, 0.0, 1.0}};
  cfg.max_iterations = 10;
  const auto powell = bench::make_problem("powell_singular");

  cfg.algorithm = Algorithm::fdsa;
  MeasuredObjective f(powell, NoiseModel::none(), 1);
  CHECK(run_baseline(cfg, f).records.back().measurements == 80);
  CHECK(f.measurements() == 80);

  cfg.algorithm = Algorithm::spsa1;
  cfg.schedule.a = 1e-5;
  MeasuredObjective s(powell, NoiseModel::none(), 1);
  const auto t = run_baseline(cfg, s);
  for (std::size_t i = 0; i < t.records.size(); ++i) CHECK(t.records[i].measurements == i);
}

TEST_CASE("divergence carries the partial trace") {
  // Measurements become infinite once x1 > 2; the SA step keeps pushing x1 up.
  auto cliff = fn(1, [](const Vector& x) { return x[0] > 2.0 ? INFINITY : -x[0]; });
  RunConfig cfg;
  cfg.algorithm = Algorithm::spsa;
  cfg.schedule = GainSchedule{0.5, 0.0, 0.01, 0.1, 0.101, GainMode::standard};
  cfg.x0 = Vector{{0.0}};
  cfg.max_iterations = 1000;
  MeasuredObjective obj(cliff, NoiseModel::none(), 1);
  try {
    run(cfg, obj);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.trace().diverged);
    CHECK(e.trace().records.size() > 1);
    CHECK(e.trace().records.size() < 1000);
  }
}

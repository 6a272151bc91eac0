#include <doctest.h>

#include <cmath>

#include "spsa/bench.hpp"
#include "spsa/core.hpp"

using namespace spsa;

TEST_CASE("standard gains at k = 0") {
  GainSchedule s{1.0, 0.0, 0.1, 1.0, 0.101, GainMode::standard};
  const auto g = gains(s, 0);
  CHECK(g.a_k == 1.0);
  CHECK(g.c_k == 0.1);
}

TEST_CASE("rosenbrock preset a_0 against a 40-digit reference") {
  // mpmath, 40 digits: 0.1 / 2201^0.602
  const double expected = 0.0009721711623312649154524780569822755708242;
  GainSchedule s{0.1, 2200.0, 0.1, 0.602, 0.101, GainMode::standard};
  CHECK(gains(s, 0).a_k == doctest::Approx(expected).epsilon(1e-15));
  // 0.1 / 2^0.101
  CHECK(gains(s, 1).c_k == doctest::Approx(0.09323864864368325093327634).epsilon(1e-15));
}

TEST_CASE("rho-adaptive gains") {
  GainSchedule s{0.5, 10.0, 0.2, 0.602, 0.101, GainMode::rho_adaptive};
  CHECK_THROWS_AS(gains(s, 3), ConfigError);
  const auto g = gains(s, 3, 0.25);
  CHECK(g.a_k == doctest::Approx(0.5 * 1.25 / std::pow(14.0, 0.602)).epsilon(1e-15));
  CHECK(g.c_k == doctest::Approx(0.2 / std::pow(4.0, 0.101)).epsilon(1e-15));
  CHECK_THROWS_AS(gains(s, 3, -1.0), ConfigError);

  GainSchedule standard = s;
  standard.mode = GainMode::standard;
  // rho_k is ignored in standard mode.
  CHECK(gains(standard, 3, 7.0).a_k == gains(standard, 3).a_k);
}

TEST_CASE("standard gains decrease strictly toward zero") {
  GainSchedule s{0.17, 20.0, 0.06, 1.0, 0.16667, GainMode::standard};
  Gains prev = gains(s, 0);
  for (std::size_t k = 1; k < 5000; ++k) {
    const Gains g = gains(s, k);
    REQUIRE(g.a_k < prev.a_k);
    REQUIRE(g.c_k < prev.c_k);
    REQUIRE(g.a_k > 0.0);
    REQUIRE(g.c_k > 0.0);
    prev = g;
  }
  CHECK(gains(s, 100000000).a_k < 1e-8);
  CHECK(gains(s, 100000000).c_k < 0.06 * 0.05);
}

TEST_CASE("schedule validation and assumption diagnostics") {
  CHECK_THROWS_AS((GainSchedule{0.0, 1, 1, 1, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((GainSchedule{1, -1, 1, 1, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS((GainSchedule{1, 1, 0, 1, 0.1}.validate()), ConfigError);
  CHECK_NOTHROW((GainSchedule{1, 0, 1, 1, 0.1}.validate()));

  CHECK((GainSchedule{0.1, 2200, 0.1, 0.602, 0.101}.assumption_warnings().empty()));
  // 2(0.6 - 0.2) = 0.8 <= 1
  CHECK((GainSchedule{0.1, 0, 0.1, 0.6, 0.2}.assumption_warnings().size() == 1));
  CHECK((GainSchedule{0.1, 0, 0.1, 1.5, 0.1}.assumption_warnings().size() == 1));
}

TEST_CASE("measure counts and evaluates") {
  auto sphere = std::make_shared<bench::Sphere>(2);
  MeasuredObjective obj(sphere, NoiseModel::none(), 1);
  CHECK(obj.measurements() == 0);
  CHECK(obj.measure(Vector{{1.0, 1.0}}) == 2.0);
  CHECK(obj.measurements() == 1);
  CHECK_THROWS_AS(obj.measure(Vector{{1.0, 1.0, 1.0}}), ArgumentError);

  auto bad = std::make_shared<bench::FunctionProblem>("nan", 1, [](const Vector&) { return std::nan(""); });
  MeasuredObjective nan_obj(bad, NoiseModel::none(), 1);
  try {
    nan_obj.measure(Vector{{0.25}});
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.point()[0] == 0.25);
  }
}

TEST_CASE("true_value is not counted") {
  MeasuredObjective obj(bench::make_problem("rosenbrock"), NoiseModel::gaussian(0.01), 3);
  CHECK(obj.true_value(Vector{{1.0, 1.0}}) == 0.0);
  CHECK(obj.true_value(Vector{{-1.2, 1.0}}) == doctest::Approx(24.2).epsilon(1e-14));
  CHECK(obj.measurements() == 0);
  CHECK_THROWS_AS(obj.true_value(Vector{{1.0}}), ArgumentError);
}

TEST_CASE("same seed, same measurement sequence") {
  auto p = bench::make_problem("quartic");
  MeasuredObjective a(p, NoiseModel::gaussian(0.3), 42);
  MeasuredObjective b(p, NoiseModel::gaussian(0.3), 42);
  MeasuredObjective c(p, NoiseModel::gaussian(0.3), 43);
  const Vector x = Vector::Constant(5, 0.2);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.measure(x);
    REQUIRE(va == b.measure(x));
    differs = differs || va != c.measure(x);
  }
  CHECK(differs);
}

TEST_CASE("sigma = 0 gaussian matches no noise") {
  auto p = bench::make_problem("beale");
  MeasuredObjective a(p, NoiseModel::gaussian(0.0), 5);
  MeasuredObjective b(p, NoiseModel::none(), 9);
  const Vector x{{0.3, -0.7}};
  CHECK(a.measure(x) == b.measure(x));
}

TEST_CASE("gaussian noise has the configured mean") {
  // Standard error of the mean is 0.01 / sqrt(1e6) = 1e-5.
  MeasuredObjective obj(std::make_shared<bench::Sphere>(2), NoiseModel::gaussian(0.01), 7);
  const Vector x{{0.5, -0.25}};
  double sum = 0.0;
  double sumsq = 0.0;
  const int R = 1000000;
  for (int i = 0; i < R; ++i) {
    const double e = obj.measure(x) - 0.3125;
    sum += e;
    sumsq += e * e;
  }
  CHECK(std::abs(sum / R) < 3e-5);
  CHECK(std::sqrt(sumsq / R) == doctest::Approx(0.01).epsilon(0.01));
  CHECK(obj.measurements() == static_cast<std::uint64_t>(R));
}

TEST_CASE("derived seeds are pure and distinct") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
}

TEST_CASE("check_point") {
  CHECK_NOTHROW(check_point(Vector::Zero(3), 3));
  CHECK_THROWS_AS(check_point(Vector::Zero(2), 3), ArgumentError);
  Vector bad = Vector::Zero(2);
  bad[1] = INFINITY;
  CHECK_THROWS_AS(check_point(bad, 2), ArgumentError);
}

// Command-line front end: experiments, comparison tables and the oracle checks.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "spsa/bench.hpp"
#include "spsa/harness.hpp"
#include "spsa/oracles.hpp"
#include "spsa/spsa1a.hpp"
#include "spsa/theory.hpp"

namespace {

using namespace spsa;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> replications;
  std::optional<unsigned> workers;
  bool quiet = false;
};

struct ExperimentOverrides {
  std::string problem, preset, algorithms, thresholds, x0, gain_mode;
  std::optional<std::size_t> max_iterations;
  std::optional<double> noise_sigma;
};

void add_overrides(CLI::App* cmd, ExperimentOverrides& o) {
  cmd->add_option("--problem", o.problem, "Problem id (rosenbrock, beale, powell_singular, quartic, sphere)");
  cmd->add_option("--preset", o.preset, "Parameter preset (T1, T2, T3, T3_spsa, T3_spsa1a, T4, T5)");
  cmd->add_option("--algorithms", o.algorithms, "Comma-separated algorithms (spsa, spsa1, spsa1a, fdsa, rdsa)");
  cmd->add_option("--thresholds", o.thresholds, "Comma-separated, strictly decreasing error thresholds");
  cmd->add_option("--x0", o.x0, "Comma-separated starting point");
  cmd->add_option("--gain-mode", o.gain_mode, "SPSA1-A gain mode (standard, rho_adaptive)");
  cmd->add_option("--max-iterations", o.max_iterations, "Iteration limit M");
  cmd->add_option("--noise-sigma", o.noise_sigma, "Standard deviation of the measurement noise");
}

harness::ExperimentConfig build_config(const GlobalOptions& g, const ExperimentOverrides& o, bool need_file) {
  harness::ExperimentConfig cfg;
  if (!g.config_path.empty()) {
    cfg = harness::load_config(g.config_path);
  } else if (need_file) {
    throw CLI::RequiredError("--config");
  }
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) harness::apply_setting(cfg, key, v);
  };
  set("problem", o.problem);
  set("preset", o.preset);
  set("algorithms", o.algorithms);
  set("thresholds", o.thresholds);
  set("x0", o.x0);
  set("gain_mode", o.gain_mode);
  if (o.max_iterations) cfg.max_iterations = *o.max_iterations;
  if (o.noise_sigma) cfg.noise_sigma = *o.noise_sigma;
  if (g.seed) cfg.master_seed = *g.seed;
  if (g.replications) cfg.replications = *g.replications;
  if (g.workers) cfg.workers = *g.workers;
  return cfg;
}

void warn_assumptions(const harness::ExperimentConfig& cfg, bool quiet) {
  if (quiet) return;
  for (auto alg : cfg.algorithms) {
    for (const auto& w : cfg.schedule_for(alg).assumption_warnings()) {
      std::cerr << fmt::format("warning: {} gains: {}\n", to_string(alg), w);
    }
  }
}

int cmd_experiment(const GlobalOptions& g, const ExperimentOverrides& o, bool is_run) {
  const auto cfg = build_config(g, o, is_run);
  warn_assumptions(cfg, g.quiet);
  std::optional<std::filesystem::path> out;
  if (!g.out_dir.empty()) {
    out = g.out_dir;
  } else if (is_run) {
    out = "out";
  }
  const auto result = harness::run_experiment(cfg, out);
  if (!g.quiet) {
    std::cout << harness::comparison_table(result);
    for (const auto& alg : result.summary.algorithms) {
      if (alg.diverged) std::cout << fmt::format("{}: {} replication(s) diverged\n", to_string(alg.algorithm), alg.diverged);
    }
    if (out) std::cout << fmt::format("wrote {}\n", out->string());
  }
  return 0;
}

int cmd_verify_rho(int max_n, bool quiet) {
  if (max_n < 1 || max_n > oracles::kMaxEnumerationDimension) {
    throw CLI::ValidationError("--max-n", fmt::format("must be in [1, {}]", oracles::kMaxEnumerationDimension));
  }
  bool all_ok = true;
  if (!quiet) {
    std::cout << fmt::format("{:>3} {:>16} {:>16} {:>6} {:>10} {:>10} {:>8}\n", "n", "closed_form", "enumeration",
                             "match", "|set|", "formula", "sgn_sum");
  }
  for (int n = 1; n <= max_n; ++n) {
    const auto closed = rho_constant(n);
    const auto brute = oracles::rho_bruteforce(n);
    const auto set = oracles::enumerate_descent_set(Vector::Ones(n));
    const auto formula = oracles::descent_set_cardinality(n);
    const auto un = static_cast<unsigned>(n);
    const std::uint64_t expected_sum = un % 2 == 0 ? binomial(un - 1, un / 2) : binomial(un - 1, (un - 1) / 2);
    bool sum_ok = true;
    for (auto s : set.signed_sum) sum_ok = sum_ok && s == static_cast<std::int64_t>(expected_sum);
    const bool match = closed.exact && *closed.exact == brute;
    const bool ok = match && set.cardinality() == formula && sum_ok;
    all_ok = all_ok && ok;
    if (!quiet) {
      std::cout << fmt::format("{:>3} {:>16} {:>16} {:>6} {:>10} {:>10} {:>8}\n", n, closed.exact->str(), brute.str(),
                               match ? "yes" : "NO", set.cardinality(), formula, sum_ok ? "ok" : "FAIL");
    }
  }
  if (!quiet) std::cout << (all_ok ? "all rows exact\n" : "MISMATCH\n");
  return all_ok ? 0 : 1;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int cmd_bias_scan(const GlobalOptions& g, const std::string& problem_id, const std::string& point,
                  const std::string& c_list, bool quiet) {
  const auto problem = bench::make_problem(problem_id);
  Vector x;
  if (point.empty()) {
    x = Vector::Constant(problem->dimension(), 0.5);
  } else {
    const auto p = parse_reals(point);
    x = Eigen::Map<const Vector>(p.data(), static_cast<Index>(p.size()));
  }
  const auto cs = parse_reals(c_list);
  const std::uint64_t reps = g.replications.value_or(1000000);
  const auto scan = oracles::bias_scan(problem, x, cs, reps, g.seed.value_or(0));
  if (!quiet) {
    std::cout << fmt::format("bias scan on {} (noiseless), R = {}\n", problem_id, reps);
    std::cout << fmt::format("{:>8} {:>14} {:>12} {:>14} {:>12}\n", "c", "raw_bias", "raw_se", "cv_bias", "cv_se");
    for (const auto& row : scan.rows) {
      std::cout << fmt::format("{:>8} {:>14.6e} {:>12.3e} {:>14.6e} {:>12.3e}{}\n", row.c, row.raw_norm, row.raw_norm_se,
                               row.cv_norm, row.cv_norm_se, row.cv_resolved ? "" : "  (not resolved)");
    }
    std::cout << fmt::format("log-log slope: control-variate {:.4f}, raw {:.4f}\n", scan.cv_slope, scan.raw_slope);
  }
  return 0;
}

struct NormalityOptions {
  std::string problem = "quartic";
  double a = 1.0, A = 100.0, c = 0.002, alpha = 1.0, gamma = 1.0 / 6.0;
  double noise_sigma = 0.01;
  std::size_t iterations = 10000;
};

int cmd_normality(const GlobalOptions& g, const NormalityOptions& o) {
  theory::NormalityStudy study;
  study.problem = bench::make_problem(o.problem);
  study.schedule = GainSchedule{o.a, o.A, o.c, o.alpha, o.gamma, GainMode::standard};
  study.noise_sigma = o.noise_sigma;
  study.iterations = o.iterations;
  study.replications = g.replications.value_or(200);
  study.seed = g.seed.value_or(0);
  study.workers = g.workers.value_or(1);
  try {
    const auto report = theory::run_normality_study(study);
    if (!g.quiet) {
      const auto& p = report.prediction;
      const auto& e = report.empirical;
      const Eigen::IOFormat row(Eigen::StreamPrecision, Eigen::DontAlignCols, ", ", ", ", "", "", "(", ")");
      std::cout << fmt::format("beta = {}, beta_plus = {}, bias branch: {}\n", p.beta, p.beta_plus,
                               p.bias_branch ? "yes" : "no");
      std::cout << "lambda = " << p.lambda.transpose().format(row) << "\n";
      std::cout << "predicted mu = " << p.mu.transpose().format(row) << "\n";
      std::cout << "empirical mean = " << e.mean.transpose().format(row) << "\n";
      std::cout << fmt::format("covariance trace: predicted {:.6g}, empirical {:.6g}, ratio {:.4f}\n",
                               report.predicted_trace, report.empirical_trace,
                               report.empirical_trace / report.predicted_trace);
      std::cout << "skewness = " << e.skewness.transpose().format(row) << "\n";
      std::cout << "excess kurtosis = " << e.excess_kurtosis.transpose().format(row) << "\n";
      if (report.diverged) std::cout << fmt::format("{} replication(s) diverged and were dropped\n", report.diverged);
    }
    return 0;
  } catch (const NotApplicableError& err) {
    std::cerr << fmt::format("prediction refused for '{}': {}\n", o.problem, err.what());
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous perturbation stochastic approximation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Experiment config file (key = value lines)");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--replications", g.replications, "Replication count");
  app.add_option("--workers", g.workers, "Worker threads");
  app.add_flag("--quiet", g.quiet, "Suppress normal output");

  ExperimentOverrides run_o, cmp_o;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file and write traces");
  add_overrides(run, run_o);
  auto* compare = app.add_subcommand("compare", "Run a multi-algorithm comparison and print the table");
  add_overrides(compare, cmp_o);

  int max_n = 12;
  auto* verify = app.add_subcommand("verify-rho", "Check the rho closed form against enumeration");
  verify->add_option("--max-n", max_n, "Largest dimension to check (<= 20)");

  std::string bias_problem = "quartic", bias_point, bias_c = "0.4,0.2,0.1,0.05";
  auto* bias = app.add_subcommand("bias-scan", "Estimate the bias order of the averaged direction");
  bias->add_option("--problem", bias_problem, "Problem id");
  bias->add_option("--point", bias_point, "Comma-separated evaluation point (default 0.5 in every coordinate)");
  bias->add_option("--c", bias_c, "Comma-separated perturbation sizes");

  NormalityOptions norm_o;
  auto* normality = app.add_subcommand("normality", "Compare the predicted limit distribution with an ensemble");
  normality->add_option("--problem", norm_o.problem, "Problem id");
  normality->add_option("--a", norm_o.a);
  normality->add_option("--A", norm_o.A);
  normality->add_option("--c", norm_o.c);
  normality->add_option("--alpha", norm_o.alpha);
  normality->add_option("--gamma", norm_o.gamma);
  normality->add_option("--noise-sigma", norm_o.noise_sigma);
  normality->add_option("--iterations", norm_o.iterations, "Final iteration k");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_experiment(g, run_o, true);
    if (*compare) return cmd_experiment(g, cmp_o, false);
    if (*verify) return cmd_verify_rho(max_n, g.quiet);
    if (*bias) return cmd_bias_scan(g, bias_problem, bias_point, bias_c, g.quiet);
    if (*normality) return cmd_normality(g, norm_o);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spsa/core.hpp"
#include "spsa/estimators.hpp"
#include "spsa/spsa1a.hpp"

namespace spsa::harness {

/// Flat `key = value` experiment description. Lists are comma separated,
/// `#` starts a comment.
struct ExperimentConfig {
  std::string problem = "quartic";
  std::vector<Algorithm> algorithms{Algorithm::spsa, Algorithm::spsa1a};
  std::optional<std::string> preset;
  std::optional<double> a, A, c, alpha, gamma;
  GainMode gain_mode = GainMode::rho_adaptive;
  Spsa1Divisor spsa1_divisor = Spsa1Divisor::two_c;
  DirectionDistribution rdsa_direction = DirectionDistribution::bernoulli;
  double noise_sigma = 0.01;
  std::optional<Vector> x0;
  std::size_t max_iterations = 1000;
  /// Strictly decreasing; runs stop at the last one.
  std::vector<double> thresholds;
  std::size_t replications = 1;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;

  /// Gains for one algorithm: preset row (if any) overridden by explicit
  /// constants. gain_mode applies to spsa1a only; baselines use standard gains.
  GainSchedule schedule_for(Algorithm alg) const;

  /// Starting point: x0 if given, else the problem's default start.
  Vector start() const;

  void validate() const;

  /// Canonical key/value echo, sorted by key.
  std::map<std::string, std::string> echo() const;
};

ExperimentConfig parse_config(std::string_view text);

/// Reads a config file; throws std::runtime_error with the path when the file
/// cannot be opened.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Count at the first record with e_k <= threshold; nullopt is the limit marker.
std::optional<std::uint64_t> measurements_to_threshold(const IterateTrace& trace, double threshold);

/// "--" for the limit marker, the count otherwise.
std::string format_count(std::optional<std::uint64_t> count);

struct CurvePoint {
  std::uint64_t measurements = 0;
  double mean_error = 0.0;
  double median_error = 0.0;
  double stderr_error = 0.0;
};

struct ThresholdResult {
  double threshold = 0.0;
  std::vector<std::optional<std::uint64_t>> per_replication;
  /// Mean over replications that reached the threshold.
  std::optional<double> mean_measurements;
  /// Median over all replications, unreached counted as +infinity; nullopt
  /// when the median itself is unreached.
  std::optional<double> median_measurements;
  double reached_fraction = 0.0;
};

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::spsa;
  GainSchedule schedule;
  std::vector<CurvePoint> curve;
  std::vector<ThresholdResult> thresholds;
  std::size_t diverged = 0;
};

struct ComparisonSummary {
  std::vector<AlgorithmSummary> algorithms;
};

struct ExperimentResult {
  ExperimentConfig config;
  ComparisonSummary summary;
  /// traces[a][r] for algorithm index a and replication r.
  std::vector<std::vector<IterateTrace>> traces;
};

/// Mean/median/stderr of the error at each record index, aligned by
/// measurement count. Shorter (early-stopped) traces carry their last error
/// forward; diverged traces are left out.
std::vector<CurvePoint> mean_curve(const std::vector<IterateTrace>& traces, std::uint64_t cost);

ThresholdResult threshold_result(const std::vector<IterateTrace>& traces, double threshold);

/// Runs every algorithm x replication. Replication r of algorithm index a
/// uses seeds derived from (master_seed, a, r). A diverging replication is
/// recorded and does not stop the others. When `output_dir` is given, it is
/// checked for writability before anything runs and all files are emitted.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& output_dir = std::nullopt);

/// Writes traces/<alg>_r<NNNN>.csv, curves/<alg>.csv and summary.json.
void emit_all(const ExperimentResult& result, const std::filesystem::path& dir);

void emit_trace_csv(const IterateTrace& trace, const std::filesystem::path& path);
void emit_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);
void emit_summary_json(const ExperimentResult& result, const std::filesystem::path& path);

std::string trace_csv(const IterateTrace& trace);
std::string curve_csv(const std::vector<CurvePoint>& curve);
std::string summary_json(const ExperimentResult& result);

/// Compact table: one row per algorithm, one column per threshold with
/// the median measurement count or "--".
std::string comparison_table(const ExperimentResult& result);

/// Shortest decimal text that round-trips the double.
std::string format_real(double v);

}  // namespace spsa::harness

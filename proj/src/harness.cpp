#include "spsa/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "spsa/bench.hpp"
#include "spsa/parallel.hpp"

namespace spsa::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(',');
    const auto item = trim(s.substr(0, pos));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, text));
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("{}: '{}' is not a nonnegative integer", key, text));
  }
  return v;
}

std::string join_reals(const Eigen::Ref<const Vector>& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_real(v[i]);
  }
  return out;
}

std::optional<double> median_of(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const auto m = values.size();
  const double mid = m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
  if (!std::isfinite(mid)) return std::nullopt;
  return mid;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
}

void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe, std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("output directory '{}' is not writable", dir.string()));
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace

std::string format_real(double v) { return fmt::format("{}", v); }

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "problem") {
    config.problem = std::string(value);
  } else if (key == "algorithms") {
    config.algorithms.clear();
    for (auto item : split_list(value)) config.algorithms.push_back(parse_algorithm(item));
  } else if (key == "preset") {
    if (value.empty() || value == "none") {
      config.preset.reset();
    } else {
      config.preset = std::string(value);
    }
  } else if (key == "a") {
    config.a = parse_real(key, value);
  } else if (key == "A") {
    config.A = parse_real(key, value);
  } else if (key == "c") {
    config.c = parse_real(key, value);
  } else if (key == "alpha") {
    config.alpha = parse_real(key, value);
  } else if (key == "gamma") {
    config.gamma = parse_real(key, value);
  } else if (key == "gain_mode") {
    config.gain_mode = parse_gain_mode(value);
  } else if (key == "spsa1_divisor") {
    config.spsa1_divisor = parse_spsa1_divisor(value);
  } else if (key == "rdsa_direction") {
    config.rdsa_direction = parse_direction_distribution(value);
  } else if (key == "noise_sigma") {
    config.noise_sigma = parse_real(key, value);
  } else if (key == "x0") {
    const auto items = split_list(value);
    if (items.empty()) {
      config.x0.reset();
    } else {
      Vector x(static_cast<Index>(items.size()));
      for (std::size_t i = 0; i < items.size(); ++i) x[static_cast<Index>(i)] = parse_real(key, items[i]);
      config.x0 = x;
    }
  } else if (key == "max_iterations") {
    config.max_iterations = parse_unsigned(key, value);
  } else if (key == "thresholds") {
    config.thresholds.clear();
    for (auto item : split_list(value)) config.thresholds.push_back(parse_real(key, item));
  } else if (key == "replications") {
    config.replications = parse_unsigned(key, value);
  } else if (key == "master_seed") {
    config.master_seed = parse_unsigned(key, value);
  } else if (key == "workers") {
    config.workers = static_cast<unsigned>(parse_unsigned(key, value));
  } else {
    throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    const auto key = trim(line.substr(0, eq));
    try {
      apply_setting(config, key, line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("config file not found: '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

GainSchedule ExperimentConfig::schedule_for(Algorithm alg) const {
  GainSchedule s;
  bool have[5] = {false, false, false, false, false};
  if (preset) {
    s = bench::preset_for(*preset, to_string(alg)).schedule;
    std::fill(std::begin(have), std::end(have), true);
  }
  auto take = [&](const std::optional<double>& v, double& slot, bool& flag) {
    if (v) {
      slot = *v;
      flag = true;
    }
  };
  take(a, s.a, have[0]);
  take(A, s.A, have[1]);
  take(c, s.c, have[2]);
  take(alpha, s.alpha, have[3]);
  take(gamma, s.gamma, have[4]);
  if (!std::all_of(std::begin(have), std::end(have), [](bool b) { return b; })) {
    throw ConfigError("gain constants incomplete: give a preset or all of a, A, c, alpha, gamma");
  }
  s.mode = alg == Algorithm::spsa1a ? gain_mode : GainMode::standard;
  return s;
}

Vector ExperimentConfig::start() const {
  if (x0) return *x0;
  const auto problem_ptr = bench::make_problem(problem);
  if (auto s = problem_ptr->default_start()) return *s;
  throw ConfigError(fmt::format("problem '{}' has no default start; set x0", problem));
}

void ExperimentConfig::validate() const {
  const auto problem_ptr = bench::make_problem(problem, x0 ? x0->size() : 0);
  if (algorithms.empty()) throw ConfigError("no algorithms selected");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (max_iterations == 0 && thresholds.empty()) {
    throw ConfigError("need max_iterations > 0 or at least one threshold");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0)) throw ConfigError("thresholds must be >= 0");
    if (i > 0 && !(thresholds[i] < thresholds[i - 1])) {
      throw ConfigError("thresholds must be strictly decreasing");
    }
  }
  if (x0 && x0->size() != problem_ptr->dimension()) {
    throw ConfigError(fmt::format("x0 has {} entries, problem '{}' has dimension {}", x0->size(), problem,
                                  problem_ptr->dimension()));
  }
  for (auto alg : algorithms) schedule_for(alg).validate();
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> out;
  out["problem"] = problem;
  std::string algs;
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    if (i) algs += ',';
    algs += to_string(algorithms[i]);
  }
  out["algorithms"] = algs;
  out["preset"] = preset.value_or("none");
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) out[key] = format_real(*v);
  };
  put("a", a);
  put("A", A);
  put("c", c);
  put("alpha", alpha);
  put("gamma", gamma);
  out["gain_mode"] = std::string(to_string(gain_mode));
  out["spsa1_divisor"] = std::string(to_string(spsa1_divisor));
  out["rdsa_direction"] = std::string(to_string(rdsa_direction));
  out["noise_sigma"] = format_real(noise_sigma);
  out["x0"] = join_reals(start());
  out["max_iterations"] = std::to_string(max_iterations);
  std::string th;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (i) th += ',';
    th += format_real(thresholds[i]);
  }
  out["thresholds"] = th;
  out["replications"] = std::to_string(replications);
  out["master_seed"] = std::to_string(master_seed);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

std::optional<std::uint64_t> measurements_to_threshold(const IterateTrace& trace, double threshold) {
  for (const auto& rec : trace.records) {
    if (rec.error <= threshold) return rec.measurements;
  }
  return std::nullopt;
}

std::string format_count(std::optional<std::uint64_t> count) {
  return count ? std::to_string(*count) : std::string("--");
}

std::vector<CurvePoint> mean_curve(const std::vector<IterateTrace>& traces, std::uint64_t cost) {
  std::vector<const IterateTrace*> kept;
  std::size_t rows = 0;
  for (const auto& t : traces) {
    if (t.diverged || t.records.empty()) continue;
    kept.push_back(&t);
    rows = std::max(rows, t.records.size());
  }
  std::vector<CurvePoint> curve;
  curve.reserve(rows);
  std::vector<double> errs(kept.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t r = 0; r < kept.size(); ++r) {
      const auto& recs = kept[r]->records;
      errs[r] = recs[std::min(i, recs.size() - 1)].error;
    }
    CurvePoint p;
    p.measurements = static_cast<std::uint64_t>(i) * cost;
    const double m = static_cast<double>(errs.size());
    p.mean_error = std::accumulate(errs.begin(), errs.end(), 0.0) / m;
    double ss = 0.0;
    for (double e : errs) ss += (e - p.mean_error) * (e - p.mean_error);
    p.stderr_error = errs.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
    p.median_error = *median_of(errs);
    curve.push_back(p);
  }
  return curve;
}

ThresholdResult threshold_result(const std::vector<IterateTrace>& traces, double threshold) {
  ThresholdResult out;
  out.threshold = threshold;
  std::vector<double> all;
  double reached_sum = 0.0;
  std::size_t reached = 0;
  for (const auto& t : traces) {
    const auto count = measurements_to_threshold(t, threshold);
    out.per_replication.push_back(count);
    if (count) {
      ++reached;
      reached_sum += static_cast<double>(*count);
      all.push_back(static_cast<double>(*count));
    } else {
      all.push_back(std::numeric_limits<double>::infinity());
    }
  }
  if (reached > 0) out.mean_measurements = reached_sum / static_cast<double>(reached);
  out.median_measurements = median_of(all);
  out.reached_fraction = traces.empty() ? 0.0 : static_cast<double>(reached) / static_cast<double>(traces.size());
  return out;
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& output_dir) {
  config.validate();
  if (output_dir) ensure_writable(*output_dir);

  ExperimentResult result;
  result.config = config;
  const Vector x0 = config.start();
  const auto problem = bench::make_problem(config.problem, x0.size());
  const Index n = problem->dimension();
  const auto noise = NoiseModel::gaussian(config.noise_sigma);
  std::optional<double> stop_at;
  if (!config.thresholds.empty()) stop_at = config.thresholds.back();

  result.traces.resize(config.algorithms.size());
  for (std::size_t ai = 0; ai < config.algorithms.size(); ++ai) {
    const Algorithm alg = config.algorithms[ai];
    RunConfig base;
    base.algorithm = alg;
    base.schedule = config.schedule_for(alg);
    base.x0 = x0;
    base.max_iterations = config.max_iterations;
    base.error_threshold = stop_at;
    base.spsa1_divisor = config.spsa1_divisor;
    base.rdsa_direction = config.rdsa_direction;

    auto& traces = result.traces[ai];
    traces.resize(config.replications);
    parallel_for(config.replications, config.workers, [&](std::size_t r) {
      const std::uint64_t child = derive_seed(config.master_seed, ai, r);
      RunConfig local = base;
      local.seed = derive_seed(child, 1);
      MeasuredObjective obj(problem, noise, derive_seed(child, 2));
      try {
        traces[r] = run(local, obj);
      } catch (const DivergenceError& err) {
        traces[r] = err.trace();
        traces[r].diverged = true;
        if (traces[r].failure.empty()) traces[r].failure = err.what();
      }
      traces[r].replication = r;
    });

    AlgorithmSummary summary;
    summary.algorithm = alg;
    summary.schedule = base.schedule;
    summary.curve = mean_curve(traces, per_iteration_cost(alg, n));
    for (double th : config.thresholds) summary.thresholds.push_back(threshold_result(traces, th));
    summary.diverged = static_cast<std::size_t>(
        std::count_if(traces.begin(), traces.end(), [](const IterateTrace& t) { return t.diverged; }));
    result.summary.algorithms.push_back(std::move(summary));
  }

  if (output_dir) emit_all(result, *output_dir);
  return result;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

std::string trace_csv(const IterateTrace& trace) {
  std::string out = "replication,iteration,measurements,error\n";
  for (const auto& rec : trace.records) {
    out += fmt::format("{},{},{},{}\n", trace.replication, rec.iteration, rec.measurements, format_real(rec.error));
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "measurements,mean_error,median_error,stderr\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{},{},{}\n", p.measurements, format_real(p.mean_error), format_real(p.median_error),
                       format_real(p.stderr_error));
  }
  return out;
}

std::string summary_json(const ExperimentResult& result) {
  using nlohmann::json;
  json doc;
  json echo = json::object();
  for (const auto& [k, v] : result.config.echo()) echo[k] = v;
  doc["config_echo"] = echo;
  doc["seed"] = result.config.master_seed;

  json algorithms = json::array();
  json results = json::array();
  for (const auto& alg : result.summary.algorithms) {
    algorithms.push_back({{"algorithm", std::string(to_string(alg.algorithm))},
                          {"a", alg.schedule.a},
                          {"A", alg.schedule.A},
                          {"c", alg.schedule.c},
                          {"alpha", alg.schedule.alpha},
                          {"gamma", alg.schedule.gamma},
                          {"gain_mode", std::string(to_string(alg.schedule.mode))},
                          {"diverged", alg.diverged}});
    for (const auto& th : alg.thresholds) {
      json entry{{"algorithm", std::string(to_string(alg.algorithm))},
                 {"threshold", th.threshold},
                 {"reached_fraction", th.reached_fraction}};
      entry["mean_measurements"] = th.mean_measurements ? json(*th.mean_measurements) : json(nullptr);
      entry["median_measurements"] = th.median_measurements ? json(*th.median_measurements) : json(nullptr);
      results.push_back(std::move(entry));
    }
  }
  doc["algorithms"] = algorithms;
  doc["results"] = results;
  return doc.dump(2) + "\n";
}

void emit_trace_csv(const IterateTrace& trace, const std::filesystem::path& path) {
  write_text(path, trace_csv(trace));
}

void emit_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
  write_text(path, curve_csv(curve));
}

void emit_summary_json(const ExperimentResult& result, const std::filesystem::path& path) {
  write_text(path, summary_json(result));
}

void emit_all(const ExperimentResult& result, const std::filesystem::path& dir) {
  ensure_writable(dir);
  std::filesystem::create_directories(dir / "traces");
  std::filesystem::create_directories(dir / "curves");
  for (std::size_t ai = 0; ai < result.summary.algorithms.size(); ++ai) {
    const auto name = std::string(to_string(result.summary.algorithms[ai].algorithm));
    for (const auto& trace : result.traces[ai]) {
      emit_trace_csv(trace, dir / "traces" / fmt::format("{}_r{:04}.csv", name, trace.replication));
    }
    emit_curve_csv(result.summary.algorithms[ai].curve, dir / "curves" / (name + ".csv"));
  }
  emit_summary_json(result, dir / "summary.json");
}

std::string comparison_table(const ExperimentResult& result) {
  std::string out = fmt::format("{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}", "", "a", "A", "c", "alpha", "gamma");
  const auto& thresholds = result.config.thresholds;
  for (double th : thresholds) out += fmt::format(" {:>12}", fmt::format("e<={}", format_real(th)));
  out += "\n";
  auto median_cell = [](const ThresholdResult& t) {
    return t.median_measurements ? format_real(*t.median_measurements) : std::string("--");
  };
  for (const auto& alg : result.summary.algorithms) {
    const auto& s = alg.schedule;
    out += fmt::format("{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}", to_string(alg.algorithm), format_real(s.a),
                       format_real(s.A), format_real(s.c), format_real(s.alpha), format_real(s.gamma));
    for (const auto& t : alg.thresholds) out += fmt::format(" {:>12}", median_cell(t));
    out += "\n";
  }
  out += fmt::format("\nmedian measurements over {} replications; '--' means the median run hit the iteration limit\n",
                     result.config.replications);
  out += fmt::format("{:<8}", "");
  for (double th : thresholds) out += fmt::format(" {:>22}", fmt::format("mean|reached e<={}", format_real(th)));
  out += "\n";
  for (const auto& alg : result.summary.algorithms) {
    out += fmt::format("{:<8}", to_string(alg.algorithm));
    for (const auto& t : alg.thresholds) {
      const auto mean = t.mean_measurements ? fmt::format("{:.1f}", *t.mean_measurements) : std::string("--");
      out += fmt::format(" {:>22}", fmt::format("{}|{:.2f}", mean, t.reached_fraction));
    }
    out += "\n";
  }
  return out;
}

}  // namespace spsa::harness

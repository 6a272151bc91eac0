#include "spsa/theory.hpp"

#include <cmath>

#include <fmt/format.h>

#include "spsa/parallel.hpp"
#include "spsa/spsa1a.hpp"

namespace spsa::theory {

Vector bias_term(double a, double c, Index n, const std::function<double(Index, Index, Index)>& third) {
  Vector T(n);
  for (Index l = 0; l < n; ++l) {
    double cross = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (i != l) cross += third(i, i, l);
    }
    T[l] = -(1.0 / 6.0) * a * c * c * (third(l, l, l) + 3.0 * cross);
  }
  return T;
}

NormalityPrediction predict_asymptotics(const AsymptoticInputs& in) {
  const Index n = in.hessian.rows();
  if (n == 0 || in.hessian.cols() != n) throw ArgumentError("Hessian must be square and nonempty");
  if (!(in.a > 0.0) || !(in.c > 0.0)) throw ArgumentError("a and c must be positive");
  if (!(in.sigma2 >= 0.0)) throw ArgumentError("sigma2 must be nonnegative");

  const double scale = std::max(1.0, in.hessian.cwiseAbs().maxCoeff());
  if ((in.hessian - in.hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotApplicableError("Hessian at the minimizer is not symmetric");
  }

  NormalityPrediction out;
  out.beta = in.alpha - 2.0 * in.gamma;
  if (!(out.beta > 0.0)) {
    throw NotApplicableError(fmt::format("requires beta = alpha - 2 gamma > 0, got {}", out.beta));
  }
  const double bias_order = 3.0 * in.gamma - in.alpha / 2.0;
  if (bias_order < -kHypothesisTolerance) {
    throw NotApplicableError(fmt::format("requires 3 gamma - alpha/2 >= 0, got {}", bias_order));
  }
  if (in.alpha > 1.0 + kHypothesisTolerance) {
    throw NotApplicableError(fmt::format("requires alpha <= 1, got {}", in.alpha));
  }
  const bool alpha_is_one = std::abs(in.alpha - 1.0) <= kHypothesisTolerance;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(in.a * in.hessian);
  if (eig.info() != Eigen::Success) throw NotApplicableError("eigendecomposition of a H(x*) failed");
  out.lambda = eig.eigenvalues();
  out.P = eig.eigenvectors();
  const double lambda_min = out.lambda.minCoeff();
  const double lambda_max = out.lambda.cwiseAbs().maxCoeff();
  if (!(lambda_min > 1e-10 * std::max(lambda_max, 1e-300))) {
    throw NotApplicableError(fmt::format(
        "requires H(x*) positive definite; smallest eigenvalue of a H(x*) is {} (singular or indefinite)",
        lambda_min));
  }

  out.beta_plus = alpha_is_one ? out.beta : 0.0;
  if (alpha_is_one && !(out.beta < 2.0 * lambda_min)) {
    throw NotApplicableError(
        fmt::format("alpha = 1 requires beta < 2 min lambda_i; beta = {}, 2 min lambda = {}", out.beta,
                    2.0 * lambda_min));
  }

  const double lead = 0.25 * in.a * in.a * in.sigma2 / (in.c * in.c);
  out.m_diag = (lead / (2.0 * out.lambda.array() - out.beta_plus)).matrix();
  const Matrix cov = out.P * out.m_diag.asDiagonal() * out.P.transpose();
  out.covariance = 0.5 * (cov + cov.transpose());

  if (in.third) {
    out.T = bias_term(in.a, in.c, n, in.third);
  } else {
    out.T = Vector::Zero(n);
  }
  out.bias_branch = std::abs(bias_order) <= kHypothesisTolerance;
  if (out.bias_branch) {
    const Matrix shifted = in.a * in.hessian - 0.5 * out.beta_plus * Matrix::Identity(n, n);
    out.mu = shifted.ldlt().solve(out.T);
  } else {
    out.mu = Vector::Zero(n);
  }
  return out;
}

double sigma2_of_noise(const NoiseModel& noise) {
  const double s = noise.effective_sigma();
  return 2.0 * s * s;
}

EmpiricalSummary empirical_scaled_errors(const std::vector<Vector>& final_iterates, const Vector& x_star,
                                         double beta, std::size_t k) {
  if (final_iterates.size() < kMinNormalityReplications) {
    throw NotApplicableError(fmt::format("need at least {} replications for moment checks, got {}",
                                         kMinNormalityReplications, final_iterates.size()));
  }
  const Index n = x_star.size();
  const auto reps = static_cast<Index>(final_iterates.size());
  const double factor = std::pow(static_cast<double>(k), beta / 2.0);

  EmpiricalSummary out;
  out.samples.resize(reps, n);
  for (Index r = 0; r < reps; ++r) {
    check_point(final_iterates[r], n);
    out.samples.row(r) = (factor * (final_iterates[r] - x_star)).transpose();
  }
  out.mean = out.samples.colwise().mean().transpose();
  const Matrix centered = out.samples.rowwise() - out.mean.transpose();
  out.covariance = centered.transpose() * centered / static_cast<double>(reps - 1);

  out.skewness.resize(n);
  out.excess_kurtosis.resize(n);
  for (Index j = 0; j < n; ++j) {
    const auto col = centered.col(j).array();
    const double m2 = col.square().mean();
    const double m3 = col.cube().mean();
    const double m4 = col.square().square().mean();
    if (m2 == 0.0) {
      out.skewness[j] = 0.0;
      out.excess_kurtosis[j] = 0.0;
    } else {
      out.skewness[j] = m3 / std::pow(m2, 1.5);
      out.excess_kurtosis[j] = m4 / (m2 * m2) - 3.0;
    }
  }
  return out;
}

NormalityPrediction predict_for(const Problem& problem, const GainSchedule& schedule, double noise_sigma) {
  if (!problem.has_derivatives()) {
    throw NotApplicableError(fmt::format("problem '{}' has no analytic derivatives", problem.id()));
  }
  const auto x_star = problem.minimizer();
  if (!x_star) throw NotApplicableError(fmt::format("problem '{}' has no known minimizer", problem.id()));
  AsymptoticInputs in;
  in.a = schedule.a;
  in.c = schedule.c;
  in.alpha = schedule.alpha;
  in.gamma = schedule.gamma;
  in.sigma2 = sigma2_of_noise(NoiseModel::gaussian(noise_sigma));
  in.hessian = problem.hessian(*x_star);
  const Vector xs = *x_star;
  in.third = [&problem, xs](Index i, Index j, Index l) { return problem.third(xs, i, j, l); };
  return predict_asymptotics(in);
}

NormalityReport run_normality_study(const NormalityStudy& study) {
  if (!study.problem) throw ArgumentError("normality study needs a problem");
  const Problem& problem = *study.problem;
  NormalityReport report;
  report.prediction = predict_for(problem, study.schedule, study.noise_sigma);

  RunConfig cfg;
  cfg.algorithm = Algorithm::spsa1a;
  cfg.schedule = study.schedule;
  cfg.schedule.mode = GainMode::standard;
  cfg.x0 = study.x0.size() > 0 ? study.x0 : problem.default_start().value_or(Vector::Zero(problem.dimension()));
  cfg.max_iterations = study.iterations;

  std::vector<Vector> finals(study.replications);
  std::vector<char> ok(study.replications, 0);
  parallel_for(study.replications, study.workers, [&](std::size_t r) {
    RunConfig local = cfg;
    local.seed = derive_seed(study.seed, r, 1);
    MeasuredObjective obj(study.problem, NoiseModel::gaussian(study.noise_sigma), derive_seed(study.seed, r, 2));
    try {
      const IterateTrace trace = run(local, obj);
      finals[r] = trace.final_x;
      ok[r] = 1;
    } catch (const DivergenceError&) {
      ok[r] = 0;
    }
  });
  std::vector<Vector> kept;
  for (std::size_t r = 0; r < finals.size(); ++r) {
    if (ok[r]) {
      kept.push_back(finals[r]);
    } else {
      ++report.diverged;
    }
  }
  report.empirical = empirical_scaled_errors(kept, *problem.minimizer(), report.prediction.beta, study.iterations);
  report.predicted_trace = report.prediction.covariance.trace();
  report.empirical_trace = report.empirical.covariance.trace();
  return report;
}

}  // namespace spsa::theory

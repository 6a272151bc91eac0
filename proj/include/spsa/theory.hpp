#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "spsa/core.hpp"

namespace spsa::theory {

/// Inputs of the limit-distribution formula for k^{beta/2} (x_k - x*).
struct AsymptoticInputs {
  double a = 0.0;
  double c = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  /// Limit of E[(eps+ - eps-)^2].
  double sigma2 = 0.0;
  Matrix hessian;
  /// Third partial derivative at x*, indices in any order.
  std::function<double(Index, Index, Index)> third;
};

/// Gaussian limit N(mu, P M P^T), with a H(x*) = P diag(lambda) P^T and the
/// columns of P the eigenvectors.
struct NormalityPrediction {
  double beta = 0.0;
  double beta_plus = 0.0;
  Vector lambda;
  Matrix P;
  /// Diagonal of M: (1/4) a^2 c^-2 sigma^2 / (2 lambda_i - beta_plus).
  Vector m_diag;
  Matrix covariance;
  Vector T;
  Vector mu;
  /// True when 3 gamma - alpha/2 = 0, so mu picks up the bias term.
  bool bias_branch = false;
};

/// Tolerance used when comparing alpha to 1 and 3 gamma - alpha/2 to 0.
inline constexpr double kHypothesisTolerance = 1e-9;

/// Throws NotApplicableError naming the violated hypothesis when H is not
/// symmetric positive definite, beta <= 0, 3 gamma - alpha/2 < 0, alpha > 1,
/// or alpha = 1 with beta >= 2 min lambda.
NormalityPrediction predict_asymptotics(const AsymptoticInputs& in);

/// T_l = -(1/6) a c^2 [f_lll + 3 sum_{i != l} f_iil].
Vector bias_term(double a, double c, Index n, const std::function<double(Index, Index, Index)>& third);

/// Var(eps+ - eps-) for independent draws: 2 sigma^2, 0 without noise.
double sigma2_of_noise(const NoiseModel& noise);

struct EmpiricalSummary {
  /// Row r is k^{beta/2} (x_k^(r) - x*).
  Matrix samples;
  Vector mean;
  Matrix covariance;
  Vector skewness;
  Vector excess_kurtosis;
};

inline constexpr std::size_t kMinNormalityReplications = 30;

/// Scaled-error ensemble and its moments. Fewer than 30 iterates is refused.
EmpiricalSummary empirical_scaled_errors(const std::vector<Vector>& final_iterates, const Vector& x_star,
                                         double beta, std::size_t k);

/// Configuration of a Monte Carlo check of the limit distribution using
/// SPSA1-A with standard gains.
struct NormalityStudy {
  std::shared_ptr<const Problem> problem;
  GainSchedule schedule;
  double noise_sigma = 0.01;
  std::size_t replications = 200;
  std::size_t iterations = 10000;
  std::uint64_t seed = 0;
  Vector x0;  // empty: the problem's default start
  unsigned workers = 1;
};

struct NormalityReport {
  NormalityPrediction prediction;
  EmpiricalSummary empirical;
  double predicted_trace = 0.0;
  double empirical_trace = 0.0;
  std::size_t diverged = 0;
};

/// Prediction from the problem's Hessian and third derivatives at its
/// minimizer; throws NotApplicableError when the hypotheses fail.
NormalityPrediction predict_for(const Problem& problem, const GainSchedule& schedule, double noise_sigma);

NormalityReport run_normality_study(const NormalityStudy& study);

}  // namespace spsa::theory

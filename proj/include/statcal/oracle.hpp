#pragma once

#include "statcal/model.hpp"
#include "statcal/objective.hpp"
#include "statcal/types.hpp"

#include <cstdint>
#include <vector>

namespace statcal {

struct Gaussian {
  Vector mean;
  Matrix cov;
};

/// Throws DomainError unless h is symmetric with positive smallest eigenvalue.
void check_linear_params(const LinearModelParams& p);

/// N(h^-1 g, sigma^2 (2h)^-1).
Gaussian ou_stationary(const LinearModelParams& p);

/// Law of X_t given X_0 = x for dX = (g - hX)dt + sigma dW.
Gaussian ou_transition(const LinearModelParams& p, ConstVectorRef x, double t);

/// Stationary expectation of a degree-1 or degree-2 moment or a lagged
/// product under a linear model. Throws DomainError for other statistics.
double linear_expectation(const LinearModelParams& p, const TargetStatistic& stat);

/// Exact stationary J of a model with a linear form.
double linear_objective(const ModelSpec& model, ConstVectorRef theta, const ObjectiveSpec& objective);

struct ErgodicOptions {
  double horizon = 2000.0;
  double dt = 0.01;
  std::uint64_t seed = 0;
  double burn_in = 100.0;
  Index paths = 1;  ///< particles averaged per step; mean-field models need their full ensemble
  Vector x0;        ///< empty: zero
  unsigned threads = 1;
};

struct ErgodicResult {
  double mean = 0.0;
  double std_error = 0.0;  ///< batch means over 20 batches
  Index samples = 0;
};

/// Time average of the statistic along a frozen-theta path of the main
/// process after the burn-in. Throws DivergenceError on blow-up.
ErgodicResult ergodic_average(const ModelSpec& model, ConstVectorRef theta,
                              const TargetStatistic& stat, const ErgodicOptions& options);

struct ErgodicObjective {
  double j = 0.0;
  std::vector<ErgodicResult> statistics;
};

/// sum_n (time average of s_n - beta_n)^2, every statistic on the same path.
ErgodicObjective ergodic_objective(const ModelSpec& model, ConstVectorRef theta,
                                   const ObjectiveSpec& objective, const ErgodicOptions& options);

/// Central differences of the ergodic objective with common random numbers
/// for the +eps and -eps evaluations.
Vector finite_difference_gradient(const ModelSpec& model, ConstVectorRef theta,
                                  const ObjectiveSpec& objective, double eps,
                                  const ErgodicOptions& options);

struct DistributionCheckReport {
  double t = 0.0;
  Index paths = 0;
  Gaussian predicted;
  Gaussian sample;
  Vector z_mean;
  Matrix z_cov;  ///< lower triangle meaningful; upper mirrors it
  double max_abs_z = 0.0;
};

/// Simulates `paths` Euler-Maruyama paths of a linear model from x0 to
/// time t and z-scores sample mean and covariance against ou_transition.
/// Entries with zero predicted spread score 0 on an exact match and
/// +-infinity otherwise.
DistributionCheckReport empirical_distribution_check(const ModelSpec& model, ConstVectorRef theta,
                                                     ConstVectorRef x0, double t, Index paths,
                                                     std::uint64_t seed, double dt = 1e-3,
                                                     unsigned threads = 1);

/// Sample mean and covariance (divisor n) of the columns of `samples`,
/// computed on data shifted by the first column.
Gaussian sample_moments(ConstMatrixRef samples);

}  // namespace statcal

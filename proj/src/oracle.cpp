#include "statcal/oracle.hpp"

#include "statcal/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace statcal {

namespace {

constexpr Index kBatches = 20;

struct Spectral {
  Vector values;
  Matrix vectors;
};

Spectral decompose(const LinearModelParams& p) {
  check_linear_params(p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.h);
  return {es.eigenvalues(), es.eigenvectors()};
}

double z_score(double diff, double variance) {
  if (variance > 0.0) return diff / std::sqrt(variance);
  if (diff == 0.0) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

RunConfig frozen_config(const ModelSpec& model, ConstVectorRef theta, double horizon, double dt,
                        Index paths, std::uint64_t seed, const Vector& x0, unsigned threads) {
  RunConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.batch = paths;
  c.theta0 = theta;
  c.seed = seed;
  c.freeze_theta = true;
  c.tangent_enabled = false;
  c.replica_enabled = false;
  c.threads = threads;
  c.x0 = x0.size() == 0 ? Vector::Zero(model.state_dim) : x0;
  return c;
}

}  // namespace

void check_linear_params(const LinearModelParams& p) {
  const Index d = p.g.size();
  if (d == 0 || p.h.rows() != d || p.h.cols() != d) {
    throw DimensionError("linear model needs g in R^d and h in R^{d x d}");
  }
  if (!p.h.isApprox(p.h.transpose(), 1e-12)) throw DomainError("h must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(p.h, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw DomainError("h must be positive definite");
}

Gaussian ou_stationary(const LinearModelParams& p) {
  const Spectral s = decompose(p);
  const Matrix& v = s.vectors;
  const Vector inv = s.values.cwiseInverse();
  Gaussian out;
  out.mean = v * inv.asDiagonal() * v.transpose() * p.g;
  out.cov = (p.sigma * p.sigma / 2.0) * (v * inv.asDiagonal() * v.transpose());
  return out;
}

Gaussian ou_transition(const LinearModelParams& p, ConstVectorRef x, double t) {
  if (!(t >= 0.0)) throw DomainError("transition time must be non-negative");
  const Spectral s = decompose(p);
  if (x.size() != p.g.size()) throw DimensionError("initial state does not match g");
  const Matrix& v = s.vectors;
  const Vector decay = (-s.values * t).array().exp();
  const Vector decay2 = (-2.0 * s.values * t).array().exp();
  const Vector gain = (Vector::Ones(decay.size()) - decay).cwiseQuotient(s.values);
  const Vector spread = (Vector::Ones(decay.size()) - decay2).cwiseQuotient(s.values);

  Gaussian out;
  out.mean = v * (decay.cwiseProduct(v.transpose() * x) + gain.cwiseProduct(v.transpose() * p.g));
  out.cov = (p.sigma * p.sigma / 2.0) * (v * spread.asDiagonal() * v.transpose());
  return out;
}

double linear_expectation(const LinearModelParams& p, const TargetStatistic& stat) {
  const Gaussian g = ou_stationary(p);
  if (stat.kind == StatisticKind::lagged_product) {
    // E<X_s, X_{s+tau}> = |m|^2 + tr(exp(-h tau) C)
    const Spectral s = decompose(p);
    const Vector decay = (-s.values * stat.lag).array().exp();
    const Matrix e = s.vectors * decay.asDiagonal() * s.vectors.transpose();
    return g.mean.squaredNorm() + (e * g.cov).trace();
  }
  if (stat.degree == 1) return g.mean.sum();
  if (stat.degree == 2) return g.mean.squaredNorm() + g.cov.trace();
  throw DomainError("no closed form for statistic '" + stat.label + "'");
}

double linear_objective(const ModelSpec& model, ConstVectorRef theta, const ObjectiveSpec& objective) {
  if (!model.linear_form) throw DomainError("model '" + model.name + "' has no linear form");
  const LinearModelParams p = model.linear_form(theta);
  double j = 0.0;
  for (const auto& stat : objective.statistics) {
    const double r = linear_expectation(p, stat) - stat.beta;
    j += r * r;
  }
  return j;
}

namespace {

/// Accumulates per-step values into 20 contiguous batches.
class BatchMeans {
 public:
  explicit BatchMeans(Index samples) : samples_(samples), sums_(kBatches, 0.0) {}

  void add(Index index, double value) {
    total_ += value;
    const Index size = samples_ / kBatches;
    if (size > 0 && index < size * kBatches) sums_[static_cast<std::size_t>(index / size)] += value;
  }

  ErgodicResult result() const {
    ErgodicResult r;
    r.samples = samples_;
    r.mean = total_ / static_cast<double>(samples_);
    const Index size = samples_ / kBatches;
    if (size == 0) {
      r.std_error = std::numeric_limits<double>::infinity();
      return r;
    }
    double m = 0.0;
    for (double s : sums_) m += s / static_cast<double>(size);
    m /= kBatches;
    double var = 0.0;
    for (double s : sums_) {
      const double dev = s / static_cast<double>(size) - m;
      var += dev * dev;
    }
    var /= static_cast<double>(kBatches - 1);
    r.std_error = std::sqrt(var / kBatches);
    return r;
  }

 private:
  Index samples_;
  double total_ = 0.0;
  std::vector<double> sums_;
};

/// Batch average of a statistic over the main process.
double path_value(const TargetStatistic& stat, const AlgorithmState& state,
                  const std::optional<EnsembleView>& delayed) {
  const Index n = state.batch();
  double sum = 0.0;
  if (stat.kind == StatisticKind::instantaneous) {
    for (Index i = 0; i < n; ++i) sum += stat.f(state.x.col(i));
  } else {
    for (Index i = 0; i < n; ++i) sum += delayed->x.col(i).dot(state.x.col(i));
  }
  return sum / static_cast<double>(n);
}

}  // namespace

ErgodicObjective ergodic_objective(const ModelSpec& model, ConstVectorRef theta,
                                   const ObjectiveSpec& objective, const ErgodicOptions& o) {
  objective.check();
  if (!(o.burn_in >= 0.0) || !(o.burn_in < o.horizon)) {
    throw ConfigError("burn-in must lie in [0, horizon)");
  }
  const RunConfig c = frozen_config(model, theta, o.horizon, o.dt, o.paths, o.seed, o.x0, o.threads);
  Stepper stepper(model, objective, c);
  AlgorithmState state = initial_state(model, objective, c);
  const Index total = c.steps();
  const auto burn = static_cast<Index>(std::ceil(o.burn_in / o.dt - 1e-9));
  for (const auto& s : objective.statistics) {
    if (s.kind == StatisticKind::lagged_product && lag_in_steps(s.lag, o.dt) > burn) {
      throw ConfigError("burn-in must cover the longest lag");
    }
  }
  const Index window = total - burn;
  if (window < 1) throw ConfigError("averaging window is empty");

  std::vector<BatchMeans> acc(objective.statistics.size(), BatchMeans(window));
  for (Index k = 0; k < total; ++k) {
    stepper.advance(state);
    if (state.step <= burn) continue;
    const Index index = state.step - burn - 1;
    const EnsembleView now = state.view();
    for (std::size_t s = 0; s < objective.statistics.size(); ++s) {
      const auto& stat = objective.statistics[s];
      const std::optional<EnsembleView> delayed =
          stat.kind == StatisticKind::lagged_product ? state.delay_buffers[s].delayed(now)
                                                     : std::nullopt;
      acc[s].add(index, path_value(stat, state, delayed));
    }
  }

  ErgodicObjective out;
  for (std::size_t s = 0; s < acc.size(); ++s) {
    out.statistics.push_back(acc[s].result());
    const double r = out.statistics.back().mean - objective.statistics[s].beta;
    out.j += r * r;
  }
  return out;
}

ErgodicResult ergodic_average(const ModelSpec& model, ConstVectorRef theta,
                              const TargetStatistic& stat, const ErgodicOptions& options) {
  ObjectiveSpec single{{stat}};
  return ergodic_objective(model, theta, single, options).statistics.front();
}

Vector finite_difference_gradient(const ModelSpec& model, ConstVectorRef theta,
                                  const ObjectiveSpec& objective, double eps,
                                  const ErgodicOptions& options) {
  if (!(eps > 0.0)) throw DomainError("finite-difference step must be positive");
  Vector grad(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    Vector plus = theta;
    Vector minus = theta;
    plus[j] += eps;
    minus[j] -= eps;
    const double jp = ergodic_objective(model, plus, objective, options).j;
    const double jm = ergodic_objective(model, minus, objective, options).j;
    grad[j] = (jp - jm) / (2.0 * eps);
  }
  return grad;
}

Gaussian sample_moments(ConstMatrixRef samples) {
  const Index n = samples.cols();
  if (n < 1) throw DimensionError("need at least one sample");
  const Vector shift = samples.col(0);
  const Matrix centred = samples.colwise() - shift;
  const Vector m = centred.rowwise().mean();
  Gaussian out;
  out.mean = shift + m;
  out.cov = (centred * centred.transpose()) / static_cast<double>(n) - m * m.transpose();
  return out;
}

DistributionCheckReport empirical_distribution_check(const ModelSpec& model, ConstVectorRef theta,
                                                     ConstVectorRef x0, double t, Index paths,
                                                     std::uint64_t seed, double dt,
                                                     unsigned threads) {
  if (!model.linear_form) throw DomainError("model '" + model.name + "' has no linear form");
  if (model.interaction != Interaction::none) {
    throw DomainError("empirical check needs a model without interaction");
  }
  if (paths < 2) throw ConfigError("empirical check needs at least two paths");
  const LinearModelParams p = model.linear_form(theta);

  DistributionCheckReport r;
  r.t = t;
  r.paths = paths;
  r.predicted = ou_transition(p, x0, t);

  const ObjectiveSpec dummy{{TargetStatistic::moment(1, 0.0)}};
  const RunConfig c = frozen_config(model, theta, t, dt, paths, seed, x0, threads);
  Stepper stepper(model, dummy, c);
  AlgorithmState state = initial_state(model, dummy, c);
  for (Index k = 0; k < c.steps(); ++k) stepper.advance(state);
  r.sample = sample_moments(state.x);

  const Index d = model.state_dim;
  const double n = static_cast<double>(paths);
  const Matrix& pc = r.predicted.cov;
  r.z_mean = Vector(d);
  r.z_cov = Matrix(d, d);
  for (Index i = 0; i < d; ++i) {
    r.z_mean[i] = z_score(r.sample.mean[i] - r.predicted.mean[i], pc(i, i) / n);
    r.max_abs_z = std::max(r.max_abs_z, std::abs(r.z_mean[i]));
    for (Index j = 0; j <= i; ++j) {
      const double var = (pc(i, i) * pc(j, j) + pc(i, j) * pc(i, j)) / n;
      const double z = z_score(r.sample.cov(i, j) - pc(i, j), var);
      r.z_cov(i, j) = z;
      r.z_cov(j, i) = z;
      r.max_abs_z = std::max(r.max_abs_z, std::abs(z));
    }
  }
  return r;
}

}  // namespace statcal

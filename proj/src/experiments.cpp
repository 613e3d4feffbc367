#include "statcal/experiments.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace statcal {

namespace {

constexpr std::uint64_t kErgodicSeedOffset = 1000003;

Vector scalar(double v) { return Vector::Constant(1, v); }

AcceptanceDescriptor minimizer_check(std::vector<Vector> minimizers, double tolerance) {
  AcceptanceDescriptor a;
  a.kind = AcceptanceKind::minimizer_distance;
  a.minimizers = std::move(minimizers);
  a.threshold = tolerance;
  return a;
}

AcceptanceDescriptor objective_check(AcceptanceKind kind, ObjectiveScale scale, double threshold) {
  AcceptanceDescriptor a;
  a.kind = kind;
  a.scale = scale;
  a.threshold = threshold;
  return a;
}

AcceptanceDescriptor ergodic_check(ObjectiveScale scale, double threshold, double horizon,
                                   Index paths) {
  AcceptanceDescriptor a = objective_check(AcceptanceKind::ergodic_objective, scale, threshold);
  a.ergodic.horizon = horizon;
  a.ergodic.burn_in = 100.0;
  a.ergodic.paths = paths;
  return a;
}

// Stationary OU matching mean m1, second moment m2 and lagged product c at
// lag tau: mean mu/lambda, variance sigma^2/(2 lambda), autocovariance
// variance * exp(-lambda tau).
std::vector<Vector> autocov_minimizers(double m1, double m2, double c, double tau) {
  const double var = m2 - m1 * m1;
  const double rho = (c - m1 * m1) / var;
  if (!(var > 0.0) || !(rho > 0.0 && rho < 1.0) || !(tau > 0.0)) return {};
  const double lambda = -std::log(rho) / tau;
  const double sigma = std::sqrt(2.0 * lambda * var);
  Vector plus(3);
  plus << lambda * m1, lambda, sigma;
  Vector minus = plus;
  minus[2] = -sigma;
  return {plus, minus};
}

std::vector<ExperimentEntry> make_registry() {
  std::vector<ExperimentEntry> r;
  r.push_back({"ou-mean", "OU dX = (theta - X)dt + dW, target E Y = 2",
               [](const BuiltinSetup& s, const BuiltinOptions&) {
                 return minimizer_check({scalar(s.objective.statistics[0].beta)}, 0.15);
               }});
  r.push_back({"ou-second-moment", "OU dX = (theta - X)dt + dW, target E Y^2 = 2",
               [](const BuiltinSetup& s, const BuiltinOptions&) {
                 const double root = std::sqrt(std::max(0.0, s.objective.statistics[0].beta - 0.5));
                 return minimizer_check({scalar(root), scalar(-root)}, 0.15);
               }});
  r.push_back({"ou-two-param", "OU dX = (theta1 - theta2 X)dt + dW, target E Y^2 = 2",
               [](const BuiltinSetup&, const BuiltinOptions&) {
                 return ergodic_check(ObjectiveScale::absolute, 0.05, 10000.0, 1);
               }});
  r.push_back({"cubic", "dX = (theta - X - X^3)dt + dW, target E Y^2 = 2",
               [](const BuiltinSetup&, const BuiltinOptions&) {
                 return ergodic_check(ObjectiveScale::absolute, 0.05, 10000.0, 1);
               }});
  r.push_back({"ou-drift-vol", "OU dX = (theta1 - X)dt + theta2 dW, target E Y^2 = 20",
               [](const BuiltinSetup&, const BuiltinOptions&) {
                 return objective_check(AcceptanceKind::linear_objective,
                                        ObjectiveScale::target_squared, 0.01);
               }});
  r.push_back({"cubic-drift-vol", "dX = (theta1 - X^3)dt + theta2 X dW, target E Y^2 = 10",
               [](const BuiltinSetup&, const BuiltinOptions&) {
                 return ergodic_check(ObjectiveScale::target_squared, 0.01, 10000.0, 1);
               }});
  r.push_back({"multi-ou-independent",
               "m independent OU copies with drift theta1 - theta2 (.) X, target E|Y|^2 = 20",
               [](const BuiltinSetup&, const BuiltinOptions&) {
                 return objective_check(AcceptanceKind::linear_objective, ObjectiveScale::initial,
                                        0.01);
               }});
  r.push_back({"multi-ou-correlated",
               "m-dimensional OU with drift mu - (b b^T + lambda I) X, target E|Y|^2 = 20",
               [](const BuiltinSetup&, const BuiltinOptions&) {
                 return objective_check(AcceptanceKind::linear_objective, ObjectiveScale::initial,
                                        0.01);
               }});
  r.push_back({"mean-field",
               "N interacting particles dX = (theta - (1-k)X - k mean(X) - X^3)dt + dW, target E Y^2 = 2",
               [](const BuiltinSetup& s, const BuiltinOptions&) {
                 return ergodic_check(ObjectiveScale::absolute, 0.05, 500.0, s.config.batch);
               }});
  r.push_back({"path-dependent",
               "dX = (theta - X - k (1/t) int X ds)dt + dW, target E Y = 2",
               [](const BuiltinSetup& s, const BuiltinOptions& o) {
                 return minimizer_check(
                     {scalar(s.objective.statistics[0].beta * (1.0 + o.interaction))}, 0.15);
               }});
  r.push_back({"autocov",
               "OU dX = (mu - lambda X)dt + sigma dW, targets E Y, E Y^2, E Y(t-0.1)Y(t)",
               [](const BuiltinSetup& s, const BuiltinOptions&) {
                 const auto& st = s.objective.statistics;
                 AcceptanceDescriptor a = objective_check(AcceptanceKind::linear_objective,
                                                          ObjectiveScale::absolute, 0.01);
                 a.minimizers = autocov_minimizers(st[0].beta, st[1].beta, st[2].beta, st[2].lag);
                 a.parameter_tolerance = 0.05;
                 return a;
               }});
  return r;
}

double objective_value(const AcceptanceDescriptor& a, const BuiltinSetup& setup,
                       ConstVectorRef theta) {
  try {
    if (a.kind == AcceptanceKind::linear_objective) {
      return linear_objective(setup.model, theta, setup.objective);
    }
    ErgodicOptions o = a.ergodic;
    o.seed = setup.config.seed + kErgodicSeedOffset;
    o.dt = setup.config.dt;
    o.threads = setup.config.threads;
    return ergodic_objective(setup.model, theta, setup.objective, o).j;
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  } catch (const DivergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

const std::vector<ExperimentEntry>& list_experiments() {
  static const std::vector<ExperimentEntry> registry = make_registry();
  return registry;
}

const ExperimentEntry& find_experiment(std::string_view name) {
  for (const auto& e : list_experiments()) {
    if (e.name == name) return e;
  }
  std::string valid;
  for (const auto& e : list_experiments()) valid += (valid.empty() ? "" : ", ") + e.name;
  throw ConfigError("unknown experiment '" + std::string(name) + "'; valid names: " + valid);
}

BuiltinSetup configure_experiment(std::string_view name, const ExperimentOverrides& o) {
  find_experiment(name);
  BuiltinSetup s = builtin(name, o.model);
  RunConfig& c = s.config;
  if (o.seed) c.seed = *o.seed;
  if (o.batch) c.batch = *o.batch;
  if (o.dt) c.dt = *o.dt;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.rate_a) c.schedule.a = *o.rate_a;
  if (o.rate_b) c.schedule.b = *o.rate_b;
  if (o.rate_gamma) c.schedule.gamma = *o.rate_gamma;
  if (o.theta0) c.theta0 = *o.theta0;
  if (o.record_stride) c.record_stride = *o.record_stride;
  if (o.threads) c.threads = *o.threads;
  if (o.warmup_steps) c.warmup_steps = *o.warmup_steps;
  if (o.lag_policy) c.lag_policy = *o.lag_policy;
  if (o.targets) {
    if (o.targets->size() != s.objective.statistics.size()) {
      throw ConfigError("experiment '" + std::string(name) + "' takes " +
                        std::to_string(s.objective.statistics.size()) + " target value(s)");
    }
    for (std::size_t i = 0; i < o.targets->size(); ++i) {
      s.objective.statistics[i].beta = (*o.targets)[i];
    }
  }
  c.validate(s.model, s.objective);
  return s;
}

std::pair<Vector, double> nearest_minimizer(const std::vector<Vector>& minimizers,
                                            ConstVectorRef theta) {
  std::pair<Vector, double> best{Vector(), std::numeric_limits<double>::infinity()};
  for (const auto& m : minimizers) {
    if (m.size() != theta.size()) continue;
    const double d = (theta - m).lpNorm<Eigen::Infinity>();
    if (d < best.second) best = {m, d};
  }
  return best;
}

AcceptanceReport evaluate_acceptance(const ExperimentEntry& entry, const BuiltinSetup& setup,
                                     const BuiltinOptions& options, ConstVectorRef theta) {
  const AcceptanceDescriptor a = entry.acceptance(setup, options);
  AcceptanceReport r;
  r.experiment = entry.name;
  r.final_theta = theta;

  if (!a.minimizers.empty()) {
    const auto [nearest, distance] = nearest_minimizer(a.minimizers, theta);
    if (nearest.size() == theta.size()) {
      for (Index j = 0; j < theta.size(); ++j) {
        r.parameter_relative_errors.push_back(std::abs(theta[j] - nearest[j]) /
                                              std::abs(nearest[j]));
      }
    }
    if (a.kind == AcceptanceKind::minimizer_distance) {
      r.checks.push_back({"minimizer_distance", distance, a.threshold, distance < a.threshold});
    }
  } else if (a.kind == AcceptanceKind::minimizer_distance || a.parameter_tolerance > 0.0) {
    r.checks.push_back({"minimizer_distance", std::numeric_limits<double>::infinity(), a.threshold,
                        false});
  }

  if (a.kind != AcceptanceKind::minimizer_distance) {
    double value = objective_value(a, setup, theta);
    std::string name = a.kind == AcceptanceKind::linear_objective ? "exact_J" : "ergodic_J";
    if (a.scale == ObjectiveScale::target_squared) {
      const double beta = setup.objective.statistics.front().beta;
      value /= beta * beta;
      name += "_over_target_squared";
    } else if (a.scale == ObjectiveScale::initial) {
      value /= objective_value(a, setup, setup.config.theta0);
      name += "_over_initial";
    }
    r.checks.push_back({name, value, a.threshold, value < a.threshold});
  }

  if (a.parameter_tolerance > 0.0) {
    for (std::size_t j = 0; j < r.parameter_relative_errors.size(); ++j) {
      const double e = r.parameter_relative_errors[j];
      r.checks.push_back({"relative_error_theta_" + std::to_string(j), e, a.parameter_tolerance,
                          e < a.parameter_tolerance});
    }
  }

  r.passed = !r.checks.empty();
  for (const auto& c : r.checks) r.passed = r.passed && c.passed;
  return r;
}

ExperimentResult run_experiment(std::string_view name, const ExperimentOverrides& overrides) {
  const ExperimentEntry& entry = find_experiment(name);
  ExperimentResult out{{}, {}, configure_experiment(name, overrides)};
  out.record = run(out.setup.config, out.setup.model, out.setup.objective);
  if (out.record.completed()) {
    out.report = evaluate_acceptance(entry, out.setup, overrides.model, out.record.final_theta);
  } else {
    out.report.experiment = entry.name;
    out.report.passed = false;
    out.report.completed = false;
    out.report.divergence = out.record.diagnostics.divergence->message;
    out.report.final_theta = out.record.final_theta;
  }
  return out;
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string AcceptanceReport::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["passed"] = passed;
  j["completed"] = completed;
  if (!completed) j["divergence"] = divergence;
  j["final_theta"] = nlohmann::json::array();
  for (Index i = 0; i < final_theta.size(); ++i) j["final_theta"].push_back(number(final_theta[i]));
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"measured", number(c.measured)},
                           {"threshold", number(c.threshold)},
                           {"passed", c.passed}});
  }
  if (!parameter_relative_errors.empty()) {
    j["parameter_relative_errors"] = nlohmann::json::array();
    for (double e : parameter_relative_errors) j["parameter_relative_errors"].push_back(number(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace statcal

#pragma once

#include "statcal/builtin_models.hpp"
#include "statcal/integrator.hpp"
#include "statcal/oracle.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace statcal {

/// How an experiment's final parameter is judged.
enum class AcceptanceKind {
  minimizer_distance,  ///< distance to the nearest known minimizer
  linear_objective,    ///< exact stationary J of the linear form
  ergodic_objective,   ///< time-average estimate of J on a frozen path
};

/// What the objective value is compared against.
enum class ObjectiveScale {
  absolute,        ///< J < threshold
  target_squared,  ///< J / beta^2 < threshold, single statistic
  initial,         ///< J(theta_T) / J(theta_0) < threshold
};

struct AcceptanceDescriptor {
  AcceptanceKind kind = AcceptanceKind::minimizer_distance;
  ObjectiveScale scale = ObjectiveScale::absolute;
  double threshold = 0.0;
  /// Known minimizers. For objective checks with a positive
  /// parameter_tolerance each parameter must also lie within that relative
  /// distance of the nearest one.
  std::vector<Vector> minimizers;
  double parameter_tolerance = 0.0;
  ErgodicOptions ergodic;  ///< seed is offset from the run seed
};

struct ExperimentEntry {
  std::string name;
  std::string description;
  /// Descriptor for a configured setup; minimizers follow the targets and
  /// model options actually in use.
  std::function<AcceptanceDescriptor(const BuiltinSetup&, const BuiltinOptions&)> acceptance;
};

/// Registered experiments with one-line descriptions, in display order.
const std::vector<ExperimentEntry>& list_experiments();

/// Throws ConfigError naming the valid identifiers when unknown.
const ExperimentEntry& find_experiment(std::string_view name);

/// Fields left empty keep the registry default.
struct ExperimentOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<Index> batch;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<double> rate_a;
  std::optional<double> rate_b;
  std::optional<double> rate_gamma;
  std::optional<Vector> theta0;
  std::optional<Index> record_stride;
  std::optional<unsigned> threads;
  std::optional<Index> warmup_steps;
  std::optional<LagWarmupPolicy> lag_policy;
  std::optional<std::vector<double>> targets;  ///< one beta per statistic
  BuiltinOptions model;
};

/// Registry setup with the overrides applied.
BuiltinSetup configure_experiment(std::string_view name, const ExperimentOverrides& overrides);

struct AcceptanceCheck {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

struct AcceptanceReport {
  std::string experiment;
  bool passed = false;
  bool completed = true;
  std::string divergence;
  Vector final_theta;
  std::vector<AcceptanceCheck> checks;
  /// Relative error of each parameter against the nearest minimizer, when known.
  std::vector<double> parameter_relative_errors;

  std::string to_json() const;
};

struct ExperimentResult {
  RunRecord record;
  AcceptanceReport report;
  BuiltinSetup setup;
};

/// Runs the experiment and evaluates its acceptance descriptor at the
/// final parameter. A diverged run fails with the divergence recorded.
ExperimentResult run_experiment(std::string_view name, const ExperimentOverrides& overrides = {});

/// Acceptance evaluation on its own, for a parameter obtained elsewhere.
AcceptanceReport evaluate_acceptance(const ExperimentEntry& entry, const BuiltinSetup& setup,
                                     const BuiltinOptions& options, ConstVectorRef theta);

/// Nearest minimizer in the max-norm, with that distance.
std::pair<Vector, double> nearest_minimizer(const std::vector<Vector>& minimizers,
                                            ConstVectorRef theta);

}  // namespace statcal

#pragma once

#include "statcal/integrator.hpp"
#include "statcal/model.hpp"
#include "statcal/objective.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace statcal {

/// Knobs a few built-ins expose.
struct BuiltinOptions {
  Index dim = 3;              ///< m for the multi-dimensional OU models
  double interaction = 1.0;   ///< coupling weight of mean-field / path-dependent terms
  double lambda = 1.0;        ///< isotropic mean reversion of multi-ou-correlated
};

struct BuiltinSetup {
  ModelSpec model;
  ObjectiveSpec objective;
  RunConfig config;
};

/// Registered experiment identifiers, in display order.
const std::vector<std::string>& builtin_names();

/// Model, objective and recommended run configuration of a built-in.
/// Throws ConfigError naming the valid identifiers when `name` is unknown.
BuiltinSetup builtin(std::string_view name, const BuiltinOptions& options = {});

// Individual model factories, usable for custom objectives.
ModelSpec ou_mean_model();
ModelSpec ou_two_param_model();
ModelSpec cubic_model();
ModelSpec ou_drift_vol_model();
ModelSpec cubic_drift_vol_model();
ModelSpec multi_ou_independent_model(Index m);
ModelSpec multi_ou_correlated_model(Index m, double lambda);
/// dX^i = (theta - (1 - k) X^i - k mean_j X^j - (X^i)^3) dt + dW^i
ModelSpec mean_field_model(double coupling);
/// dX = (theta - X - k (1/t) int_0^t X ds) dt + dW
ModelSpec path_dependent_model(double coupling);
ModelSpec autocov_model();
/// dX = (theta - h X)dt + sigma dW with theta = g in R^d.
ModelSpec linear_ou_model(const Matrix& h, double sigma);

}  // namespace statcal

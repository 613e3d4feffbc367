#pragma once

#include "statcal/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace statcal {

/// What, beyond (x, theta), the drift of a model may read.
enum class Interaction {
  none,
  ensemble_mean,  ///< mean over the particles of the same ensemble at the current step
  running_mean,   ///< per-particle time average of the path so far
};

/// How the diffusion matrix is stored. `diagonal` promises that only
/// entries (i, i) of sigma and of every Jacobian slice are non-zero.
enum class DiffusionForm { general, diagonal };

/// Extra drift inputs for interacting models.
///
/// The tangent fields carry the same average applied to the tangent
/// ensemble; the integrator needs them to differentiate through the
/// interaction, the drift itself never reads them.
struct PathContext {
  std::optional<Eigen::Map<const Vector>> ensemble_mean;
  std::optional<Eigen::Map<const Matrix>> tangent_ensemble_mean;
  std::optional<Eigen::Map<const Vector>> running_mean;
  std::optional<Eigen::Map<const Matrix>> tangent_running_mean;

  /// Whichever mean the interaction reads, or throws ContextError.
  Eigen::Map<const Vector> interaction_mean(Interaction kind) const;
};

/// Closed-form OU coefficients dX = (g - hX)dt + sigma dW of a linear model.
struct LinearModelParams {
  Vector g;
  Matrix h;
  double sigma = 1.0;
};

/// A parameterised SDE dX = mu(X, theta) dt + sigma(X, theta) dW together
/// with the Jacobians the tangent process needs.
///
/// All callbacks write into preallocated outputs of the declared shapes.
/// They must be pure: the integrator calls them concurrently.
struct ModelSpec {
  using DriftFn = std::function<void(ConstVectorRef x, ConstVectorRef theta, const PathContext& ctx,
                                     VectorRef out)>;
  using DriftJacFn = std::function<void(ConstVectorRef x, ConstVectorRef theta,
                                        const PathContext& ctx, MatrixRef out)>;
  using DiffusionFn = std::function<void(ConstVectorRef x, ConstVectorRef theta, MatrixRef out)>;
  using DiffusionJacFn = std::function<void(ConstVectorRef x, ConstVectorRef theta, Tensor3& out)>;
  using LinearFormFn = std::function<LinearModelParams(ConstVectorRef theta)>;

  std::string name;
  Index state_dim = 0;
  Index param_dim = 0;
  Index noise_dim = 0;
  Interaction interaction = Interaction::none;
  DiffusionForm diffusion_form = DiffusionForm::general;
  // Promises that the matching diffusion Jacobian is identically zero, letting
  // the integrator skip it.
  bool diffusion_constant_in_x = false;
  bool diffusion_constant_in_theta = false;

  DriftFn drift;
  DriftJacFn drift_jac_x;        // d x d
  DriftJacFn drift_jac_theta;    // d x l
  DriftJacFn drift_jac_context;  // d x d, derivative w.r.t. the interaction mean
  DiffusionFn diffusion;         // d x noise_dim
  DiffusionJacFn diffusion_jac_x;      // d x noise_dim x d
  DiffusionJacFn diffusion_jac_theta;  // d x noise_dim x l

  /// Set for models of OU form with scalar constant volatility; enables
  /// the closed-form oracles.
  LinearFormFn linear_form;

  /// Throws ConfigError when a callback is missing or a dimension is zero.
  void check_complete() const;
};

struct Jacobians {
  Matrix drift_x;
  Matrix drift_theta;
  Tensor3 diffusion_x;
  Tensor3 diffusion_theta;
  /// Empty for models without interaction.
  Matrix drift_context;
};

/// Checked evaluation of mu(x, theta).
Vector evaluate_drift(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta,
                      const PathContext& ctx = {});

/// Checked evaluation of sigma(x, theta), shape d x noise_dim.
Matrix evaluate_diffusion(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta);

/// Checked evaluation of all Jacobians. Constant-diffusion models return
/// zero tensors without calling their Jacobian callbacks.
Jacobians evaluate_jacobians(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta,
                             const PathContext& ctx = {});

/// Throws DimensionError / ContextError when (x, theta, ctx) does not fit the model.
void check_arguments(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta,
                     const PathContext& ctx);

}  // namespace statcal

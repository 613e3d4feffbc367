#include "statcal/model.hpp"

#include <sstream>

namespace statcal {

namespace {

std::string shape_message(const std::string& what, Index expected, Index got) {
  std::ostringstream os;
  os << what << ": expected dimension " << expected << ", got " << got;
  return os.str();
}

}  // namespace

Eigen::Map<const Vector> PathContext::interaction_mean(Interaction kind) const {
  switch (kind) {
    case Interaction::ensemble_mean:
      if (!ensemble_mean) throw ContextError("model requires the ensemble mean in PathContext");
      return *ensemble_mean;
    case Interaction::running_mean:
      if (!running_mean) throw ContextError("model requires the running mean in PathContext");
      return *running_mean;
    case Interaction::none:
      break;
  }
  throw ContextError("model declares no interaction");
}

void ModelSpec::check_complete() const {
  if (state_dim <= 0 || param_dim <= 0 || noise_dim <= 0) {
    throw ConfigError("model '" + name + "': dimensions must be positive");
  }
  if (!drift || !drift_jac_x || !drift_jac_theta || !diffusion) {
    throw ConfigError("model '" + name + "': drift, diffusion and drift Jacobians are required");
  }
  if (!diffusion_constant_in_x && !diffusion_jac_x) {
    throw ConfigError("model '" + name + "': diffusion_jac_x missing for state-dependent diffusion");
  }
  if (!diffusion_constant_in_theta && !diffusion_jac_theta) {
    throw ConfigError("model '" + name +
                      "': diffusion_jac_theta missing for parameter-dependent diffusion");
  }
  if (interaction != Interaction::none && !drift_jac_context) {
    throw ConfigError("model '" + name + "': interacting models must supply drift_jac_context");
  }
  if (diffusion_form == DiffusionForm::diagonal && noise_dim != state_dim) {
    throw ConfigError("model '" + name + "': diagonal diffusion needs noise_dim == state_dim");
  }
}

void check_arguments(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta,
                     const PathContext& ctx) {
  if (x.size() != model.state_dim) throw DimensionError(shape_message("state", model.state_dim, x.size()));
  if (theta.size() != model.param_dim) {
    throw DimensionError(shape_message("parameter", model.param_dim, theta.size()));
  }
  if (model.interaction == Interaction::none) return;
  const auto mean = ctx.interaction_mean(model.interaction);
  if (mean.size() != model.state_dim) {
    throw DimensionError(shape_message("context mean", model.state_dim, mean.size()));
  }
}

Vector evaluate_drift(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta,
                      const PathContext& ctx) {
  check_arguments(model, x, theta, ctx);
  Vector out = Vector::Zero(model.state_dim);
  model.drift(x, theta, ctx, out);
  return out;
}

Matrix evaluate_diffusion(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta) {
  if (x.size() != model.state_dim) throw DimensionError(shape_message("state", model.state_dim, x.size()));
  if (theta.size() != model.param_dim) {
    throw DimensionError(shape_message("parameter", model.param_dim, theta.size()));
  }
  Matrix out = Matrix::Zero(model.state_dim, model.noise_dim);
  model.diffusion(x, theta, out);
  return out;
}

Jacobians evaluate_jacobians(const ModelSpec& model, ConstVectorRef x, ConstVectorRef theta,
                             const PathContext& ctx) {
  check_arguments(model, x, theta, ctx);
  const Index d = model.state_dim;
  const Index n = model.noise_dim;
  const Index l = model.param_dim;
  Jacobians jac{Matrix::Zero(d, d), Matrix::Zero(d, l), Tensor3(d, n, d), Tensor3(d, n, l), {}};
  model.drift_jac_x(x, theta, ctx, jac.drift_x);
  model.drift_jac_theta(x, theta, ctx, jac.drift_theta);
  if (!model.diffusion_constant_in_x) model.diffusion_jac_x(x, theta, jac.diffusion_x);
  if (!model.diffusion_constant_in_theta) model.diffusion_jac_theta(x, theta, jac.diffusion_theta);
  if (model.interaction != Interaction::none) {
    jac.drift_context = Matrix::Zero(d, d);
    model.drift_jac_context(x, theta, ctx, jac.drift_context);
  }
  return jac;
}

}  // namespace statcal

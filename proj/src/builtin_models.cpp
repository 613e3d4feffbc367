#include "statcal/builtin_models.hpp"

#include <algorithm>

namespace statcal {

namespace {

// Unit-volatility helpers shared by the additive-noise models.
void identity_diffusion(ConstVectorRef, ConstVectorRef, MatrixRef out) {
  out.setIdentity();
}

ModelSpec additive_base(std::string name, Index d, Index l) {
  ModelSpec m;
  m.name = std::move(name);
  m.state_dim = d;
  m.param_dim = l;
  m.noise_dim = d;
  m.diffusion_form = DiffusionForm::diagonal;
  m.diffusion_constant_in_x = true;
  m.diffusion_constant_in_theta = true;
  m.diffusion = identity_diffusion;
  return m;
}

RunConfig base_config(Vector theta0, Index batch, double horizon, LearningRateSchedule schedule) {
  RunConfig c;
  c.dt = 0.01;
  c.horizon = horizon;
  c.batch = batch;
  c.schedule = schedule;
  c.theta0 = std::move(theta0);
  c.record_stride = 100;
  c.seed = 1;
  return c;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

ModelSpec ou_mean_model() {
  ModelSpec m = additive_base("ou-mean", 1, 1);
  m.drift = [](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out[0] = th[0] - x[0];
  };
  m.drift_jac_x = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -1.0;
  };
  m.drift_jac_theta = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
  };
  m.linear_form = [](ConstVectorRef th) {
    return LinearModelParams{th, Matrix::Identity(1, 1), 1.0};
  };
  return m;
}

ModelSpec ou_two_param_model() {
  ModelSpec m = additive_base("ou-two-param", 1, 2);
  m.drift = [](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out[0] = th[0] - th[1] * x[0];
  };
  m.drift_jac_x = [](ConstVectorRef, ConstVectorRef th, const PathContext&, MatrixRef out) {
    out(0, 0) = -th[1];
  };
  m.drift_jac_theta = [](ConstVectorRef x, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
    out(0, 1) = -x[0];
  };
  m.linear_form = [](ConstVectorRef th) {
    return LinearModelParams{th.head(1), Matrix::Constant(1, 1, th[1]), 1.0};
  };
  return m;
}

ModelSpec cubic_model() {
  ModelSpec m = additive_base("cubic", 1, 1);
  m.drift = [](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out[0] = th[0] - x[0] - x[0] * x[0] * x[0];
  };
  m.drift_jac_x = [](ConstVectorRef x, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -1.0 - 3.0 * x[0] * x[0];
  };
  m.drift_jac_theta = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
  };
  return m;
}

ModelSpec ou_drift_vol_model() {
  ModelSpec m = additive_base("ou-drift-vol", 1, 2);
  m.diffusion_constant_in_theta = false;
  m.drift = [](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out[0] = th[0] - x[0];
  };
  m.drift_jac_x = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -1.0;
  };
  m.drift_jac_theta = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
    out(0, 1) = 0.0;
  };
  m.diffusion = [](ConstVectorRef, ConstVectorRef th, MatrixRef out) { out(0, 0) = th[1]; };
  m.diffusion_jac_theta = [](ConstVectorRef, ConstVectorRef, Tensor3& out) {
    out(0, 0, 0) = 0.0;
    out(0, 0, 1) = 1.0;
  };
  m.linear_form = [](ConstVectorRef th) {
    return LinearModelParams{th.head(1), Matrix::Identity(1, 1), std::abs(th[1])};
  };
  return m;
}

ModelSpec cubic_drift_vol_model() {
  ModelSpec m = additive_base("cubic-drift-vol", 1, 2);
  m.diffusion_constant_in_x = false;
  m.diffusion_constant_in_theta = false;
  m.drift = [](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out[0] = th[0] - x[0] * x[0] * x[0];
  };
  m.drift_jac_x = [](ConstVectorRef x, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -3.0 * x[0] * x[0];
  };
  m.drift_jac_theta = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
    out(0, 1) = 0.0;
  };
  m.diffusion = [](ConstVectorRef x, ConstVectorRef th, MatrixRef out) { out(0, 0) = th[1] * x[0]; };
  m.diffusion_jac_x = [](ConstVectorRef, ConstVectorRef th, Tensor3& out) { out(0, 0, 0) = th[1]; };
  m.diffusion_jac_theta = [](ConstVectorRef x, ConstVectorRef, Tensor3& out) {
    out(0, 0, 0) = 0.0;
    out(0, 0, 1) = x[0];
  };
  return m;
}

ModelSpec multi_ou_independent_model(Index dim) {
  if (dim < 1) throw ConfigError("multi-ou-independent needs dim >= 1");
  ModelSpec m = additive_base("multi-ou-independent", dim, 2 * dim);
  // theta = (theta^1, theta^2): drift theta^1 - theta^2 (.) x
  m.drift = [dim](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out = th.head(dim) - th.tail(dim).cwiseProduct(x);
  };
  m.drift_jac_x = [dim](ConstVectorRef, ConstVectorRef th, const PathContext&, MatrixRef out) {
    out.setZero();
    out.diagonal() = -th.tail(dim);
  };
  m.drift_jac_theta = [dim](ConstVectorRef x, ConstVectorRef, const PathContext&, MatrixRef out) {
    out.setZero();
    out.leftCols(dim).diagonal().setOnes();
    out.rightCols(dim).diagonal() = -x;
  };
  m.linear_form = [dim](ConstVectorRef th) {
    return LinearModelParams{th.head(dim), Matrix(th.tail(dim).asDiagonal()), 1.0};
  };
  return m;
}

ModelSpec multi_ou_correlated_model(Index dim, double lambda) {
  if (dim < 1) throw ConfigError("multi-ou-correlated needs dim >= 1");
  if (!(lambda > 0.0)) throw ConfigError("multi-ou-correlated needs lambda > 0");
  ModelSpec m = additive_base("multi-ou-correlated", dim, 2 * dim);
  // theta = (mu, b): drift mu - (b b^T + lambda I) x
  m.drift = [dim, lambda](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    const auto b = th.tail(dim);
    out = th.head(dim) - b * b.dot(x) - lambda * x;
  };
  m.drift_jac_x = [dim, lambda](ConstVectorRef, ConstVectorRef th, const PathContext&, MatrixRef out) {
    const auto b = th.tail(dim);
    out.noalias() = -b * b.transpose();
    out.diagonal().array() -= lambda;
  };
  m.drift_jac_theta = [dim](ConstVectorRef x, ConstVectorRef th, const PathContext&, MatrixRef out) {
    const auto b = th.tail(dim);
    out.setZero();
    out.leftCols(dim).diagonal().setOnes();
    // d/db_i of -(b b^T) x = -(b.x) e_i - x_i b
    auto right = out.rightCols(dim);
    right.noalias() = -b * x.transpose();
    right.diagonal().array() -= b.dot(x);
  };
  m.linear_form = [dim, lambda](ConstVectorRef th) {
    const Vector b = th.tail(dim);
    Matrix h = b * b.transpose();
    h.diagonal().array() += lambda;
    return LinearModelParams{th.head(dim), h, 1.0};
  };
  return m;
}

ModelSpec mean_field_model(double coupling) {
  ModelSpec m = additive_base("mean-field", 1, 1);
  m.interaction = Interaction::ensemble_mean;
  m.drift = [coupling](ConstVectorRef x, ConstVectorRef th, const PathContext& ctx, VectorRef out) {
    const double mean = ctx.interaction_mean(Interaction::ensemble_mean)[0];
    out[0] = th[0] - (1.0 - coupling) * x[0] - coupling * mean - x[0] * x[0] * x[0];
  };
  m.drift_jac_x = [coupling](ConstVectorRef x, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -(1.0 - coupling) - 3.0 * x[0] * x[0];
  };
  m.drift_jac_theta = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
  };
  m.drift_jac_context = [coupling](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -coupling;
  };
  return m;
}

ModelSpec path_dependent_model(double coupling) {
  ModelSpec m = additive_base("path-dependent", 1, 1);
  m.interaction = Interaction::running_mean;
  m.drift = [coupling](ConstVectorRef x, ConstVectorRef th, const PathContext& ctx, VectorRef out) {
    out[0] = th[0] - x[0] - coupling * ctx.interaction_mean(Interaction::running_mean)[0];
  };
  m.drift_jac_x = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -1.0;
  };
  m.drift_jac_theta = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
  };
  m.drift_jac_context = [coupling](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = -coupling;
  };
  return m;
}

ModelSpec autocov_model() {
  ModelSpec m = additive_base("autocov", 1, 3);
  m.diffusion_constant_in_theta = false;
  // theta = (mu, lambda, sigma)
  m.drift = [](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out[0] = th[0] - th[1] * x[0];
  };
  m.drift_jac_x = [](ConstVectorRef, ConstVectorRef th, const PathContext&, MatrixRef out) {
    out(0, 0) = -th[1];
  };
  m.drift_jac_theta = [](ConstVectorRef x, ConstVectorRef, const PathContext&, MatrixRef out) {
    out(0, 0) = 1.0;
    out(0, 1) = -x[0];
    out(0, 2) = 0.0;
  };
  m.diffusion = [](ConstVectorRef, ConstVectorRef th, MatrixRef out) { out(0, 0) = th[2]; };
  m.diffusion_jac_theta = [](ConstVectorRef, ConstVectorRef, Tensor3& out) {
    out(0, 0, 0) = 0.0;
    out(0, 0, 1) = 0.0;
    out(0, 0, 2) = 1.0;
  };
  m.linear_form = [](ConstVectorRef th) {
    return LinearModelParams{th.head(1), Matrix::Constant(1, 1, th[1]), std::abs(th[2])};
  };
  return m;
}

ModelSpec linear_ou_model(const Matrix& h, double sigma) {
  const Index d = h.rows();
  if (d < 1 || h.cols() != d) throw DimensionError("h must be square");
  ModelSpec m = additive_base("linear-ou", d, d);
  m.diffusion = [sigma](ConstVectorRef, ConstVectorRef, MatrixRef out) {
    out.setZero();
    out.diagonal().setConstant(sigma);
  };
  m.drift = [h](ConstVectorRef x, ConstVectorRef th, const PathContext&, VectorRef out) {
    out.noalias() = th - h * x;
  };
  m.drift_jac_x = [h](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out = -h;
  };
  m.drift_jac_theta = [](ConstVectorRef, ConstVectorRef, const PathContext&, MatrixRef out) {
    out.setIdentity();
  };
  m.linear_form = [h, sigma](ConstVectorRef th) { return LinearModelParams{th, h, sigma}; };
  return m;
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{
      "ou-mean",         "ou-second-moment",     "ou-two-param",        "cubic",
      "ou-drift-vol",    "cubic-drift-vol",      "multi-ou-independent", "multi-ou-correlated",
      "mean-field",      "path-dependent",       "autocov"};
  return names;
}

BuiltinSetup builtin(std::string_view name, const BuiltinOptions& opt) {
  const LearningRateSchedule harmonic{1.0, 10.0, 1.0};

  if (name == "ou-mean") {
    return {ou_mean_model(), {{TargetStatistic::moment(1, 2.0)}},
            base_config(vec({0.0}), 10, 500.0, harmonic)};
  }
  if (name == "ou-second-moment") {
    return {ou_mean_model(), {{TargetStatistic::moment(2, 2.0)}},
            base_config(vec({0.5}), 40, 1000.0, harmonic)};
  }
  if (name == "ou-two-param") {
    return {ou_two_param_model(), {{TargetStatistic::moment(2, 2.0)}},
            base_config(vec({0.5, 1.0}), 20, 4000.0, harmonic)};
  }
  if (name == "cubic") {
    return {cubic_model(), {{TargetStatistic::moment(2, 2.0)}},
            base_config(vec({0.0}), 100, 500.0, harmonic)};
  }
  if (name == "ou-drift-vol") {
    return {ou_drift_vol_model(), {{TargetStatistic::moment(2, 20.0)}},
            base_config(vec({1.0, 1.0}), 100, 500.0, {0.01, 10.0, 1.0})};
  }
  if (name == "cubic-drift-vol") {
    return {cubic_drift_vol_model(), {{TargetStatistic::moment(2, 10.0)}},
            base_config(vec({1.0, 1.0}), 100, 500.0, {0.5, 10.0, 1.0})};
  }
  if (name == "multi-ou-independent") {
    const Index m = opt.dim;
    Vector th0(2 * m);
    th0 << Vector::Constant(m, 0.5), Vector::Ones(m);
    return {multi_ou_independent_model(m), {{TargetStatistic::moment(2, 20.0)}},
            base_config(th0, 50, 1000.0, {0.005, 10.0, 1.0})};
  }
  if (name == "multi-ou-correlated") {
    const Index m = opt.dim;
    Vector th0(2 * m);
    th0 << Vector::Constant(m, 0.5), Vector::Constant(m, 0.5);
    return {multi_ou_correlated_model(m, opt.lambda), {{TargetStatistic::moment(2, 20.0)}},
            base_config(th0, 20, 500.0, {0.01, 10.0, 1.0})};
  }
  if (name == "mean-field") {
    return {mean_field_model(opt.interaction), {{TargetStatistic::moment(2, 2.0)}},
            base_config(vec({0.0}), 100, 500.0, harmonic)};
  }
  if (name == "path-dependent") {
    return {path_dependent_model(opt.interaction), {{TargetStatistic::moment(1, 2.0)}},
            base_config(vec({0.0}), 10, 500.0, harmonic)};
  }
  if (name == "autocov") {
    ObjectiveSpec obj{{TargetStatistic::moment(1, 1.0), TargetStatistic::moment(2, 2.0),
                       TargetStatistic::lagged_product(0.1, 1.6)}};
    return {autocov_model(), obj, base_config(vec({1.0, 1.0, 1.0}), 100, 8000.0, {1.0, 200.0, 1.0})};
  }

  std::string valid;
  for (const auto& n : builtin_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown experiment '" + std::string(name) + "'; valid names: " + valid);
}

}  // namespace statcal

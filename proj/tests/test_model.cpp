#include "statcal/builtin_models.hpp"
#include "statcal/model.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace statcal {
namespace {

using testing::Gen;
using testing::OwnedContext;

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

TEST(Drift, OuMeanAtOrigin) {
  const ModelSpec m = ou_mean_model();
  EXPECT_DOUBLE_EQ(evaluate_drift(m, v({0.0}), v({2.0}))[0], 2.0);
}

TEST(Drift, CubicAtOne) {
  const ModelSpec m = cubic_model();
  EXPECT_DOUBLE_EQ(evaluate_drift(m, v({1.0}), v({0.0}))[0], -2.0);
}

TEST(Drift, TwoParamOu) {
  const ModelSpec m = ou_two_param_model();
  EXPECT_DOUBLE_EQ(evaluate_drift(m, v({3.0}), v({1.0, 2.0}))[0], -5.0);
}

TEST(Jacobians, TwoParamOu) {
  const ModelSpec m = ou_two_param_model();
  const Jacobians j = evaluate_jacobians(m, v({3.0}), v({1.0, 2.0}));
  EXPECT_DOUBLE_EQ(j.drift_theta(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(j.drift_theta(0, 1), -3.0);
  EXPECT_DOUBLE_EQ(j.drift_x(0, 0), -2.0);
}

TEST(Jacobians, Cubic) {
  const ModelSpec m = cubic_model();
  const Jacobians j = evaluate_jacobians(m, v({1.0}), v({0.0}));
  EXPECT_DOUBLE_EQ(j.drift_x(0, 0), -4.0);
  EXPECT_DOUBLE_EQ(j.drift_theta(0, 0), 1.0);
}

TEST(Jacobians, ParametricVolatility) {
  const ModelSpec m = ou_drift_vol_model();
  const Jacobians j = evaluate_jacobians(m, v({0.4}), v({1.0, 2.0}));
  EXPECT_DOUBLE_EQ(j.diffusion_theta(0, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(j.diffusion_theta(0, 0, 0), 0.0);
  EXPECT_TRUE(j.diffusion_x.is_zero());
}

TEST(Jacobians, ConstantDiffusionTensorsAreExactlyZero) {
  for (const ModelSpec& m : testing::all_builtin_models()) {
    if (!m.diffusion_constant_in_x && !m.diffusion_constant_in_theta) continue;
    OwnedContext oc(m, Vector::Constant(m.state_dim, 0.3));
    const Jacobians j = evaluate_jacobians(m, Vector::Constant(m.state_dim, 0.7),
                                           Vector::Constant(m.param_dim, 0.9), oc.ctx);
    if (m.diffusion_constant_in_x) {
      EXPECT_TRUE(j.diffusion_x.has_shape(m.state_dim, m.noise_dim, m.state_dim)) << m.name;
      EXPECT_TRUE(j.diffusion_x.is_zero()) << m.name;
    }
    if (m.diffusion_constant_in_theta) {
      EXPECT_TRUE(j.diffusion_theta.has_shape(m.state_dim, m.noise_dim, m.param_dim)) << m.name;
      EXPECT_TRUE(j.diffusion_theta.is_zero()) << m.name;
    }
  }
}

// Central differences of every coefficient against the analytic Jacobians.
TEST(JacobiansProperty, MatchFiniteDifferencesForEveryBuiltin) {
  constexpr double h = 1e-5;
  constexpr double rel = 1e-6;
  Gen gen(20240611);
  for (const ModelSpec& m : testing::all_builtin_models()) {
    const Index d = m.state_dim;
    const Index l = m.param_dim;
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = gen.vector(d, -2.0, 2.0);
      const Vector th = gen.vector(l, 0.2, 2.0);
      OwnedContext oc(m, gen.vector(d, -1.0, 1.0));
      const Jacobians j = evaluate_jacobians(m, x, th, oc.ctx);

      for (Index k = 0; k < d; ++k) {
        Vector xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Vector fd = (evaluate_drift(m, xp, th, oc.ctx) - evaluate_drift(m, xm, th, oc.ctx)) / (2 * h);
        const Matrix sd = (evaluate_diffusion(m, xp, th) - evaluate_diffusion(m, xm, th)) / (2 * h);
        for (Index r = 0; r < d; ++r) {
          ASSERT_TRUE(testing::close(j.drift_x(r, k), fd[r], rel)) << m.name << " mu_x";
          for (Index c = 0; c < m.noise_dim; ++c) {
            ASSERT_TRUE(testing::close(j.diffusion_x(r, c, k), sd(r, c), rel)) << m.name << " sigma_x";
          }
        }
      }
      for (Index k = 0; k < l; ++k) {
        Vector tp = th, tm = th;
        tp[k] += h;
        tm[k] -= h;
        const Vector fd = (evaluate_drift(m, x, tp, oc.ctx) - evaluate_drift(m, x, tm, oc.ctx)) / (2 * h);
        const Matrix sd = (evaluate_diffusion(m, x, tp) - evaluate_diffusion(m, x, tm)) / (2 * h);
        for (Index r = 0; r < d; ++r) {
          ASSERT_TRUE(testing::close(j.drift_theta(r, k), fd[r], rel)) << m.name << " mu_theta";
          for (Index c = 0; c < m.noise_dim; ++c) {
            ASSERT_TRUE(testing::close(j.diffusion_theta(r, c, k), sd(r, c), rel))
                << m.name << " sigma_theta";
          }
        }
      }
      if (m.interaction != Interaction::none) {
        for (Index k = 0; k < d; ++k) {
          const Vector base = oc.mean;
          oc.mean[k] = base[k] + h;
          const Vector up = evaluate_drift(m, x, th, oc.ctx);
          oc.mean[k] = base[k] - h;
          const Vector down = evaluate_drift(m, x, th, oc.ctx);
          oc.mean = base;
          for (Index r = 0; r < d; ++r) {
            ASSERT_TRUE(testing::close(j.drift_context(r, k), (up[r] - down[r]) / (2 * h), rel))
                << m.name << " mu_m";
          }
        }
      }
    }
  }
}

TEST(MeanField, SelfInteractionReducesToSingleParticleFormula) {
  Gen gen(7);
  for (double k : {0.0, 0.3, 1.0}) {
    const ModelSpec m = mean_field_model(k);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = gen.vector(1, -2.0, 2.0);
      const Vector th = gen.vector(1, -2.0, 2.0);
      OwnedContext oc(m, x);
      const double expected = th[0] - x[0] - x[0] * x[0] * x[0];
      EXPECT_NEAR(evaluate_drift(m, x, th, oc.ctx)[0], expected, 1e-14);
    }
  }
}

TEST(MeanField, ZeroCouplingIgnoresTheMean) {
  const ModelSpec mf = mean_field_model(0.0);
  const ModelSpec cubic = cubic_model();
  OwnedContext oc(mf, v({5.0}));
  EXPECT_EQ(evaluate_drift(mf, v({0.8}), v({0.3}), oc.ctx)[0],
            evaluate_drift(cubic, v({0.8}), v({0.3}))[0]);
}

TEST(Context, MissingInteractionMeanIsAnError) {
  EXPECT_THROW(evaluate_drift(mean_field_model(1.0), v({0.0}), v({0.0})), ContextError);
  EXPECT_THROW(evaluate_drift(path_dependent_model(1.0), v({0.0}), v({0.0})), ContextError);
}

TEST(Context, ContextIsIgnoredByNonInteractingModels) {
  const ModelSpec mf = mean_field_model(1.0);
  OwnedContext oc(mf, v({1.0}));
  EXPECT_EQ(evaluate_drift(ou_mean_model(), v({0.5}), v({2.0}), oc.ctx)[0],
            evaluate_drift(ou_mean_model(), v({0.5}), v({2.0}))[0]);
}

TEST(Context, DiffusionNeedsNoContext) {
  EXPECT_NO_THROW(evaluate_diffusion(mean_field_model(1.0), v({0.0}), v({0.0})));
}

TEST(Shapes, DimensionMismatchIsAnError) {
  const ModelSpec m = ou_two_param_model();
  EXPECT_THROW(evaluate_drift(m, v({0.0, 1.0}), v({1.0, 2.0})), DimensionError);
  EXPECT_THROW(evaluate_drift(m, v({0.0}), v({1.0})), DimensionError);
  EXPECT_THROW(evaluate_jacobians(m, v({0.0}), v({1.0, 2.0, 3.0})), DimensionError);
}

TEST(Registry, OuMeanTargets) {
  const BuiltinSetup s = builtin("ou-mean");
  EXPECT_EQ(s.model.state_dim, 1);
  EXPECT_EQ(s.model.param_dim, 1);
  ASSERT_EQ(s.objective.statistics.size(), 1U);
  EXPECT_EQ(s.objective.statistics[0].beta, 2.0);
  EXPECT_EQ(s.objective.statistics[0].degree, 1);
}

TEST(Registry, TwoParamBatch) {
  const BuiltinSetup s = builtin("ou-two-param");
  EXPECT_EQ(s.objective.statistics[0].degree, 2);
  EXPECT_EQ(s.objective.statistics[0].beta, 2.0);
  EXPECT_EQ(s.config.batch, 20);
}

TEST(Registry, AutocovTargets) {
  const BuiltinSetup s = builtin("autocov");
  ASSERT_EQ(s.objective.statistics.size(), 3U);
  EXPECT_EQ(s.objective.statistics[0].beta, 1.0);
  EXPECT_EQ(s.objective.statistics[1].beta, 2.0);
  EXPECT_EQ(s.objective.statistics[2].beta, 1.6);
  EXPECT_EQ(s.objective.statistics[2].kind, StatisticKind::lagged_product);
  EXPECT_DOUBLE_EQ(s.objective.statistics[2].lag, 0.1);
}

TEST(Registry, CorrelatedOuDimensions) {
  for (Index m : {3, 10}) {
    BuiltinOptions o;
    o.dim = m;
    const BuiltinSetup s = builtin("multi-ou-correlated", o);
    EXPECT_EQ(s.model.state_dim, m);
    EXPECT_EQ(s.model.param_dim, 2 * m);
    const LinearModelParams p = s.model.linear_form(Vector::Zero(2 * m));
    EXPECT_TRUE(p.h.isApprox(Matrix::Identity(m, m)));
  }
}

TEST(Registry, UnknownNameListsValidNames) {
  try {
    builtin("nope");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("ou-mean"), std::string::npos);
    EXPECT_NE(msg.find("autocov"), std::string::npos);
  }
}

TEST(Registry, EveryEntryIsComplete) {
  for (const auto& name : builtin_names()) {
    const BuiltinSetup s = builtin(name);
    EXPECT_NO_THROW(s.model.check_complete()) << name;
    EXPECT_NO_THROW(s.config.validate(s.model, s.objective)) << name;
  }
}

}  // namespace
}  // namespace statcal

#include "statcal/objective.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

namespace statcal {
namespace {

using testing::Gen;

Matrix m1(double v) { return Matrix::Constant(1, 1, v); }

Matrix row(std::initializer_list<double> xs) {
  Matrix out(1, static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) out(0, i++) = x;
  return out;
}

TEST(StatisticValue, Examples) {
  const Vector two = Vector::Constant(1, 2.0);
  EXPECT_EQ(*statistic_value(TargetStatistic::moment(1, 0.0), two), 2.0);

  Vector y(2);
  y << 1.0, 2.0;
  EXPECT_EQ(*statistic_value(TargetStatistic::moment(2, 0.0), y), 5.0);

  const double c = 1.7;
  const Vector cv = Vector::Constant(1, c);
  EXPECT_EQ(*statistic_value(TargetStatistic::lagged_product(0.1, 0.0), cv, ConstVectorRef(cv)), c * c);
}

TEST(StatisticValue, LaggedWithoutHistoryIsNotReady) {
  EXPECT_FALSE(statistic_value(TargetStatistic::lagged_product(0.1, 0.0), Vector::Ones(1)).has_value());
}

TEST(GradientContribution, Examples) {
  {
    const Matrix x = m1(0.3), xt = m1(5.0), xb = m1(2.0);
    const Contribution c = gradient_contribution(TargetStatistic::moment(1, 2.0), make_view(x, xt, xb));
    EXPECT_EQ(c.gradient[0], 0.0);
    EXPECT_FALSE(c.warming);
  }
  {
    const Matrix x = m1(1.0), xt = m1(0.5), xb = m1(1.0);
    const Contribution c = gradient_contribution(TargetStatistic::moment(2, 2.0), make_view(x, xt, xb));
    EXPECT_EQ(c.gradient[0], -2.0);
    EXPECT_EQ(c.residual, -1.0);
  }
  {
    const Matrix x = row({0.4, -3.0}), xt = row({1.0, 7.0}), xb = row({0.0, 2.0});
    const Contribution c = gradient_contribution(TargetStatistic::moment(1, 1.0), make_view(x, xt, xb));
    EXPECT_EQ(c.gradient[0], 0.0);
  }
}

TEST(GradientContribution, SingleParticleMatchesUnbatchedFormulaBitExactly) {
  Gen gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Index d = gen.index(1, 4);
    const Index l = gen.index(1, 3);
    const int degree = static_cast<int>(gen.index(1, 4));
    const TargetStatistic s = TargetStatistic::moment(degree, gen.uniform(-2.0, 2.0));
    const Matrix x = gen.vector(d, -2.0, 2.0);
    const Matrix xb = gen.vector(d, -2.0, 2.0);
    Matrix xt(d, l);
    for (Index j = 0; j < l; ++j) xt.col(j) = gen.vector(d, -1.0, 1.0);

    const Contribution c = gradient_contribution(s, make_view(x, xt, xb));
    Vector grad(d);
    s.grad_f(x.col(0), grad);
    Vector expected(l);
    for (Index j = 0; j < l; ++j) expected[j] = 2.0 * (s.f(xb.col(0)) - s.beta) * xt.col(j).dot(grad);
    for (Index j = 0; j < l; ++j) {
      EXPECT_EQ(std::memcmp(&c.gradient[j], &expected[j], sizeof(double)), 0);
    }
  }
}

TEST(GradientContribution, ReplicaOnTargetGivesExactlyZero) {
  Gen gen(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = gen.index(1, 8);
    // Quarter-integer targets keep the batch sum exact.
    const double beta = static_cast<double>(gen.index(-12, 12)) / 4.0;
    const Matrix x = gen.vector(n, -2.0, 2.0).transpose();
    const Matrix xt = gen.vector(n, -2.0, 2.0).transpose();
    const Matrix xb = Matrix::Constant(1, n, beta);
    const Contribution c = gradient_contribution(TargetStatistic::moment(1, beta), make_view(x, xt, xb));
    EXPECT_EQ(c.residual, 0.0);
    EXPECT_EQ(c.gradient[0], 0.0);
  }
}

TEST(GradientContribution, MismatchedEnsemblesAreRejected) {
  const Matrix x = row({1.0, 2.0}), xt = row({1.0, 2.0}), xb = row({1.0});
  EXPECT_THROW(gradient_contribution(TargetStatistic::moment(1, 0.0), make_view(x, xt, xb)),
               DimensionError);
}

// Straight-line evaluation of the lagged contribution on X_t = e^{-t},
// with tangent -t e^{-t} and replica equal to the main path.
TEST(GradientContribution, LaggedExponentialPathMatchesDirectEvaluation) {
  constexpr double dt = 0.01;
  constexpr double tau = 0.1;
  const Index lag = lag_in_steps(tau, dt);
  const TargetStatistic s = TargetStatistic::lagged_product(tau, 0.3);
  DelayBuffer buffer(lag);
  Gen gen(13);
  std::vector<Index> probes;
  for (int i = 0; i < 10; ++i) probes.push_back(gen.index(lag, 500));
  for (Index k = 0; k <= 500; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Matrix x = m1(std::exp(-t));
    const Matrix xt = m1(-t * std::exp(-t));
    const EnsembleView now = make_view(x, xt, x);
    const auto delayed = buffer.delayed(now);
    EXPECT_EQ(delayed.has_value(), k >= lag);
    if (std::find(probes.begin(), probes.end(), k) != probes.end()) {
      const Contribution c = gradient_contribution(s, now, delayed);
      const double ts = t - tau;
      const double y = std::exp(-t);
      const double ys = std::exp(-ts);
      const double expected = 2.0 * (ys * y - 0.3) * (-ts * ys * y + ys * -t * y);
      EXPECT_NEAR(c.gradient[0], expected, 1e-12 * std::max(1.0, std::abs(expected))) << "t = " << t;
    }
    buffer.push(now);
  }
}

TEST(GradientContribution, LaggedWarmingContributesZeroWithFlag) {
  const Matrix x = m1(1.0), xt = m1(1.0), xb = m1(1.0);
  DelayBuffer buffer(3);
  const EnsembleView now = make_view(x, xt, xb);
  const Contribution c = gradient_contribution(TargetStatistic::lagged_product(0.03, 0.0), now,
                                               buffer.delayed(now));
  EXPECT_TRUE(c.warming);
  EXPECT_EQ(c.gradient[0], 0.0);
}

TEST(GradientFn, MatchesCentralDifferences) {
  constexpr double h = 1e-6;
  Gen gen(17);
  for (int degree = 1; degree <= 4; ++degree) {
    const TargetStatistic s = TargetStatistic::moment(degree, 0.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Index d = gen.index(1, 5);
      const Vector y = gen.vector(d, -2.0, 2.0);
      Vector grad(d);
      s.grad_f(y, grad);
      for (Index k = 0; k < d; ++k) {
        Vector yp = y, ym = y;
        yp[k] += h;
        ym[k] -= h;
        const double fd = (s.f(yp) - s.f(ym)) / (2 * h);
        EXPECT_TRUE(testing::close(grad[k], fd, 1e-6)) << degree << " " << grad[k] << " " << fd;
      }
    }
  }
}

TEST(DelayBuffer, ReturnsSnapshotExactlyLagPushesOld) {
  DelayBuffer buffer(4);
  std::vector<Matrix> xs;
  for (int k = 0; k < 12; ++k) {
    xs.push_back(m1(static_cast<double>(k)));
    const EnsembleView now = make_view(xs.back(), xs.back(), xs.back());
    const auto delayed = buffer.delayed(now);
    if (k < 4) {
      EXPECT_FALSE(delayed.has_value());
    } else {
      ASSERT_TRUE(delayed.has_value());
      EXPECT_EQ(delayed->x(0, 0), k - 4.0);
    }
    buffer.push(now);
  }
}

TEST(DelayBuffer, ZeroLagReadsCurrent) {
  DelayBuffer buffer(0);
  const Matrix x = m1(3.0);
  const auto delayed = buffer.delayed(make_view(x, x, x));
  ASSERT_TRUE(delayed.has_value());
  EXPECT_EQ(delayed->x(0, 0), 3.0);
}

TEST(LagInSteps, RequiresIntegralRatio) {
  EXPECT_EQ(lag_in_steps(0.1, 0.01), 10);
  EXPECT_EQ(lag_in_steps(0.0, 0.01), 0);
  EXPECT_THROW(lag_in_steps(0.105, 0.01), ConfigError);
}

TEST(ClosedFormAutocov, Examples) {
  // e^{-0.1} by its Taylor series.
  double e = 0.0, term = 1.0;
  for (int k = 1; k < 25; ++k) {
    e += term;
    term *= -0.1 / k;
  }
  const double expected = (1.0 + e - 1.6) * (1.0 + e - 1.6);
  EXPECT_NEAR(expected, 0.0929, 1e-4);
  EXPECT_NEAR(objective_closed_form_autocov(1.0, 1.0, std::numbers::sqrt2, 0.1, {1.0, 2.0, 1.6}),
              expected, 1e-14);

  for (double lambda : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(objective_closed_form_autocov(lambda, lambda, std::sqrt(2 * lambda), 1e3, {1.0, 2.0, 1.0}),
                0.0, 1e-20);
  }
  EXPECT_NEAR(objective_closed_form_autocov(1.0, 1.0, std::numbers::sqrt2, 0.0, {1.0, 2.0, 2.0}), 0.0,
              1e-28);
}

TEST(ClosedFormAutocov, NonPositiveLambdaIsADomainError) {
  EXPECT_THROW(objective_closed_form_autocov(1.0, 0.0, 1.0, 0.1, {1.0, 2.0, 1.6}), DomainError);
  EXPECT_THROW(objective_closed_form_autocov(1.0, -1.0, 1.0, 0.1, {1.0, 2.0, 1.6}), DomainError);
}

TEST(ObjectiveSpec, EmptyIsRejected) {
  EXPECT_THROW(ObjectiveSpec{}.check(), ConfigError);
  EXPECT_THROW(TargetStatistic::moment(0, 1.0), ConfigError);
  EXPECT_THROW(TargetStatistic::lagged_product(-0.1, 1.0), ConfigError);
}

}  // namespace
}  // namespace statcal

#pragma once

#include "statcal/builtin_models.hpp"
#include "statcal/model.hpp"

#include <cmath>
#include <random>

namespace statcal::testing {

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  Index index(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng_); }
  Vector vector(Index n, double lo, double hi) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 rng_;
};

inline bool close(double a, double b, double rel, double abs_floor = 1.0) {
  return std::abs(a - b) <= rel * std::max(abs_floor, std::max(std::abs(a), std::abs(b)));
}

/// Context holding an interaction mean of the model's kind.
struct OwnedContext {
  Vector mean;
  Matrix tangent_mean;
  PathContext ctx;

  OwnedContext(const ModelSpec& m, Vector mean_in)
      : mean(std::move(mean_in)), tangent_mean(Matrix::Zero(m.state_dim, m.param_dim)) {
    rebind(m);
  }
  OwnedContext(const OwnedContext&) = delete;

  void rebind(const ModelSpec& m) {
    ctx.ensemble_mean.reset();
    ctx.tangent_ensemble_mean.reset();
    ctx.running_mean.reset();
    ctx.tangent_running_mean.reset();
    if (m.interaction == Interaction::ensemble_mean) {
      ctx.ensemble_mean.emplace(mean.data(), mean.size());
      ctx.tangent_ensemble_mean.emplace(tangent_mean.data(), tangent_mean.rows(), tangent_mean.cols());
    } else if (m.interaction == Interaction::running_mean) {
      ctx.running_mean.emplace(mean.data(), mean.size());
      ctx.tangent_running_mean.emplace(tangent_mean.data(), tangent_mean.rows(), tangent_mean.cols());
    }
  }
};

/// Every built-in model with small dimensions.
inline std::vector<ModelSpec> all_builtin_models() {
  std::vector<ModelSpec> out;
  BuiltinOptions opt;
  opt.dim = 3;
  opt.interaction = 0.7;
  for (const auto& name : builtin_names()) out.push_back(builtin(name, opt).model);
  Matrix h(2, 2);
  h << 2.0, 0.3, 0.3, 1.0;
  out.push_back(linear_ou_model(h, 0.8));
  return out;
}

}  // namespace statcal::testing

#pragma once

#include "statcal/types.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace statcal {

enum class StatisticKind { instantaneous, lagged_product };

/// One calibration target: E f(Y) = beta, or E <Y_{t-lag}, Y_t> = beta.
struct TargetStatistic {
  using ValueFn = std::function<double(ConstVectorRef y)>;
  using GradientFn = std::function<void(ConstVectorRef y, VectorRef out)>;

  StatisticKind kind = StatisticKind::instantaneous;
  std::string label;
  ValueFn f;
  GradientFn grad_f;
  double lag = 0.0;
  double beta = 0.0;
  int degree = 0;  ///< moment degree; 0 for custom f and lagged products

  /// f(y) = sum_k y_k^degree. Degree 2 is |y|^2.
  static TargetStatistic moment(int degree, double beta);
  static TargetStatistic lagged_product(double lag, double beta);
};

struct ObjectiveSpec {
  std::vector<TargetStatistic> statistics;

  /// Throws ConfigError for an empty objective or malformed statistics.
  void check() const;
  bool has_lagged() const;
};

/// Read-only view of the three particle ensembles of one time step.
///
/// `x` and `xbar` are d x N with one column per particle; `xtilde` is
/// d x (l N) with particle i occupying columns [i l, (i + 1) l).
struct EnsembleView {
  Eigen::Map<const Matrix> x;
  Eigen::Map<const Matrix> xtilde;
  Eigen::Map<const Matrix> xbar;

  Index batch() const noexcept { return x.cols(); }
  Index param_dim() const noexcept { return x.cols() == 0 ? 0 : xtilde.cols() / x.cols(); }
  /// d x l tangent block of one particle.
  Eigen::Map<const Matrix> tangent(Index particle) const;
};

EnsembleView make_view(const Matrix& x, const Matrix& xtilde, const Matrix& xbar);

/// Ring buffer of past ensemble snapshots for one lag.
///
/// Capacity is the lag in steps. `delayed()` returns the snapshot pushed
/// exactly `capacity` pushes ago, and nothing while the buffer is warming;
/// a zero-capacity buffer returns the current snapshot on every read.
class DelayBuffer {
 public:
  DelayBuffer() = default;
  explicit DelayBuffer(Index lag_steps) : capacity_(lag_steps) {}

  Index capacity() const noexcept { return capacity_; }
  Index filled() const noexcept { return filled_; }
  bool ready() const noexcept { return filled_ >= capacity_; }

  /// Snapshot `capacity` steps old relative to `current`, when ready.
  std::optional<EnsembleView> delayed(const EnsembleView& current) const;

  void push(const EnsembleView& current);

 private:
  struct Snapshot {
    Matrix x;
    Matrix xtilde;
    Matrix xbar;
  };

  Index capacity_ = 0;
  Index filled_ = 0;
  Index head_ = 0;  // slot of the oldest snapshot once full
  std::vector<Snapshot> slots_;
};

/// Number of integrator steps a lag spans; throws unless lag/dt is integral.
Index lag_in_steps(double lag, double dt);

/// f applied to one replica state, or the lagged product. Empty when the
/// delay buffer is not ready yet.
std::optional<double> statistic_value(const TargetStatistic& stat, ConstVectorRef xbar_now,
                                      std::optional<ConstVectorRef> xbar_delayed = std::nullopt);

/// Per-statistic share of the gradient estimate G.
struct Contribution {
  Vector gradient;
  double residual = 0.0;  ///< batch mean statistic minus beta
  bool warming = false;   ///< lagged statistic whose buffer is not full; gradient is zero
};

/// 2 (mean_i s(xbar^i) - beta) (mean_i ds^i), a product of two batch means.
///
/// For instantaneous statistics ds^i = (xtilde^i)^T grad f(x^i); for lagged
/// products ds^i = (xtilde^i_{t-lag})^T x^i_t + (x^i_{t-lag})^T xtilde^i_t.
Contribution gradient_contribution(const TargetStatistic& stat, const EnsembleView& now,
                                   std::optional<EnsembleView> delayed = std::nullopt);

/// Batch-mean residual mean_i s(xbar^i) - beta, or empty while warming.
std::optional<double> batch_residual(const TargetStatistic& stat, const EnsembleView& now,
                                     std::optional<EnsembleView> delayed = std::nullopt);

/// Exact J for the OU process dX = (mu - lambda X)dt + sigma dW with
/// targets on E Y, E Y^2 and the lag-tau autocovariance product.
double objective_closed_form_autocov(double mu, double lambda, double sigma, double tau,
                                     const std::array<double, 3>& targets);

}  // namespace statcal

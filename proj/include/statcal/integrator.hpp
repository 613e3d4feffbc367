#pragma once

#include "statcal/model.hpp"
#include "statcal/noise.hpp"
#include "statcal/objective.hpp"
#include "statcal/schedule.hpp"
#include "statcal/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace statcal {

/// What to do while a lagged statistic's delay buffer is still filling.
enum class LagWarmupPolicy {
  zero_contribution,  ///< that statistic contributes nothing; the others update theta
  hold_updates,       ///< no theta update until every buffer is full
};

struct RunConfig {
  double dt = 0.01;
  double horizon = 0.0;
  Index batch = 1;
  LearningRateSchedule schedule;
  Vector theta0;
  Vector x0;       ///< empty: zero
  Matrix xtilde0;  ///< empty: zero (d x l)
  Vector xbar0;    ///< empty: x0
  Index record_stride = 100;
  std::uint64_t seed = 0;
  Index warmup_steps = 0;  ///< steps with alpha held at zero
  LagWarmupPolicy lag_policy = LagWarmupPolicy::zero_contribution;
  unsigned threads = 1;  ///< 0: one per hardware thread
  double moment_ceiling = 1e8;

  bool freeze_theta = false;
  bool tangent_enabled = true;
  bool replica_enabled = true;
  bool allow_inadmissible_schedule = false;

  /// Number of steps T/dt; throws ConfigError unless integral.
  Index steps() const;
  /// Throws ConfigError on any inconsistency with the model or objective.
  void validate(const ModelSpec& model, const ObjectiveSpec& objective) const;
};

/// Everything that evolves during a run.
struct AlgorithmState {
  Index step = 0;
  double dt = 0.0;
  Vector theta;
  Matrix x;       ///< d x N
  Matrix xtilde;  ///< d x (l N), particle i in columns [i l, (i + 1) l)
  Matrix xbar;    ///< d x N
  // Per-particle running means, only for running-mean models.
  Matrix x_running;
  Matrix xtilde_running;
  Matrix xbar_running;
  // One per statistic; instantaneous statistics hold an unused empty buffer.
  std::vector<DelayBuffer> delay_buffers;

  double time() const noexcept { return static_cast<double>(step) * dt; }
  Index batch() const noexcept { return x.cols(); }
  EnsembleView view() const { return make_view(x, xtilde, xbar); }
};

AlgorithmState initial_state(const ModelSpec& model, const ObjectiveSpec& objective,
                             const RunConfig& config);

/// Gradient estimate and objective estimate from one ensemble state.
struct Estimate {
  Vector gradient;
  double j_hat = 0.0;     ///< sum of squared batch residuals over ready statistics
  bool warming = false;   ///< some lagged statistic was not ready
  double fourth_moment = 0.0;  ///< batch mean of |X|^4
};

/// Advances an AlgorithmState by explicit Euler-Maruyama steps of the
/// coupled (theta, X, X~, X-) system.
///
/// Within a step every particle sees the pre-step theta and pre-step
/// ensemble means, so particles advance independently and may be split
/// over workers; all reductions run in particle order afterwards, which
/// makes the result independent of the worker count.
class Stepper {
 public:
  Stepper(const ModelSpec& model, const ObjectiveSpec& objective, const RunConfig& config);

  /// One step with increments drawn from the counter-based noise source.
  /// Returns the estimate the theta update used. Not reentrant: the
  /// stepper owns per-worker scratch space.
  Estimate advance(AlgorithmState& state);

  /// One step with caller-supplied Brownian increments (noise_dim x N each,
  /// already scaled to variance dt).
  Estimate advance_with_increments(AlgorithmState& state, ConstMatrixRef dw,
                                   ConstMatrixRef dw_bar);

  /// Estimate at the current state without stepping.
  Estimate evaluate(const AlgorithmState& state) const;

  const NoiseSource& noise() const noexcept { return noise_; }
  void attach_counter(DrawCounts* counts) noexcept { noise_.attach_counter(counts); }
  unsigned threads() const noexcept { return threads_; }

 private:
  struct Scratch {
    Vector mu, dw, dw_bar;
    Matrix sigma, drift_x, drift_theta, drift_context, tangent_drift, tangent_noise, combined;
    Tensor3 diffusion_x, diffusion_theta;
  };
  struct Means {
    Vector x, xbar;
    Matrix xtilde;
  };

  Estimate step_impl(AlgorithmState& state, const ConstMatrixRef* dw, const ConstMatrixRef* dw_bar);
  void compute_means(const AlgorithmState& state);
  void advance_particle(AlgorithmState& state, Index i, std::span<const double> dw,
                        std::span<const double> dw_bar, Scratch& scratch) const;
  void check_finite(const AlgorithmState& state) const;
  double alpha_for(const AlgorithmState& state, bool warming) const;

  const ModelSpec& model_;
  const ObjectiveSpec& objective_;
  RunConfig config_;
  NoiseSource noise_;
  unsigned threads_ = 1;
  std::vector<Scratch> scratch_;
  Means means_;
};

/// Single step using a throwaway Stepper.
AlgorithmState step(AlgorithmState state, const ModelSpec& model, const ObjectiveSpec& objective,
                    const RunConfig& config);

struct RecordPoint {
  double t = 0.0;
  Vector theta;
  double grad_norm = 0.0;
  double j_hat = 0.0;
  bool warming = false;
  double fourth_moment = 0.0;
};

struct DivergenceInfo {
  std::int64_t step = 0;
  std::int64_t particle = -1;
  std::string message;
};

struct RunDiagnostics {
  double max_fourth_moment = 0.0;
  bool moment_warning = false;
  Index warming_steps = 0;
  std::vector<Index> sign_flips;  ///< per theta component
  std::optional<DivergenceInfo> divergence;
};

struct RunRecord {
  std::vector<RecordPoint> points;
  RunDiagnostics diagnostics;
  Vector final_theta;

  bool completed() const noexcept { return !diagnostics.divergence.has_value(); }
};

/// Integrates from t = 0 to the horizon, recording every record_stride
/// steps and at the final time. Divergence stops the run and is reported
/// in the diagnostics; the points recorded so far are kept.
RunRecord run(const RunConfig& config, const ModelSpec& model, const ObjectiveSpec& objective);

struct NoiseAuditReport {
  Index steps = 0;
  Index batch = 0;
  Index noise_dim = 0;
  std::uint64_t main_draws = 0;
  std::uint64_t replica_draws = 0;
  std::uint64_t tangent_draws = 0;
  bool streams_disjoint = false;
};

/// Runs `steps` steps with a draw counter attached and checks that main
/// and replica increments come from disjoint counter ranges.
NoiseAuditReport noise_audit(const RunConfig& config, const ModelSpec& model,
                             const ObjectiveSpec& objective, Index steps);

}  // namespace statcal

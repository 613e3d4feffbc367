#include "statcal/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#ifdef STATCAL_HAVE_OPENMP
#include <omp.h>
#endif

namespace statcal {

namespace {

int worker_index() {
#ifdef STATCAL_HAVE_OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

Index RunConfig::steps() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("horizon must be non-negative and finite");
  }
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "horizon " << horizon << " is not an integral multiple of dt = " << dt;
    throw ConfigError(os.str());
  }
  return static_cast<Index>(rounded);
}

void RunConfig::validate(const ModelSpec& model, const ObjectiveSpec& objective) const {
  model.check_complete();
  objective.check();
  steps();
  if (batch < 1) throw ConfigError("batch size N must be at least 1");
  if (record_stride < 1) throw ConfigError("record stride must be at least 1");
  if (warmup_steps < 0) throw ConfigError("warmup steps must be non-negative");
  const Index d = model.state_dim;
  const Index l = model.param_dim;
  if (theta0.size() != l) {
    throw ConfigError("theta0 has " + std::to_string(theta0.size()) + " entries, model '" +
                      model.name + "' has " + std::to_string(l) + " parameters");
  }
  if (x0.size() != 0 && x0.size() != d) throw ConfigError("x0 does not match the state dimension");
  if (xbar0.size() != 0 && xbar0.size() != d) {
    throw ConfigError("xbar0 does not match the state dimension");
  }
  if (xtilde0.size() != 0 && (xtilde0.rows() != d || xtilde0.cols() != l)) {
    throw ConfigError("xtilde0 must be d x l");
  }
  for (const auto& stat : objective.statistics) {
    if (stat.kind == StatisticKind::lagged_product) lag_in_steps(stat.lag, dt);
  }
  if (!freeze_theta && !allow_inadmissible_schedule) {
    const auto v = statcal::validate(schedule);
    if (!v.admissible()) {
      std::string msg = "learning-rate schedule is not admissible:";
      for (const auto& e : v.violations) msg += " " + e.message + ";";
      throw ConfigError(msg);
    }
  }
}

AlgorithmState initial_state(const ModelSpec& model, const ObjectiveSpec& objective,
                             const RunConfig& config) {
  config.validate(model, objective);
  const Index d = model.state_dim;
  const Index l = model.param_dim;
  const Index n = config.batch;

  AlgorithmState s;
  s.dt = config.dt;
  s.theta = config.theta0;
  const Vector x0 = config.x0.size() == 0 ? Vector::Zero(d) : config.x0;
  const Vector xbar0 = config.xbar0.size() == 0 ? x0 : config.xbar0;
  const Matrix xt0 = config.xtilde0.size() == 0 ? Matrix::Zero(d, l) : config.xtilde0;
  s.x = x0.replicate(1, n);
  s.xbar = xbar0.replicate(1, n);
  s.xtilde = xt0.replicate(1, n);
  if (model.interaction == Interaction::running_mean) {
    s.x_running = s.x;
    s.xtilde_running = s.xtilde;
    s.xbar_running = s.xbar;
  }
  for (const auto& stat : objective.statistics) {
    s.delay_buffers.emplace_back(stat.kind == StatisticKind::lagged_product
                                     ? lag_in_steps(stat.lag, config.dt)
                                     : 0);
  }
  return s;
}

Stepper::Stepper(const ModelSpec& model, const ObjectiveSpec& objective, const RunConfig& config)
    : model_(model),
      objective_(objective),
      config_(config),
      noise_(config.seed),
      threads_(resolve_threads(config.threads)) {
  config_.validate(model, objective);
  const Index d = model.state_dim;
  const Index l = model.param_dim;
  const Index nd = model.noise_dim;
  scratch_.resize(threads_);
  for (auto& s : scratch_) {
    s.mu = Vector::Zero(d);
    s.dw = Vector::Zero(nd);
    s.dw_bar = Vector::Zero(nd);
    s.sigma = Matrix::Zero(d, nd);
    s.drift_x = Matrix::Zero(d, d);
    s.drift_theta = Matrix::Zero(d, l);
    s.drift_context = Matrix::Zero(d, d);
    s.tangent_drift = Matrix::Zero(d, l);
    s.tangent_noise = Matrix::Zero(d, l);
    s.combined = Matrix::Zero(d, nd);
    s.diffusion_x = Tensor3(d, nd, d);
    s.diffusion_theta = Tensor3(d, nd, l);
  }
}

Estimate Stepper::evaluate(const AlgorithmState& state) const {
  const EnsembleView now = state.view();
  Estimate est{Vector::Zero(model_.param_dim), 0.0, false, 0.0};
  for (std::size_t s = 0; s < objective_.statistics.size(); ++s) {
    const auto& stat = objective_.statistics[s];
    const std::optional<EnsembleView> delayed =
        stat.kind == StatisticKind::lagged_product ? state.delay_buffers[s].delayed(now)
                                                   : std::nullopt;
    const Contribution c = gradient_contribution(stat, now, delayed);
    if (c.warming) {
      est.warming = true;
      continue;
    }
    est.gradient += c.gradient;
    est.j_hat += c.residual * c.residual;
  }
  double m4 = 0.0;
  for (Index i = 0; i < state.batch(); ++i) {
    const double r2 = state.x.col(i).squaredNorm();
    m4 += r2 * r2;
  }
  est.fourth_moment = m4 / static_cast<double>(state.batch());
  return est;
}

double Stepper::alpha_for(const AlgorithmState& state, bool warming) const {
  if (config_.freeze_theta) return 0.0;
  if (state.step < config_.warmup_steps) return 0.0;
  if (warming && config_.lag_policy == LagWarmupPolicy::hold_updates) return 0.0;
  return config_.schedule.rate(state.time());
}

void Stepper::compute_means(const AlgorithmState& state) {
  if (model_.interaction != Interaction::ensemble_mean) return;
  const Index n = state.batch();
  const Index d = model_.state_dim;
  const Index l = model_.param_dim;
  const double inv = 1.0 / static_cast<double>(n);
  means_.x = Vector::Zero(d);
  means_.xbar = Vector::Zero(d);
  means_.xtilde = Matrix::Zero(d, l);
  for (Index i = 0; i < n; ++i) {
    means_.x += state.x.col(i);
    means_.xbar += state.xbar.col(i);
    means_.xtilde += state.xtilde.middleCols(i * l, l);
  }
  means_.x *= inv;
  means_.xbar *= inv;
  means_.xtilde *= inv;
}

void Stepper::advance_particle(AlgorithmState& state, Index i, std::span<const double> dw_span,
                               std::span<const double> dw_bar_span, Scratch& s) const {
  const Index d = model_.state_dim;
  const Index l = model_.param_dim;
  const Index nd = model_.noise_dim;
  const double dt = config_.dt;
  const bool diagonal = model_.diffusion_form == DiffusionForm::diagonal;
  const Eigen::Map<const Vector> dw(dw_span.data(), nd);
  const Eigen::Map<const Vector> dw_bar(dw_bar_span.data(), nd);
  const ConstVectorRef theta = state.theta;

  PathContext ctx;
  PathContext ctx_bar;
  switch (model_.interaction) {
    case Interaction::ensemble_mean:
      ctx.ensemble_mean.emplace(means_.x.data(), d);
      ctx.tangent_ensemble_mean.emplace(means_.xtilde.data(), d, l);
      ctx_bar.ensemble_mean.emplace(means_.xbar.data(), d);
      break;
    case Interaction::running_mean:
      ctx.running_mean.emplace(state.x_running.col(i).data(), d);
      ctx.tangent_running_mean.emplace(state.xtilde_running.data() + i * l * d, d, l);
      ctx_bar.running_mean.emplace(state.xbar_running.col(i).data(), d);
      break;
    case Interaction::none:
      break;
  }

  auto apply_noise = [&](const Matrix& sigma, const Eigen::Map<const Vector>& w, VectorRef out) {
    if (diagonal) {
      out += sigma.diagonal().cwiseProduct(w);
    } else {
      out.noalias() += sigma * w;
    }
  };

  auto x = state.x.col(i);
  auto xt = state.xtilde.middleCols(i * l, l);

  // Everything below is evaluated at the pre-step state.
  model_.drift(x, theta, ctx, s.mu);
  model_.diffusion(x, theta, s.sigma);

  if (config_.tangent_enabled) {
    model_.drift_jac_x(x, theta, ctx, s.drift_x);
    model_.drift_jac_theta(x, theta, ctx, s.drift_theta);
    s.tangent_drift.noalias() = s.drift_x * xt;
    s.tangent_drift += s.drift_theta;
    if (model_.interaction != Interaction::none) {
      model_.drift_jac_context(x, theta, ctx, s.drift_context);
      const auto& tangent_mean = model_.interaction == Interaction::ensemble_mean
                                     ? *ctx.tangent_ensemble_mean
                                     : *ctx.tangent_running_mean;
      s.tangent_drift.noalias() += s.drift_context * tangent_mean;
    }

    s.tangent_noise.setZero();
    const bool vary_x = !model_.diffusion_constant_in_x;
    const bool vary_theta = !model_.diffusion_constant_in_theta;
    if (vary_x) {
      s.diffusion_x.set_zero();
      model_.diffusion_jac_x(x, theta, s.diffusion_x);
    }
    if (vary_theta) {
      s.diffusion_theta.set_zero();
      model_.diffusion_jac_theta(x, theta, s.diffusion_theta);
    }
    if (vary_x || vary_theta) {
      for (Index c = 0; c < l; ++c) {
        if (diagonal) {
          for (Index r = 0; r < d; ++r) {
            double coeff = vary_theta ? s.diffusion_theta(r, r, c) : 0.0;
            if (vary_x) {
              for (Index k = 0; k < d; ++k) coeff += s.diffusion_x(r, r, k) * xt(k, c);
            }
            s.tangent_noise(r, c) = coeff * dw[r];
          }
        } else {
          if (vary_theta) {
            s.combined = s.diffusion_theta.slice(c);
          } else {
            s.combined.setZero();
          }
          if (vary_x) {
            for (Index k = 0; k < d; ++k) s.combined += s.diffusion_x.slice(k) * xt(k, c);
          }
          s.tangent_noise.col(c).noalias() = s.combined * dw;
        }
      }
    }
    xt += s.tangent_drift * dt + s.tangent_noise;
  }

  x += s.mu * dt;
  apply_noise(s.sigma, dw, x);

  if (config_.replica_enabled) {
    auto xb = state.xbar.col(i);
    model_.drift(xb, theta, ctx_bar, s.mu);
    model_.diffusion(xb, theta, s.sigma);
    xb += s.mu * dt;
    apply_noise(s.sigma, dw_bar, xb);
  }

  if (model_.interaction == Interaction::running_mean) {
    // m_{k+1} = m_k + (X_{k+1} - m_k) / (k + 1)
    const double w = 1.0 / static_cast<double>(state.step + 1);
    auto m = state.x_running.col(i);
    m += (x - m) * w;
    if (config_.tangent_enabled) {
      auto mt = state.xtilde_running.middleCols(i * l, l);
      mt += (xt - mt) * w;
    }
    if (config_.replica_enabled) {
      auto mb = state.xbar_running.col(i);
      mb += (state.xbar.col(i) - mb) * w;
    }
  }
}

void Stepper::check_finite(const AlgorithmState& state) const {
  const Index l = model_.param_dim;
  for (Index i = 0; i < state.batch(); ++i) {
    const bool ok = state.x.col(i).allFinite() && state.xbar.col(i).allFinite() &&
                    state.xtilde.middleCols(i * l, l).allFinite();
    if (!ok) {
      std::ostringstream os;
      os << "non-finite state at step " << state.step << ", particle " << i;
      throw DivergenceError(os.str(), state.step, i);
    }
  }
  if (!state.theta.allFinite()) {
    std::ostringstream os;
    os << "non-finite parameter at step " << state.step;
    throw DivergenceError(os.str(), state.step, -1);
  }
}

Estimate Stepper::step_impl(AlgorithmState& state, const ConstMatrixRef* dw,
                            const ConstMatrixRef* dw_bar) {
  const Index n = state.batch();
  const Index nd = model_.noise_dim;
  const Estimate est = evaluate(state);
  const double alpha = alpha_for(state, est.warming);

  const EnsembleView now = state.view();
  for (std::size_t s = 0; s < objective_.statistics.size(); ++s) {
    if (objective_.statistics[s].kind == StatisticKind::lagged_product) {
      state.delay_buffers[s].push(now);
    }
  }
  compute_means(state);

  const double sqrt_dt = std::sqrt(config_.dt);
  const auto step_index = static_cast<std::uint64_t>(state.step);
  std::vector<std::exception_ptr> errors(threads_);
  std::vector<Index> error_particle(threads_, n);

#ifdef STATCAL_HAVE_OPENMP
#pragma omp parallel for num_threads(static_cast<int>(threads_)) schedule(static) if (threads_ > 1)
#endif
  for (Index i = 0; i < n; ++i) {
    const auto w = static_cast<std::size_t>(worker_index());
    Scratch& s = scratch_[w];
    if (error_particle[w] < n) continue;
    try {
      if (dw != nullptr) {
        s.dw = dw->col(i);
        s.dw_bar = dw_bar->col(i);
      } else {
        const auto p = static_cast<std::uint64_t>(i);
        noise_.fill_normal(NoiseStream::main, p, step_index, {s.dw.data(), static_cast<std::size_t>(nd)});
        s.dw *= sqrt_dt;
        if (config_.replica_enabled) {
          noise_.fill_normal(NoiseStream::replica, p, step_index,
                             {s.dw_bar.data(), static_cast<std::size_t>(nd)});
          s.dw_bar *= sqrt_dt;
        }
      }
      advance_particle(state, i, {s.dw.data(), static_cast<std::size_t>(nd)},
                       {s.dw_bar.data(), static_cast<std::size_t>(nd)}, s);
    } catch (...) {
      errors[w] = std::current_exception();
      error_particle[w] = i;
    }
  }
  // Report the failure of the lowest particle index, as a serial run would.
  const auto first = std::min_element(error_particle.begin(), error_particle.end());
  if (*first < n) std::rethrow_exception(errors[static_cast<std::size_t>(first - error_particle.begin())]);

  if (alpha != 0.0) state.theta -= (alpha * config_.dt) * est.gradient;
  ++state.step;
  check_finite(state);
  return est;
}

Estimate Stepper::advance(AlgorithmState& state) { return step_impl(state, nullptr, nullptr); }

Estimate Stepper::advance_with_increments(AlgorithmState& state, ConstMatrixRef dw,
                                          ConstMatrixRef dw_bar) {
  const Index n = state.batch();
  if (dw.rows() != model_.noise_dim || dw.cols() != n || dw_bar.rows() != model_.noise_dim ||
      dw_bar.cols() != n) {
    throw DimensionError("increments must be noise_dim x N");
  }
  return step_impl(state, &dw, &dw_bar);
}

AlgorithmState step(AlgorithmState state, const ModelSpec& model, const ObjectiveSpec& objective,
                    const RunConfig& config) {
  Stepper stepper(model, objective, config);
  stepper.advance(state);
  return state;
}

namespace {

RecordPoint make_point(const AlgorithmState& state, const Estimate& est) {
  return {state.time(), state.theta, est.gradient.norm(), est.j_hat, est.warming,
          est.fourth_moment};
}

}  // namespace

RunRecord run(const RunConfig& config, const ModelSpec& model, const ObjectiveSpec& objective) {
  Stepper stepper(model, objective, config);
  AlgorithmState state = initial_state(model, objective, config);
  const Index total = config.steps();

  RunRecord rec;
  rec.diagnostics.sign_flips.assign(static_cast<std::size_t>(model.param_dim), 0);
  auto note = [&](const Estimate& est) {
    rec.diagnostics.max_fourth_moment = std::max(rec.diagnostics.max_fourth_moment, est.fourth_moment);
    if (est.warming) ++rec.diagnostics.warming_steps;
  };

  try {
    for (Index k = 0; k < total; ++k) {
      const Vector before = state.theta;
      const double t = state.time();
      const Estimate est = stepper.advance(state);
      note(est);
      if (k % config.record_stride == 0) {
        rec.points.push_back({t, before, est.gradient.norm(), est.j_hat, est.warming,
                              est.fourth_moment});
      }
      for (Index c = 0; c < model.param_dim; ++c) {
        if ((before[c] > 0.0 && state.theta[c] < 0.0) || (before[c] < 0.0 && state.theta[c] > 0.0)) {
          ++rec.diagnostics.sign_flips[static_cast<std::size_t>(c)];
        }
      }
    }
    const Estimate last = stepper.evaluate(state);
    rec.diagnostics.max_fourth_moment = std::max(rec.diagnostics.max_fourth_moment, last.fourth_moment);
    rec.points.push_back(make_point(state, last));
  } catch (const DivergenceError& e) {
    rec.diagnostics.divergence = DivergenceInfo{e.step(), e.particle(), e.what()};
  }
  rec.diagnostics.moment_warning = rec.diagnostics.max_fourth_moment > config.moment_ceiling;
  rec.final_theta = state.theta;
  return rec;
}

NoiseAuditReport noise_audit(const RunConfig& config, const ModelSpec& model,
                             const ObjectiveSpec& objective, Index steps) {
  if (config.batch < 1) throw ConfigError("batch size N must be at least 1");
  NoiseAuditReport report;
  report.steps = steps;
  report.batch = config.batch;
  report.noise_dim = model.noise_dim;

  auto count_draws = [&](bool tangent) {
    RunConfig c = config;
    c.tangent_enabled = tangent;
    c.freeze_theta = true;
    Stepper stepper(model, objective, c);
    DrawCounts counts;
    stepper.attach_counter(&counts);
    AlgorithmState state = initial_state(model, objective, c);
    for (Index k = 0; k < steps; ++k) stepper.advance(state);
    return std::pair{counts.main.load(), counts.replica.load()};
  };
  const auto with_tangent = count_draws(true);
  const auto without_tangent = count_draws(false);
  report.main_draws = with_tangent.first;
  report.replica_draws = with_tangent.second;
  report.tangent_draws = (with_tangent.first - without_tangent.first) +
                         (with_tangent.second - without_tangent.second);

  std::set<std::array<std::uint32_t, 4>> main_counters;
  for (Index k = 0; k < steps; ++k) {
    for (Index i = 0; i < config.batch; ++i) {
      for (Index c = 0; c < model.noise_dim; c += 2) {
        main_counters.insert(NoiseSource::counter_for(NoiseStream::main, static_cast<std::uint64_t>(i),
                                                      static_cast<std::uint64_t>(k),
                                                      static_cast<std::uint32_t>(c)));
      }
    }
  }
  report.streams_disjoint = true;
  for (Index k = 0; k < steps && report.streams_disjoint; ++k) {
    for (Index i = 0; i < config.batch; ++i) {
      for (Index c = 0; c < model.noise_dim; c += 2) {
        const auto ctr = NoiseSource::counter_for(NoiseStream::replica, static_cast<std::uint64_t>(i),
                                                  static_cast<std::uint64_t>(k),
                                                  static_cast<std::uint32_t>(c));
        if (main_counters.count(ctr) != 0) report.streams_disjoint = false;
      }
    }
  }
  return report;
}

}  // namespace statcal

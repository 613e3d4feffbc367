#include "statcal/objective.hpp"

#include <cmath>
#include <sstream>

namespace statcal {

namespace {

double ipow(double v, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= v;
  return r;
}

}  // namespace

TargetStatistic TargetStatistic::moment(int degree, double beta) {
  if (degree < 1) throw ConfigError("moment degree must be >= 1");
  TargetStatistic s;
  s.kind = StatisticKind::instantaneous;
  s.beta = beta;
  s.degree = degree;
  s.label = degree == 1 ? "E[sum y]" : "E[sum y^" + std::to_string(degree) + "]";
  s.f = [degree](ConstVectorRef y) {
    double acc = 0.0;
    for (Index k = 0; k < y.size(); ++k) acc += ipow(y[k], degree);
    return acc;
  };
  s.grad_f = [degree](ConstVectorRef y, VectorRef out) {
    for (Index k = 0; k < y.size(); ++k) {
      out[k] = degree * ipow(y[k], degree - 1);
    }
  };
  return s;
}

TargetStatistic TargetStatistic::lagged_product(double lag, double beta) {
  if (!(lag >= 0.0)) throw ConfigError("lag must be non-negative");
  TargetStatistic s;
  s.kind = StatisticKind::lagged_product;
  s.lag = lag;
  s.beta = beta;
  std::ostringstream os;
  os << "E[<y(t-" << lag << "), y(t)>]";
  s.label = os.str();
  return s;
}

void ObjectiveSpec::check() const {
  if (statistics.empty()) throw ConfigError("objective needs at least one target statistic");
  for (const auto& s : statistics) {
    if (s.kind == StatisticKind::instantaneous && (!s.f || !s.grad_f)) {
      throw ConfigError("instantaneous statistic '" + s.label + "' needs f and grad f");
    }
    if (s.kind == StatisticKind::lagged_product && !(s.lag >= 0.0)) {
      throw ConfigError("lagged statistic '" + s.label + "' has a negative lag");
    }
  }
}

bool ObjectiveSpec::has_lagged() const {
  for (const auto& s : statistics) {
    if (s.kind == StatisticKind::lagged_product) return true;
  }
  return false;
}

Eigen::Map<const Matrix> EnsembleView::tangent(Index particle) const {
  const Index l = param_dim();
  return {xtilde.data() + particle * l * xtilde.rows(), xtilde.rows(), l};
}

EnsembleView make_view(const Matrix& x, const Matrix& xtilde, const Matrix& xbar) {
  return {Eigen::Map<const Matrix>(x.data(), x.rows(), x.cols()),
          Eigen::Map<const Matrix>(xtilde.data(), xtilde.rows(), xtilde.cols()),
          Eigen::Map<const Matrix>(xbar.data(), xbar.rows(), xbar.cols())};
}

std::optional<EnsembleView> DelayBuffer::delayed(const EnsembleView& current) const {
  if (capacity_ == 0) return current;
  if (!ready()) return std::nullopt;
  const Snapshot& s = slots_[static_cast<std::size_t>(head_)];
  return make_view(s.x, s.xtilde, s.xbar);
}

void DelayBuffer::push(const EnsembleView& current) {
  if (capacity_ == 0) return;
  if (slots_.empty()) slots_.resize(static_cast<std::size_t>(capacity_));
  Snapshot& s = slots_[static_cast<std::size_t>(head_)];
  s.x = current.x;
  s.xtilde = current.xtilde;
  s.xbar = current.xbar;
  head_ = (head_ + 1) % capacity_;
  if (filled_ < capacity_) ++filled_;
}

Index lag_in_steps(double lag, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const double ratio = lag / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "lag " << lag << " is not an integral multiple of dt = " << dt;
    throw ConfigError(os.str());
  }
  return static_cast<Index>(rounded);
}

std::optional<double> statistic_value(const TargetStatistic& stat, ConstVectorRef xbar_now,
                                      std::optional<ConstVectorRef> xbar_delayed) {
  if (stat.kind == StatisticKind::instantaneous) return stat.f(xbar_now);
  if (!xbar_delayed) return std::nullopt;
  if (xbar_delayed->size() != xbar_now.size()) {
    throw DimensionError("delayed snapshot has a different state dimension");
  }
  return xbar_delayed->dot(xbar_now);
}

namespace {

void check_view(const EnsembleView& v) {
  const Index n = v.batch();
  if (n < 1) throw ConfigError("ensembles must hold at least one particle");
  if (v.xbar.cols() != n || v.xbar.rows() != v.x.rows() || v.xtilde.rows() != v.x.rows() ||
      v.xtilde.cols() % n != 0) {
    throw DimensionError("ensembles X, X~ and X- disagree in shape");
  }
}

}  // namespace

std::optional<double> batch_residual(const TargetStatistic& stat, const EnsembleView& now,
                                     std::optional<EnsembleView> delayed) {
  check_view(now);
  const Index n = now.batch();
  double sum = 0.0;
  if (stat.kind == StatisticKind::instantaneous) {
    for (Index i = 0; i < n; ++i) sum += stat.f(now.xbar.col(i));
  } else {
    if (!delayed) return std::nullopt;
    for (Index i = 0; i < n; ++i) sum += delayed->xbar.col(i).dot(now.xbar.col(i));
  }
  return sum / static_cast<double>(n) - stat.beta;
}

Contribution gradient_contribution(const TargetStatistic& stat, const EnsembleView& now,
                                   std::optional<EnsembleView> delayed) {
  check_view(now);
  const Index n = now.batch();
  const Index d = now.x.rows();
  const Index l = now.param_dim();
  Contribution out{Vector::Zero(l), 0.0, false};

  const auto residual = batch_residual(stat, now, delayed);
  if (!residual) {
    out.warming = true;
    return out;
  }
  out.residual = *residual;

  Vector sensitivity = Vector::Zero(l);
  if (stat.kind == StatisticKind::instantaneous) {
    Vector grad(d);
    for (Index i = 0; i < n; ++i) {
      stat.grad_f(now.x.col(i), grad);
      sensitivity.noalias() += now.tangent(i).transpose() * grad;
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      sensitivity.noalias() += delayed->tangent(i).transpose() * now.x.col(i);
      sensitivity.noalias() += now.tangent(i).transpose() * delayed->x.col(i);
    }
  }
  sensitivity /= static_cast<double>(n);
  out.gradient = 2.0 * out.residual * sensitivity;
  return out;
}

double objective_closed_form_autocov(double mu, double lambda, double sigma, double tau,
                                     const std::array<double, 3>& targets) {
  if (!(lambda > 0.0)) throw DomainError("autocovariance objective needs lambda > 0");
  const double m = mu / lambda;
  const double var = sigma * sigma / (2.0 * lambda);
  const double r1 = m - targets[0];
  const double r2 = m * m + var - targets[1];
  const double r3 = m * m + var * std::exp(-lambda * tau) - targets[2];
  return r1 * r1 + r2 * r2 + r3 * r3;
}

}  // namespace statcal

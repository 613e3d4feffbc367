#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace statcal {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ConstVectorRef = Eigen::Ref<const Vector>;
using VectorRef = Eigen::Ref<Vector>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;
using MatrixRef = Eigen::Ref<Matrix>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An array argument or result does not have the declared shape.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A model needs path context (ensemble or running mean) that was not supplied.
class ContextError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside the mathematical domain of a closed form.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid run, objective or CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A state component became non-finite during integration.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step, std::int64_t particle)
      : Error(what), step_(step), particle_(particle) {}

  std::int64_t step() const noexcept { return step_; }
  /// -1 when the parameter vector itself diverged.
  std::int64_t particle() const noexcept { return particle_; }

 private:
  std::int64_t step_;
  std::int64_t particle_;
};

/// Dense rank-3 array used for the diffusion Jacobians.
///
/// Slice k (last index) is a column-major d0 x d1 matrix, so
/// `slice(k)` maps directly onto an Eigen matrix without copying.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Index d0, Index d1, Index d2)
      : d0_(d0), d1_(d1), d2_(d2), data_(static_cast<std::size_t>(d0 * d1 * d2), 0.0) {}

  Index dim0() const noexcept { return d0_; }
  Index dim1() const noexcept { return d1_; }
  Index dim2() const noexcept { return d2_; }

  double& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  double operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

  Eigen::Map<Matrix> slice(Index k) { return {data_.data() + k * d0_ * d1_, d0_, d1_}; }
  Eigen::Map<const Matrix> slice(Index k) const {
    return {data_.data() + k * d0_ * d1_, d0_, d1_};
  }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }
  bool is_zero() const {
    for (double v : data_) {
      if (v != 0.0) return false;
    }
    return true;
  }
  bool has_shape(Index d0, Index d1, Index d2) const noexcept {
    return d0_ == d0 && d1_ == d1 && d2_ == d2;
  }

 private:
  std::size_t offset(Index i, Index j, Index k) const {
    return static_cast<std::size_t>((k * d1_ + j) * d0_ + i);
  }

  Index d0_ = 0;
  Index d1_ = 0;
  Index d2_ = 0;
  std::vector<double> data_;
};

}  // namespace statcal

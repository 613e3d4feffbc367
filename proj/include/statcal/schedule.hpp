#pragma once

#include <string>
#include <vector>

namespace statcal {

/// Power-decay learning rate alpha_t = a / (1 + t/b)^gamma.
struct LearningRateSchedule {
  double a = 1.0;
  double b = 1.0;
  double gamma = 1.0;

  double rate(double t) const;
};

/// The four integral conditions a learning rate must satisfy for the
/// online algorithm to converge.
enum class RateCondition {
  parameters_positive,    ///< a > 0 and b > 0
  integral_diverges,      ///< int alpha dt = inf
  square_integrable,      ///< int alpha^2 dt < inf
  bounded_variation,      ///< int |alpha'| dt < inf
  polynomial_decay,       ///< alpha_t^2 t^(1/2 + 2p) -> 0 for some p > 0
};

struct ScheduleViolation {
  RateCondition condition;
  std::string message;
};

struct ScheduleValidation {
  std::vector<ScheduleViolation> violations;

  bool admissible() const noexcept { return violations.empty(); }
  bool violates(RateCondition c) const noexcept;
};

/// Decides the conditions analytically for the power-decay family: they
/// hold together exactly when 1/2 < gamma <= 1.
ScheduleValidation validate(const LearningRateSchedule& schedule);

std::string to_string(RateCondition c);

}  // namespace statcal

#include "statcal/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace statcal {

double LearningRateSchedule::rate(double t) const {
  return a / std::pow(1.0 + t / b, gamma);
}

bool ScheduleValidation::violates(RateCondition c) const noexcept {
  return std::any_of(violations.begin(), violations.end(),
                     [c](const ScheduleViolation& v) { return v.condition == c; });
}

ScheduleValidation validate(const LearningRateSchedule& s) {
  ScheduleValidation out;
  if (!(s.a > 0.0) || !(s.b > 0.0)) {
    out.violations.push_back({RateCondition::parameters_positive, "a > 0 and b > 0 required"});
    return out;
  }
  // alpha_t ~ a b^gamma t^-gamma for large t.
  if (s.gamma > 1.0) {
    out.violations.push_back({RateCondition::integral_diverges, "∫α dt < ∞"});
  }
  if (s.gamma <= 0.5) {
    out.violations.push_back({RateCondition::square_integrable, "∫α² dt = ∞"});
  }
  if (s.gamma < 0.0) {
    out.violations.push_back({RateCondition::bounded_variation, "∫|α′| dt = ∞"});
  }
  if (s.gamma <= 0.25) {
    out.violations.push_back(
        {RateCondition::polynomial_decay, "α_t² t^(1/2+2p) does not vanish for any p > 0"});
  }
  return out;
}

std::string to_string(RateCondition c) {
  switch (c) {
    case RateCondition::parameters_positive: return "parameters_positive";
    case RateCondition::integral_diverges: return "integral_diverges";
    case RateCondition::square_integrable: return "square_integrable";
    case RateCondition::bounded_variation: return "bounded_variation";
    case RateCondition::polynomial_decay: return "polynomial_decay";
  }
  return "unknown";
}

}  // namespace statcal

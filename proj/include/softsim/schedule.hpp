#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "softsim/types.hpp"

namespace softsim {

enum class Interpolation { kLinear, kConstant };

/// Time series of values. Linear schedules interpolate between knots and hold
/// the end values outside the range. Constant schedules hold values[i] on
/// [times[i], times[i+1]) and values[0] before the first knot.
template <typename T>
class Schedule {
 public:
  Schedule() = default;
  Schedule(Interpolation kind, std::vector<double> times, std::vector<T> values)
      : kind_(kind), times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size())
      throw InputError("schedule needs matching, non-empty times and values");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw InputError("schedule times must be strictly increasing");
  }

  static Schedule Constant(const T& value) {
    return Schedule(Interpolation::kConstant, {0.0}, {value});
  }

  T operator()(double t) const {
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    if (kind_ == Interpolation::kConstant) return values_[i];
    const double s = (t - times_[i]) / (times_[i + 1] - times_[i]);
    return values_[i] + s * (values_[i + 1] - values_[i]);
  }

  Interpolation kind() const { return kind_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<T>& values() const { return values_; }
  bool empty() const { return times_.empty(); }

 private:
  Interpolation kind_ = Interpolation::kConstant;
  std::vector<double> times_;
  std::vector<T> values_;
};

using ScalarSchedule = Schedule<double>;
using VectorSchedule = Schedule<Vec3>;

}  // namespace softsim

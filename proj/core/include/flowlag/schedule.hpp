#pragma once

#include <string>
#include <string_view>

namespace flowlag {

enum class ScheduleShape { Linear, Cosine, QuadIn, QuadOut, ConstantOne };

ScheduleShape parse_schedule_shape(std::string_view name);
std::string to_string(ScheduleShape shape);

// SSC multiplier gamma(t) = s_end + (s_start - s_end) * profile(t), with
//   linear   1 - t
//   cosine   (1 + cos(pi t)) / 2
//   quad-in  1 - t^2        (holds the boost longer)
//   quad-out (1 - t)^2      (drops it quickly)
// constant-one ignores the endpoints and returns exactly 1. When
// s_start == s_end the multiplier is exactly s_end at every t.
struct ScaleSchedule {
  ScheduleShape shape = ScheduleShape::ConstantOne;
  double s_start = 1.0;
  double s_end = 1.0;

  static ScaleSchedule identity() { return {}; }
  // "linear:1.1:1.0", "quad-in:1.075:1.0", "constant-one".
  static ScaleSchedule parse(std::string_view text);
  std::string to_string() const;

  void validate() const;
  double gamma(double t) const;
  // Closed-form integral of gamma over [0, 1].
  double area() const;
};

// Fraction of (s_start - s_end) that survives integration of the profile.
double profile_area(ScheduleShape shape);

// s_start such that the schedule's area equals target_area. Throws
// ConfigError for constant-one or when the required s_start is negative.
double calibrate_s_start(ScheduleShape shape, double s_end, double target_area);

}  // namespace flowlag

#include "flowlag/schedule.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "flowlag/errors.hpp"
#include "flowlag/interpolant.hpp"

namespace flowlag {

ScheduleShape parse_schedule_shape(std::string_view name) {
  if (name == "linear") return ScheduleShape::Linear;
  if (name == "cosine") return ScheduleShape::Cosine;
  if (name == "quad-in") return ScheduleShape::QuadIn;
  if (name == "quad-out") return ScheduleShape::QuadOut;
  if (name == "constant-one") return ScheduleShape::ConstantOne;
  throw ConfigError("unknown schedule shape '" + std::string(name) +
                    "' (expected linear|cosine|quad-in|quad-out|constant-one)");
}

std::string to_string(ScheduleShape shape) {
  switch (shape) {
    case ScheduleShape::Linear: return "linear";
    case ScheduleShape::Cosine: return "cosine";
    case ScheduleShape::QuadIn: return "quad-in";
    case ScheduleShape::QuadOut: return "quad-out";
    case ScheduleShape::ConstantOne: return "constant-one";
  }
  return "?";
}

namespace {

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("schedule: invalid " + std::string(what) + " '" + std::string(text) + "'");
  return value;
}

double profile(ScheduleShape shape, double t) {
  switch (shape) {
    case ScheduleShape::Linear: return 1.0 - t;
    case ScheduleShape::Cosine: return 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    case ScheduleShape::QuadIn: return 1.0 - t * t;
    case ScheduleShape::QuadOut: return (1.0 - t) * (1.0 - t);
    case ScheduleShape::ConstantOne: return 0.0;
  }
  return 0.0;
}

}  // namespace

ScaleSchedule ScaleSchedule::parse(std::string_view text) {
  const auto first = text.find(':');
  ScaleSchedule s;
  s.shape = parse_schedule_shape(text.substr(0, first));
  if (s.shape == ScheduleShape::ConstantOne) {
    if (first != std::string_view::npos)
      throw ConfigError("schedule: constant-one takes no endpoints");
    return s;
  }
  if (first == std::string_view::npos)
    throw ConfigError("schedule: expected shape:s_start:s_end, got '" + std::string(text) + "'");
  const auto rest = text.substr(first + 1);
  const auto second = rest.find(':');
  if (second == std::string_view::npos)
    throw ConfigError("schedule: expected shape:s_start:s_end, got '" + std::string(text) + "'");
  s.s_start = parse_double(rest.substr(0, second), "s_start");
  s.s_end = parse_double(rest.substr(second + 1), "s_end");
  s.validate();
  return s;
}

std::string ScaleSchedule::to_string() const {
  if (shape == ScheduleShape::ConstantOne) return "constant-one";
  auto shortest = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
  };
  return flowlag::to_string(shape) + ':' + shortest(s_start) + ':' + shortest(s_end);
}

void ScaleSchedule::validate() const {
  if (!(s_start >= 0.0) || !(s_end >= 0.0) || !std::isfinite(s_start) || !std::isfinite(s_end))
    throw ConfigError("schedule: s_start and s_end must be finite and >= 0");
}

double ScaleSchedule::gamma(double t) const {
  check_unit_time(t);
  if (shape == ScheduleShape::ConstantOne) return 1.0;
  const double delta = s_start - s_end;
  if (delta == 0.0) return s_end;
  return s_end + delta * profile(shape, t);
}

double profile_area(ScheduleShape shape) {
  switch (shape) {
    case ScheduleShape::Linear: return 0.5;
    case ScheduleShape::Cosine: return 0.5;
    case ScheduleShape::QuadIn: return 2.0 / 3.0;
    case ScheduleShape::QuadOut: return 1.0 / 3.0;
    case ScheduleShape::ConstantOne: return 0.0;
  }
  return 0.0;
}

double ScaleSchedule::area() const {
  if (shape == ScheduleShape::ConstantOne) return 1.0;
  return s_end + (s_start - s_end) * profile_area(shape);
}

double calibrate_s_start(ScheduleShape shape, double s_end, double target_area) {
  if (shape == ScheduleShape::ConstantOne)
    throw ConfigError("calibrate: constant-one has no adjustable start");
  if (!(s_end >= 0.0) || !std::isfinite(target_area))
    throw ConfigError("calibrate: s_end must be >= 0 and target area finite");
  const double s_start = s_end + (target_area - s_end) / profile_area(shape);
  if (!(s_start >= 0.0))
    throw ConfigError("calibrate: target area infeasible (would need s_start < 0)");
  return s_start;
}

}  // namespace flowlag

#include "sdobs/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sdobs/errors.hpp"

namespace sdobs {

nlohmann::json ScheduleSpec::to_json() const {
  switch (kind) {
    case Kind::Uniform: return {{"kind", "uniform"}, {"h", h}, {"horizon", horizon}};
    case Kind::RandomBounded:
      return {{"kind", "random_bounded"}, {"h_min", h_min}, {"h_max", h_max},
              {"seed", seed}, {"horizon", horizon}};
    case Kind::Explicit: return {{"kind", "explicit"}, {"times", times}, {"horizon", horizon}};
  }
  return nullptr;
}

ScheduleSpec ScheduleSpec::from_json(const nlohmann::json& spec) {
  ScheduleSpec s;
  const auto kind = spec.value("kind", std::string("uniform"));
  if (kind == "uniform") {
    s.kind = Kind::Uniform;
  } else if (kind == "random_bounded") {
    s.kind = Kind::RandomBounded;
  } else if (kind == "explicit") {
    s.kind = Kind::Explicit;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown schedule kind '" + kind + "'");
  }
  s.h = spec.value("h", s.h);
  s.h_min = spec.value("h_min", s.h_min);
  s.h_max = spec.value("h_max", s.h_max);
  s.seed = spec.value("seed", s.seed);
  s.times = spec.value("times", s.times);
  s.horizon = spec.value("horizon", s.horizon);
  return s;
}

SamplingSchedule::SamplingSchedule(std::vector<double> times, double diameter, double horizon)
    : times_(std::move(times)), diameter_(diameter), horizon_(horizon) {
  if (times_.empty() || times_.front() != 0.0)
    throw Error(ErrorCode::InvalidSpec, "schedule must start at t = 0");
  for (std::size_t j = 1; j < times_.size(); ++j) {
    if (!(times_[j] > times_[j - 1]))
      throw Error(ErrorCode::InvalidSpec, "sample times must be strictly increasing");
    if (times_[j] - times_[j - 1] > diameter_ * (1.0 + 1e-12))
      throw Error(ErrorCode::InvalidSpec, "gap exceeds the declared diameter");
  }
}

double SamplingSchedule::last_sample(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return times_.front();
  return *(it - 1);
}

SamplingSchedule make_schedule(const ScheduleSpec& spec) {
  if (!(spec.horizon > 0.0)) throw Error(ErrorCode::InvalidSpec, "horizon must be positive");
  std::vector<double> times;
  switch (spec.kind) {
    case ScheduleSpec::Kind::Uniform: {
      if (!(spec.h > 0.0)) throw Error(ErrorCode::InvalidSpec, "period must be positive");
      const auto count = static_cast<std::size_t>(std::ceil(spec.horizon / spec.h - 1e-9));
      for (std::size_t j = 0; j <= count; ++j) times.push_back(static_cast<double>(j) * spec.h);
      return SamplingSchedule(std::move(times), spec.h, spec.horizon);
    }
    case ScheduleSpec::Kind::RandomBounded: {
      if (!(spec.h_min > 0.0) || spec.h_min > spec.h_max)
        throw Error(ErrorCode::InvalidSpec, "need 0 < h_min <= h_max");
      std::mt19937_64 gen(spec.seed);
      std::uniform_real_distribution<double> gap(spec.h_min, spec.h_max);
      times.push_back(0.0);
      while (times.back() < spec.horizon) times.push_back(times.back() + gap(gen));
      return SamplingSchedule(std::move(times), spec.h_max, spec.horizon);
    }
    case ScheduleSpec::Kind::Explicit: {
      double diameter = 0.0;
      for (std::size_t j = 1; j < spec.times.size(); ++j)
        diameter = std::max(diameter, spec.times[j] - spec.times[j - 1]);
      for (std::size_t j = 1; j < spec.times.size(); ++j)
        if (!(spec.times[j] > spec.times[j - 1]))
          throw Error(ErrorCode::InvalidSpec, "explicit sample times must be strictly increasing");
      return SamplingSchedule(spec.times, diameter > 0.0 ? diameter : spec.horizon, spec.horizon);
    }
  }
  throw Error(ErrorCode::InvalidSpec, "unknown schedule kind");
}

}  // namespace sdobs

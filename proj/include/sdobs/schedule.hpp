#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdobs {

struct ScheduleSpec {
  enum class Kind { Uniform, RandomBounded, Explicit };
  Kind kind = Kind::Uniform;
  double h = 0.1;          // Uniform period
  double h_min = 0.0;      // RandomBounded gaps
  double h_max = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> times;  // Explicit
  double horizon = 1.0;

  nlohmann::json to_json() const;
  static ScheduleSpec from_json(const nlohmann::json& spec);
};

/// Increasing sample times t_0 = 0 < t_1 < … with t_last ≥ horizon.
class SamplingSchedule {
 public:
  SamplingSchedule(std::vector<double> times, double diameter, double horizon);

  const std::vector<double>& times() const { return times_; }
  double diameter() const { return diameter_; }
  double horizon() const { return horizon_; }
  /// η(t) = max{t_j : t_j ≤ t}.
  double last_sample(double t) const;

 private:
  std::vector<double> times_;
  double diameter_;
  double horizon_;
};

/// Throws InvalidSpec on inconsistent specifications.
SamplingSchedule make_schedule(const ScheduleSpec& spec);

}  // namespace sdobs

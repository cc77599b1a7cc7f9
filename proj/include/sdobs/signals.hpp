#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdobs/grid.hpp"
#include "sdobs/profile.hpp"

namespace sdobs {

/// Scalar signal of time: zero, constant, sinusoid or seeded bounded random.
class TimeSignal {
 public:
  enum class Kind { Zero, Constant, Sinusoid, Random };

  TimeSignal() = default;
  static TimeSignal constant(double value);
  /// offset + amplitude · sin(omega t + phase).
  static TimeSignal sinusoid(double amplitude, double omega, double phase = 0.0,
                             double offset = 0.0);
  /// Uniform in [-amplitude, amplitude], a deterministic function of (seed, t).
  static TimeSignal random(double amplitude, std::uint64_t seed);

  double operator()(double t) const;
  double derivative(double t) const;
  /// sup_t |signal(t)|.
  double bound() const;
  Kind kind() const { return kind_; }
  TimeSignal scaled(double alpha) const;

  nlohmann::json to_json() const;
  static TimeSignal from_json(const nlohmann::json& spec);

 private:
  Kind kind_ = Kind::Zero;
  double amplitude_ = 0.0;
  double omega_ = 0.0;
  double phase_ = 0.0;
  double offset_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Distributed signal v(t,x) = Σ_k a_k(t) b_k(x).
class FieldSignal {
 public:
  struct Term {
    TimeSignal amplitude;
    Profile shape;
  };

  FieldSignal() = default;
  explicit FieldSignal(std::vector<Term> terms) : terms_(std::move(terms)) {}
  static FieldSignal separable(TimeSignal a, Profile b);

  double operator()(double t, double x) const;
  double dx(double t, double x) const;
  double dt(double t, double x) const;
  bool zero() const;
  const std::vector<Term>& terms() const { return terms_; }

  nlohmann::json to_json() const;
  static FieldSignal from_json(const nlohmann::json& spec);

 private:
  std::vector<Term> terms_;
};

/// FieldSignal with its spatial shapes pre-sampled on a grid.
class SampledField {
 public:
  SampledField(const FieldSignal& signal, const Grid& grid);
  Vec at(double t) const;
  bool zero() const { return shapes_.empty(); }

 private:
  std::vector<TimeSignal> amplitudes_;
  std::vector<Vec> shapes_;
  std::size_t nodes_;
};

struct Disturbances {
  FieldSignal v;
  FieldSignal v_tilde;
  std::vector<TimeSignal> xi;  // one per output channel (missing → zero)
  /// Known additive output offset per channel, added to y and removed again by
  /// the observer's reset, such as a boundary value carried into the derivative variable.
  std::vector<TimeSignal> output_offset;

  double noise(std::size_t channel, double t) const;
  double offset(std::size_t channel, double t) const;
};

}  // namespace sdobs

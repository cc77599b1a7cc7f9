#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdobs/grid.hpp"

namespace sdobs {

/// One term a·cos(freq·x + phase) of a cosine series.
struct CosineTerm {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

/// A real function on [0,1] together with its first two derivatives.
///
/// Closed-form profiles (constant, polynomial, cosine series, exponential and
/// arithmetic combinations of those) evaluate exactly at any point. Sampled
/// profiles carry values on a uniform grid; their derivatives come from
/// fourth-order finite differences and point values from linear interpolation.
class Profile {
 public:
  Profile();  // identically zero

  static Profile constant(double value);
  /// Σ coeffs[k] x^k.
  static Profile polynomial(std::vector<double> coeffs);
  /// offset + Σ a cos(f x + φ).
  static Profile cosine_series(std::vector<CosineTerm> terms, double offset = 0.0);
  /// scale · exp(rate · x).
  static Profile exponential(double scale, double rate);
  static Profile sampled(Vec values);

  double operator()(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  bool closed_form() const;
  /// True when the profile is a known constant (value reported by constant_value()).
  bool is_constant() const;
  double constant_value() const;

  /// Grid the samples live on (sampled profiles only).
  std::size_t sample_nodes() const;

  Vec sample(const Grid& grid) const;
  /// Second derivative on the grid: exact for closed forms, fourth-order FD otherwise.
  Vec sample_d2(const Grid& grid) const;

  /// alpha·a + beta·b, closed form when both inputs are.
  static Profile combine(double alpha, const Profile& a, double beta, const Profile& b);
  /// Pointwise product a·b.
  static Profile product(const Profile& a, const Profile& b);
  Profile scaled(double alpha) const { return combine(alpha, *this, 0.0, Profile()); }

  /// Serialized description; null for composite profiles that have no spec form.
  nlohmann::json to_json() const;
  static Profile from_json(const nlohmann::json& spec);

  struct Impl;

 private:
  explicit Profile(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// ∫_0^1 a·b dx. Composite Gauss-Legendre when both are closed form, trapezoid
/// on the sampled grid otherwise.
double l2_inner(const Profile& a, const Profile& b);
double l2_norm(const Profile& a);

/// ∫_0^1 g(x) dx by composite Gauss-Legendre (64 panels, 20 points each).
double integrate(const std::function<double(double)>& g);

}  // namespace sdobs

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdobs/grid.hpp"
#include "sdobs/profile.hpp"

namespace sdobs {

/// The globally Lipschitz term f(u) = K(u) + g(x, P̄u) of the plant.
///
/// LinearNonlocal:  f(u)(x) = Σ_r α_r a_r(x) ⟨b_r, u⟩   (separable kernel G(x,s))
/// GainSaturated:   f(u)(x) = Σ_r α_r a_r(x) tanh(⟨w_r, u⟩)
///
/// Inner products are trapezoid sums on the simulation grid, and the declared
/// Lipschitz constant R is computed from the same discrete norms, so it bounds
/// the discrete map exactly.
class NonlinearTerm {
 public:
  enum class Kind { Zero, LinearNonlocal, GainSaturated };

  struct Component {
    double gain = 0.0;
    Profile shape;   // a_r
    Profile weight;  // b_r or w_r
  };

  NonlinearTerm() = default;
  static NonlinearTerm linear_nonlocal(std::vector<Component> components);
  static NonlinearTerm gain_saturated(std::vector<Component> components);

  Kind kind() const { return kind_; }
  bool zero() const { return kind_ == Kind::Zero || components_.empty(); }
  bool linear() const { return kind_ != Kind::GainSaturated; }
  const std::vector<Component>& components() const { return components_; }

  nlohmann::json to_json() const;
  static NonlinearTerm from_json(const nlohmann::json& spec);

 private:
  Kind kind_ = Kind::Zero;
  std::vector<Component> components_;
};

/// A NonlinearTerm bound to a grid, with pre-sampled shapes.
class DiscreteNonlinearity {
 public:
  DiscreteNonlinearity(const NonlinearTerm& term, const Grid& grid);

  Vec apply(const Vec& u) const;
  bool zero() const { return shapes_.empty(); }

  /// R of ‖f(u) − f(w)‖ ≤ R ‖u − w‖ in the trapezoid norm.
  double lipschitz_R() const { return lipschitz_R_; }
  /// L̄: sup-norm bound, informational.
  double lipschitz_sup() const { return lipschitz_sup_; }

 private:
  NonlinearTerm::Kind kind_;
  Grid grid_;
  std::vector<double> gains_;
  std::vector<Vec> shapes_;
  std::vector<Vec> weights_;
  double lipschitz_R_ = 0.0;
  double lipschitz_sup_ = 0.0;
};

}  // namespace sdobs

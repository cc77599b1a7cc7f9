#include "sdobs/nonlinearity.hpp"

#include <cmath>

#include "sdobs/errors.hpp"

namespace sdobs {

NonlinearTerm NonlinearTerm::linear_nonlocal(std::vector<Component> components) {
  NonlinearTerm t;
  t.kind_ = Kind::LinearNonlocal;
  t.components_ = std::move(components);
  return t;
}

NonlinearTerm NonlinearTerm::gain_saturated(std::vector<Component> components) {
  NonlinearTerm t;
  t.kind_ = Kind::GainSaturated;
  t.components_ = std::move(components);
  return t;
}

nlohmann::json NonlinearTerm::to_json() const {
  if (zero()) return {{"kind", "zero"}};
  auto list = nlohmann::json::array();
  for (const auto& c : components_)
    list.push_back({{"gain", c.gain}, {"shape", c.shape.to_json()}, {"weight", c.weight.to_json()}});
  return {{"kind", kind_ == Kind::LinearNonlocal ? "linear_nonlocal" : "gain_saturated"},
          {"components", list}};
}

NonlinearTerm NonlinearTerm::from_json(const nlohmann::json& spec) {
  if (spec.is_null()) return {};
  const auto kind = spec.value("kind", std::string("zero"));
  if (kind == "zero") return {};
  std::vector<Component> components;
  for (const auto& c : spec.value("components", nlohmann::json::array())) {
    if (!c.contains("shape") || !c.contains("weight"))
      throw Error(ErrorCode::ConfigError, "nonlinearity component needs 'shape' and 'weight'");
    components.push_back({c.value("gain", 1.0), Profile::from_json(c.at("shape")),
                          Profile::from_json(c.at("weight"))});
  }
  if (kind == "linear_nonlocal") return linear_nonlocal(std::move(components));
  if (kind == "gain_saturated") return gain_saturated(std::move(components));
  throw Error(ErrorCode::ConfigError, "unknown nonlinearity kind '" + kind + "'");
}

DiscreteNonlinearity::DiscreteNonlinearity(const NonlinearTerm& term, const Grid& grid)
    : kind_(term.kind()), grid_(grid) {
  if (term.zero()) return;
  for (const auto& c : term.components()) {
    gains_.push_back(c.gain);
    shapes_.push_back(c.shape.sample(grid));
    weights_.push_back(c.weight.sample(grid));
  }
  const std::size_t n = gains_.size();
  if (kind_ == NonlinearTerm::Kind::LinearNonlocal) {
    // Discrete Hilbert-Schmidt norm of the separable kernel Σ α_r a_r(x) b_r(s).
    double hs = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s)
        hs += gains_[r] * gains_[s] * inner(grid, shapes_[r], shapes_[s]) *
              inner(grid, weights_[r], weights_[s]);
    lipschitz_R_ = std::sqrt(std::max(hs, 0.0));
  } else {
    for (std::size_t r = 0; r < n; ++r)
      lipschitz_R_ += std::abs(gains_[r]) * l2_norm(grid, shapes_[r]) * l2_norm(grid, weights_[r]);
  }
  for (std::size_t r = 0; r < n; ++r)
    lipschitz_sup_ += std::abs(gains_[r]) * sup_norm(shapes_[r]) * l2_norm(grid, weights_[r]);
}

Vec DiscreteNonlinearity::apply(const Vec& u) const {
  Vec out = Vec::Zero(u.size());
  for (std::size_t r = 0; r < gains_.size(); ++r) {
    const double s = inner(grid_, weights_[r], u);
    const double g = kind_ == NonlinearTerm::Kind::GainSaturated ? std::tanh(s) : s;
    out += gains_[r] * g * shapes_[r];
  }
  return out;
}

}  // namespace sdobs

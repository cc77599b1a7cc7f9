#include "sdobs/signals.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "sdobs/errors.hpp"

namespace sdobs {

TimeSignal TimeSignal::constant(double value) {
  TimeSignal s;
  s.kind_ = Kind::Constant;
  s.offset_ = value;
  return s;
}

TimeSignal TimeSignal::sinusoid(double amplitude, double omega, double phase, double offset) {
  TimeSignal s;
  s.kind_ = Kind::Sinusoid;
  s.amplitude_ = amplitude;
  s.omega_ = omega;
  s.phase_ = phase;
  s.offset_ = offset;
  return s;
}

TimeSignal TimeSignal::random(double amplitude, std::uint64_t seed) {
  TimeSignal s;
  s.kind_ = Kind::Random;
  s.amplitude_ = amplitude;
  s.seed_ = seed;
  return s;
}

double TimeSignal::operator()(double t) const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return offset_;
    case Kind::Sinusoid: return offset_ + amplitude_ * std::sin(omega_ * t + phase_);
    case Kind::Random: {
      // The draw depends only on (seed, t), so replays and parallel runs agree.
      std::mt19937_64 gen(seed_ ^ (std::bit_cast<std::uint64_t>(t) * 0x9E3779B97F4A7C15ULL));
      std::uniform_real_distribution<double> dist(-amplitude_, amplitude_);
      return dist(gen);
    }
  }
  return 0.0;
}

double TimeSignal::derivative(double t) const {
  if (kind_ == Kind::Sinusoid) return amplitude_ * omega_ * std::cos(omega_ * t + phase_);
  return 0.0;
}

double TimeSignal::bound() const {
  switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return std::abs(offset_);
    case Kind::Sinusoid: return std::abs(offset_) + std::abs(amplitude_);
    case Kind::Random: return std::abs(amplitude_);
  }
  return 0.0;
}

TimeSignal TimeSignal::scaled(double alpha) const {
  TimeSignal s = *this;
  s.amplitude_ *= alpha;
  s.offset_ *= alpha;
  return s;
}

nlohmann::json TimeSignal::to_json() const {
  switch (kind_) {
    case Kind::Zero: return {{"kind", "zero"}};
    case Kind::Constant: return {{"kind", "constant"}, {"value", offset_}};
    case Kind::Sinusoid:
      return {{"kind", "sinusoid"}, {"amplitude", amplitude_}, {"omega", omega_},
              {"phase", phase_}, {"offset", offset_}};
    case Kind::Random: return {{"kind", "random"}, {"amplitude", amplitude_}, {"seed", seed_}};
  }
  return nullptr;
}

TimeSignal TimeSignal::from_json(const nlohmann::json& spec) {
  if (spec.is_null()) return {};
  if (spec.is_number()) return constant(spec.get<double>());
  if (!spec.is_object()) throw Error(ErrorCode::ConfigError, "time signal must be an object");
  const auto kind = spec.value("kind", std::string("zero"));
  if (kind == "zero") return {};
  if (kind == "constant") return constant(spec.value("value", 0.0));
  if (kind == "sinusoid")
    return sinusoid(spec.value("amplitude", 0.0), spec.value("omega", 1.0), spec.value("phase", 0.0),
                    spec.value("offset", 0.0));
  if (kind == "random") return random(spec.value("amplitude", 0.0), spec.value("seed", std::uint64_t{0}));
  throw Error(ErrorCode::ConfigError, "unknown time signal kind '" + kind + "'");
}

FieldSignal FieldSignal::separable(TimeSignal a, Profile b) {
  return FieldSignal({Term{std::move(a), std::move(b)}});
}

double FieldSignal::operator()(double t, double x) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.amplitude(t) * term.shape(x);
  return s;
}

double FieldSignal::dx(double t, double x) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.amplitude(t) * term.shape.d1(x);
  return s;
}

double FieldSignal::dt(double t, double x) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.amplitude.derivative(t) * term.shape(x);
  return s;
}

bool FieldSignal::zero() const {
  for (const auto& term : terms_)
    if (term.amplitude.kind() != TimeSignal::Kind::Zero) return false;
  return true;
}

nlohmann::json FieldSignal::to_json() const {
  auto terms = nlohmann::json::array();
  for (const auto& term : terms_)
    terms.push_back({{"amplitude", term.amplitude.to_json()}, {"shape", term.shape.to_json()}});
  return {{"terms", terms}};
}

FieldSignal FieldSignal::from_json(const nlohmann::json& spec) {
  if (spec.is_null() || (spec.is_string() && spec.get<std::string>() == "zero")) return {};
  const nlohmann::json& list = spec.is_array() ? spec : spec.value("terms", nlohmann::json::array());
  std::vector<Term> terms;
  for (const auto& t : list) {
    if (!t.contains("amplitude") || !t.contains("shape"))
      throw Error(ErrorCode::ConfigError, "field signal term needs 'amplitude' and 'shape'");
    terms.push_back({TimeSignal::from_json(t.at("amplitude")), Profile::from_json(t.at("shape"))});
  }
  return FieldSignal(std::move(terms));
}

SampledField::SampledField(const FieldSignal& signal, const Grid& grid) : nodes_(grid.nodes()) {
  for (const auto& term : signal.terms()) {
    if (term.amplitude.kind() == TimeSignal::Kind::Zero) continue;
    amplitudes_.push_back(term.amplitude);
    shapes_.push_back(term.shape.sample(grid));
  }
}

Vec SampledField::at(double t) const {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(nodes_));
  for (std::size_t k = 0; k < shapes_.size(); ++k) out += amplitudes_[k](t) * shapes_[k];
  return out;
}

double Disturbances::noise(std::size_t channel, double t) const {
  return channel < xi.size() ? xi[channel](t) : 0.0;
}

double Disturbances::offset(std::size_t channel, double t) const {
  return channel < output_offset.size() ? output_offset[channel](t) : 0.0;
}

}  // namespace sdobs

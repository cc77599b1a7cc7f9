#include "sdobs/profile.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "sdobs/errors.hpp"

namespace sdobs {

struct Profile::Impl {
  enum class Kind { Zero, Constant, Polynomial, Cosine, Exponential, Sampled, Composite };
  Kind kind = Kind::Zero;
  double constant = 0.0;
  std::vector<double> coeffs;
  std::vector<CosineTerm> terms;
  double scale = 0.0;
  double rate = 0.0;
  Vec samples;
  Vec samples_d1;
  Vec samples_d2;
  std::function<double(double, int)> eval;  // composite: derivative order 0..2
  bool composite_closed = true;
  std::size_t composite_nodes = 0;

  double value(double x, int order) const;
};

namespace {

// Fourth-order finite differences on a uniform grid (one-sided near the ends).
Vec fd_first(const Vec& f) {
  const Eigen::Index n = f.size();
  const double h = 1.0 / static_cast<double>(n - 1);
  Vec d(n);
  if (n < 6) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index a = std::max<Eigen::Index>(k - 1, 0), b = std::min<Eigen::Index>(k + 1, n - 1);
      d(k) = (f(b) - f(a)) / (static_cast<double>(b - a) * h);
    }
    return d;
  }
  for (Eigen::Index k = 2; k < n - 2; ++k)
    d(k) = (f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2)) / (12.0 * h);
  auto left0 = [&](auto g) {
    return (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)) / (12.0 * h);
  };
  auto left1 = [&](auto g) {
    return (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) / (12.0 * h);
  };
  d(0) = left0([&](Eigen::Index i) { return f(i); });
  d(1) = left1([&](Eigen::Index i) { return f(i); });
  d(n - 1) = -left0([&](Eigen::Index i) { return f(n - 1 - i); });
  d(n - 2) = -left1([&](Eigen::Index i) { return f(n - 1 - i); });
  return d;
}

Vec fd_second(const Vec& f) {
  const Eigen::Index n = f.size();
  const double h = 1.0 / static_cast<double>(n - 1);
  Vec d = Vec::Zero(n);
  if (n < 6) {
    for (Eigen::Index k = 1; k + 1 < n; ++k) d(k) = (f(k - 1) - 2.0 * f(k) + f(k + 1)) / (h * h);
    if (n >= 3) {
      d(0) = d(1);
      d(n - 1) = d(n - 2);
    }
    return d;
  }
  const double s = 12.0 * h * h;
  for (Eigen::Index k = 2; k < n - 2; ++k)
    d(k) = (-f(k - 2) + 16.0 * f(k - 1) - 30.0 * f(k) + 16.0 * f(k + 1) - f(k + 2)) / s;
  auto left0 = [&](auto g) {
    return (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5)) / s;
  };
  auto left1 = [&](auto g) {
    return (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) / s;
  };
  d(0) = left0([&](Eigen::Index i) { return f(i); });
  d(1) = left1([&](Eigen::Index i) { return f(i); });
  d(n - 1) = left0([&](Eigen::Index i) { return f(n - 1 - i); });
  d(n - 2) = left1([&](Eigen::Index i) { return f(n - 1 - i); });
  return d;
}

double interpolate(const Vec& samples, double x) {
  const Eigen::Index n = samples.size();
  const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(n - 1);
  const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), n - 2);
  const double frac = pos - static_cast<double>(k);
  return (1.0 - frac) * samples(k) + frac * samples(k + 1);
}

}  // namespace

double Profile::Impl::value(double x, int order) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return order == 0 ? constant : 0.0;
    case Kind::Polynomial: {
      double acc = 0.0;
      for (std::size_t k = coeffs.size(); k-- > 0;) {
        double c = coeffs[k];
        if (order >= 1) {
          if (k < static_cast<std::size_t>(order)) continue;
          c *= static_cast<double>(k);
          if (order == 2) c *= static_cast<double>(k - 1);
        }
        acc += c * std::pow(x, static_cast<double>(k) - order);
      }
      return acc;
    }
    case Kind::Cosine: {
      double acc = order == 0 ? constant : 0.0;
      for (const auto& t : terms) {
        const double arg = t.frequency * x + t.phase;
        if (order == 0) acc += t.amplitude * std::cos(arg);
        else if (order == 1) acc -= t.amplitude * t.frequency * std::sin(arg);
        else acc -= t.amplitude * t.frequency * t.frequency * std::cos(arg);
      }
      return acc;
    }
    case Kind::Exponential: return scale * std::pow(rate, order) * std::exp(rate * x);
    case Kind::Sampled:
      return interpolate(order == 0 ? samples : order == 1 ? samples_d1 : samples_d2, x);
    case Kind::Composite: return eval(x, order);
  }
  return 0.0;
}

Profile::Profile() : impl_(std::make_shared<Impl>()) {}

Profile Profile::constant(double value) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Constant;
  impl->constant = value;
  return Profile(impl);
}

Profile Profile::polynomial(std::vector<double> coeffs) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Polynomial;
  impl->coeffs = std::move(coeffs);
  return Profile(impl);
}

Profile Profile::cosine_series(std::vector<CosineTerm> terms, double offset) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Cosine;
  impl->terms = std::move(terms);
  impl->constant = offset;
  return Profile(impl);
}

Profile Profile::exponential(double scale, double rate) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Exponential;
  impl->scale = scale;
  impl->rate = rate;
  return Profile(impl);
}

Profile Profile::sampled(Vec values) {
  if (values.size() < 2) throw Error(ErrorCode::InvalidArgument, "sampled profile needs 2+ values");
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Sampled;
  impl->samples_d1 = fd_first(values);
  impl->samples_d2 = fd_second(values);
  impl->samples = std::move(values);
  return Profile(impl);
}

double Profile::operator()(double x) const { return impl_->value(x, 0); }
double Profile::d1(double x) const { return impl_->value(x, 1); }
double Profile::d2(double x) const { return impl_->value(x, 2); }

bool Profile::closed_form() const {
  if (impl_->kind == Impl::Kind::Sampled) return false;
  if (impl_->kind == Impl::Kind::Composite) return impl_->composite_closed;
  return true;
}

bool Profile::is_constant() const {
  using K = Impl::Kind;
  switch (impl_->kind) {
    case K::Zero:
    case K::Constant: return true;
    case K::Polynomial:
      return std::all_of(impl_->coeffs.begin() + std::min<std::size_t>(1, impl_->coeffs.size()),
                         impl_->coeffs.end(), [](double c) { return c == 0.0; });
    case K::Cosine:
      return std::all_of(impl_->terms.begin(), impl_->terms.end(), [](const CosineTerm& t) {
        return t.amplitude == 0.0 || t.frequency == 0.0;
      });
    case K::Exponential: return impl_->rate == 0.0 || impl_->scale == 0.0;
    default: return false;
  }
}

double Profile::constant_value() const {
  if (!is_constant()) throw Error(ErrorCode::InvalidArgument, "profile is not constant");
  return (*this)(0.0);
}

std::size_t Profile::sample_nodes() const {
  if (impl_->kind == Impl::Kind::Sampled) return static_cast<std::size_t>(impl_->samples.size());
  if (impl_->kind == Impl::Kind::Composite) return impl_->composite_nodes;
  return 0;
}

Vec Profile::sample(const Grid& grid) const {
  if (impl_->kind == Impl::Kind::Sampled &&
      static_cast<std::size_t>(impl_->samples.size()) == grid.nodes())
    return impl_->samples;
  Vec out(static_cast<Eigen::Index>(grid.nodes()));
  for (std::size_t k = 0; k < grid.nodes(); ++k) out(static_cast<Eigen::Index>(k)) = (*this)(grid.x(k));
  return out;
}

Vec Profile::sample_d2(const Grid& grid) const {
  if (impl_->kind == Impl::Kind::Sampled &&
      static_cast<std::size_t>(impl_->samples.size()) == grid.nodes())
    return impl_->samples_d2;
  if (!closed_form()) return fd_second(sample(grid));
  Vec out(static_cast<Eigen::Index>(grid.nodes()));
  for (std::size_t k = 0; k < grid.nodes(); ++k) out(static_cast<Eigen::Index>(k)) = d2(grid.x(k));
  return out;
}

Profile Profile::combine(double alpha, const Profile& a, double beta, const Profile& b) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Composite;
  impl->composite_closed = a.closed_form() && b.closed_form();
  impl->composite_nodes = std::max(a.sample_nodes(), b.sample_nodes());
  auto ia = a.impl_, ib = b.impl_;
  impl->eval = [=](double x, int order) {
    double out = 0.0;
    if (alpha != 0.0) out += alpha * ia->value(x, order);
    if (beta != 0.0) out += beta * ib->value(x, order);
    return out;
  };
  return Profile(impl);
}

Profile Profile::product(const Profile& a, const Profile& b) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Impl::Kind::Composite;
  impl->composite_closed = a.closed_form() && b.closed_form();
  impl->composite_nodes = std::max(a.sample_nodes(), b.sample_nodes());
  auto ia = a.impl_, ib = b.impl_;
  impl->eval = [=](double x, int order) {
    const double f = ia->value(x, 0), g = ib->value(x, 0);
    if (order == 0) return f * g;
    const double f1 = ia->value(x, 1), g1 = ib->value(x, 1);
    if (order == 1) return f1 * g + f * g1;
    return ia->value(x, 2) * g + 2.0 * f1 * g1 + f * ib->value(x, 2);
  };
  return Profile(impl);
}

nlohmann::json Profile::to_json() const {
  using K = Impl::Kind;
  nlohmann::json j;
  switch (impl_->kind) {
    case K::Zero: j = {{"kind", "constant"}, {"value", 0.0}}; break;
    case K::Constant: j = {{"kind", "constant"}, {"value", impl_->constant}}; break;
    case K::Polynomial: j = {{"kind", "polynomial"}, {"coeffs", impl_->coeffs}}; break;
    case K::Cosine: {
      auto terms = nlohmann::json::array();
      for (const auto& t : impl_->terms)
        terms.push_back({{"amplitude", t.amplitude}, {"frequency", t.frequency}, {"phase", t.phase}});
      j = {{"kind", "cosine_series"}, {"offset", impl_->constant}, {"terms", terms}};
      break;
    }
    case K::Exponential: j = {{"kind", "exponential"}, {"scale", impl_->scale}, {"rate", impl_->rate}}; break;
    case K::Sampled:
      j = {{"kind", "sampled"},
           {"values", std::vector<double>(impl_->samples.data(),
                                          impl_->samples.data() + impl_->samples.size())}};
      break;
    case K::Composite: j = nullptr; break;
  }
  return j;
}

Profile Profile::from_json(const nlohmann::json& spec) {
  if (spec.is_number()) return constant(spec.get<double>());
  if (!spec.is_object() || !spec.contains("kind"))
    throw Error(ErrorCode::ConfigError, "profile needs a \"kind\" field: " + spec.dump());
  const auto kind = spec.at("kind").get<std::string>();
  if (kind == "constant") return constant(spec.value("value", 0.0));
  if (kind == "polynomial") return polynomial(spec.at("coeffs").get<std::vector<double>>());
  if (kind == "cosine_series") {
    std::vector<CosineTerm> terms;
    for (const auto& t : spec.value("terms", nlohmann::json::array()))
      terms.push_back({t.value("amplitude", 0.0), t.value("frequency", 0.0), t.value("phase", 0.0)});
    return cosine_series(std::move(terms), spec.value("offset", 0.0));
  }
  if (kind == "exponential") return exponential(spec.value("scale", 1.0), spec.value("rate", 0.0));
  if (kind == "sampled") {
    const auto values = spec.at("values").get<std::vector<double>>();
    return sampled(Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size())));
  }
  throw Error(ErrorCode::ConfigError, "unknown profile kind '" + kind + "'");
}

double integrate(const std::function<double(double)>& g) {
  constexpr int panels = 64;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double a = static_cast<double>(k) / panels, b = static_cast<double>(k + 1) / panels;
    total += boost::math::quadrature::gauss<double, 20>::integrate(g, a, b);
  }
  return total;
}

double l2_inner(const Profile& a, const Profile& b) {
  if (a.closed_form() && b.closed_form())
    return integrate([&](double x) { return a(x) * b(x); });
  const Grid grid(std::max(a.sample_nodes(), b.sample_nodes()));
  return inner(grid, a.sample(grid), b.sample(grid));
}

double l2_norm(const Profile& a) { return std::sqrt(std::max(0.0, l2_inner(a, a))); }

}  // namespace sdobs

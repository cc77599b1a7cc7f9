#include "sdobs/sturm_liouville.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <lapacke.h>

#include "sdobs/errors.hpp"

namespace sdobs {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

double interp(const Vec& xs, const Vec& ys, double x) {
  const Eigen::Index n = xs.size();
  if (x <= xs(0)) return ys(0);
  if (x >= xs(n - 1)) return ys(n - 1);
  const double* begin = xs.data();
  const auto it = std::upper_bound(begin, begin + n, x);
  const Eigen::Index k = std::clamp<Eigen::Index>((it - begin) - 1, 0, n - 2);
  const double t = (x - xs(k)) / (xs(k + 1) - xs(k));
  return (1.0 - t) * ys(k) + t * ys(k + 1);
}

// Fix the sign so that φ(0) > 0, or φ'(0) > 0 when φ(0) vanishes.
void fix_sign(Vec& mode, double& d0, double& d1) {
  const double scale = sup_norm(mode);
  const double lead = std::abs(mode(0)) > 1e-8 * scale ? mode(0) : d0;
  if (lead < 0.0) {
    mode = -mode;
    d0 = -d0;
    d1 = -d1;
  }
}

}  // namespace

void SLProblem::validate() const {
  if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "diffusion p must be positive");
  if (left.a * left.a + left.b * left.b <= 0.0 || right.a * right.a + right.b * right.b <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "each boundary needs a^2 + b^2 > 0");
}

Profile SpectralBasis::mode_profile(std::size_t n) const {
  if (analytic()) return closed_forms.at(n);
  return Profile::sampled(modes.col(idx(n)));
}

Vec SpectralBasis::mode_on(const Grid& target, std::size_t n) const {
  if (analytic()) return closed_forms.at(n).sample(target);
  return restrict_to(target, modes.col(idx(n)));
}

DiscreteSL::DiscreteSL(const SLProblem& problem, const Grid& grid)
    : grid_(grid),
      left_dirichlet_(problem.left.dirichlet()),
      right_dirichlet_(problem.right.dirichlet()) {
  problem.validate();
  const auto n = idx(grid.nodes());
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "operator grid needs at least 3 nodes");
  const double h = grid.dx();
  const double p = problem.p;
  const Vec q = problem.q.sample(grid);
  lower_ = Vec::Zero(n);
  diag_ = Vec::Zero(n);
  upper_ = Vec::Zero(n);
  for (Eigen::Index k = 1; k < n - 1; ++k) {
    lower_(k) = -p / (h * h);
    upper_(k) = -p / (h * h);
    diag_(k) = 2.0 * p / (h * h) + q(k);
  }
  if (left_dirichlet_) {
    lower_(1) = 0.0;
  } else {
    const double ratio = problem.left.a / problem.left.b;
    diag_(0) = 2.0 * p / (h * h) - 2.0 * p * ratio / h + q(0);
    upper_(0) = -2.0 * p / (h * h);
  }
  if (right_dirichlet_) {
    upper_(n - 2) = 0.0;
  } else {
    const double ratio = problem.right.a / problem.right.b;
    diag_(n - 1) = 2.0 * p / (h * h) + 2.0 * p * ratio / h + q(n - 1);
    lower_(n - 1) = -2.0 * p / (h * h);
  }
}

Vec DiscreteSL::apply(const Vec& u) const {
  const Eigen::Index n = diag_.size();
  if (u.size() != n) throw Error(ErrorCode::GridMismatch, "state does not match operator grid");
  Vec out = diag_.cwiseProduct(u);
  for (Eigen::Index k = 1; k < n; ++k) out(k) += lower_(k) * u(k - 1);
  for (Eigen::Index k = 0; k + 1 < n; ++k) out(k) += upper_(k) * u(k + 1);
  if (left_dirichlet_) out(0) = 0.0;
  if (right_dirichlet_) out(n - 1) = 0.0;
  return out;
}

void DiscreteSL::enforce(Vec& u) const {
  if (left_dirichlet_) u(0) = 0.0;
  if (right_dirichlet_) u(u.size() - 1) = 0.0;
}

double DiscreteSL::boundary_residual(const Vec& u) const {
  double r = 0.0;
  if (left_dirichlet_) r = std::max(r, std::abs(u(0)));
  if (right_dirichlet_) r = std::max(r, std::abs(u(u.size() - 1)));
  return r;
}

SpectralBasis analytic_eigensystem(const SLProblem& problem, std::size_t modes,
                                   std::size_t nodes) {
  problem.validate();
  if (!problem.q.is_constant())
    throw Error(ErrorCode::UnsupportedAnalyticCase, "reaction profile is not constant");
  const auto standard = [](const RobinBC& bc) { return bc.dirichlet() || bc.neumann(); };
  if (!standard(problem.left) || !standard(problem.right))
    throw Error(ErrorCode::UnsupportedAnalyticCase, "boundary conditions are genuinely Robin");
  if (modes == 0) throw Error(ErrorCode::InvalidArgument, "need at least one mode");

  const double p = problem.p;
  const double c = problem.q.constant_value();
  const bool dl = problem.left.dirichlet();
  const bool dr = problem.right.dirichlet();

  SpectralBasis basis;
  basis.grid = Grid(nodes);
  basis.eigenvalues.resize(idx(modes));
  basis.modes.resize(idx(nodes), idx(modes));
  basis.endpoint_derivatives.resize(idx(modes), 2);
  const double root2 = std::sqrt(2.0);

  for (std::size_t j = 0; j < modes; ++j) {
    const double n = static_cast<double>(j + 1);
    double k = 0.0;  // wavenumber
    Profile mode;
    if (!dl && !dr) {
      k = (n - 1.0) * kPi;
      mode = j == 0 ? Profile::constant(1.0) : Profile::cosine_series({{root2, k, 0.0}});
    } else if (!dl && dr) {
      k = (2.0 * n - 1.0) * kPi / 2.0;
      mode = Profile::cosine_series({{root2, k, 0.0}});
    } else if (dl && dr) {
      k = n * kPi;
      mode = Profile::cosine_series({{root2, k, -kPi / 2.0}});
    } else {
      k = (2.0 * n - 1.0) * kPi / 2.0;
      mode = Profile::cosine_series({{root2, k, -kPi / 2.0}});
    }
    basis.eigenvalues(idx(j)) = p * k * k + c;
    basis.modes.col(idx(j)) = mode.sample(basis.grid);
    basis.endpoint_derivatives(idx(j), 0) = mode.d1(0.0);
    basis.endpoint_derivatives(idx(j), 1) = mode.d1(1.0);
    basis.closed_forms.push_back(mode);
  }
  return basis;
}

SpectralBasis numeric_eigensystem(const SLProblem& problem, std::size_t modes,
                                  std::size_t nodes) {
  problem.validate();
  if (modes == 0) throw Error(ErrorCode::InvalidArgument, "need at least one mode");
  if (nodes < 8 * modes)
    throw Error(ErrorCode::ResolutionTooCoarse,
                std::to_string(nodes) + " nodes cannot resolve " + std::to_string(modes) + " modes");
  const Grid grid(nodes);
  const DiscreteSL op(problem, grid);
  const std::size_t first = op.first_active();
  const std::size_t last = op.last_active();
  const std::size_t active = last - first + 1;
  if (modes > active) throw Error(ErrorCode::ResolutionTooCoarse, "more modes than active nodes");

  // Similarity transform with the trapezoid weights makes the matrix symmetric.
  const Vec& w = grid.weights();
  std::vector<double> d(active), e(active > 1 ? active - 1 : 1, 0.0);
  for (std::size_t i = 0; i < active; ++i) {
    const Eigen::Index k = idx(first + i);
    d[i] = op.diag()(k);
    if (i + 1 < active) {
      const double prod = op.upper()(k) * op.lower()(k + 1);
      e[i] = -std::sqrt(std::max(prod, 0.0));
    }
  }
  std::vector<double> values(active), vectors(active * modes);
  std::vector<lapack_int> support(2 * modes);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dstevr(
      LAPACK_COL_MAJOR, 'V', 'I', static_cast<lapack_int>(active), d.data(), e.data(), 0.0, 0.0,
      1, static_cast<lapack_int>(modes), 0.0, &found, values.data(), vectors.data(),
      static_cast<lapack_int>(active), support.data());
  if (info != 0 || static_cast<std::size_t>(found) != modes)
    throw Error(ErrorCode::NearSingular, "tridiagonal eigensolver failed (info " +
                                             std::to_string(info) + ")");

  SpectralBasis basis;
  basis.grid = grid;
  basis.eigenvalues.resize(idx(modes));
  basis.modes = Mat::Zero(idx(nodes), idx(modes));
  basis.endpoint_derivatives.resize(idx(modes), 2);
  const double h = grid.dx();
  const Eigen::Index n = idx(nodes);
  for (std::size_t j = 0; j < modes; ++j) {
    basis.eigenvalues(idx(j)) = values[j];
    Vec mode = Vec::Zero(n);
    for (std::size_t i = 0; i < active; ++i)
      mode(idx(first + i)) = vectors[j * active + i] / std::sqrt(w(idx(first + i)));
    double d0 = op.left_dirichlet() ? (-3.0 * mode(0) + 4.0 * mode(1) - mode(2)) / (2.0 * h)
                                    : -problem.left.a / problem.left.b * mode(0);
    double d1 = op.right_dirichlet()
                    ? (3.0 * mode(n - 1) - 4.0 * mode(n - 2) + mode(n - 3)) / (2.0 * h)
                    : -problem.right.a / problem.right.b * mode(n - 1);
    fix_sign(mode, d0, d1);
    basis.modes.col(idx(j)) = mode;
    basis.endpoint_derivatives(idx(j), 0) = d0;
    basis.endpoint_derivatives(idx(j), 1) = d1;
  }

  // Modes are considered resolved while the spacing dominates the O(dx²) error.
  const Vec q = problem.q.sample(grid);
  const double q_min = q.minCoeff();
  for (std::size_t j = 0; j + 1 < modes; ++j) {
    const double lam = basis.eigenvalues(idx(j)) - q_min;
    const double err = lam * lam * h * h / (12.0 * problem.p);
    const double gap = basis.eigenvalues(idx(j + 1)) - basis.eigenvalues(idx(j));
    if (gap < 10.0 * err)
      throw Error(ErrorCode::ResolutionTooCoarse,
                  "mode " + std::to_string(j + 1) + " is not resolved on " +
                      std::to_string(nodes) + " nodes");
  }
  return basis;
}

SpectralBasis eigensystem(const SLProblem& problem, std::size_t modes, std::size_t nodes) {
  const auto standard = [](const RobinBC& bc) { return bc.dirichlet() || bc.neumann(); };
  if (problem.q.is_constant() && standard(problem.left) && standard(problem.right))
    return analytic_eigensystem(problem, modes, nodes);
  return numeric_eigensystem(problem, modes, nodes);
}

H1Report check_h1(const SLProblem& problem, const SpectralBasis& basis, std::size_t M,
                  std::size_t tail) {
  if (M == 0 || M > basis.size()) throw Error(ErrorCode::InvalidM, "M outside the basis");
  if (!(basis.eigenvalues(idx(M - 1)) > 0.0))
    throw Error(ErrorCode::InvalidM, "lambda_M must be positive");
  H1Report report;
  report.first_mode = M;
  report.sign_condition = problem.left.b >= 0.0 && problem.right.a >= 0.0 &&
                          problem.right.b >= 0.0 && problem.left.a <= 0.0;
  const std::size_t end = std::min(basis.size(), M + tail);
  for (std::size_t n = M - 1; n < end; ++n) {
    const double term = sup_norm(basis.modes.col(idx(n))) / basis.eigenvalues(idx(n));
    report.terms.push_back(term);
    report.partial_sum += term;
  }
  // Least-squares slope of log(term) against log(n) over the second half.
  const std::size_t count = report.terms.size();
  const std::size_t from = count / 2;
  if (count - from >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(count - from);
    for (std::size_t i = from; i < count; ++i) {
      const double lx = std::log(static_cast<double>(M + i));
      const double ly = std::log(report.terms[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    report.decay_exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    report.convergent = report.decay_exponent <= -1.9;
  }
  return report;
}

CoordinateMap::CoordinateMap(Vec x, Vec xi, Vec amplitude)
    : x_(std::move(x)), xi_(std::move(xi)), amplitude_(std::move(amplitude)) {}

double CoordinateMap::forward(double x) const { return interp(x_, xi_, x); }
double CoordinateMap::inverse(double xi) const { return interp(xi_, x_, xi); }
double CoordinateMap::amplitude(double x) const { return interp(x_, amplitude_, x); }

LiouvilleResult liouville_transform(const GeneralSLProblem& gp, std::size_t nodes) {
  const Grid grid(nodes);
  const Vec p = gp.p.sample(grid);
  const Vec r = gp.r.sample(grid);
  if (p.minCoeff() <= 0.0 || r.minCoeff() <= 0.0)
    throw Error(ErrorCode::NonPositiveCoefficient, "p and r must be strictly positive");

  const auto speed = [&](double x) { return std::sqrt(gp.r(x) / gp.p(x)); };
  Vec travel(idx(nodes));  // ∫_0^x √(r/p)
  travel(0) = 0.0;
  const bool exact = gp.p.closed_form() && gp.r.closed_form();
  for (std::size_t k = 1; k < nodes; ++k) {
    const double a = grid.x(k - 1), b = grid.x(k);
    const double piece = exact
                             ? boost::math::quadrature::gauss<double, 10>::integrate(speed, a, b)
                             : 0.5 * (b - a) * (std::sqrt(r(idx(k - 1)) / p(idx(k - 1))) +
                                                std::sqrt(r(idx(k)) / p(idx(k))));
    travel(idx(k)) = travel(idx(k - 1)) + piece;
  }
  const double total = travel(idx(nodes - 1));
  const double epsilon = 1.0 / (total * total);
  const Vec xi = travel / total;
  Vec amplitude(idx(nodes));
  for (std::size_t k = 0; k < nodes; ++k)
    amplitude(idx(k)) = std::pow(r(idx(k)) * p(idx(k)), 0.25);
  CoordinateMap map(grid.points(), xi, amplitude);

  const auto log_slope = [](const Profile& f, double x) { return f.d1(x) / f(x); };
  const auto reaction = [&](double x) {
    const double pp = gp.p(x), rr = gp.r(x);
    const double lp = log_slope(gp.p, x), lr = log_slope(gp.r, x);
    const double s2 = pp / rr;
    const double s_ratio = 0.5 * (lp - lr);
    const double g = 0.25 * (lp + lr);
    const double g1 = 0.25 * (gp.p.d2(x) / pp - lp * lp + gp.r.d2(x) / rr - lr * lr);
    return gp.q(x) / rr + s2 * (s_ratio * g + g1 + g * g);
  };

  Vec Q(idx(nodes));
  for (std::size_t k = 0; k < nodes; ++k) Q(idx(k)) = reaction(map.inverse(grid.x(k)));

  const auto transform_bc = [&](const RobinBC& bc, double x) {
    const double g = 0.25 * (log_slope(gp.p, x) + log_slope(gp.r, x));
    return RobinBC{bc.a - bc.b * g, bc.b * std::sqrt(epsilon) * std::sqrt(gp.r(x) / gp.p(x))};
  };

  SLProblem normal;
  normal.p = epsilon;
  bool constant_q = true;
  for (Eigen::Index k = 1; k < Q.size(); ++k)
    constant_q = constant_q && std::abs(Q(k) - Q(0)) <= 1e-12 * (1.0 + std::abs(Q(0)));
  normal.q = constant_q ? Profile::constant(Q(0)) : Profile::sampled(Q);
  normal.left = transform_bc(gp.left, 0.0);
  normal.right = transform_bc(gp.right, 1.0);
  return LiouvilleResult{normal, map, epsilon};
}

Vec project(const Vec& f, const SpectralBasis& basis, std::size_t J) {
  if (J > basis.size()) throw Error(ErrorCode::DimensionMismatch, "basis has too few modes");
  const Vec g = restrict_to(basis.grid, f);
  const Vec weighted = basis.grid.weights().cwiseProduct(g);
  return basis.modes.leftCols(idx(J)).transpose() * weighted;
}

Vec project(const Profile& f, const SpectralBasis& basis, std::size_t J) {
  if (J > basis.size()) throw Error(ErrorCode::DimensionMismatch, "basis has too few modes");
  if (basis.analytic() && f.closed_form()) {
    Vec out(idx(J));
    for (std::size_t n = 0; n < J; ++n) out(idx(n)) = l2_inner(f, basis.closed_forms[n]);
    return out;
  }
  return project(f.sample(basis.grid), basis, J);
}

}  // namespace sdobs

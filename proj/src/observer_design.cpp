#include "sdobs/observer_design.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "sdobs/errors.hpp"

namespace sdobs {

namespace {

Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

double sym_max_eig(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

double sym_min_eig(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// ‖p c'' − q c‖, exact quadrature for closed forms, sampled grid otherwise.
double residual_norm(const SLProblem& problem, const Profile& c) {
  if (c.closed_form() && problem.q.closed_form()) {
    return std::sqrt(integrate([&](double x) {
      const double r = problem.p * c.d2(x) - problem.q(x) * c(x);
      return r * r;
    }));
  }
  const Grid grid(std::max<std::size_t>({c.sample_nodes(), problem.q.sample_nodes(), 1001}));
  const Vec r = problem.p * c.sample_d2(grid) - problem.q.sample(grid).cwiseProduct(c.sample(grid));
  return l2_norm(grid, r);
}

void check_Q(double Q, double LPL, double K, double sigma, double lambda_next) {
  if (!(Q >= 2.0) || !(Q > 2.0 * LPL * K * K / (sigma * lambda_next)))
    throw Error(ErrorCode::QInfeasible,
                "Q = " + std::to_string(Q) + " violates Q >= 2, Q > 2|L'PL|K^2/(sigma lambda_{N+1})");
}

// H(Q), μ, g̃ and the small-gain inputs that depend on them.
void refresh_constants(ObserverDesign& d) {
  const double lam = d.lambda_next();
  check_Q(d.Q, d.LPL_norm, d.K, d.sigma, lam);
  const double a = 2.0 * d.sigma - lam;
  d.H_Q = a - std::sqrt(a * a + 16.0 / d.Q * d.LPL_norm * d.K * d.K);
  d.mu = (d.H_Q + 2.0 * lam) / 4.0;
  d.g_tilde = std::max(4.0 * d.P_norm / (4.0 * d.sigma + d.H_Q), d.Q / (2.0 * lam));
  d.gain_inputs.mu = d.mu;
  d.gain_inputs.g_tilde = d.g_tilde;
  d.gain_inputs.P_norm = d.P_norm;
  d.gain_inputs.Q = d.Q;
  d.gain_inputs.lipschitz_R = d.lipschitz_R;
}

}  // namespace

void validate_channel(const OutputChannel& channel, const SLProblem& problem, double tolerance) {
  const Profile& c = channel.approximant;
  double tol = tolerance;
  if (!c.closed_form()) {
    const double dx = 1.0 / static_cast<double>(std::max<std::size_t>(c.sample_nodes(), 2) - 1);
    tol = std::max(tolerance, 10.0 * dx * dx);
  }
  const auto check = [&](const RobinBC& bc, double x, const char* side) {
    const double value = c(x), slope = c.d1(x);
    const double residual = bc.a * value + bc.b * slope;
    const double scale = 1.0 + std::abs(bc.a * value) + std::abs(bc.b * slope);
    if (std::abs(residual) > tol * scale)
      throw Error(ErrorCode::InvalidArgument, "approximant of channel '" + channel.label +
                                                  "' violates the " + side + " boundary condition");
  };
  check(problem.left, 0.0, "left");
  check(problem.right, 1.0, "right");
}

std::string to_string(ObserverVariant variant) {
  return variant == ObserverVariant::Predictor ? "predictor" : "zoh";
}

ObserverVariant variant_from_string(const std::string& name) {
  if (name == "predictor") return ObserverVariant::Predictor;
  if (name == "zoh" || name == "ZOH") return ObserverVariant::ZOH;
  throw Error(ErrorCode::ConfigError, "unknown observer variant '" + name + "'");
}

Mat build_A(const Vec& eigenvalues, const Mat& L, const Mat& c_coeffs) {
  const Eigen::Index N = eigenvalues.size();
  if (L.rows() != N || c_coeffs.rows() != L.cols() || c_coeffs.cols() < N)
    throw Error(ErrorCode::DimensionMismatch, "build_A: inconsistent L / coefficient shapes");
  Mat A = L * c_coeffs.leftCols(N);
  A.diagonal() -= eigenvalues;
  return A;
}

std::vector<Profile> injection_kernels(const Mat& L, const SpectralBasis& basis) {
  const auto N = static_cast<std::size_t>(L.rows());
  if (N > basis.size()) throw Error(ErrorCode::DimensionMismatch, "basis has fewer than N modes");
  std::vector<Profile> out;
  for (Eigen::Index i = 0; i < L.cols(); ++i) {
    if (basis.analytic()) {
      Profile l;
      for (std::size_t n = 0; n < N; ++n)
        if (L(idx(n), i) != 0.0) l = Profile::combine(1.0, l, L(idx(n), i), basis.closed_forms[n]);
      out.push_back(l);
    } else {
      out.push_back(Profile::sampled(basis.modes.leftCols(idx(N)) * L.col(i)));
    }
  }
  return out;
}

CouplingReport coupling_constant_K(const Mat& c_coeffs, std::size_t N, std::size_t J_max) {
  CouplingReport report;
  const std::size_t end = std::min<std::size_t>(J_max, static_cast<std::size_t>(c_coeffs.cols()));
  if (end <= N) return report;
  const Mat tail = c_coeffs.middleCols(idx(N), idx(end - N));
  const double total = tail.squaredNorm();
  report.K = std::sqrt(total);
  const std::size_t last = std::min<std::size_t>(50, end - N);
  // A tail at roundoff level relative to the whole table has nothing left to converge.
  const double scale = c_coeffs.leftCols(idx(end)).squaredNorm();
  if (total > 1e-24 * scale) {
    report.last_decade_fraction = tail.rightCols(idx(last)).squaredNorm() / total;
    report.warning = report.last_decade_fraction > 0.01;
  }
  return report;
}

double spectral_abscissa(const Mat& A) {
  Eigen::EigenSolver<Mat> solver(A, false);
  return solver.eigenvalues().real().maxCoeff();
}

LyapunovCertificate lyapunov_certificate(const Mat& A, double sigma_fraction) {
  const Eigen::Index N = A.rows();
  if (A.cols() != N || N == 0) throw Error(ErrorCode::DimensionMismatch, "A must be square");
  const double alpha = spectral_abscissa(A);
  if (!(alpha < 0.0)) throw Error(ErrorCode::NotHurwitz, "A is not Hurwitz");
  if (!(sigma_fraction > 0.0) || sigma_fraction > 1.0 || (sigma_fraction == 1.0 && N > 1))
    throw Error(ErrorCode::InvalidArgument, "sigma fraction must lie in (0, 1)");
  const double sigma = sigma_fraction * std::abs(alpha);
  if (N == 1 && sigma_fraction == 1.0) return {Mat::Identity(1, 1), sigma};

  // (A+σI)ᵀP + P(A+σI) = −I as a Kronecker-product linear system.
  const Mat As = A + sigma * Mat::Identity(N, N);
  const Mat I = Mat::Identity(N, N);
  Mat K = Mat::Zero(N * N, N * N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) {
      // vec(AsᵀP) = (I ⊗ Asᵀ) vec(P), vec(P As) = (Asᵀ ⊗ I) vec(P)
      K.block(i * N, j * N, N, N) += I(i, j) * As.transpose();
      K.block(i * N, j * N, N, N) += As(j, i) * I;
    }
  const Vec rhs = -Eigen::Map<const Vec>(I.data(), N * N);
  const Vec sol = K.fullPivLu().solve(rhs);
  Mat P0 = Eigen::Map<const Mat>(sol.data(), N, N);
  P0 = 0.5 * (P0 + P0.transpose());
  const double lmin = sym_min_eig(P0);
  if (!(lmin >= 1e-12)) throw Error(ErrorCode::NearSingular, "Lyapunov solution is near singular");
  return {P0 / lmin, sigma};
}

CertificateCheck check_certificate(const Mat& A, const Mat& P, double sigma) {
  CertificateCheck c;
  c.abscissa = spectral_abscissa(A);
  c.dissipation = sym_max_eig(P * A + A.transpose() * P + 2.0 * sigma * P);
  c.lower_bound = 1.0 - sym_min_eig(P);
  return c;
}

Mat place_gain(const Vec& eigenvalues, const Vec& c_row, const Vec& targets) {
  const Eigen::Index N = targets.size();
  if (eigenvalues.size() < N || c_row.size() < N)
    throw Error(ErrorCode::DimensionMismatch, "place_gain: too few eigenvalues or coefficients");
  Mat L(N, 1);
  for (Eigen::Index j = 0; j < N; ++j) {
    if (std::abs(c_row(j)) < 1e-12)
      throw Error(ErrorCode::PlacementImpossible, "mode " + std::to_string(j + 1) + " is unobservable");
    double num = 1.0, den = 1.0;
    for (Eigen::Index k = 0; k < N; ++k) num *= -eigenvalues(j) - targets(k);
    for (Eigen::Index i = 0; i < N; ++i) {
      if (i == j) continue;
      const double gap = eigenvalues(i) - eigenvalues(j);
      if (std::abs(gap) < 1e-12 * (1.0 + std::abs(eigenvalues(j))))
        throw Error(ErrorCode::PlacementImpossible, "repeated eigenvalue");
      den *= gap;
    }
    L(j, 0) = -num / den / c_row(j);
  }
  return L;
}

ObserverDesign design_observer(const DesignSpec& spec) {
  if (spec.basis == nullptr) throw Error(ErrorCode::InvalidArgument, "design needs a spectral basis");
  const SpectralBasis& basis = *spec.basis;
  spec.problem.validate();
  const std::size_t N = spec.N;
  const std::size_t m = spec.channels.size();
  if (N == 0 || m == 0) throw Error(ErrorCode::InvalidArgument, "design needs N >= 1 and m >= 1");
  const std::size_t J = std::min(spec.J_max, basis.size());
  if (J < N + 1) throw Error(ErrorCode::DimensionMismatch, "basis must hold at least N + 1 modes");

  ObserverDesign d;
  d.problem = spec.problem;
  d.N = N;
  d.channels = spec.channels;
  d.eigenvalues = basis.eigenvalues.head(idx(N + 1));
  if (!(d.lambda_next() > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda_{N+1} must be positive");
  for (const auto& ch : spec.channels) validate_channel(ch, spec.problem);

  d.c_coeffs.resize(idx(m), idx(J));
  for (std::size_t i = 0; i < m; ++i)
    d.c_coeffs.row(idx(i)) = project(spec.channels[i].approximant, basis, J).transpose();

  if (spec.L) {
    d.L = *spec.L;
    if (d.L.rows() != idx(N) || d.L.cols() != idx(m))
      throw Error(ErrorCode::DimensionMismatch, "gain L must be N x m");
  } else if (spec.targets) {
    if (m != 1) throw Error(ErrorCode::InvalidArgument, "eigenvalue placement needs a single output");
    d.L = place_gain(d.eigenvalues.head(idx(N)), d.c_coeffs.row(0).transpose(), *spec.targets);
  } else {
    throw Error(ErrorCode::InvalidArgument, "design needs a gain L or placement targets");
  }
  d.A = build_A(d.eigenvalues.head(idx(N)), d.L, d.c_coeffs);
  const auto cert = lyapunov_certificate(d.A, N == 1 ? 1.0 : spec.sigma_fraction);
  d.P = cert.P;
  d.sigma = cert.sigma;

  const auto coupling = coupling_constant_K(d.c_coeffs, N, J);
  d.K = coupling.K;
  d.K_tail_fraction = coupling.last_decade_fraction;
  d.K_truncation_warning = coupling.warning;
  d.injection = injection_kernels(d.L, basis);
  d.lipschitz_R = spec.lipschitz_R;
  d.lipschitz_sup = spec.lipschitz_sup;
  d.P_norm = sym_max_eig(d.P);
  d.LPL_norm = m > 0 ? sym_max_eig(d.L.transpose() * d.P * d.L) : 0.0;
  d.LPL_norm = std::max(d.LPL_norm, 0.0);
  d.Q = spec.Q;

  auto& in = d.gain_inputs;
  in.channels.resize(m);
  in.cross = Mat::Zero(idx(m), idx(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto& ch = spec.channels[i];
    auto& norms = in.channels[i];
    norms.injection = d.L.col(idx(i)).norm();
    norms.residual = residual_norm(spec.problem, ch.approximant);
    norms.approximant = l2_norm(ch.approximant);
    norms.kernel = l2_norm(ch.kernel);
    norms.kernel_gap = l2_norm(Profile::combine(1.0, ch.kernel, -1.0, ch.approximant));
    for (std::size_t r = 0; r < m; ++r)
      in.cross(idx(i), idx(r)) =
          std::abs(d.L.col(idx(r)).dot(d.c_coeffs.row(idx(i)).head(idx(N)).transpose()));
  }
  refresh_constants(d);
  return d;
}

ObserverDesign with_Q(const ObserverDesign& design, double Q) {
  ObserverDesign d = design;
  d.Q = Q;
  refresh_constants(d);
  return d;
}

ObserverDesign with_scaled_P(const ObserverDesign& design, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  ObserverDesign d = design;
  d.P *= alpha;
  d.P_norm *= alpha;
  d.LPL_norm *= alpha;
  refresh_constants(d);
  return d;
}

double gamma_coefficient(const SmallGainInputs& in, double kappa) {
  return std::sqrt(in.g_tilde / (2.0 * (in.mu - kappa)));
}

namespace {

// Σ_i ‖l_i‖ (a_i h + b_i) split into the h-coefficient and the constant part.
std::pair<double, double> bracket_terms(const SmallGainInputs& in, ObserverVariant variant) {
  double slope = 0.0, base = 0.0;
  const std::size_t m = in.channels.size();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& ch = in.channels[i];
    double a = ch.residual + in.lipschitz_R * ch.approximant;
    if (variant == ObserverVariant::ZOH)
      for (std::size_t r = 0; r < m; ++r) a += in.cross(idx(i), idx(r)) * in.channels[r].kernel;
    slope += ch.injection * a;
    base += ch.injection * ch.kernel_gap;
  }
  return {slope, base};
}

}  // namespace

double omega_value(const SmallGainInputs& in, ObserverVariant variant, double h, double kappa) {
  const auto [slope, base] = bracket_terms(in, variant);
  return gamma_coefficient(in, kappa) *
         (in.lipschitz_R + std::exp(kappa * h) * (slope * h + base));
}

IosCoefficients ios_coefficients(const SmallGainInputs& in, ObserverVariant variant, double h,
                                 double kappa, double omega) {
  IosCoefficients out;
  const std::size_t m = in.channels.size();
  out.noise.assign(m, 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  if (!(omega < 1.0)) {
    out.initial = out.mismatch = inf;
    out.noise.assign(m, inf);
    return out;
  }
  const double scale = 1.0 / (1.0 - omega);
  const double gamma = gamma_coefficient(in, kappa);
  const double growth = std::exp(kappa * h);
  out.initial = scale * std::sqrt(std::max(in.P_norm, in.Q / 2.0));
  double lc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double gain = in.channels[i].injection;
    if (variant == ObserverVariant::ZOH)
      for (std::size_t r = 0; r < m; ++r)
        gain += h * in.channels[r].injection * in.cross(idx(r), idx(i));
    out.noise[i] = scale * growth * gamma * gain;
    lc += in.channels[i].injection * in.channels[i].approximant;
  }
  out.mismatch = scale * gamma * (1.0 + h * growth * lc);
  return out;
}

SmallGainReport small_gain(const ObserverDesign& design, ObserverVariant variant, double h,
                           double kappa) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "sampling diameter must be positive");
  if (!(kappa >= 0.0) || !(kappa < design.mu))
    throw Error(ErrorCode::KappaOutOfRange,
                "kappa = " + std::to_string(kappa) + " outside [0, mu = " + std::to_string(design.mu) + ")");
  check_Q(design.Q, design.LPL_norm, design.K, design.sigma, design.lambda_next());
  SmallGainReport report;
  report.variant = variant;
  report.h = h;
  report.kappa = kappa;
  report.inputs = design.gain_inputs;
  report.gamma = gamma_coefficient(report.inputs, kappa);
  report.omega = omega_value(report.inputs, variant, h, kappa);
  report.feasible = report.omega < 1.0;
  report.coefficients = ios_coefficients(report.inputs, variant, h, kappa, report.omega);
  return report;
}

SmallGainReport small_gain_predictor(const ObserverDesign& design, double h, double kappa) {
  return small_gain(design, ObserverVariant::Predictor, h, kappa);
}

SmallGainReport small_gain_zoh(const ObserverDesign& design, double h, double kappa) {
  return small_gain(design, ObserverVariant::ZOH, h, kappa);
}

double max_diameter(const ObserverDesign& design, double kappa, ObserverVariant variant) {
  if (!(kappa >= 0.0) || !(kappa < design.mu))
    throw Error(ErrorCode::KappaOutOfRange, "kappa outside [0, mu)");
  const auto& in = design.gain_inputs;
  const auto omega = [&](double h) { return omega_value(in, variant, h, kappa); };
  if (!(omega(0.0) < 1.0))
    throw Error(ErrorCode::InfeasibleAtZero, "Omega(0+) = " + std::to_string(omega(0.0)) + " >= 1");
  const auto [slope, base] = bracket_terms(in, variant);
  if (slope == 0.0 && (kappa == 0.0 || base == 0.0)) return kInfiniteDiameter;

  double lo = 0.0, hi = 1.0;
  while (omega(hi) < 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInfiniteDiameter;
  }
  while (hi - lo > 1e-14 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (omega(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double select_Q(const ObserverDesign& design, const std::vector<double>& candidates, double h,
                double kappa, ObserverVariant variant) {
  std::vector<double> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  double best_Q = 0.0, best_omega = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double Q : sorted) {
    ObserverDesign d;
    try {
      d = with_Q(design, Q);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::QInfeasible) continue;
      throw;
    }
    if (!(kappa < d.mu)) continue;
    const double omega = omega_value(d.gain_inputs, variant, h, kappa);
    if (!found || omega < best_omega * (1.0 - 1e-14)) {
      best_Q = Q;
      best_omega = omega;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::NoFeasibleQ, "no candidate Q satisfies the constraints");
  return best_Q;
}

}  // namespace sdobs

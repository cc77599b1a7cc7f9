#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "sdobs/errors.hpp"
#include "sdobs/observer_design.hpp"

namespace {

using namespace sdobs;
constexpr double kPi = std::numbers::pi;

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

SLProblem neumann_heat(double p) {
  SLProblem s;
  s.p = p;
  s.left = {0.0, 1.0};
  s.right = {0.0, 1.0};
  return s;
}

// Heat equation, moment output ∫ x u dx, approximant 1/2, one mode, L = −pπ².
struct MomentObserver {
  SLProblem problem;
  SpectralBasis basis;
  DesignSpec spec;

  explicit MomentObserver(double p, double lipschitz = 0.0)
      : problem(neumann_heat(p)), basis(analytic_eigensystem(problem, 200)) {
    spec.problem = problem;
    spec.basis = &basis;
    spec.N = 1;
    spec.channels = {{"moment", Profile::polynomial({0.0, 1.0}), Profile::constant(0.5)}};
    spec.L = Mat::Constant(1, 1, -p * kPi * kPi);
    spec.lipschitz_R = lipschitz;
  }
  ObserverDesign design() const { return design_observer(spec); }
};

TEST(BuildA, DiagonalPlusRankOneInjection) {
  const Vec lambda = (Vec(2) << 1.0, 4.0).finished();
  const Mat L = (Mat(2, 1) << 1.0, 2.0).finished();
  const Mat c = (Mat(1, 3) << 0.5, 0.25, 7.0).finished();
  const Mat A = build_A(lambda, L, c);
  Mat expected(2, 2);
  expected << -1.0 + 0.5, 0.25, 1.0, -4.0 + 0.5;
  EXPECT_LE((A - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InjectionKernels, SumOfScaledModes) {
  const SpectralBasis b = analytic_eigensystem(neumann_heat(1.0), 4);
  const Mat L = (Mat(2, 1) << -3.0, 2.0).finished();
  const auto l = injection_kernels(L, b);
  ASSERT_EQ(l.size(), 1u);
  for (double x : {0.0, 0.4, 1.0})
    EXPECT_NEAR(l[0](x), -3.0 + 2.0 * std::sqrt(2.0) * std::cos(kPi * x), 1e-13);
  EXPECT_TRUE(l[0].closed_form());
}

TEST(CouplingConstant, TailNormOfCoefficients) {
  Mat c = Mat::Zero(1, 100);
  double expected = 0.0;
  for (int j = 0; j < 100; ++j) {
    c(0, j) = 1.0 / (j + 1.0);
    if (j >= 2) expected += c(0, j) * c(0, j);
  }
  const CouplingReport r = coupling_constant_K(c, 2, 100);
  EXPECT_NEAR(r.K, std::sqrt(expected), 1e-14);
  double last = 0.0;
  for (int j = 50; j < 100; ++j) last += c(0, j) * c(0, j);
  EXPECT_NEAR(r.last_decade_fraction, last / expected, 1e-12);
  EXPECT_TRUE(r.warning);
}

TEST(CouplingConstant, RoundoffTailRaisesNoWarning) {
  Mat c = Mat::Zero(1, 100);
  c(0, 0) = 0.5;
  for (int j = 1; j < 100; ++j) c(0, j) = 1e-16 * ((j % 3) - 1.0);
  const CouplingReport r = coupling_constant_K(c, 1, 100);
  EXPECT_LT(r.K, 1e-14);
  EXPECT_FALSE(r.warning);
}

TEST(CouplingConstant, NextModeApproximantGivesUnitK) {
  MomentObserver m(1.0);
  m.spec.channels[0].approximant = Profile::cosine_series({{std::sqrt(2.0), kPi, 0.0}}, 0.5);
  m.spec.L = Mat::Constant(1, 1, -1.0);
  const ObserverDesign d = m.design();
  EXPECT_NEAR(d.K, 1.0, 1e-12);
  EXPECT_NEAR(MomentObserver(1.0).design().K, 0.0, 1e-14);
}

TEST(LyapunovCertificate, ScalarUsesFullRate) {
  const LyapunovCertificate c = lyapunov_certificate(Mat::Constant(1, 1, -2.0), 1.0);
  EXPECT_NEAR(c.sigma, 2.0, 1e-15);
  EXPECT_NEAR(c.P(0, 0), 1.0, 1e-15);
  EXPECT_TRUE(check_certificate(Mat::Constant(1, 1, -2.0), c.P, c.sigma).holds());
}

TEST(LyapunovCertificate, DiagonalSolutionRescaledAboveIdentity) {
  Mat A = Mat::Zero(2, 2);
  A.diagonal() << -1.0, -3.0;
  const LyapunovCertificate c = lyapunov_certificate(A, 0.5);
  EXPECT_NEAR(c.sigma, 0.5, 1e-14);
  // (A+σI)ᵀP + P(A+σI) = −I gives diag(1, 0.2); scaled by 1/0.2.
  EXPECT_NEAR(c.P(0, 0), 5.0, 1e-12);
  EXPECT_NEAR(c.P(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(c.P(0, 1), 0.0, 1e-12);
  EXPECT_TRUE(check_certificate(A, c.P, c.sigma).holds());
}

TEST(LyapunovCertificate, CoupledMatrixSatisfiesInequality) {
  Mat A(3, 3);
  A << -2.0, 1.0, 0.0, -0.5, -3.0, 0.7, 0.2, 0.0, -1.5;
  const LyapunovCertificate c = lyapunov_certificate(A, 0.9);
  const CertificateCheck chk = check_certificate(A, c.P, c.sigma);
  EXPECT_TRUE(chk.holds(1e-9)) << chk.dissipation << " " << chk.lower_bound;
  EXPECT_NEAR(c.sigma, 0.9 * std::abs(spectral_abscissa(A)), 1e-12);
}

TEST(LyapunovCertificate, RejectsUnstableMatrix) {
  EXPECT_EQ(code_of([] { lyapunov_certificate(Mat::Constant(1, 1, 0.5), 0.9); }), ErrorCode::NotHurwitz);
}

TEST(PlaceGain, ClosedLoopHasTargetEigenvalues) {
  const Vec lambda = (Vec(3) << 0.0, 9.87, 39.5).finished();
  const Vec c = (Vec(3) << 0.5, -0.3, 0.2).finished();
  const Vec targets = (Vec(3) << -5.0, -20.0, -50.0).finished();
  const Mat L = place_gain(lambda, c, targets);
  const Mat A = build_A(lambda, L, c.transpose());
  Eigen::EigenSolver<Mat> es(A);
  std::vector<double> got;
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(es.eigenvalues()(k).imag(), 0.0, 1e-8);
    got.push_back(es.eigenvalues()(k).real());
  }
  std::sort(got.begin(), got.end());
  EXPECT_NEAR(got[0], -50.0, 1e-8);
  EXPECT_NEAR(got[1], -20.0, 1e-8);
  EXPECT_NEAR(got[2], -5.0, 1e-8);
  const Vec unobservable = (Vec(3) << 0.5, 0.0, 0.2).finished();
  EXPECT_EQ(code_of([&] { place_gain(lambda, unobservable, targets); }), ErrorCode::PlacementImpossible);
}

TEST(MomentObserverDesign, ConstantsOfTheScalarDesign) {
  for (double p : {0.5, 1.0, 2.0}) {
    const ObserverDesign d = MomentObserver(p).design();
    const double lam = p * kPi * kPi;
    EXPECT_NEAR(d.A(0, 0), -lam / 2.0, 1e-12);
    EXPECT_NEAR(d.sigma, lam / 2.0, 1e-12);
    EXPECT_NEAR(d.P(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(d.mu, lam / 2.0, 1e-10);
    EXPECT_NEAR(d.g_tilde, 2.0 / lam, 1e-12);
    EXPECT_TRUE(check_certificate(d.A, d.P, d.sigma).holds());
  }
}

TEST(SmallGain, MomentObserverPredictorIsOneOverRootSix) {
  for (double p : {0.5, 1.0, 2.0}) {
    const ObserverDesign d = MomentObserver(p).design();
    for (double h : {0.01, 0.1, 1.0}) {
      const SmallGainReport r = small_gain_predictor(d, h, 0.0);
      EXPECT_NEAR(r.omega, 1.0 / std::sqrt(6.0), 1e-9);
      EXPECT_TRUE(r.feasible);
    }
  }
}

TEST(SmallGain, MomentObserverZohGrowsLinearlyInH) {
  for (double p : {0.5, 1.0, 2.0}) {
    const ObserverDesign d = MomentObserver(p).design();
    const double h = 0.03;
    const double expected = (h * p * kPi * kPi + 1.0) / std::sqrt(6.0);
    EXPECT_NEAR(small_gain_zoh(d, h, 0.0).omega, expected, 1e-9);
    EXPECT_NEAR(max_diameter(d, 0.0, ObserverVariant::ZOH), (std::sqrt(6.0) - 1.0) / (p * kPi * kPi), 1e-10);
    EXPECT_EQ(max_diameter(d, 0.0, ObserverVariant::Predictor), kInfiniteDiameter);
  }
}

TEST(SmallGain, MomentObserverWithDecayRate) {
  const double p = 1.0, lam = kPi * kPi, omega = 0.3, h = 0.05;
  const ObserverDesign d = MomentObserver(p).design();
  const double kappa = omega * d.mu;
  const double expected = std::exp(omega * lam * h / 2.0) / std::sqrt(6.0 * (1.0 - omega));
  EXPECT_NEAR(small_gain_predictor(d, h, kappa).omega, expected, 1e-9);
  // Ω(h) = 1 at the reported diameter.
  const double hmax = max_diameter(d, kappa, ObserverVariant::Predictor);
  EXPECT_NEAR(std::exp(omega * lam * hmax / 2.0) / std::sqrt(6.0 * (1.0 - omega)), 1.0, 1e-10);
}

TEST(SmallGain, ZohNeverBeatsPredictorAndGrowsWithHAndKappa) {
  const ObserverDesign d = MomentObserver(1.0).design();
  double prev_h = 0.0;
  for (double h : {0.001, 0.01, 0.05, 0.2}) {
    const double pred = small_gain_predictor(d, h, 1.0).omega;
    const double zoh = small_gain_zoh(d, h, 1.0).omega;
    EXPECT_GE(zoh, pred);
    EXPECT_GT(zoh, prev_h);
    prev_h = zoh;
  }
  double prev_k = 0.0;
  for (double kappa : {0.0, 1.0, 3.0, 4.5}) {
    const double o = small_gain_predictor(d, 0.1, kappa).omega;
    EXPECT_GT(o, prev_k);
    prev_k = o;
  }
}

TEST(SmallGain, ReportRecomputesFromItsInputs) {
  const ObserverDesign d = MomentObserver(1.0, 0.3).design();
  const SmallGainReport r = small_gain_zoh(d, 0.02, 1.5);
  EXPECT_DOUBLE_EQ(omega_value(r.inputs, r.variant, r.h, r.kappa), r.omega);
  EXPECT_NEAR(r.gamma, std::sqrt(d.g_tilde / (2.0 * (d.mu - 1.5))), 1e-14);
  // IOS coefficients share the 1/(1 − Ω) factor.
  EXPECT_NEAR(r.coefficients.initial * (1.0 - r.omega), std::sqrt(std::max(d.P_norm, d.Q / 2.0)), 1e-12);
}

TEST(SmallGain, KappaMustStayBelowMu) {
  const ObserverDesign d = MomentObserver(1.0).design();
  EXPECT_EQ(code_of([&] { small_gain_predictor(d, 0.1, d.mu); }), ErrorCode::KappaOutOfRange);
  EXPECT_EQ(code_of([&] { small_gain_predictor(d, 0.1, -0.1); }), ErrorCode::KappaOutOfRange);
  EXPECT_EQ(code_of([&] { max_diameter(d, d.mu * 1.5, ObserverVariant::ZOH); }), ErrorCode::KappaOutOfRange);
}

TEST(SmallGain, LargeLipschitzConstantIsInfeasibleAtZero) {
  const ObserverDesign d = MomentObserver(1.0, 20.0).design();
  EXPECT_EQ(code_of([&] { max_diameter(d, 0.0, ObserverVariant::Predictor); }), ErrorCode::InfeasibleAtZero);
  EXPECT_FALSE(small_gain_predictor(d, 0.01, 0.0).feasible);
}

TEST(QSelection, SmallestAdmissibleQWins) {
  const ObserverDesign d = MomentObserver(1.0).design();
  EXPECT_DOUBLE_EQ(select_Q(d, {8.0, 2.0, 4.0}, 0.1, 0.0, ObserverVariant::Predictor), 2.0);
  EXPECT_EQ(code_of([&] { select_Q(d, {0.5, 1.0}, 0.1, 0.0, ObserverVariant::Predictor); }),
            ErrorCode::NoFeasibleQ);
  EXPECT_EQ(code_of([&] { with_Q(d, 1.0); }), ErrorCode::QInfeasible);
  const ObserverDesign d8 = with_Q(d, 8.0);
  EXPECT_NEAR(d8.g_tilde, 8.0 / (2.0 * kPi * kPi), 1e-12);
}

TEST(ScaledP, LargerPWeakensTheGain) {
  const ObserverDesign d = MomentObserver(1.0).design();
  double prev = 0.0;
  for (double alpha : {1.0, 2.0, 4.0}) {
    const ObserverDesign s = with_scaled_P(d, alpha);
    EXPECT_TRUE(check_certificate(s.A, s.P, s.sigma).holds());
    const double o = small_gain_predictor(s, 0.1, 0.0).omega;
    EXPECT_GE(o, prev);
    prev = o;
  }
}

TEST(ValidateChannel, ApproximantMustSatisfyBoundaryConditions) {
  const SLProblem s = neumann_heat(1.0);
  EXPECT_NO_THROW(validate_channel({"ok", Profile::polynomial({0.0, 1.0}), Profile::constant(0.5)}, s));
  EXPECT_EQ(code_of([&] { validate_channel({"bad", Profile(), Profile::polynomial({0.0, 1.0})}, s); }),
            ErrorCode::InvalidArgument);
}

TEST(VariantNames, RoundTrip) {
  EXPECT_EQ(variant_from_string(to_string(ObserverVariant::ZOH)), ObserverVariant::ZOH);
  EXPECT_EQ(variant_from_string(to_string(ObserverVariant::Predictor)), ObserverVariant::Predictor);
  EXPECT_EQ(code_of([] { variant_from_string("nonsense"); }), ErrorCode::ConfigError);
}

}  // namespace

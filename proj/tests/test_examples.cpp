#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sdobs/errors.hpp"
#include "sdobs/examples.hpp"

namespace {

using namespace sdobs;
constexpr double kPi = std::numbers::pi;

Example31Params moment_params(double p, double h, ObserverVariant variant) {
  Example31Params params;
  params.p = p;
  params.h = h;
  params.variant = variant;
  return params;
}

TEST(MomentExample, DesignConstants) {
  for (double p : {0.5, 1.0, 2.0}) {
    Example31Params params = moment_params(p, 0.1, ObserverVariant::Predictor);
    params.simulate = false;
    const Example31Report r = run_example_31(params);
    const ObserverDesign& d = r.design;
    EXPECT_NEAR(d.A(0, 0), -p * kPi * kPi / 2.0, 1e-12);
    EXPECT_NEAR(d.K, 0.0, 1e-12);
    for (double x : {0.0, 0.3, 1.0}) EXPECT_NEAR(d.injection[0](x), -p * kPi * kPi, 1e-12);
    // ‖x − 1/2‖² = 1/12
    EXPECT_NEAR(d.gain_inputs.channels[0].kernel_gap, 1.0 / (2.0 * std::sqrt(3.0)), 1e-12);
    EXPECT_NEAR(r.zoh_threshold, 4.0 / (p * kPi * kPi), 1e-15);
  }
}

TEST(MomentExample, ClosedFormsMatchGeneralSmallGain) {
  for (double p : {0.5, 1.0, 2.0})
    for (double omega : {0.0, 0.3, 0.8})
      for (double h : {0.01, 0.2}) {
        const double lam = p * kPi * kPi;
        const double growth = std::exp(omega * lam * h / 2.0) / std::sqrt(6.0 * (1.0 - omega));
        EXPECT_NEAR(example31_omega_predictor(p, h, omega), growth, 1e-12);
        EXPECT_NEAR(example31_omega_zoh(p, h, omega), growth * (1.0 + h * lam), 1e-12);
        for (auto variant : {ObserverVariant::Predictor, ObserverVariant::ZOH}) {
          Example31Params params = moment_params(p, h, variant);
          params.omega = omega;
          params.simulate = false;
          const Example31Report r = run_example_31(params);
          EXPECT_NEAR(r.gain.omega, r.omega_closed_form, 1e-12 * r.omega_closed_form);
          EXPECT_NEAR(r.kappa, omega * lam / 2.0, 1e-12);
        }
      }
}

TEST(MomentExample, PredictorRunConvergesWithinItsBound) {
  Example31Params params = moment_params(1.0, 0.1, ObserverVariant::Predictor);
  params.omega = 0.2;
  params.horizon = 3.0;
  const Example31Report r = run_example_31(params);
  ASSERT_TRUE(r.trajectory && r.fit && r.bound);
  EXPECT_EQ(r.verdict, Verdict::Convergent);
  EXPECT_EQ(r.bound->violations, 0u);
  EXPECT_GE(r.fit->rate + r.fit->half_width, r.kappa);
  EXPECT_FALSE(r.trajectory->infeasible_warning);
}

TEST(MomentExample, ZohThresholdSeparatesVerdicts) {
  const double p = 1.0, threshold = 4.0 / (p * kPi * kPi);
  Example31Params below = moment_params(p, 0.9 * threshold, ObserverVariant::ZOH);
  Example31Params above = moment_params(p, 1.1 * threshold, ObserverVariant::ZOH);
  EXPECT_EQ(run_example_31(below).verdict, Verdict::Convergent);
  const Example31Report r = run_example_31(above);
  EXPECT_EQ(r.verdict, Verdict::Divergent);
  EXPECT_TRUE(r.trajectory->infeasible_warning);
  EXPECT_FALSE(r.bound.has_value());
}

TEST(Verdict, FinalGapMaximumDecides) {
  Trajectory t;
  t.sample_times = {0.0, 1.0, 2.0};
  const double times[] = {0.0, 0.5, 1.0, 1.5, 2.0};
  const double errors[] = {1.0, 0.5, 0.3, 0.2, 0.01};
  for (int k = 0; k < 5; ++k) {
    StepRecord r;
    r.t = times[k];
    r.error_l2 = errors[k];
    t.steps.push_back(r);
  }
  // The last gap holds 0.3, 0.2 and 0.01.
  EXPECT_EQ(convergence_verdict(t), Verdict::Inconclusive);
  t.steps[2].error_l2 = 0.05;
  t.steps[3].error_l2 = 0.05;
  EXPECT_EQ(convergence_verdict(t), Verdict::Convergent);
  t.steps[3].error_l2 = 11.0;
  EXPECT_EQ(convergence_verdict(t), Verdict::Divergent);
  t.steps[3].error_l2 = std::nan("");
  EXPECT_EQ(convergence_verdict(t), Verdict::Divergent);
}

// Ω of the boundary-output example evaluated from the norms of l₁, p c₁'' − q c₁
// and 1 − c₁ by hand.
double boundary_omega(double p, double q, double h, double omega) {
  const double s = 9.0 * p * kPi * kPi + 4.0 * q;
  return std::exp(omega * h * s / 8.0) * (7.0 * p * kPi * kPi - 4.0 * q) / (4.0 * s * std::sqrt(1.0 - omega)) *
         (std::abs(p * kPi * kPi + 4.0 * q) * h / std::sqrt(2.0) + std::sqrt(kPi * kPi - 8.0));
}

TEST(BoundaryExample, DesignConstants) {
  for (double q : {-5.0, 0.0, 3.0}) {
    Example32Params params;
    params.q = q;
    params.simulate = false;
    const Example32Report r = run_example_32(params);
    const ObserverDesign& d = r.design;
    const double s = 9.0 * kPi * kPi + 4.0 * q;
    EXPECT_NEAR(d.A(0, 0), -9.0 * kPi * kPi / 8.0 - q / 2.0, 1e-12);
    EXPECT_NEAR(d.c_coeffs(0, 0), 2.0 * std::sqrt(2.0) / kPi, 1e-12);
    EXPECT_NEAR(d.sigma, s / 8.0, 1e-12);
    EXPECT_NEAR(d.mu, s / 8.0, 1e-10);
    EXPECT_NEAR(d.g_tilde, 8.0 / s, 1e-12);
    EXPECT_NEAR(d.K, 0.0, 1e-10);
    // ‖1 − (4/π)cos(πx/2)‖² = 1 − 16/π² + 8/π²
    EXPECT_NEAR(d.gain_inputs.channels[0].kernel_gap, std::sqrt(1.0 - 8.0 / (kPi * kPi)), 1e-12);
    EXPECT_NEAR(d.injection[0](0.3), kPi * (4.0 * q - 7.0 * kPi * kPi) / 16.0 * std::cos(0.15 * kPi), 1e-12);
  }
}

TEST(BoundaryExample, SmallGainFromHandComputedNorms) {
  for (double q : {-5.0, 0.0, 3.0})
    for (double omega : {0.0, 0.5})
      for (double h : {0.01, 0.05}) {
        Example32Params params;
        params.q = q;
        params.omega = omega;
        params.h = h;
        params.simulate = false;
        const Example32Report r = run_example_32(params);
        EXPECT_NEAR(r.gain.omega, boundary_omega(1.0, q, h, omega), 1e-12);
        // The closed form printed alongside the example is never smaller.
        EXPECT_GE(r.omega_conservative, r.gain.omega);
      }
}

TEST(BoundaryExample, DefaultPeriodIsHalfTheDiameter) {
  Example32Params params;
  params.simulate = false;
  const Example32Report r = run_example_32(params);
  EXPECT_NEAR(r.params.h, 0.5 * r.h_max, 1e-15);
  EXPECT_NEAR(boundary_omega(1.0, 0.0, r.h_max, 0.5), 1.0, 1e-10);
  EXPECT_NEAR(r.kappa, 0.5 * r.design.mu, 1e-14);
  const auto& c = r.gain.coefficients;
  EXPECT_DOUBLE_EQ(r.theta, std::max({c.initial, c.noise[0], c.mismatch}));
}

TEST(BoundaryExample, ReactionMustStayInRange) {
  Example32Params params;
  params.simulate = false;
  params.q = 7.0 * kPi * kPi / 4.0 + 0.1;
  EXPECT_THROW(run_example_32(params), Error);
  params.q = -9.0 * kPi * kPi / 4.0 - 0.1;
  try {
    run_example_32(params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReactionOutOfRange);
  }
}

TEST(BoundaryExample, ExactStartGivesZeroReconstructionError) {
  Example32Params params;
  params.horizon = 1.0;
  params.zero_initial_error = true;
  const Example32Report r = run_example_32(params);
  ASSERT_FALSE(r.sup_error.empty());
  for (double e : r.sup_error) EXPECT_LE(e, 1e-12);
}

TEST(BoundaryExample, ReconstructionErrorDecaysInsideTheSupBound) {
  Example32Params params;
  params.horizon = 2.0;
  const Example32Report r = run_example_32(params);
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_GE(r.fit->rate + r.fit->half_width, r.kappa);
  EXPECT_EQ(r.sup_bound_violations, 0u);
  const auto j = r.to_json();
  EXPECT_TRUE(j.contains("theta"));
  EXPECT_TRUE(j.contains("small_gain"));
}

}  // namespace

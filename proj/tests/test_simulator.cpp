#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sdobs/errors.hpp"
#include "sdobs/simulator.hpp"

namespace {

using namespace sdobs;
constexpr double kPi = std::numbers::pi;

// Neumann heat equation with moment output, one-mode observer and L = −pπ².
Scenario moment_scenario(ObserverVariant variant, double h, double horizon, std::size_t nodes = 201) {
  SLProblem problem;
  problem.p = 1.0;
  problem.left = {0.0, 1.0};
  problem.right = {0.0, 1.0};
  const SpectralBasis basis = analytic_eigensystem(problem, 200);
  DesignSpec spec;
  spec.problem = problem;
  spec.basis = &basis;
  spec.channels = {{"moment", Profile::polynomial({0.0, 1.0}), Profile::constant(0.5)}};
  spec.L = Mat::Constant(1, 1, -kPi * kPi);
  Scenario s;
  s.design = design_observer(spec);
  s.variant = variant;
  s.schedule.h = h;
  s.schedule.horizon = horizon;
  s.horizon = horizon;
  s.nodes = nodes;
  s.u0 = Profile();
  s.w0 = Profile::cosine_series({{1.0, kPi, 0.0}, {0.5, 2.0 * kPi, 0.0}}, 1.0);
  return s;
}

// Neumann at 0, Dirichlet at 1, total-mass output and a single-mode observer.
Scenario mixed_scenario() {
  SLProblem problem;
  problem.left = {0.0, 1.0};
  problem.right = {1.0, 0.0};
  const SpectralBasis basis = analytic_eigensystem(problem, 200);
  DesignSpec spec;
  spec.problem = problem;
  spec.basis = &basis;
  spec.channels = {{"mass", Profile::constant(1.0), Profile::cosine_series({{4.0 / kPi, kPi / 2.0, 0.0}})}};
  spec.L = Mat::Constant(1, 1, -2.0);
  Scenario s;
  s.design = design_observer(spec);
  s.schedule.h = 0.05;
  s.schedule.horizon = 1.0;
  s.horizon = 1.0;
  s.u0 = Profile::polynomial({1.0, 0.0, -1.0});
  s.w0 = Profile::cosine_series({{1.0, kPi / 2.0, 0.0}});
  return s;
}

TEST(CoSimulation, MeasurementIsKernelMomentPlusNoise) {
  Scenario s = moment_scenario(ObserverVariant::Predictor, 0.1, 1.0);
  s.disturbances.xi = {TimeSignal::constant(0.1)};
  const CoSimulation sim(s);
  const Grid& g = sim.grid();
  EXPECT_NEAR(sim.measure(Vec::Ones(static_cast<Eigen::Index>(g.nodes())), 0.0)[0], 0.6, 1e-12);
  // ∫ x · x dx = 1/3 is exact for the trapezoid rule up to O(dx²).
  EXPECT_NEAR(sim.measure(g.points(), 0.0)[0], 0.1 + 1.0 / 3.0, 1e-5);
}

TEST(CoSimulation, ResetAndInnovationFormulas) {
  const Scenario s = moment_scenario(ObserverVariant::Predictor, 0.1, 1.0);
  const CoSimulation sim(s);
  const Vec x = sim.grid().points();
  const Vec one = Vec::Ones(x.size());
  // ζ = y − ⟨x − 1/2, w⟩
  EXPECT_NEAR(sim.reset_predictor({0.7}, one, 0.0)[0], 0.7, 1e-12);
  EXPECT_NEAR(sim.reset_predictor({0.7}, x, 0.0)[0], 0.7 - 1.0 / 12.0, 1e-5);
  // ⟨x, w⟩ − y
  EXPECT_NEAR(sim.zoh_innovation({0.2}, x, 0.0)[0], 1.0 / 3.0 - 0.2, 1e-5);
}

TEST(CoSimulation, HeatModeDecaysAtItsEigenvalue) {
  const Scenario s = moment_scenario(ObserverVariant::Predictor, 0.1, 1.0);
  const CoSimulation sim(s);
  PlantState state{Profile::cosine_series({{1.0, kPi, 0.0}}).sample(sim.grid())};
  const Vec initial = state.u;
  const double dt = 1e-3;
  for (int k = 0; k < 100; ++k) sim.step_plant(state, k * dt, dt);
  const Vec expected = std::exp(-kPi * kPi * 0.1) * initial;
  EXPECT_LE(l2_norm(sim.grid(), state.u - expected) / l2_norm(sim.grid(), expected), 1e-3);
}

TEST(CoSimulation, ConstantStateIsConserved) {
  const Scenario s = moment_scenario(ObserverVariant::Predictor, 0.1, 1.0);
  const CoSimulation sim(s);
  PlantState state{Vec::Ones(static_cast<Eigen::Index>(sim.grid().nodes()))};
  for (int k = 0; k < 50; ++k) sim.step_plant(state, k * 0.01, 0.01);
  EXPECT_LE((state.u - Vec::Ones(state.u.size())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulate, ZeroScenarioStaysZero) {
  Scenario s = moment_scenario(ObserverVariant::Predictor, 0.1, 1.0);
  s.w0 = Profile();
  const Trajectory t = simulate(s);
  for (const auto& r : t.steps) {
    EXPECT_EQ(r.error_l2, 0.0);
    EXPECT_EQ(r.error_sup, 0.0);
  }
}

TEST(Simulate, ObserverStartedOnThePlantStaysThere) {
  for (auto variant : {ObserverVariant::Predictor, ObserverVariant::ZOH}) {
    Scenario s = moment_scenario(variant, 0.05, 1.0);
    s.u0 = Profile::cosine_series({{1.0, kPi, 0.0}, {0.3, 3.0 * kPi, 0.2}}, 0.5);
    s.w0 = s.u0;
    const Trajectory t = simulate(s);
    double worst = 0.0;
    for (const auto& r : t.steps) worst = std::max(worst, r.error_l2);
    EXPECT_LE(worst, 1e-9) << to_string(variant);
  }
}

TEST(Simulate, ErrorIsLinearInTheInitialError) {
  for (auto variant : {ObserverVariant::Predictor, ObserverVariant::ZOH}) {
    Scenario a = moment_scenario(variant, 0.05, 1.0);
    Scenario b = a;
    b.w0 = a.w0.scaled(2.0);
    const Trajectory ta = simulate(a), tb = simulate(b);
    ASSERT_EQ(ta.steps.size(), tb.steps.size());
    for (std::size_t k = 0; k < ta.steps.size(); k += 7)
      EXPECT_NEAR(tb.steps[k].error_l2, 2.0 * ta.steps[k].error_l2, 1e-8 * (1.0 + ta.steps[k].error_l2));
  }
}

TEST(Simulate, PredictorResetMatchesMeasurement) {
  // ζ after a reset equals y − ⟨k − c, w⟩ evaluated on the stored fields.
  Scenario s = moment_scenario(ObserverVariant::Predictor, 0.1, 0.5);
  s.snapshot_every = 1;
  s.u0 = Profile::polynomial({0.0, 1.0});
  const Trajectory t = simulate(s);
  const CoSimulation sim(s);
  for (const auto& snap : t.snapshots) {
    if (!snap.sample) continue;
    const auto it = std::find_if(t.events.begin(), t.events.end(), [&](const SampleEvent& e) { return e.t == snap.t; });
    ASSERT_NE(it, t.events.end());
    EXPECT_NEAR(it->zeta[0], sim.reset_predictor(it->y, snap.w, snap.t)[0], 1e-12);
    EXPECT_NEAR(it->y[0], sim.measure(snap.u, snap.t)[0], 1e-12);
  }
}

TEST(Simulate, SampleInstantsAreStepBoundaries) {
  Scenario s = moment_scenario(ObserverVariant::ZOH, 0.1, 1.0);
  s.schedule.kind = ScheduleSpec::Kind::RandomBounded;
  s.schedule.h_min = 0.03;
  s.schedule.h_max = 0.1;
  s.schedule.seed = 3;
  const Trajectory t = simulate(s);
  const SamplingSchedule schedule = make_schedule(s.schedule);
  std::vector<double> within;
  for (double x : schedule.times())
    if (x <= 1.0) within.push_back(x);
  EXPECT_EQ(t.sample_times, within);
  std::vector<double> flagged;
  for (const auto& r : t.steps)
    if (r.sample) flagged.push_back(r.t);
  EXPECT_EQ(flagged, within);
  EXPECT_NEAR(t.steps.back().t, 1.0, 1e-12);
  for (std::size_t k = 1; k < t.steps.size(); ++k) EXPECT_GT(t.steps[k].t, t.steps[k - 1].t);
}

TEST(Simulate, DirichletEndStaysPinned) {
  const Trajectory t = simulate(mixed_scenario());
  EXPECT_EQ(t.max_boundary_residual, 0.0);
  EXPECT_LT(t.steps.back().error_l2, t.steps.front().error_l2);
}

TEST(Simulate, RefinementChangesTheErrorByLessThanTwoPercent) {
  auto final_error = [](std::size_t nodes, double dt) {
    Scenario s = moment_scenario(ObserverVariant::Predictor, 0.05, 0.5, nodes);
    s.dt = dt;
    return simulate(s).steps.back().error_l2;
  };
  const double coarse = final_error(101, 5e-3), mid = final_error(201, 2.5e-3), fine = final_error(401, 1.25e-3);
  EXPECT_LE(std::abs(mid - fine) / fine, 0.02);
  EXPECT_GT(std::abs(coarse - fine), std::abs(mid - fine));
}

TEST(Simulate, ScheduleMustReachTheHorizon) {
  Scenario s = moment_scenario(ObserverVariant::Predictor, 0.1, 1.0);
  s.schedule.kind = ScheduleSpec::Kind::Explicit;
  s.schedule.times = {0.0, 0.2, 0.5};
  try {
    simulate(s);
    FAIL() << "expected ScheduleHorizonMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScheduleHorizonMismatch);
  }
}

TEST(Simulate, IsDeterministic) {
  Scenario s = moment_scenario(ObserverVariant::ZOH, 0.05, 0.5);
  s.disturbances.xi = {TimeSignal::random(0.01, 4)};
  const Trajectory a = simulate(s), b = simulate(s);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) EXPECT_EQ(a.steps[k].error_l2, b.steps[k].error_l2);
}

}  // namespace

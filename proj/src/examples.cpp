#include "sdobs/examples.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdobs/errors.hpp"

namespace sdobs {

namespace {

constexpr double kPi = std::numbers::pi;

nlohmann::json fit_json(const std::optional<DecayFit>& fit) {
  if (!fit) return nullptr;
  return {{"rate", fit->rate}, {"half_width", fit->half_width}, {"points", fit->points},
          {"t_first", fit->t_first}, {"t_last", fit->t_last}};
}

nlohmann::json coefficients_json(const IosCoefficients& c) {
  return {{"initial", c.initial}, {"noise", c.noise}, {"mismatch", c.mismatch}};
}

nlohmann::json gain_json(const SmallGainReport& g) {
  return {{"variant", to_string(g.variant)}, {"h", g.h}, {"kappa", g.kappa}, {"gamma", g.gamma},
          {"omega", g.omega}, {"feasible", g.feasible},
          {"coefficients", coefficients_json(g.coefficients)}};
}

nlohmann::json design_summary(const ObserverDesign& d) {
  return {{"N", d.N}, {"A11", d.A(0, 0)}, {"L11", d.L(0, 0)}, {"c11", d.c_coeffs(0, 0)},
          {"K", d.K}, {"sigma", d.sigma}, {"mu", d.mu}, {"g_tilde", d.g_tilde}, {"Q", d.Q},
          {"kernel_gap", d.gain_inputs.channels.at(0).kernel_gap},
          {"injection_norm", d.gain_inputs.channels.at(0).injection}};
}

// Fit window [3h, T] over the per-step error record.
std::optional<DecayFit> fit_steps(const Trajectory& traj, double h, double horizon) {
  std::vector<double> t, e;
  for (const auto& r : traj.steps) {
    t.push_back(r.t);
    e.push_back(r.error_l2);
  }
  try {
    return fit_decay_rate(t, e, 3.0 * h, horizon);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::DecayedToFloor) throw;
    return std::nullopt;
  }
}

}  // namespace

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Convergent: return "convergent";
    case Verdict::Divergent: return "divergent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict convergence_verdict(const Trajectory& trajectory) {
  if (trajectory.steps.empty()) return Verdict::Inconclusive;
  const double e0 = trajectory.steps.front().error_l2;
  // The error at the end of the run is read as its maximum over the last
  // sampling gap: an oscillating error can pass through zero between samples.
  double gap = 0.0;
  const auto& times = trajectory.sample_times;
  for (std::size_t j = 1; j < times.size(); ++j) gap = std::max(gap, times[j] - times[j - 1]);
  const double T = trajectory.steps.back().t;
  double eT = 0.0;
  for (auto it = trajectory.steps.rbegin(); it != trajectory.steps.rend() && it->t >= T - gap; ++it)
    eT = std::isfinite(it->error_l2) ? std::max(eT, it->error_l2) : HUGE_VAL;
  if (!std::isfinite(eT) || eT > 10.0 * e0) return Verdict::Divergent;
  if (eT < 0.1 * e0) return Verdict::Convergent;
  return Verdict::Inconclusive;
}

// ---------------------------------------------------------------------------
// Heat equation with Neumann ends and the first-moment output.

Profile Example31Params::default_u0() { return Profile(); }

Profile Example31Params::default_w0() {
  return Profile::cosine_series({{1.0, kPi, 0.0}, {0.5, 2.0 * kPi, 0.0}}, 1.0);
}

double example31_omega_predictor(double p, double h, double omega) {
  return std::exp(omega * p * kPi * kPi * h / 2.0) / std::sqrt(6.0 * (1.0 - omega));
}

double example31_omega_zoh(double p, double h, double omega) {
  const double lam = p * kPi * kPi;
  return std::exp(omega * lam * h / 2.0) * (h * lam + 1.0) / std::sqrt(6.0 * (1.0 - omega));
}

namespace {

ObserverDesign example31_design(double p) {
  SLProblem problem;
  problem.p = p;
  problem.left = {0.0, 1.0};
  problem.right = {0.0, 1.0};
  const SpectralBasis basis = analytic_eigensystem(problem, 200);
  DesignSpec spec;
  spec.problem = problem;
  spec.basis = &basis;
  spec.N = 1;
  spec.channels = {{"moment", Profile::polynomial({0.0, 1.0}), Profile::constant(0.5)}};
  spec.L = Mat::Constant(1, 1, -p * kPi * kPi);
  return design_observer(spec);
}

}  // namespace

Scenario example31_scenario(const Example31Params& params) {
  if (!(params.p > 0.0)) throw Error(ErrorCode::InvalidArgument, "p must be positive");
  if (!(params.omega >= 0.0 && params.omega < 1.0))
    throw Error(ErrorCode::KappaOutOfRange, "omega must lie in [0, 1)");
  Scenario s;
  s.design = example31_design(params.p);
  s.variant = params.variant;
  s.disturbances.xi = {params.noise};
  if (params.mismatch != 0.0)
    s.disturbances.v_tilde =
        FieldSignal::separable(TimeSignal::constant(params.mismatch), Profile::constant(1.0));
  s.horizon = params.horizon > 0.0 ? params.horizon : 200.0 / (params.p * kPi * kPi);
  s.schedule.kind = params.schedule;
  s.schedule.h = params.h;
  s.schedule.h_min = 0.5 * params.h;
  s.schedule.h_max = params.h;
  s.schedule.seed = params.seed;
  s.schedule.horizon = s.horizon;
  s.u0 = params.u0;
  s.w0 = params.w0;
  s.nodes = params.nodes;
  s.snapshot_every = params.snapshot_every;
  return s;
}

Example31Report run_example_31(const Example31Params& params) {
  Example31Report r;
  r.params = params;
  const Scenario scenario = example31_scenario(params);
  r.design = scenario.design;
  r.kappa = params.omega * r.design.mu;
  r.gain = small_gain(r.design, params.variant, params.h, r.kappa);
  r.omega_closed_form = params.variant == ObserverVariant::Predictor
                            ? example31_omega_predictor(params.p, params.h, params.omega)
                            : example31_omega_zoh(params.p, params.h, params.omega);
  r.zoh_threshold = 4.0 / (params.p * kPi * kPi);
  if (!params.simulate) return r;
  r.trajectory = simulate(scenario);
  r.fit = fit_steps(*r.trajectory, params.h, scenario.horizon);
  if (r.gain.feasible) r.bound = check_ios_bound(*r.trajectory, r.gain);
  r.verdict = convergence_verdict(*r.trajectory);
  return r;
}

nlohmann::json Example31Report::to_json() const {
  nlohmann::json j = {
      {"example", "moment_heat"},
      {"p", params.p},
      {"h", params.h},
      {"omega_parameter", params.omega},
      {"variant", to_string(params.variant)},
      {"design", design_summary(design)},
      {"small_gain", gain_json(gain)},
      {"omega_closed_form", omega_closed_form},
      {"zoh_threshold", zoh_threshold},
      {"kappa", kappa},
      {"fit", fit_json(fit)},
      {"verdict", to_string(verdict)},
  };
  if (trajectory) {
    j["error_initial"] = trajectory->steps.front().error_l2;
    j["error_final"] = trajectory->steps.back().error_l2;
    j["horizon"] = trajectory->steps.back().t;
  }
  if (bound) j["ios_bound"] = {{"violations", bound->violations}, {"worst_ratio", bound->worst_ratio}};
  return j;
}

// ---------------------------------------------------------------------------
// Reaction-diffusion with a boundary point output, observed through the
// derivative variable ũ.

Profile Example32Params::default_u_tilde0() { return Profile(); }

Profile Example32Params::default_w0() {
  return Profile::cosine_series({{1.0, kPi / 2.0, 0.0}, {0.5, 1.5 * kPi, 0.0}});
}

double example32_omega_conservative(double p, double q, double h, double omega) {
  const double s = 9.0 * p * kPi * kPi + 4.0 * q;
  return std::exp(omega * h * s / 8.0) * (7.0 * p * kPi * kPi - 4.0 * q) /
         (2.0 * std::sqrt(2.0) * s * std::sqrt(1.0 - omega)) *
         (std::abs(p * kPi * kPi + 4.0 * q) * kPi * h / (4.0 * std::sqrt(2.0)) +
          std::sqrt(kPi * kPi - 8.0));
}

namespace {

ObserverDesign example32_design(double p, double q) {
  if (!(-9.0 * p * kPi * kPi < 4.0 * q && 4.0 * q < 7.0 * p * kPi * kPi))
    throw Error(ErrorCode::ReactionOutOfRange, "need -9 p pi^2 < 4 q < 7 p pi^2");
  SLProblem problem;
  problem.p = p;
  problem.q = Profile::constant(q);
  problem.left = {0.0, 1.0};
  problem.right = {1.0, 0.0};
  const SpectralBasis basis = analytic_eigensystem(problem, 200);
  DesignSpec spec;
  spec.problem = problem;
  spec.basis = &basis;
  spec.N = 1;
  spec.channels = {{"boundary", Profile::constant(1.0),
                    Profile::cosine_series({{4.0 / kPi, kPi / 2.0, 0.0}})}};
  spec.L = Mat::Constant(1, 1, kPi * (4.0 * q - 7.0 * p * kPi * kPi) / (16.0 * std::sqrt(2.0)));
  return design_observer(spec);
}

}  // namespace

Example32Report run_example_32(const Example32Params& params) {
  if (!(params.omega >= 0.0 && params.omega < 1.0))
    throw Error(ErrorCode::KappaOutOfRange, "omega must lie in [0, 1)");
  Example32Report r;
  r.params = params;
  r.design = example32_design(params.p, params.q);
  r.kappa = params.omega * r.design.mu;
  r.h_max = max_diameter(r.design, r.kappa, ObserverVariant::Predictor);
  const double h = params.h > 0.0 ? params.h : 0.5 * r.h_max;
  if (!std::isfinite(h)) throw Error(ErrorCode::InvalidArgument, "no finite sampling period chosen");
  r.params.h = h;
  r.gain = small_gain_predictor(r.design, h, r.kappa);
  r.omega_conservative = example32_omega_conservative(params.p, params.q, h, params.omega);
  const auto& c = r.gain.coefficients;
  r.theta = std::max({c.initial, c.noise.at(0), c.mismatch});
  if (!params.simulate) return r;

  // Without a plant input the offset (p/2)v(t,0) and ṽ vanish; ũ solves the
  // homogeneous transformed problem.
  Scenario s;
  s.design = r.design;
  s.variant = ObserverVariant::Predictor;
  s.disturbances.xi = {params.noise};
  s.horizon = params.horizon;
  s.schedule.kind = ScheduleSpec::Kind::Uniform;
  s.schedule.h = h;
  s.schedule.horizon = params.horizon;
  s.u0 = params.u_tilde0;
  s.w0 = params.zero_initial_error ? params.u_tilde0 : params.w0;
  s.nodes = params.nodes;
  s.snapshot_every = params.snapshot_every;
  r.trajectory = simulate(s);

  // û − u = ∫_0^x (w − ũ) ds, so the sup error follows from the cumulative integral.
  const Grid& grid = r.trajectory->grid;
  const double e0 = r.trajectory->steps.front().error_l2;
  double xi_hist = 0.0;
  double t_prev = 0.0;
  for (const auto& snap : r.trajectory->snapshots) {
    if (snap.u.size() == 0) continue;
    const double err = sup_norm(cumulative_integral(grid, snap.w - snap.u));
    r.sup_t.push_back(snap.t);
    r.sup_error.push_back(err);
    xi_hist = std::max(xi_hist * std::exp(-r.kappa * (snap.t - t_prev)), std::abs(params.noise(snap.t)));
    t_prev = snap.t;
    const double rhs = r.theta * std::exp(-r.kappa * snap.t) * e0 + r.theta * xi_hist;
    if (err > 1.02 * rhs + 1e-14) ++r.sup_bound_violations;
    if (rhs > 0.0) r.worst_sup_ratio = std::max(r.worst_sup_ratio, err / rhs);
  }
  try {
    r.fit = fit_decay_rate(r.sup_t, r.sup_error, 3.0 * h, params.horizon);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::DecayedToFloor) throw;
  }
  return r;
}

nlohmann::json Example32Report::to_json() const {
  nlohmann::json j = {
      {"example", "boundary_reaction_diffusion"},
      {"p", params.p},
      {"q", params.q},
      {"h", params.h},
      {"omega_parameter", params.omega},
      {"design", design_summary(design)},
      {"small_gain", gain_json(gain)},
      {"omega_closed_form", omega_conservative},
      {"h_max", h_max},
      {"kappa", kappa},
      {"theta", theta},
      {"fit", fit_json(fit)},
      {"sup_bound_violations", sup_bound_violations},
      {"worst_sup_ratio", worst_sup_ratio},
  };
  if (!sup_error.empty()) {
    j["sup_error_initial"] = sup_error.front();
    j["sup_error_final"] = sup_error.back();
  }
  return j;
}

}  // namespace sdobs

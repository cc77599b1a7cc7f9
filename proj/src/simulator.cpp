#include "sdobs/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "sdobs/errors.hpp"

namespace sdobs {

// LU factors of the tridiagonal I + (dt/2) B_h (Thomas algorithm).
struct CoSimulation::Factor {
  double dt = 0.0;
  Vec lower;      // sub-diagonal of the matrix
  Vec upper_mod;  // modified super-diagonal c'
  Vec pivot_inv;  // 1 / modified diagonal
};

CoSimulation::CoSimulation(const Scenario& scenario)
    : scenario_(scenario),
      grid_(scenario.nodes),
      op_(scenario.design.problem, grid_),
      f_(scenario.nonlinearity, grid_),
      v_(scenario.disturbances.v, grid_),
      v_tilde_(scenario.disturbances.v_tilde, grid_) {
  const auto& d = scenario_.design;
  for (std::size_t i = 0; i < d.channels.size(); ++i) {
    kernels_.push_back(d.channels[i].kernel.sample(grid_));
    Vec c = d.channels[i].approximant.sample(grid_);
    approximants_.push_back(c);
    injections_.push_back(d.injection.at(i).sample(grid_));
    // ⟨c, −B_h w⟩ = ⟨−B_h c, w⟩ for the trapezoid product once the Dirichlet
    // nodes are eliminated, so the predictor uses the exact discrete adjoint.
    op_.enforce(c);
    adjoint_rows_.push_back(-op_.apply(c));
  }
}

CoSimulation::~CoSimulation() = default;

std::vector<double> CoSimulation::measure(const Vec& u, double t) const {
  std::vector<double> y(kernels_.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = scenario_.disturbances.noise(i, t) + scenario_.disturbances.offset(i, t) +
           inner(grid_, kernels_[i], u);
  return y;
}

std::vector<double> CoSimulation::reset_predictor(const std::vector<double>& y, const Vec& w,
                                                  double t) const {
  std::vector<double> zeta(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    zeta[i] = y[i] - scenario_.disturbances.offset(i, t) -
              inner(grid_, kernels_[i] - approximants_[i], w);
  return zeta;
}

std::vector<double> CoSimulation::zoh_innovation(const std::vector<double>& y, const Vec& w,
                                                 double t) const {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = inner(grid_, kernels_[i], w) - (y[i] - scenario_.disturbances.offset(i, t));
  return out;
}

const CoSimulation::Factor& CoSimulation::factor(double dt) const {
  for (const auto& f : factors_)
    if (f->dt == dt) return *f;
  auto f = std::make_shared<Factor>();
  f->dt = dt;
  const Eigen::Index n = op_.diag().size();
  const double s = 0.5 * dt;
  f->lower = s * op_.lower();
  f->upper_mod.resize(n);
  f->pivot_inv.resize(n);
  double prev = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double diag = 1.0 + s * op_.diag()(k) - (k > 0 ? f->lower(k) * prev : 0.0);
    f->pivot_inv(k) = 1.0 / diag;
    prev = (k + 1 < n ? s * op_.upper()(k) : 0.0) * f->pivot_inv(k);
    f->upper_mod(k) = prev;
  }
  if (factors_.size() >= 16) factors_.erase(factors_.begin());
  factors_.push_back(f);
  return *factors_.back();
}

Vec CoSimulation::solve(const Factor& lu, const Vec& rhs) const {
  const Eigen::Index n = rhs.size();
  Vec x(n);
  double prev = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    prev = (rhs(k) - (k > 0 ? lu.lower(k) * prev : 0.0)) * lu.pivot_inv(k);
    x(k) = prev;
  }
  for (Eigen::Index k = n - 2; k >= 0; --k) x(k) -= lu.upper_mod(k) * x(k + 1);
  op_.enforce(x);
  return x;
}

namespace {

void check_contraction(double first, double second, double scale) {
  if (second > first && second > 1e-12 * (1.0 + scale))
    throw Error(ErrorCode::StepRejected, "corrector does not contract; reduce dt");
}

}  // namespace

void CoSimulation::step_plant(PlantState& state, double t, double dt) const {
  const Factor& lu = factor(dt);
  const Vec& u = state.u;
  const Vec forcing_now = f_.apply(u) + v_.at(t);
  Vec base = u - 0.5 * dt * op_.apply(u) + 0.5 * dt * forcing_now;
  const Vec v_next = v_.at(t + dt);
  Vec guess = solve(lu, base + 0.5 * dt * forcing_now);
  if (f_.zero()) {
    state.u = solve(lu, base + 0.5 * dt * v_next);
    return;
  }
  Vec first = solve(lu, base + 0.5 * dt * (f_.apply(guess) + v_next));
  Vec second = solve(lu, base + 0.5 * dt * (f_.apply(first) + v_next));
  check_contraction((first - guess).norm(), (second - first).norm(), second.norm());
  state.u = std::move(second);
}

void CoSimulation::step_observer_predictor(ObserverState& state, double t, double dt) const {
  const Factor& lu = factor(dt);
  const std::size_t m = approximants_.size();
  const Vec& w0 = state.w;
  const Vec vt_now = v_tilde_.at(t), vt_next = v_tilde_.at(t + dt);
  const Vec fw0 = f_.apply(w0);

  const auto injection = [&](const Vec& w, const std::vector<double>& zeta) {
    Vec out = Vec::Zero(w.size());
    for (std::size_t i = 0; i < m; ++i)
      out += injections_[i] * (inner(grid_, approximants_[i], w) - zeta[i]);
    return out;
  };
  // ζ paired with the iterate it accompanies: trapezoid in time with the
  // explicit part evaluated at the previous iterate, mirroring the w update.
  const auto zeta_update = [&](const Vec& w_new, const Vec& explicit_prev) {
    std::vector<double> z(m);
    for (std::size_t i = 0; i < m; ++i)
      z[i] = state.zeta[i] + 0.5 * dt * inner(grid_, adjoint_rows_[i], w0 + w_new) +
             0.5 * dt * inner(grid_, approximants_[i], fw0 + vt_now + explicit_prev);
    return z;
  };

  const Vec forcing_now = fw0 + vt_now + injection(w0, state.zeta);
  const Vec base = w0 - 0.5 * dt * op_.apply(w0) + 0.5 * dt * forcing_now;

  Vec w_prev = solve(lu, base + 0.5 * dt * forcing_now);
  std::vector<double> z_prev = zeta_update(w_prev, fw0 + vt_now);
  double last_change = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    const Vec f_prev = f_.apply(w_prev);
    const Vec w_new = solve(lu, base + 0.5 * dt * (f_prev + vt_next + injection(w_prev, z_prev)));
    std::vector<double> z_new = zeta_update(w_new, f_prev + vt_next);
    const double change = (w_new - w_prev).norm();
    if (pass == 1) check_contraction(last_change, change, w_new.norm());
    last_change = change;
    w_prev = w_new;
    z_prev = std::move(z_new);
  }
  state.w = std::move(w_prev);
  state.zeta = std::move(z_prev);
}

void CoSimulation::step_observer_zoh(ObserverState& state, double t, double dt) const {
  const Factor& lu = factor(dt);
  Vec held = Vec::Zero(state.w.size());
  for (std::size_t i = 0; i < injections_.size(); ++i) held += injections_[i] * state.held_innovation[i];
  const Vec& w0 = state.w;
  const Vec forcing_now = f_.apply(w0) + v_tilde_.at(t) + held;
  const Vec base = w0 - 0.5 * dt * op_.apply(w0) + 0.5 * dt * forcing_now;
  const Vec next = v_tilde_.at(t + dt) + held;
  Vec guess = solve(lu, base + 0.5 * dt * forcing_now);
  if (f_.zero()) {
    state.w = solve(lu, base + 0.5 * dt * next);
    return;
  }
  Vec first = solve(lu, base + 0.5 * dt * (f_.apply(guess) + next));
  Vec second = solve(lu, base + 0.5 * dt * (f_.apply(first) + next));
  check_contraction((first - guess).norm(), (second - first).norm(), second.norm());
  state.w = std::move(second);
}

std::vector<double> CoSimulation::estimation_residuals(const Vec& u, const ObserverState& obs) const {
  std::vector<double> eps(approximants_.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (scenario_.variant == ObserverVariant::Predictor)
      eps[i] = obs.zeta[i] - inner(grid_, approximants_[i], u);
    else
      eps[i] = inner(grid_, approximants_[i], obs.w - u);
  }
  return eps;
}

Trajectory simulate(const Scenario& scenario) {
  const CoSimulation sim(scenario);
  const Grid& grid = sim.grid();
  const SamplingSchedule schedule = make_schedule(scenario.schedule);
  const double T = scenario.horizon;
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidSpec, "horizon must be positive");
  if (schedule.times().back() < T * (1.0 - 1e-12))
    throw Error(ErrorCode::ScheduleHorizonMismatch, "sampling schedule ends before the horizon");
  const double dt_target =
      scenario.dt > 0.0 ? scenario.dt : std::min(grid.dx(), schedule.diameter() / 20.0);
  const std::size_t m = scenario.design.channels.size();
  const bool predictor = scenario.variant == ObserverVariant::Predictor;

  Trajectory traj;
  traj.grid = grid;
  traj.dt = dt_target;
  traj.variant = scenario.variant;
  try {
    const double mu = scenario.design.mu;
    traj.infeasible_warning = !small_gain(scenario.design, scenario.variant, schedule.diameter(),
                                          0.0).feasible || !(mu > 0.0);
  } catch (const Error&) {
    traj.infeasible_warning = true;
  }

  PlantState plant{scenario.u0.sample(grid)};
  ObserverState obs{scenario.w0.sample(grid), std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  sim.op().enforce(plant.u);
  sim.op().enforce(obs.w);

  const auto record = [&](double t, bool sample) {
    StepRecord r;
    r.t = t;
    const Vec e = obs.w - plant.u;
    r.error_l2 = l2_norm(grid, e);
    r.error_sup = sup_norm(e);
    r.mismatch_l2 = l2_norm(grid, sim.v(t) - sim.v_tilde(t));
    r.noise_abs.resize(m);
    for (std::size_t i = 0; i < m; ++i) r.noise_abs[i] = std::abs(scenario.disturbances.noise(i, t));
    r.zeta = predictor ? obs.zeta : obs.held_innovation;
    r.sample = sample;
    traj.max_boundary_residual = std::max(
        {traj.max_boundary_residual, sim.op().boundary_residual(plant.u), sim.op().boundary_residual(obs.w)});
    return r;
  };
  const auto snapshot = [&](double t, bool sample, std::vector<double> eps_left) {
    Snapshot s;
    s.t = t;
    s.sample = sample;
    if (scenario.store_fields) {
      s.u = plant.u;
      s.w = obs.w;
    }
    s.eps_right = sim.estimation_residuals(plant.u, obs);
    s.eps_left = eps_left.empty() ? s.eps_right : std::move(eps_left);
    traj.snapshots.push_back(std::move(s));
  };

  traj.steps.push_back(record(0.0, true));
  const auto& times = schedule.times();
  std::size_t step_count = 0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double tj = times[j];
    if (tj > T) break;
    // Sample instant: measure, reset, log.
    const auto y = sim.measure(plant.u, tj);
    const auto eps_left = sim.estimation_residuals(plant.u, obs);
    SampleEvent event;
    event.t = tj;
    event.y = y;
    event.noise.resize(m);
    for (std::size_t i = 0; i < m; ++i) event.noise[i] = scenario.disturbances.noise(i, tj);
    event.zeta_left = predictor ? obs.zeta : obs.held_innovation;
    if (predictor)
      obs.zeta = sim.reset_predictor(y, obs.w, tj);
    else
      obs.held_innovation = sim.zoh_innovation(y, obs.w, tj);
    event.zeta = predictor ? obs.zeta : obs.held_innovation;
    traj.events.push_back(std::move(event));
    traj.sample_times.push_back(tj);
    traj.steps.back().zeta = predictor ? obs.zeta : obs.held_innovation;
    traj.steps.back().sample = true;
    snapshot(tj, true, eps_left);
    if (tj >= T) break;

    const double end = j + 1 < times.size() ? std::min(times[j + 1], T) : T;
    const bool end_is_sample = j + 1 < times.size() && times[j + 1] <= T;
    const auto substeps = static_cast<std::size_t>(
        std::max(1.0, std::ceil((end - tj) / dt_target - 1e-9)));
    const double dt = (end - tj) / static_cast<double>(substeps);
    for (std::size_t k = 0; k < substeps; ++k) {
      const double t = tj + static_cast<double>(k) * dt;
      const double t_next = k + 1 == substeps ? end : tj + static_cast<double>(k + 1) * dt;
      const double h = t_next - t;
      sim.step_plant(plant, t, h);
      if (predictor)
        sim.step_observer_predictor(obs, t, h);
      else
        sim.step_observer_zoh(obs, t, h);
      ++step_count;
      traj.steps.push_back(record(t_next, false));
      const bool last = k + 1 == substeps;
      if (last && end_is_sample) continue;  // the reset snapshot covers this instant
      if ((last && end >= T) || step_count % std::max<std::size_t>(scenario.snapshot_every, 1) == 0)
        snapshot(t_next, false, {});
    }
    if (!end_is_sample && end >= T) break;
  }
  return traj;
}

}  // namespace sdobs

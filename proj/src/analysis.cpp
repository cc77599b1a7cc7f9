#include "sdobs/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "sdobs/errors.hpp"

namespace sdobs {

NormSeries error_norms(const Trajectory& trajectory) {
  NormSeries out;
  for (const auto& s : trajectory.snapshots) {
    if (s.u.size() == 0) continue;
    const Vec e = s.w - s.u;
    out.t.push_back(s.t);
    out.l2.push_back(l2_norm(trajectory.grid, e));
    out.sup.push_back(sup_norm(e));
  }
  if (out.t.empty())
    for (const auto& r : trajectory.steps) {
      out.t.push_back(r.t);
      out.l2.push_back(r.error_l2);
      out.sup.push_back(r.error_sup);
    }
  return out;
}

DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& norms,
                        double t_start, double t_end) {
  if (t.size() != norms.size() || t.empty())
    throw Error(ErrorCode::DimensionMismatch, "time and norm series differ in length");
  const double floor = 1e-13 * norms.front();
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_start || t[k] > t_end) continue;
    if (!(norms[k] > floor) || !(norms[k] > 0.0)) continue;
    xs.push_back(t[k]);
    ys.push_back(std::log(norms[k]));
  }
  if (xs.size() < 3) throw Error(ErrorCode::DecayedToFloor, "fewer than three usable points in the window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DecayedToFloor, "window has no time spread");
  const double slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (my + slope * (xs[k] - mx));
    sse += r * r;
  }
  DecayFit fit;
  fit.rate = -slope;
  fit.points = xs.size();
  fit.t_first = xs.front();
  fit.t_last = xs.back();
  const double se = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  return fit;
}

IOSBoundCheck check_ios_bound(const Trajectory& trajectory, const SmallGainReport& report,
                              double slack) {
  if (!(report.omega < 1.0))
    throw Error(ErrorCode::InfeasibleReport, "small-gain report is infeasible (Omega >= 1)");
  IOSBoundCheck check;
  check.variant = report.variant;
  check.coefficients = report.coefficients;
  check.kappa = report.kappa;
  if (trajectory.steps.empty()) return check;
  const double kappa = report.kappa;
  const double e0 = trajectory.steps.front().error_l2;
  const std::size_t m = report.coefficients.noise.size();
  std::vector<double> noise_sup(m, 0.0);
  double mismatch_sup = 0.0;
  double t_prev = trajectory.steps.front().t;
  for (const auto& r : trajectory.steps) {
    // Running sup_s |signal(s)| e^{−κ(t−s)} updated recursively.
    const double decay = std::exp(-kappa * (r.t - t_prev));
    t_prev = r.t;
    double noise_term = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = i < r.noise_abs.size() ? r.noise_abs[i] : 0.0;
      noise_sup[i] = std::max(noise_sup[i] * decay, xi);
      noise_term += report.coefficients.noise[i] * noise_sup[i];
    }
    mismatch_sup = std::max(mismatch_sup * decay, r.mismatch_l2);
    const double rhs = report.coefficients.initial * std::exp(-kappa * r.t) * e0 + noise_term +
                       report.coefficients.mismatch * mismatch_sup;
    check.t.push_back(r.t);
    check.rhs.push_back(rhs);
    check.margin.push_back(rhs - r.error_l2);
    check.noise_history.push_back(noise_term);
    check.mismatch_history.push_back(mismatch_sup);
    if (r.error_l2 > (1.0 + slack) * rhs + 1e-14 * (1.0 + e0)) ++check.violations;
    if (rhs > 0.0) check.worst_ratio = std::max(check.worst_ratio, r.error_l2 / rhs);
  }
  return check;
}

bool LyapunovTrace::holds(double slack) const {
  return worst_norm_ratio <= 1.0 + slack && worst_decay_ratio <= 1.0 + slack &&
         V0_ratio <= 1.0 + slack;
}

DissipationRates design_rates(const ObserverDesign& design) { return {design.mu, design.g_tilde}; }

DissipationRates split_rates(const ObserverDesign& design, double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < design.sigma))
    throw Error(ErrorCode::InvalidArgument, "splitting weight must lie in (0, sigma)");
  const double lam = design.lambda_next();
  const double coupling = design.LPL_norm * design.K * design.K / (epsilon * design.Q);
  DissipationRates r;
  r.mu = std::min(design.sigma - epsilon, lam / 2.0 - coupling);
  r.g_tilde = std::max(design.P_norm / epsilon, design.Q / (2.0 * lam));
  if (!(r.mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "splitting weight leaves no decay");
  return r;
}

LyapunovTrace lyapunov_oracle(const Trajectory& trajectory, const Scenario& scenario,
                              const SpectralBasis& basis, std::size_t modes,
                              std::optional<DissipationRates> rates) {
  const ObserverDesign& d = scenario.design;
  const std::size_t N = d.N;
  if (modes < N + 1 || modes > basis.size())
    throw Error(ErrorCode::DimensionMismatch, "oracle needs N+1 <= modes <= basis size");
  const Grid& grid = trajectory.grid;
  const CoSimulation sim(scenario);
  const std::size_t m = d.channels.size();
  const bool predictor = trajectory.variant == ObserverVariant::Predictor;

  std::vector<Vec> phi;
  for (std::size_t n = 0; n < modes; ++n) phi.push_back(basis.mode_on(grid, n));

  LyapunovTrace trace;
  std::vector<const Snapshot*> snaps;
  for (const auto& s : trajectory.snapshots)
    if (s.u.size() > 0) snaps.push_back(&s);
  trace.modal = Mat::Zero(static_cast<Eigen::Index>(snaps.size()), static_cast<Eigen::Index>(modes));

  // v̄ of the error system: f(w) − f(u) + ṽ − v + Σ l_i (injection_i − ⟨c_i, e⟩).
  const auto& events = trajectory.events;
  const auto held_at = [&](double t) -> const std::vector<double>& {
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double x, const SampleEvent& ev) { return x < ev.t; });
    return (it == events.begin() ? *it : *(it - 1)).zeta;
  };
  const auto vbar_sq = [&](const Snapshot& s, const std::vector<double>& eps) {
    const Vec e = s.w - s.u;
    Vec vbar = sim.nonlinearity().apply(s.w) - sim.nonlinearity().apply(s.u) + sim.v_tilde(s.t) - sim.v(s.t);
    for (std::size_t i = 0; i < m; ++i) {
      double correction;
      if (predictor) {
        correction = -eps[i];
      } else {
        correction = held_at(s.t)[i] - inner(grid, sim.approximants()[i], e);
      }
      vbar += sim.injections()[i] * correction;
    }
    return inner(grid, vbar, vbar);
  };

  const double Pn = d.P_norm;
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const Snapshot& s = *snaps[k];
    const Vec e = s.w - s.u;
    const double e_sq = inner(grid, e, e);
    Vec r(static_cast<Eigen::Index>(modes));
    for (std::size_t n = 0; n < modes; ++n) r(static_cast<Eigen::Index>(n)) = inner(grid, e, phi[n]);
    trace.modal.row(static_cast<Eigen::Index>(k)) = r.transpose();
    const double captured = r.squaredNorm();
    const double deficit = e_sq - captured;
    if (deficit > 0.05 * e_sq && e_sq > 1e-300)
      throw Error(ErrorCode::TailTooShort, "truncated Parseval deficit above 5% at t = " + std::to_string(s.t));
    // Tail Σ_{n>N} r_n² completed through Parseval so V is not truncated.
    const Vec xi = r.head(static_cast<Eigen::Index>(N));
    const double tail = std::max(0.0, e_sq - xi.squaredNorm());
    const double V = xi.dot(d.P * xi) + 0.5 * d.Q * tail;
    trace.t.push_back(s.t);
    trace.V.push_back(V);
    trace.error_sq.push_back(e_sq);
    trace.parseval_deficit.push_back(deficit);
    trace.vbar_sq_left.push_back(vbar_sq(s, s.eps_left));
    trace.vbar_sq_right.push_back(vbar_sq(s, s.eps_right));
  }
  if (snaps.empty()) return trace;

  // For the ZOH variant the held value jumps at samples; the left limit uses the
  // previous hold.
  if (!predictor) {
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      const Snapshot& s = *snaps[k];
      if (!s.sample || k == 0) continue;
      const Vec e = s.w - s.u;
      auto it = std::lower_bound(events.begin(), events.end(), s.t,
                                 [](const SampleEvent& ev, double x) { return ev.t < x; });
      if (it == events.begin()) continue;
      const auto& prev = (it - 1)->zeta;
      Vec vbar = sim.nonlinearity().apply(s.w) - sim.nonlinearity().apply(s.u) + sim.v_tilde(s.t) - sim.v(s.t);
      for (std::size_t i = 0; i < m; ++i)
        vbar += sim.injections()[i] * (prev[i] - inner(grid, sim.approximants()[i], e));
      trace.vbar_sq_left[k] = inner(grid, vbar, vbar);
    }
  }

  const double V0 = trace.V.front();
  trace.V0_bound = std::max(Pn, d.Q / 2.0) * trace.error_sq.front();
  trace.V0_ratio = trace.V0_bound > 0.0 ? V0 / trace.V0_bound : (V0 > 0.0 ? HUGE_VAL : 0.0);
  const DissipationRates used = rates ? *rates : design_rates(d);
  const double mu = used.mu;
  const double floor = 1e-12 * (V0 + 1e-300);
  double integral = 0.0;
  trace.bound.push_back(V0);
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    if (k > 0) {
      const double dt = trace.t[k] - trace.t[k - 1];
      const double decay = std::exp(-2.0 * mu * dt);
      integral = decay * integral + 0.5 * dt * (decay * trace.vbar_sq_right[k - 1] + trace.vbar_sq_left[k]);
      trace.bound.push_back(std::exp(-2.0 * mu * trace.t[k]) * V0 + used.g_tilde * integral);
    }
    const double V = trace.V[k];
    if (V > 0.0 || trace.error_sq[k] > 0.0)
      trace.worst_norm_ratio = std::max(trace.worst_norm_ratio, trace.error_sq[k] / std::max(V, 1e-300));
    trace.worst_decay_ratio = std::max(trace.worst_decay_ratio, V / (trace.bound[k] + floor));
  }
  return trace;
}

double boundary_term(const Profile& c, const Vec& u, const Grid& grid) {
  const Eigen::Index n = u.size();
  if (static_cast<std::size_t>(n) != grid.nodes() || n < 3)
    throw Error(ErrorCode::GridMismatch, "state does not match the grid");
  const double h = grid.dx();
  const double ux0 = (-3.0 * u(0) + 4.0 * u(1) - u(2)) / (2.0 * h);
  const double ux1 = (3.0 * u(n - 1) - 4.0 * u(n - 2) + u(n - 3)) / (2.0 * h);
  return c(1.0) * ux1 - c(0.0) * ux0 - c.d1(1.0) * u(n - 1) + c.d1(0.0) * u(0);
}

}  // namespace sdobs

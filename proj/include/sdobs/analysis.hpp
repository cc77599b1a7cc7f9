#pragma once

#include <optional>
#include <vector>

#include "sdobs/observer_design.hpp"
#include "sdobs/simulator.hpp"

namespace sdobs {

struct NormSeries {
  std::vector<double> t;
  std::vector<double> l2;
  std::vector<double> sup;
};

/// ‖e[t]‖ and ‖e[t]‖_∞ recomputed from the stored u, w snapshots.
NormSeries error_norms(const Trajectory& trajectory);

struct DecayFit {
  double rate = 0.0;         // κ̂ in ‖e‖ ≈ C exp(−κ̂ t)
  double half_width = 0.0;   // 95% confidence half-width of κ̂
  std::size_t points = 0;
  double t_first = 0.0;
  double t_last = 0.0;
};

/// Least-squares slope of log‖e‖ over [t_start, t_end]. Points at or below
/// 1e-13·norms.front() are dropped; DecayedToFloor when fewer than three remain.
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& norms,
                        double t_start, double t_end);

/// Bound of the IOS estimate evaluated along a trajectory.
struct IOSBoundCheck {
  ObserverVariant variant = ObserverVariant::Predictor;
  IosCoefficients coefficients;
  double kappa = 0.0;
  std::vector<double> t;
  std::vector<double> rhs;
  std::vector<double> margin;          // rhs − ‖e‖
  std::vector<double> noise_history;   // Σ_i gain_i sup_s |ξ_i(s)| e^{−κ(t−s)}
  std::vector<double> mismatch_history;  // sup_s ‖v − ṽ‖ e^{−κ(t−s)}
  std::size_t violations = 0;          // ‖e‖ > (1 + slack) rhs
  double worst_ratio = 0.0;            // max ‖e‖ / rhs where rhs > 0
};

/// Throws InfeasibleReport when Ω ≥ 1.
IOSBoundCheck check_ios_bound(const Trajectory& trajectory, const SmallGainReport& report,
                              double slack = 0.02);

struct LyapunovTrace {
  std::vector<double> t;
  std::vector<double> V;
  std::vector<double> error_sq;         // ‖e[t]‖²
  std::vector<double> parseval_deficit; // ‖e‖² − Σ_{n≤J} r_n²
  std::vector<double> bound;            // e^{−2μt} V(0) + g̃ ∫ e^{−2μ(t−s)} ‖v̄‖² ds
  std::vector<double> vbar_sq_left;     // ‖v̄(t⁻)‖²
  std::vector<double> vbar_sq_right;    // ‖v̄(t)‖²
  Mat modal;                            // snapshots × J projections r_n
  double V0_bound = 0.0;                // max(|P|, Q/2) ‖e[0]‖²
  double worst_norm_ratio = 0.0;        // max ‖e‖² / V
  double worst_decay_ratio = 0.0;       // max V / bound
  double V0_ratio = 0.0;                // V(0) / V0_bound
  bool holds(double slack = 0.02) const;
};

/// Decay rate μ and input gain g̃ of the dissipation inequality
/// V' ≤ −2μV + g̃‖v̄‖².
struct DissipationRates {
  double mu = 0.0;
  double g_tilde = 0.0;
};

/// The pair carried by the design.
DissipationRates design_rates(const ObserverDesign& design);

/// The pair obtained by splitting 2ξᵀPF with weight ε ∈ (0, σ):
/// μ = min(σ − ε, λ_{N+1}/2 − |LᵀPL|K²/(εQ)), g̃ = max(|P|/ε, Q/(2λ_{N+1})).
/// Throws InvalidArgument when ε is out of range or μ would not be positive.
DissipationRates split_rates(const ObserverDesign& design, double epsilon);

/// Lyapunov functional along a stored trajectory, with the input v̄ of the error
/// system rebuilt from the recorded residuals ε_i. Throws TailTooShort when the
/// truncated Parseval deficit exceeds 5% of ‖e‖².
/// The integral bound uses `rates` when given, the design's pair otherwise.
LyapunovTrace lyapunov_oracle(const Trajectory& trajectory, const Scenario& scenario,
                              const SpectralBasis& basis, std::size_t modes,
                              std::optional<DissipationRates> rates = std::nullopt);

/// ψ_i = c(1)u_x(1) − c(0)u_x(0) − c'(1)u(1) + c'(0)u(0) with one-sided
/// second-order derivatives of u.
double boundary_term(const Profile& c, const Vec& u, const Grid& grid);

}  // namespace sdobs

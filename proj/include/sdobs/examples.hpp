#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdobs/analysis.hpp"
#include "sdobs/observer_design.hpp"
#include "sdobs/simulator.hpp"

namespace sdobs {

// Heat equation with Neumann ends, output ∫ x u dx, N = 1, c₁ = 1/2, L₁₁ = −pπ².
struct Example31Params {
  double p = 1.0;
  double h = 0.1;
  double omega = 0.0;
  ObserverVariant variant = ObserverVariant::Predictor;
  ScheduleSpec::Kind schedule = ScheduleSpec::Kind::Uniform;
  std::uint64_t seed = 1;
  TimeSignal noise;           // ξ
  double mismatch = 0.0;      // ṽ − v ≡ mismatch (constant in t and x)
  std::size_t nodes = 201;
  double horizon = 0.0;       // 0: 200/(pπ²)
  std::size_t snapshot_every = 10;
  // The plant starts at rest and the observer carries the initial error, so
  // e = w − u is never formed by cancellation of two large fields.
  Profile u0 = default_u0();
  Profile w0 = default_w0();
  bool simulate = true;

  static Profile default_u0();
  static Profile default_w0();
};

enum class Verdict { Convergent, Divergent, Inconclusive };
std::string to_string(Verdict verdict);

/// Convergent when ‖e[T]‖ < 0.1‖e[0]‖, divergent when ‖e[T]‖ > 10‖e[0]‖, with
/// ‖e[T]‖ taken as the largest error over the final sampling gap.
Verdict convergence_verdict(const Trajectory& trajectory);

struct Example31Report {
  Example31Params params;
  ObserverDesign design;
  SmallGainReport gain;
  double omega_closed_form = 0.0;   // specialized closed form for the chosen variant
  double zoh_threshold = 0.0;       // 4/(pπ²)
  double kappa = 0.0;
  std::optional<Trajectory> trajectory;
  std::optional<DecayFit> fit;
  std::optional<IOSBoundCheck> bound;
  Verdict verdict = Verdict::Inconclusive;
  nlohmann::json to_json() const;
};

Scenario example31_scenario(const Example31Params& params);
Example31Report run_example_31(const Example31Params& params);

/// Closed-form Ω of the moment-output heat example.
double example31_omega_predictor(double p, double h, double omega);
double example31_omega_zoh(double p, double h, double omega);

// Reaction-diffusion with u(0) = u_x(1) = 0 and boundary output u(t,1), observed
// through ũ = u_x + p(x−1)v(t,0) which has ũ_x(0) = ũ(1) = 0.
struct Example32Params {
  double p = 1.0;
  double q = 0.0;
  double h = 0.0;             // 0: half of max_diameter at ω
  double omega = 0.5;
  TimeSignal noise;
  std::size_t nodes = 201;
  double horizon = 5.0;
  std::size_t snapshot_every = 1;
  Profile u_tilde0 = default_u_tilde0();
  Profile w0 = default_w0();
  bool zero_initial_error = false;  // start the observer on the plant (w0 = ũ0)
  bool simulate = true;

  static Profile default_u_tilde0();
  static Profile default_w0();
};

struct Example32Report {
  Example32Params params;
  ObserverDesign design;
  SmallGainReport gain;
  double omega_conservative = 0.0;        // looser closed form, never below gain.omega
  double h_max = 0.0;              // max_diameter at the chosen ω
  double kappa = 0.0;
  double theta = 0.0;              // max of the three IOS coefficients
  std::optional<Trajectory> trajectory;
  std::vector<double> sup_t;
  std::vector<double> sup_error;   // max_x |û − u|
  std::optional<DecayFit> fit;
  std::size_t sup_bound_violations = 0;
  double worst_sup_ratio = 0.0;    // max sup_error / (Θ e^{−κt}‖e[0]‖ + Θ sup|ξ|)
  nlohmann::json to_json() const;
};

Example32Report run_example_32(const Example32Params& params);

double example32_omega_conservative(double p, double q, double h, double omega);

}  // namespace sdobs

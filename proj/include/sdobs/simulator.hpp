#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sdobs/grid.hpp"
#include "sdobs/nonlinearity.hpp"
#include "sdobs/observer_design.hpp"
#include "sdobs/schedule.hpp"
#include "sdobs/signals.hpp"
#include "sdobs/sturm_liouville.hpp"

namespace sdobs {

struct Scenario {
  ObserverDesign design;
  ObserverVariant variant = ObserverVariant::Predictor;
  NonlinearTerm nonlinearity;
  Disturbances disturbances;
  ScheduleSpec schedule;
  Profile u0;
  Profile w0;
  std::size_t nodes = 201;
  double dt = 0.0;            // 0: min(dx, h/20)
  double horizon = 1.0;
  std::size_t snapshot_every = 10;
  bool store_fields = true;
};

/// Scalars recorded after every accepted step (and at t = 0).
struct StepRecord {
  double t = 0.0;
  double error_l2 = 0.0;
  double error_sup = 0.0;
  double mismatch_l2 = 0.0;        // ‖v[t] − ṽ[t]‖
  std::vector<double> noise_abs;   // |ξ_i(t)|
  std::vector<double> zeta;        // right-continuous ζ_i(t) (predictor)
  bool sample = false;
};

/// Full-field snapshot. Every sample instant is a snapshot.
struct Snapshot {
  double t = 0.0;
  bool sample = false;
  Vec u;
  Vec w;
  std::vector<double> eps_left;   // ε_i(t⁻)
  std::vector<double> eps_right;  // ε_i(t)
};

struct SampleEvent {
  double t = 0.0;
  std::vector<double> y;
  std::vector<double> noise;      // ξ_i(t_j)
  std::vector<double> zeta_left;  // ζ before the reset
  std::vector<double> zeta;       // ζ after the reset (predictor) or held innovation (ZOH)
};

struct Trajectory {
  Grid grid{2};
  double dt = 0.0;
  ObserverVariant variant = ObserverVariant::Predictor;
  std::vector<StepRecord> steps;
  std::vector<Snapshot> snapshots;
  std::vector<SampleEvent> events;
  std::vector<double> sample_times;
  std::size_t rejected_checks = 0;
  bool infeasible_warning = false;  // scenario ran although Ω ≥ 1
  double max_boundary_residual = 0.0;
};

/// Plant and observer state bound to one grid.
struct PlantState {
  Vec u;
};

struct ObserverState {
  Vec w;
  std::vector<double> zeta;              // predictor
  std::vector<double> held_innovation;   // ZOH
};

/// One grid-bound model: discrete operator, nonlinearity and sampled channel data.
class CoSimulation {
 public:
  explicit CoSimulation(const Scenario& scenario);
  ~CoSimulation();

  const Grid& grid() const { return grid_; }
  const DiscreteSL& op() const { return op_; }

  /// y_i = ξ_i + offset_i + ⟨k_i, u⟩.
  std::vector<double> measure(const Vec& u, double t) const;
  /// ζ_i = y_i − offset_i − ⟨k_i − c_i, w⟩.
  std::vector<double> reset_predictor(const std::vector<double>& y, const Vec& w,
                                      double t) const;
  /// ⟨k_i, w⟩ − (y_i − offset_i).
  std::vector<double> zoh_innovation(const std::vector<double>& y, const Vec& w,
                                     double t) const;

  void step_plant(PlantState& state, double t, double dt) const;
  void step_observer_predictor(ObserverState& state, double t, double dt) const;
  void step_observer_zoh(ObserverState& state, double t, double dt) const;

  /// ε_i of the error analysis: ζ_i − ⟨c_i, u⟩ (predictor), ⟨c_i, w − u⟩ (ZOH).
  std::vector<double> estimation_residuals(const Vec& u, const ObserverState& obs) const;

  const std::vector<Vec>& kernels() const { return kernels_; }
  const std::vector<Vec>& approximants() const { return approximants_; }
  const std::vector<Vec>& injections() const { return injections_; }
  const DiscreteNonlinearity& nonlinearity() const { return f_; }
  Vec v(double t) const { return v_.at(t); }
  Vec v_tilde(double t) const { return v_tilde_.at(t); }

 private:
  struct Factor;
  const Factor& factor(double dt) const;
  Vec solve(const Factor& lu, const Vec& rhs) const;

  Scenario scenario_;
  Grid grid_;
  DiscreteSL op_;
  DiscreteNonlinearity f_;
  SampledField v_, v_tilde_;
  std::vector<Vec> kernels_, approximants_, injections_, adjoint_rows_;
  mutable std::vector<std::shared_ptr<Factor>> factors_;
};

Trajectory simulate(const Scenario& scenario);

}  // namespace sdobs

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdobs/nonlinearity.hpp"
#include "sdobs/observer_design.hpp"
#include "sdobs/schedule.hpp"
#include "sdobs/signals.hpp"
#include "sdobs/simulator.hpp"
#include "sdobs/sturm_liouville.hpp"

namespace sdobs {

constexpr int kSchemaVersion = 1;

/// Parameter varied by the `sweep` subcommand.
struct SweepSpec {
  std::string parameter = "h";   // h, kappa, omega, Q or noise
  std::vector<double> values;
  bool simulate = false;
  std::size_t workers = 0;       // 0: hardware concurrency
};

/// A scenario file after validation. Everything is plain data; the basis, the
/// design and the Scenario are built on demand.
struct RunConfig {
  nlohmann::json source;  // the document after overrides

  SLProblem problem;
  std::size_t basis_modes = 200;
  std::size_t basis_nodes = 1001;

  std::size_t N = 1;
  std::vector<OutputChannel> channels;
  std::optional<Mat> L;
  std::optional<Vec> targets;
  double Q = 2.0;
  double sigma_fraction = 0.9;
  std::size_t J_max = 200;

  NonlinearTerm nonlinearity;
  Disturbances disturbances;
  ScheduleSpec schedule;
  ObserverVariant variant = ObserverVariant::Predictor;

  std::size_t nodes = 201;
  double dt = 0.0;
  double horizon = 1.0;
  std::size_t snapshot_every = 10;
  bool write_snapshots = false;

  Profile u0;
  Profile w0;

  double omega = 0.0;                 // κ = ω μ unless kappa is given
  std::optional<double> kappa;
  std::size_t lyapunov_modes = 0;     // 0: skip the Lyapunov oracle
  double slack = 0.02;

  std::optional<SweepSpec> sweep;
};

/// Applies `key.path=value` overrides. An existing key keeps its JSON type
/// (numbers may switch between integer and float); a new key must sit under an
/// existing object. Errors are ConfigError with the dotted path in the message.
void apply_override(nlohmann::json& document, const std::string& assignment);

/// Parses and validates a scenario document (schema_version 1).
RunConfig parse_config(const nlohmann::json& document, const std::string& base_dir = ".");

/// Reads a file, applies overrides and the optional seed, then parses.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {},
                      std::optional<std::uint64_t> seed = std::nullopt);

SpectralBasis build_basis(const RunConfig& config);
/// The discrete Lipschitz constant of the nonlinearity on the simulation grid
/// enters the design.
ObserverDesign build_design(const RunConfig& config, const SpectralBasis& basis);
Scenario build_scenario(const RunConfig& config, const ObserverDesign& design);
double design_kappa(const RunConfig& config, const ObserverDesign& design);

}  // namespace sdobs

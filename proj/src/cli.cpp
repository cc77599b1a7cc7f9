#include "sdobs/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sdobs/analysis.hpp"
#include "sdobs/config.hpp"
#include "sdobs/errors.hpp"
#include "sdobs/examples.hpp"
#include "sdobs/io.hpp"

namespace sdobs {

namespace {

using json = nlohmann::json;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool strict = false;
};

std::string out_path(const Common& c, const std::string& name) {
  return (std::filesystem::path(c.out) / name).string();
}

RunConfig load(const Common& c) {
  if (c.config.empty()) throw Error(ErrorCode::ConfigError, "--config is required for this command");
  return load_config(c.config, c.overrides, c.seed);
}

double schedule_diameter(const RunConfig& config) { return make_schedule(config.schedule).diameter(); }

json fit_to_json(const std::optional<DecayFit>& fit) {
  if (!fit) return nullptr;
  return {{"rate", fit->rate}, {"half_width", fit->half_width}, {"points", fit->points}};
}

std::optional<DecayFit> try_fit(const Trajectory& traj, double t_start, double t_end) {
  std::vector<double> t, e;
  for (const auto& r : traj.steps) {
    t.push_back(r.t);
    e.push_back(r.error_l2);
  }
  try {
    return fit_decay_rate(t, e, t_start, t_end);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::DecayedToFloor) throw;
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------

int cmd_design(const Common& c, std::ostream& out) {
  const RunConfig config = load(c);
  const SpectralBasis basis = build_basis(config);
  const ObserverDesign design = build_design(config, basis);
  const CertificateCheck cert = check_certificate(design.A, design.P, design.sigma);

  json source = {{"schema_version", kSchemaVersion}};
  for (const char* key : {"problem", "basis", "design"})
    if (config.source.contains(key)) source[key] = config.source.at(key);
  const json doc = {{"source", source},
                    {"design", design_to_json(design, "basis.csv")},
                    {"certificate", certificate_to_json(cert)}};

  out << "N = " << design.N << ", outputs = " << design.outputs() << '\n';
  out << "sigma = " << format_double(design.sigma) << '\n';
  out << "mu = " << format_double(design.mu) << '\n';
  out << "g_tilde = " << format_double(design.g_tilde) << '\n';
  out << "K = " << format_double(design.K) << '\n';
  out << "certificate: abscissa " << format_double(cert.abscissa) << ", dissipation "
      << format_double(cert.dissipation) << ", lower bound " << format_double(cert.lower_bound)
      << (cert.holds() ? " (holds)" : " (FAILS)") << '\n';
  if (design.K_truncation_warning) out << "warning: K is not converged at J_max\n";

  if (!c.out.empty()) {
    write_text_file(out_path(c, "design.json"), doc.dump(2) + "\n");
    std::ostringstream csv;
    write_basis_csv(csv, basis);
    write_text_file(out_path(c, "basis.csv"), csv.str());
  }
  if (c.strict && !cert.holds()) return kExitInvariantViolation;
  return kExitOk;
}

int cmd_check_gain(const Common& c, std::ostream& out) {
  const RunConfig config = load(c);
  const SpectralBasis basis = build_basis(config);
  const ObserverDesign design = build_design(config, basis);
  const double h = schedule_diameter(config);
  const double kappa = design_kappa(config, design);
  const SmallGainReport report = small_gain(design, config.variant, h, kappa);
  const double h_max = max_diameter(design, kappa, config.variant);
  out << "variant = " << to_string(config.variant) << '\n';
  out << "h = " << format_double(h) << '\n';
  out << "kappa = " << format_double(kappa) << '\n';
  out << "Omega = " << format_double(report.omega) << '\n';
  out << "feasible = " << (report.feasible ? "true" : "false") << '\n';
  out << "max_diameter = " << format_double(h_max) << '\n';
  if (!c.out.empty()) {
    json doc = small_gain_to_json(report);
    doc["max_diameter"] = std::isfinite(h_max) ? json(h_max) : json("inf");
    write_text_file(out_path(c, "gain.json"), doc.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_simulate(const Common& c, std::ostream& out) {
  const RunConfig config = load(c);
  const SpectralBasis basis = build_basis(config);
  const ObserverDesign design = build_design(config, basis);
  const Scenario scenario = build_scenario(config, design);
  const double h = schedule_diameter(config);
  const double kappa = design_kappa(config, design);
  const SmallGainReport gain = small_gain(design, config.variant, h, kappa);
  const Trajectory traj = simulate(scenario);

  bool violated = false;
  json report = {{"small_gain", small_gain_to_json(gain)},
                 {"infeasible_warning", traj.infeasible_warning},
                 {"steps", traj.steps.size()},
                 {"dt", traj.dt},
                 {"error_initial", traj.steps.front().error_l2},
                 {"error_final", traj.steps.back().error_l2},
                 {"max_boundary_residual", traj.max_boundary_residual},
                 {"verdict", to_string(convergence_verdict(traj))},
                 {"fit", fit_to_json(try_fit(traj, 3.0 * h, config.horizon))}};
  std::optional<IOSBoundCheck> bound;
  if (gain.feasible) {
    bound = check_ios_bound(traj, gain, config.slack);
    report["ios_bound"] = {{"violations", bound->violations}, {"worst_ratio", bound->worst_ratio}};
    violated = violated || bound->violations > 0;
  }
  if (config.lyapunov_modes > 0) {
    const LyapunovTrace trace = lyapunov_oracle(traj, scenario, basis, config.lyapunov_modes);
    const bool holds = trace.holds(config.slack);
    report["lyapunov"] = {{"worst_norm_ratio", trace.worst_norm_ratio},
                          {"worst_decay_ratio", trace.worst_decay_ratio},
                          {"V0_ratio", trace.V0_ratio},
                          {"holds", holds}};
    // Same trace against the rates of an explicit half-σ split, for comparison.
    try {
      const DissipationRates split = split_rates(design, 0.5 * design.sigma);
      const LyapunovTrace alt = lyapunov_oracle(traj, scenario, basis, config.lyapunov_modes, split);
      report["lyapunov"]["split"] = {{"mu", split.mu},
                                     {"g_tilde", split.g_tilde},
                                     {"worst_decay_ratio", alt.worst_decay_ratio}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidArgument) throw;
    }
    violated = violated || (gain.feasible && !holds);
  }
  if (traj.infeasible_warning) out << "warning: small-gain condition fails (Omega >= 1); ran anyway\n";
  out << "Omega = " << format_double(gain.omega) << '\n';
  out << "error: initial " << format_double(traj.steps.front().error_l2) << ", final "
      << format_double(traj.steps.back().error_l2) << '\n';
  if (bound) out << "IOS bound violations = " << bound->violations << '\n';

  if (!c.out.empty()) {
    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    write_text_file(out_path(c, "trajectory.csv"), csv.str());
    write_text_file(out_path(c, "report.json"), report.dump(2) + "\n");
    if (bound) {
      std::ostringstream margin;
      write_margin_csv(margin, *bound, traj);
      write_text_file(out_path(c, "margin.csv"), margin.str());
    }
    if (config.write_snapshots) write_snapshot_csvs(out_path(c, "snapshots"), traj);
  } else {
    write_trajectory_csv(out, traj);
  }
  return c.strict && violated ? kExitInvariantViolation : kExitOk;
}

struct SweepRow {
  double h = 0.0, kappa = 0.0, omega = 0.0;
  bool feasible = false;
  std::optional<DecayFit> fit;
  std::optional<double> worst_ratio;
  std::size_t violations = 0;
  std::optional<double> final_error;
  std::string error;
};

int cmd_sweep(const Common& c, std::ostream& out) {
  const RunConfig config = load(c);
  if (!config.sweep) throw Error(ErrorCode::ConfigError, "sweep: missing required section");
  const SweepSpec& sweep = *config.sweep;
  const SpectralBasis basis = build_basis(config);
  const ObserverDesign base_design = build_design(config, basis);

  std::vector<SweepRow> rows(sweep.values.size());
  const auto evaluate = [&](std::size_t index) {
    SweepRow& row = rows[index];
    const double value = sweep.values[index];
    RunConfig local = config;
    ObserverDesign design = base_design;
    try {
      if (sweep.parameter == "h") {
        local.schedule.h = value;
        local.schedule.h_max = value;
        if (local.schedule.h_min > value) local.schedule.h_min = value;
      } else if (sweep.parameter == "kappa") {
        local.kappa = value;
      } else if (sweep.parameter == "omega") {
        local.kappa.reset();
        local.omega = value;
      } else if (sweep.parameter == "Q") {
        design = with_Q(design, value);
      } else if (sweep.parameter == "noise") {
        for (auto& xi : local.disturbances.xi) {
          const double b = xi.bound();
          xi = b > 0.0 ? xi.scaled(value / b) : TimeSignal::constant(value);
        }
        if (local.disturbances.xi.empty()) local.disturbances.xi.assign(design.outputs(), TimeSignal::constant(value));
      }
      row.h = schedule_diameter(local);
      row.kappa = design_kappa(local, design);
      const SmallGainReport gain = small_gain(design, local.variant, row.h, row.kappa);
      row.omega = gain.omega;
      row.feasible = gain.feasible;
      if (sweep.simulate) {
        const Trajectory traj = simulate(build_scenario(local, design));
        row.fit = try_fit(traj, 3.0 * row.h, local.horizon);
        row.final_error = traj.steps.back().error_l2;
        if (gain.feasible) {
          const IOSBoundCheck check = check_ios_bound(traj, gain, local.slack);
          row.worst_ratio = check.worst_ratio;
          row.violations = check.violations;
        }
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
  };

  const std::size_t workers = std::max<std::size_t>(
      1, std::min<std::size_t>(sweep.workers ? sweep.workers : std::thread::hardware_concurrency(), rows.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) evaluate(i);
    });
  for (auto& t : pool) t.join();

  // Long format, ordered by grid index.
  std::ostringstream csv;
  csv << "index,parameter,value,quantity,result\n";
  const auto emit = [&](std::size_t i, const std::string& quantity, const std::string& result) {
    csv << i << ',' << sweep.parameter << ',' << format_double(sweep.values[i]) << ',' << quantity << ','
        << result << '\n';
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    if (!r.error.empty()) {
      emit(i, "error", '"' + r.error + '"');
      continue;
    }
    emit(i, "h", format_double(r.h));
    emit(i, "kappa", format_double(r.kappa));
    emit(i, "Omega", format_double(r.omega));
    emit(i, "feasible", r.feasible ? "1" : "0");
    if (r.fit) {
      emit(i, "rate", format_double(r.fit->rate));
      emit(i, "rate_half_width", format_double(r.fit->half_width));
    }
    if (r.final_error) emit(i, "final_error", format_double(*r.final_error));
    if (r.worst_ratio) {
      emit(i, "worst_ratio", format_double(*r.worst_ratio));
      emit(i, "violations", std::to_string(r.violations));
    }
  }
  if (c.out.empty())
    out << csv.str();
  else
    write_text_file(out_path(c, "sweep.csv"), csv.str());
  const bool violated = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.violations > 0; });
  return c.strict && violated ? kExitInvariantViolation : kExitOk;
}

// ---------------------------------------------------------------------------

struct Example31Flags {
  double p = 1.0, h = 0.1, omega = 0.0, mismatch = 0.0, horizon = 0.0;
  double noise_amplitude = 0.0, noise_frequency = 1.0;
  std::string variant = "predictor", schedule = "uniform", noise_kind = "sinusoid";
  std::size_t nodes = 201;
  bool no_simulate = false;
};

TimeSignal make_noise(const std::string& kind, double amplitude, double frequency, std::uint64_t seed) {
  if (amplitude == 0.0) return {};
  if (kind == "sinusoid") return TimeSignal::sinusoid(amplitude, frequency);
  if (kind == "constant") return TimeSignal::constant(amplitude);
  if (kind == "random") return TimeSignal::random(amplitude, seed);
  throw Error(ErrorCode::ConfigError, "--noise-kind: expected sinusoid, constant or random");
}

int cmd_example31(const Common& c, const Example31Flags& f, std::ostream& out) {
  Example31Params params;
  params.p = f.p;
  params.h = f.h;
  params.omega = f.omega;
  params.variant = variant_from_string(f.variant);
  if (f.schedule == "uniform")
    params.schedule = ScheduleSpec::Kind::Uniform;
  else if (f.schedule == "random")
    params.schedule = ScheduleSpec::Kind::RandomBounded;
  else
    throw Error(ErrorCode::ConfigError, "--schedule: expected uniform or random");
  params.seed = c.seed.value_or(1);
  params.noise = make_noise(f.noise_kind, f.noise_amplitude, f.noise_frequency, params.seed);
  params.mismatch = f.mismatch;
  params.horizon = f.horizon;
  params.nodes = f.nodes;
  params.simulate = !f.no_simulate;
  const Example31Report report = run_example_31(params);
  const json doc = report.to_json();
  out << doc.dump(2) << '\n';
  if (!c.out.empty()) {
    write_text_file(out_path(c, "example31.json"), doc.dump(2) + "\n");
    if (report.trajectory) {
      std::ostringstream csv;
      write_trajectory_csv(csv, *report.trajectory);
      write_text_file(out_path(c, "trajectory.csv"), csv.str());
      if (report.bound) {
        std::ostringstream margin;
        write_margin_csv(margin, *report.bound, *report.trajectory);
        write_text_file(out_path(c, "margin.csv"), margin.str());
      }
    }
  }
  const bool violated = report.bound && report.bound->violations > 0;
  return c.strict && violated ? kExitInvariantViolation : kExitOk;
}

struct Example32Flags {
  double p = 1.0, q = 0.0, h = 0.0, omega = 0.5, noise = 0.0, horizon = 5.0;
  std::size_t nodes = 201;
  bool zero_initial_error = false, no_simulate = false;
};

int cmd_example32(const Common& c, const Example32Flags& f, std::ostream& out) {
  Example32Params params;
  params.p = f.p;
  params.q = f.q;
  params.h = f.h;
  params.omega = f.omega;
  params.noise = f.noise != 0.0 ? TimeSignal::constant(f.noise) : TimeSignal();
  params.horizon = f.horizon;
  params.nodes = f.nodes;
  params.zero_initial_error = f.zero_initial_error;
  params.simulate = !f.no_simulate;
  const Example32Report report = run_example_32(params);
  const json doc = report.to_json();
  out << doc.dump(2) << '\n';
  if (!c.out.empty()) {
    write_text_file(out_path(c, "example32.json"), doc.dump(2) + "\n");
    std::ostringstream csv;
    csv << "t,sup_error\n";
    for (std::size_t k = 0; k < report.sup_t.size(); ++k)
      csv << format_double(report.sup_t[k]) << ',' << format_double(report.sup_error[k]) << '\n';
    write_text_file(out_path(c, "sup_error.csv"), csv.str());
  }
  return c.strict && report.sup_bound_violations > 0 ? kExitInvariantViolation : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampled-data observers for 1-D parabolic PDEs"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "Scenario JSON file");
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--seed", common.seed, "Seed for random schedules and noise");
  app.add_option("--set", common.overrides, "Override a config field: key.path=value (repeatable)");
  app.add_flag("--strict", common.strict, "Exit with status 3 when an invariant is violated");
  app.fallthrough();

  auto* design = app.add_subcommand("design", "Build the observer design and its certificate");
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate plant and observer, check the estimates");
  auto* sweep = app.add_subcommand("sweep", "Vary one parameter over a grid");
  auto* check = app.add_subcommand("check-gain", "Evaluate the small-gain quantity only");

  Example31Flags f31;
  auto* ex31 = app.add_subcommand("example31", "Heat equation with a moment output");
  ex31->set_help_flag("--help", "Print this help message and exit");
  ex31->add_option("--p", f31.p, "Diffusion coefficient");
  ex31->add_option("--h", f31.h, "Sampling period (upper diameter)");
  ex31->add_option("--omega", f31.omega, "Rate parameter in [0, 1)");
  ex31->add_option("--variant", f31.variant, "predictor or zoh");
  ex31->add_option("--schedule", f31.schedule, "uniform or random");
  ex31->add_option("--noise-amplitude", f31.noise_amplitude, "Measurement noise amplitude");
  ex31->add_option("--noise-kind", f31.noise_kind, "sinusoid, constant or random");
  ex31->add_option("--noise-frequency", f31.noise_frequency, "Angular frequency of sinusoidal noise");
  ex31->add_option("--mismatch", f31.mismatch, "Constant input mismatch between observer and plant");
  ex31->add_option("--horizon", f31.horizon, "Final time (default 200/(p pi^2))");
  ex31->add_option("--nodes", f31.nodes, "Grid nodes");
  ex31->add_flag("--no-simulate", f31.no_simulate, "Report the constants only");

  Example32Flags f32;
  auto* ex32 = app.add_subcommand("example32", "Reaction-diffusion with a boundary output");
  ex32->set_help_flag("--help", "Print this help message and exit");
  ex32->add_option("--p", f32.p, "Diffusion coefficient");
  ex32->add_option("--q", f32.q, "Reaction coefficient");
  ex32->add_option("--h", f32.h, "Sampling period (default half the admissible diameter)");
  ex32->add_option("--omega", f32.omega, "Rate parameter in [0, 1)");
  ex32->add_option("--noise", f32.noise, "Constant measurement noise");
  ex32->add_option("--horizon", f32.horizon, "Final time");
  ex32->add_option("--nodes", f32.nodes, "Grid nodes");
  ex32->add_flag("--zero-initial-error", f32.zero_initial_error, "Start the observer on the plant");
  ex32->add_flag("--no-simulate", f32.no_simulate, "Report the constants only");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (design->parsed()) return cmd_design(common, out);
    if (simulate_cmd->parsed()) return cmd_simulate(common, out);
    if (sweep->parsed()) return cmd_sweep(common, out);
    if (check->parsed()) return cmd_check_gain(common, out);
    if (ex31->parsed()) return cmd_example31(common, f31, out);
    if (ex32->parsed()) return cmd_example32(common, f32, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitConfigError : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace sdobs

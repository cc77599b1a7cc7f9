#include "sdobs/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdobs/errors.hpp"

namespace sdobs {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string join(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

const char* type_name(const json& j) { return j.type_name(); }

// Accessors that carry the dotted path of the field being read.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node at(const std::string& key) const {
    if (!has(key)) fail(join(path_, key), "missing required field");
    return {j_.at(key), join(path_, key)};
  }

  void expect_object() const {
    if (!j_.is_object()) fail(path_, std::string("expected an object, found ") + type_name(j_));
  }

  void allow_keys(std::initializer_list<const char*> keys) const {
    expect_object();
    for (const auto& [k, v] : j_.items()) {
      bool known = false;
      for (const char* allowed : keys) known = known || k == allowed;
      if (!known) fail(join(path_, k), "unknown field");
    }
  }

  double number() const {
    if (!j_.is_number()) fail(path_, std::string("expected a number, found ") + type_name(j_));
    return j_.get<double>();
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? at(key).number() : fallback;
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    if (!n.j_.is_number_integer() || n.j_.get<long long>() < 0)
      fail(n.path_, "expected a non-negative integer");
    return n.j_.get<std::size_t>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    if (!n.j_.is_number_unsigned() && !(n.j_.is_number_integer() && n.j_.get<long long>() >= 0))
      fail(n.path_, "expected a non-negative integer");
    return n.j_.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    if (!n.j_.is_boolean()) fail(n.path_, "expected true or false");
    return n.j_.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Node n = at(key);
    if (!n.j_.is_string()) fail(n.path_, "expected a string");
    return n.j_.get<std::string>();
  }

  std::vector<double> numbers() const {
    if (!j_.is_array()) fail(path_, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j_.size(); ++i) out.push_back(Node(j_[i], join(path_, i)).number());
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

// Library parsers report their own messages; prefix the config path.
template <class F>
auto with_path(const std::string& path, F&& parse) -> decltype(parse()) {
  try {
    return parse();
  } catch (const Error& e) {
    fail(path, e.what());
  } catch (const json::exception& e) {
    fail(path, e.what());
  }
}

Profile profile_at(const Node& n) {
  return with_path(n.path(), [&] { return Profile::from_json(n.raw()); });
}

RobinBC robin_at(const Node& n) {
  n.allow_keys({"a", "b", "type"});
  const std::string type = n.text("type", "");
  if (type == "dirichlet") return {1.0, 0.0};
  if (type == "neumann") return {0.0, 1.0};
  if (!type.empty() && type != "robin") fail(join(n.path(), "type"), "expected dirichlet, neumann or robin");
  return {n.number("a", 0.0), n.number("b", 1.0)};
}

Mat matrix_at(const Node& n) {
  const json& j = n.raw();
  if (!j.is_array() || j.empty()) fail(n.path(), "expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(Node(j[i], join(n.path(), i)).numbers());
  const std::size_t cols = rows.front().size();
  Mat M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) fail(join(n.path(), i), "rows differ in length");
    for (std::size_t k = 0; k < cols; ++k)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return M;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

json parse_literal(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;  // bare words are strings
  }
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

}  // namespace

void apply_override(json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::ConfigError, "override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const json value = parse_literal(assignment.substr(eq + 1));

  json* node = &document;
  std::string path;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> keys;
  while (std::getline(parts, part, '.')) keys.push_back(part);
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const std::string& name = keys[k];
    if (name.empty()) fail(key, "empty path component");
    const bool last = k + 1 == keys.size();
    if (node->is_array()) {
      std::size_t index = 0;
      try {
        index = std::stoul(name);
      } catch (const std::exception&) {
        fail(join(path, name), "array index expected");
      }
      if (index >= node->size()) fail(join(path, index), "index out of range");
      path = join(path, index);
      node = &(*node)[index];
    } else if (node->is_object()) {
      path = join(path, name);
      if (!node->contains(name)) {
        if (!last) fail(path, "no such section");
        (*node)[name] = value;
        return;
      }
      node = &(*node)[name];
    } else {
      fail(path, "cannot descend into a " + std::string(node->type_name()));
    }
    if (last) {
      if (!same_kind(*node, value))
        fail(path, std::string("expected ") + node->type_name() + ", got " + value.type_name());
      *node = value;
    }
  }
}

RunConfig parse_config(const json& document, const std::string& base_dir) {
  const Node root(document, "");
  root.allow_keys({"schema_version", "seed", "problem", "basis", "design", "design_ref", "nonlinearity",
                   "disturbances", "schedule", "grid", "time", "initial", "variant", "analysis",
                   "sweep", "output", "description"});
  if (!root.has("schema_version")) fail("schema_version", "missing required field");
  if (root.at("schema_version").number() != kSchemaVersion)
    fail("schema_version", "unsupported version (expected 1)");

  RunConfig c;
  c.source = document;
  const std::uint64_t seed = root.seed("seed", 0);

  // A design reference supplies problem, basis and design sections that the
  // document itself leaves out.
  json referenced;
  if (root.has("design_ref")) {
    const std::string ref = root.text("design_ref", "");
    const auto path = std::filesystem::path(base_dir) / ref;
    referenced = with_path("design_ref", [&] { return read_json_file(path.string()); });
    if (referenced.contains("source")) referenced = referenced.at("source");
  }
  const auto section = [&](const std::string& key) -> std::optional<Node> {
    if (root.has(key)) return root.at(key);
    if (referenced.is_object() && referenced.contains(key))
      return Node(referenced.at(key), "design_ref:" + key);
    return std::nullopt;
  };

  // problem
  const auto problem = section("problem");
  if (!problem) fail("problem", "missing required section");
  problem->allow_keys({"p", "q", "left", "right"});
  c.problem.p = problem->number("p", 1.0);
  if (problem->has("q")) c.problem.q = profile_at(problem->at("q"));
  if (problem->has("left")) c.problem.left = robin_at(problem->at("left"));
  if (problem->has("right")) c.problem.right = robin_at(problem->at("right"));
  with_path(problem->path(), [&] { c.problem.validate(); return 0; });

  if (const auto basis = section("basis")) {
    basis->allow_keys({"modes", "nodes"});
    c.basis_modes = basis->count("modes", c.basis_modes);
    c.basis_nodes = basis->count("nodes", c.basis_nodes);
  }

  // design
  const auto design = section("design");
  if (!design) fail("design", "missing required section (or design_ref)");
  design->allow_keys({"N", "channels", "L", "targets", "Q", "sigma_fraction", "J_max"});
  c.N = design->count("N", 1);
  if (c.N == 0) fail(join(design->path(), "N"), "must be at least 1");
  const Node channels = design->at("channels");
  if (!channels.raw().is_array() || channels.raw().empty())
    fail(channels.path(), "expected a non-empty array");
  for (std::size_t i = 0; i < channels.raw().size(); ++i) {
    const Node ch(channels.raw()[i], join(channels.path(), i));
    ch.allow_keys({"label", "kernel", "approximant"});
    c.channels.push_back({ch.text("label", "y" + std::to_string(i + 1)), profile_at(ch.at("kernel")),
                          profile_at(ch.at("approximant"))});
  }
  if (design->has("L")) {
    c.L = matrix_at(design->at("L"));
    if (static_cast<std::size_t>(c.L->rows()) != c.N || static_cast<std::size_t>(c.L->cols()) != c.channels.size())
      fail(join(design->path(), "L"), "expected N rows and one column per channel");
  }
  if (design->has("targets")) {
    const auto t = design->at("targets").numbers();
    c.targets = Eigen::Map<const Vec>(t.data(), static_cast<Eigen::Index>(t.size()));
  }
  if (!c.L && !c.targets) fail(design->path(), "needs either L or targets");
  c.Q = design->number("Q", c.Q);
  c.sigma_fraction = design->number("sigma_fraction", c.sigma_fraction);
  c.J_max = design->count("J_max", c.J_max);

  if (root.has("nonlinearity"))
    c.nonlinearity = with_path("nonlinearity", [&] { return NonlinearTerm::from_json(document.at("nonlinearity")); });

  if (root.has("disturbances")) {
    const Node d = root.at("disturbances");
    d.allow_keys({"v", "v_tilde", "xi", "output_offset"});
    if (d.has("v")) c.disturbances.v = with_path(d.at("v").path(), [&] { return FieldSignal::from_json(d.at("v").raw()); });
    if (d.has("v_tilde"))
      c.disturbances.v_tilde =
          with_path(d.at("v_tilde").path(), [&] { return FieldSignal::from_json(d.at("v_tilde").raw()); });
    const auto signals = [&](const std::string& key) {
      std::vector<TimeSignal> out;
      if (!d.has(key)) return out;
      const Node list = d.at(key);
      if (!list.raw().is_array()) fail(list.path(), "expected one entry per channel");
      for (std::size_t i = 0; i < list.raw().size(); ++i) {
        json spec = list.raw()[i];
        // Random signals without their own seed derive one from the run seed.
        if (spec.is_object() && spec.value("kind", "") == "random" && !spec.contains("seed"))
          spec["seed"] = seed + i;
        out.push_back(with_path(join(list.path(), i), [&] { return TimeSignal::from_json(spec); }));
      }
      return out;
    };
    c.disturbances.xi = signals("xi");
    c.disturbances.output_offset = signals("output_offset");
    if (c.disturbances.xi.size() > c.channels.size())
      fail(join(d.path(), "xi"), "more noise signals than output channels");
  }

  if (root.has("grid")) {
    const Node g = root.at("grid");
    g.allow_keys({"nodes"});
    c.nodes = g.count("nodes", c.nodes);
    if (c.nodes < 3) fail("grid.nodes", "need at least 3 nodes");
  }
  if (root.has("time")) {
    const Node t = root.at("time");
    t.allow_keys({"dt", "horizon", "snapshot_every"});
    c.dt = t.number("dt", c.dt);
    c.horizon = t.number("horizon", c.horizon);
    c.snapshot_every = t.count("snapshot_every", c.snapshot_every);
    if (!(c.horizon > 0.0)) fail("time.horizon", "must be positive");
    if (c.dt < 0.0) fail("time.dt", "must be non-negative");
  }

  if (root.has("schedule")) {
    json spec = document.at("schedule");
    if (!spec.is_object()) fail("schedule", "expected an object");
    if (!spec.contains("horizon")) spec["horizon"] = c.horizon;
    if (!spec.contains("seed")) spec["seed"] = seed;
    c.schedule = with_path("schedule", [&] { return ScheduleSpec::from_json(spec); });
  } else {
    c.schedule.horizon = c.horizon;
  }

  if (root.has("initial")) {
    const Node init = root.at("initial");
    init.allow_keys({"u0", "w0"});
    if (init.has("u0")) c.u0 = profile_at(init.at("u0"));
    if (init.has("w0")) c.w0 = profile_at(init.at("w0"));
  }

  if (root.has("variant"))
    c.variant = with_path("variant", [&] { return variant_from_string(root.text("variant", "")); });

  if (root.has("analysis")) {
    const Node a = root.at("analysis");
    a.allow_keys({"omega", "kappa", "lyapunov_modes", "slack"});
    c.omega = a.number("omega", c.omega);
    if (a.has("kappa")) c.kappa = a.at("kappa").number();
    c.lyapunov_modes = a.count("lyapunov_modes", c.lyapunov_modes);
    c.slack = a.number("slack", c.slack);
    if (!(c.omega >= 0.0 && c.omega < 1.0)) fail("analysis.omega", "must lie in [0, 1)");
  }

  if (root.has("output")) {
    const Node o = root.at("output");
    o.allow_keys({"snapshots"});
    c.write_snapshots = o.flag("snapshots", false);
  }

  if (root.has("sweep")) {
    const Node s = root.at("sweep");
    s.allow_keys({"parameter", "values", "simulate", "workers"});
    SweepSpec sweep;
    sweep.parameter = s.text("parameter", "h");
    if (sweep.parameter != "h" && sweep.parameter != "kappa" && sweep.parameter != "omega" &&
        sweep.parameter != "Q" && sweep.parameter != "noise")
      fail("sweep.parameter", "expected h, kappa, omega, Q or noise");
    sweep.values = s.at("values").numbers();
    sweep.simulate = s.flag("simulate", false);
    sweep.workers = s.count("workers", 0);
    c.sweep = sweep;
  }
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed) {
  json document = read_json_file(path);
  for (const auto& o : overrides) apply_override(document, o);
  if (seed) document["seed"] = *seed;
  const auto base = std::filesystem::path(path).parent_path();
  return parse_config(document, base.empty() ? "." : base.string());
}

SpectralBasis build_basis(const RunConfig& config) {
  return eigensystem(config.problem, config.basis_modes, config.basis_nodes);
}

ObserverDesign build_design(const RunConfig& config, const SpectralBasis& basis) {
  DesignSpec spec;
  spec.problem = config.problem;
  spec.basis = &basis;
  spec.N = config.N;
  spec.channels = config.channels;
  spec.L = config.L;
  spec.targets = config.targets;
  spec.Q = config.Q;
  spec.sigma_fraction = config.sigma_fraction;
  spec.J_max = config.J_max;
  const DiscreteNonlinearity f(config.nonlinearity, Grid(config.nodes));
  spec.lipschitz_R = f.lipschitz_R();
  spec.lipschitz_sup = f.lipschitz_sup();
  return design_observer(spec);
}

Scenario build_scenario(const RunConfig& config, const ObserverDesign& design) {
  Scenario s;
  s.design = design;
  s.variant = config.variant;
  s.nonlinearity = config.nonlinearity;
  s.disturbances = config.disturbances;
  s.schedule = config.schedule;
  s.u0 = config.u0;
  s.w0 = config.w0;
  s.nodes = config.nodes;
  s.dt = config.dt;
  s.horizon = config.horizon;
  s.snapshot_every = config.snapshot_every;
  return s;
}

double design_kappa(const RunConfig& config, const ObserverDesign& design) {
  return config.kappa ? *config.kappa : config.omega * design.mu;
}

}  // namespace sdobs

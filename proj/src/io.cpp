#include "sdobs/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdobs/errors.hpp"

namespace sdobs {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const std::size_t m = trajectory.steps.empty() ? 0 : trajectory.steps.front().zeta.size();
  out << "t,e_l2,e_sup";
  for (std::size_t i = 0; i < m; ++i) out << ",zeta_" << i + 1;
  out << ",sample\n";
  for (const auto& r : trajectory.steps) {
    out << format_double(r.t) << ',' << format_double(r.error_l2) << ',' << format_double(r.error_sup);
    for (std::size_t i = 0; i < m; ++i) out << ',' << format_double(i < r.zeta.size() ? r.zeta[i] : 0.0);
    out << ',' << (r.sample ? 1 : 0) << '\n';
  }
}

void write_snapshot_csvs(const std::string& directory, const Trajectory& trajectory) {
  std::filesystem::create_directories(directory);
  const Grid& grid = trajectory.grid;
  std::size_t index = 0;
  for (const auto& s : trajectory.snapshots) {
    if (s.u.size() == 0) continue;
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%05zu.csv", index++);
    std::ofstream out(std::filesystem::path(directory) / name);
    out << "# t," << format_double(s.t) << ",sample," << (s.sample ? 1 : 0) << '\n';
    out << "x,u,w,e\n";
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      out << format_double(grid.x(k)) << ',' << format_double(s.u(i)) << ',' << format_double(s.w(i)) << ','
          << format_double(s.w(i) - s.u(i)) << '\n';
    }
  }
}

void write_margin_csv(std::ostream& out, const IOSBoundCheck& check, const Trajectory& trajectory) {
  out << "t,rhs,error,margin\n";
  for (std::size_t k = 0; k < check.t.size() && k < trajectory.steps.size(); ++k)
    out << format_double(check.t[k]) << ',' << format_double(check.rhs[k]) << ','
        << format_double(trajectory.steps[k].error_l2) << ',' << format_double(check.margin[k]) << '\n';
}

void write_basis_csv(std::ostream& out, const SpectralBasis& basis) {
  out << "# eigenvalues";
  for (Eigen::Index n = 0; n < basis.eigenvalues.size(); ++n) out << ',' << format_double(basis.eigenvalues(n));
  out << "\nx";
  for (std::size_t n = 0; n < basis.size(); ++n) out << ",phi_" << n + 1;
  out << '\n';
  for (std::size_t k = 0; k < basis.grid.nodes(); ++k) {
    out << format_double(basis.grid.x(k));
    for (std::size_t n = 0; n < basis.size(); ++n)
      out << ',' << format_double(basis.modes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)));
    out << '\n';
  }
}

namespace {

std::vector<double> split_numbers(const std::string& line, std::size_t skip) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  std::size_t column = 0;
  while (std::getline(ss, cell, ',')) {
    if (column++ < skip) continue;
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "basis CSV: cannot read number '" + cell + "'");
    }
  }
  return out;
}

}  // namespace

SpectralBasis read_basis_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# eigenvalues", 0) != 0)
    throw Error(ErrorCode::ConfigError, "basis CSV: missing eigenvalue header");
  const auto eig = split_numbers(line, 1);
  if (!std::getline(in, line)) throw Error(ErrorCode::ConfigError, "basis CSV: missing column header");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_numbers(line, 1));
    if (rows.back().size() != eig.size())
      throw Error(ErrorCode::ConfigError, "basis CSV: row width does not match the eigenvalue count");
  }
  if (rows.size() < 3) throw Error(ErrorCode::ConfigError, "basis CSV: too few rows");
  SpectralBasis b;
  b.grid = Grid(rows.size());
  b.eigenvalues = Eigen::Map<const Vec>(eig.data(), static_cast<Eigen::Index>(eig.size()));
  b.modes.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(eig.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t n = 0; n < eig.size(); ++n)
      b.modes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) = rows[k][n];
  const double h = b.grid.dx();
  const Eigen::Index last = b.modes.rows() - 1;
  b.endpoint_derivatives.resize(b.modes.cols(), 2);
  for (Eigen::Index n = 0; n < b.modes.cols(); ++n) {
    const auto col = b.modes.col(n);
    b.endpoint_derivatives(n, 0) = (-3.0 * col(0) + 4.0 * col(1) - col(2)) / (2.0 * h);
    b.endpoint_derivatives(n, 1) = (3.0 * col(last) - 4.0 * col(last - 1) + col(last - 2)) / (2.0 * h);
  }
  return b;
}

nlohmann::json matrix_to_json(const Mat& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json small_gain_to_json(const SmallGainReport& report) {
  return {{"variant", to_string(report.variant)},
          {"h", report.h},
          {"kappa", report.kappa},
          {"gamma", report.gamma},
          {"omega", report.omega},
          {"feasible", report.feasible},
          {"coefficients",
           {{"initial", report.coefficients.initial},
            {"noise", report.coefficients.noise},
            {"mismatch", report.coefficients.mismatch}}}};
}

nlohmann::json certificate_to_json(const CertificateCheck& check) {
  return {{"abscissa", check.abscissa},
          {"dissipation", check.dissipation},
          {"lower_bound", check.lower_bound},
          {"holds", check.holds()}};
}

nlohmann::json design_to_json(const ObserverDesign& d, const std::string& basis_ref) {
  auto channels = nlohmann::json::array();
  for (std::size_t i = 0; i < d.channels.size(); ++i) {
    const auto& ch = d.channels[i];
    const auto& norms = d.gain_inputs.channels.at(i);
    channels.push_back({{"label", ch.label},
                        {"kernel", ch.kernel.to_json()},
                        {"approximant", ch.approximant.to_json()},
                        {"injection_norm", norms.injection},
                        {"residual_norm", norms.residual},
                        {"approximant_norm", norms.approximant},
                        {"kernel_norm", norms.kernel},
                        {"kernel_gap", norms.kernel_gap}});
  }
  std::vector<double> eig(d.eigenvalues.data(), d.eigenvalues.data() + d.eigenvalues.size());
  nlohmann::json j = {
      {"N", d.N},
      {"eigenvalues", eig},
      {"L", matrix_to_json(d.L)},
      {"A", matrix_to_json(d.A)},
      {"P", matrix_to_json(d.P)},
      {"c_coeffs_leading", matrix_to_json(d.c_coeffs.leftCols(std::min<Eigen::Index>(d.c_coeffs.cols(),
                                                                                    static_cast<Eigen::Index>(d.N + 1))))},
      {"sigma", d.sigma},
      {"K", d.K},
      {"K_tail_fraction", d.K_tail_fraction},
      {"K_truncation_warning", d.K_truncation_warning},
      {"Q", d.Q},
      {"H_Q", d.H_Q},
      {"mu", d.mu},
      {"g_tilde", d.g_tilde},
      {"LPL_norm", d.LPL_norm},
      {"P_norm", d.P_norm},
      {"lipschitz_R", d.lipschitz_R},
      {"lipschitz_sup", d.lipschitz_sup},
      {"channels", channels},
      {"cross", matrix_to_json(d.gain_inputs.cross)},
  };
  auto injection = nlohmann::json::array();
  for (const auto& l : d.injection) {
    const auto spec = l.to_json();
    injection.push_back(spec.is_null() ? nlohmann::json{{"basis_ref", basis_ref}} : spec);
  }
  j["injection"] = injection;
  if (!basis_ref.empty()) j["basis_ref"] = basis_ref;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << content;
}

}  // namespace sdobs

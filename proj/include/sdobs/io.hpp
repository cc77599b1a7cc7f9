#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdobs/analysis.hpp"
#include "sdobs/observer_design.hpp"
#include "sdobs/simulator.hpp"
#include "sdobs/sturm_liouville.hpp"

namespace sdobs {

/// Shortest text that round-trips: 17 significant digits.
std::string format_double(double value);

/// Columns t, e_l2, e_sup, zeta_1 … zeta_m, sample.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
/// One CSV per stored snapshot (x, u, w, e) in `directory`, named snapshot_00000.csv …
void write_snapshot_csvs(const std::string& directory, const Trajectory& trajectory);

/// Columns t, rhs, error, margin.
void write_margin_csv(std::ostream& out, const IOSBoundCheck& check, const Trajectory& trajectory);

/// Header block "# eigenvalues,λ₁,…", then rows x, φ₁ … φ_J.
void write_basis_csv(std::ostream& out, const SpectralBasis& basis);
/// Reads the format above back into a numeric basis.
SpectralBasis read_basis_csv(std::istream& in);

/// All scalars, matrices row-major, and the injection kernels by reference to a basis CSV.
nlohmann::json design_to_json(const ObserverDesign& design, const std::string& basis_ref = "");
nlohmann::json small_gain_to_json(const SmallGainReport& report);
nlohmann::json certificate_to_json(const CertificateCheck& check);
nlohmann::json matrix_to_json(const Mat& m);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace sdobs

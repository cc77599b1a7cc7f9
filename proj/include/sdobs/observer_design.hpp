#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sdobs/grid.hpp"
#include "sdobs/profile.hpp"
#include "sdobs/sturm_liouville.hpp"

namespace sdobs {

/// Non-local output y = ∫ k u dx, and the approximant c ∈ D used by the predictor.
struct OutputChannel {
  std::string label;
  Profile kernel;
  Profile approximant;
};

/// Checks that the approximant satisfies the problem's Robin conditions
/// (membership in D). Throws InvalidArgument otherwise.
void validate_channel(const OutputChannel& channel, const SLProblem& problem,
                      double tolerance = 1e-8);

enum class ObserverVariant { Predictor, ZOH };

std::string to_string(ObserverVariant variant);
ObserverVariant variant_from_string(const std::string& name);

/// Per-channel norms entering the small-gain condition.
struct ChannelNorms {
  double injection = 0.0;   // ‖l_i‖
  double residual = 0.0;    // ‖p c_i'' − q c_i‖
  double approximant = 0.0; // ‖c_i‖
  double kernel = 0.0;      // ‖k_i‖
  double kernel_gap = 0.0;  // ‖k_i − c_i‖
};

/// Everything the Ω formulas need, detached from the PDE data so a report can
/// recompute its own value.
struct SmallGainInputs {
  double lipschitz_R = 0.0;
  double mu = 0.0;
  double g_tilde = 0.0;
  double P_norm = 1.0;
  double Q = 2.0;
  std::vector<ChannelNorms> channels;
  Mat cross;  // cross(i, r) = |∫ c_i l_r dx|
};

struct ObserverDesign {
  SLProblem problem;
  std::size_t N = 1;
  std::vector<OutputChannel> channels;
  Vec eigenvalues;       // λ_1 … λ_{N+1}
  Mat L;                 // N × m
  Mat A;                 // N × N
  Mat c_coeffs;          // m × J_max
  std::vector<Profile> injection;  // l_i
  Mat P;
  double sigma = 0.0;
  double K = 0.0;
  double K_tail_fraction = 0.0;  // share of K² carried by the last 50 modes
  bool K_truncation_warning = false;
  double Q = 2.0;
  double H_Q = 0.0;
  double mu = 0.0;
  double g_tilde = 0.0;
  double LPL_norm = 0.0;  // |LᵀPL|
  double P_norm = 1.0;
  double lipschitz_R = 0.0;
  double lipschitz_sup = 0.0;
  SmallGainInputs gain_inputs;

  std::size_t outputs() const { return channels.size(); }
  double lambda_next() const { return eigenvalues(static_cast<Eigen::Index>(N)); }
};

/// A_{ij} = −λ_i δ_ij + Σ_r L_{i,r} c_{r,j}.
Mat build_A(const Vec& eigenvalues, const Mat& L, const Mat& c_coeffs);

/// l_i = Σ_n φ_n L_{n,i}; closed form when the basis is analytic.
std::vector<Profile> injection_kernels(const Mat& L, const SpectralBasis& basis);

struct CouplingReport {
  double K = 0.0;
  double last_decade_fraction = 0.0;  // last 50 modes' share of K²
  bool warning = false;               // share above 1%
};

/// √(Σ_i Σ_{j=N+1}^{J_max} c_{i,j}²) from the coefficient table.
CouplingReport coupling_constant_K(const Mat& c_coeffs, std::size_t N, std::size_t J_max);

struct LyapunovCertificate {
  Mat P;
  double sigma = 0.0;
};

/// σ = fraction·|max Re eig(A)|; P solves (A+σI)ᵀP + P(A+σI) = −I, rescaled so that
/// P ⪰ I. For N = 1 the fraction may be 1, giving P = [1] and σ = |A₁₁|.
LyapunovCertificate lyapunov_certificate(const Mat& A, double sigma_fraction);

double spectral_abscissa(const Mat& A);

/// Largest eigenvalues of PA + AᵀP + 2σP and of I − P, and the abscissa of A.
struct CertificateCheck {
  double abscissa = 0.0;
  double dissipation = 0.0;   // λ_max(PA + AᵀP + 2σP)
  double lower_bound = 0.0;   // 1 − λ_min(P)
  bool holds(double tol = 1e-10) const {
    return abscissa < 0.0 && dissipation <= tol && lower_bound <= tol;
  }
};
CertificateCheck check_certificate(const Mat& A, const Mat& P, double sigma);

/// Single-output gain placing the eigenvalues of −Λ + L cᵀ at `targets`.
/// Throws PlacementImpossible when some c_{1,n} vanishes or λ repeats.
Mat place_gain(const Vec& eigenvalues, const Vec& c_row, const Vec& targets);

struct DesignSpec {
  SLProblem problem;
  const SpectralBasis* basis = nullptr;
  std::size_t N = 1;
  std::vector<OutputChannel> channels;
  std::optional<Mat> L;          // user-supplied gain
  std::optional<Vec> targets;    // or eigenvalue targets (m = 1)
  double lipschitz_R = 0.0;
  double lipschitz_sup = 0.0;
  double Q = 2.0;
  double sigma_fraction = 0.9;   // ignored for N = 1 (σ = |A₁₁|)
  std::size_t J_max = 200;
};

ObserverDesign design_observer(const DesignSpec& spec);

/// Same design with a different Q; derived constants (H, μ, g̃) recomputed.
/// Throws QInfeasible when Q violates Q ≥ 2, Q > 2|LᵀPL|K²/(σλ_{N+1}).
ObserverDesign with_Q(const ObserverDesign& design, double Q);

/// P ← αP with σ fixed (α ≥ 1 preserves the certificate).
ObserverDesign with_scaled_P(const ObserverDesign& design, double alpha);

struct IosCoefficients {
  double initial = 0.0;               // √max(|P|, Q/2) / (1 − Ω)
  std::vector<double> noise;          // per channel
  double mismatch = 0.0;
};

struct SmallGainReport {
  ObserverVariant variant = ObserverVariant::Predictor;
  double h = 0.0;
  double kappa = 0.0;
  double gamma = 0.0;
  double omega = 0.0;
  bool feasible = false;
  IosCoefficients coefficients;
  SmallGainInputs inputs;
};

double gamma_coefficient(const SmallGainInputs& in, double kappa);
double omega_value(const SmallGainInputs& in, ObserverVariant variant, double h, double kappa);
IosCoefficients ios_coefficients(const SmallGainInputs& in, ObserverVariant variant, double h,
                                 double kappa, double omega);

SmallGainReport small_gain_predictor(const ObserverDesign& design, double h, double kappa);
SmallGainReport small_gain_zoh(const ObserverDesign& design, double h, double kappa);
SmallGainReport small_gain(const ObserverDesign& design, ObserverVariant variant, double h,
                           double kappa);

/// Root of Ω(h) = 1; +∞ when Ω stays below one for every h.
double max_diameter(const ObserverDesign& design, double kappa, ObserverVariant variant);

/// Ω-minimizing Q over the candidates; ties go to the smaller Q.
double select_Q(const ObserverDesign& design, const std::vector<double>& candidates, double h,
                double kappa, ObserverVariant variant);

constexpr double kInfiniteDiameter = std::numeric_limits<double>::infinity();

}  // namespace sdobs

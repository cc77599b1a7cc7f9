#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sdobs/grid.hpp"
#include "sdobs/profile.hpp"

namespace sdobs {

/// a·u + b·u' = 0 at one end of [0,1].
struct RobinBC {
  double a = 0.0;
  double b = 1.0;

  bool dirichlet() const { return b == 0.0; }
  bool neumann() const { return a == 0.0 && b != 0.0; }
};

/// B u = -p u'' + q(x) u on [0,1] with Robin conditions at both ends.
struct SLProblem {
  double p = 1.0;
  Profile q;
  RobinBC left;
  RobinBC right;

  /// Throws InvalidArgument unless p > 0 and each end has a² + b² > 0.
  void validate() const;
};

/// B u = -(1/r)(p u')' + (q/r) u with variable, strictly positive p and r.
struct GeneralSLProblem {
  Profile p;
  Profile r;
  Profile q;
  RobinBC left;
  RobinBC right;
};

/// First J eigenpairs of an SL operator sampled on a uniform grid.
/// Mode index n is zero-based in code (n = 0 is λ₁).
struct SpectralBasis {
  Grid grid{2};
  Vec eigenvalues;
  Mat modes;                  // nodes × J, trapezoid-orthonormal columns
  Mat endpoint_derivatives;   // J × 2: φ'(0), φ'(1)
  std::vector<Profile> closed_forms;  // empty for numeric bases

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  bool analytic() const { return !closed_forms.empty(); }

  /// Mode n as a profile: closed form when known, otherwise the grid samples.
  Profile mode_profile(std::size_t n) const;
  /// Samples of mode n on `target`; exact for analytic bases, restricted otherwise.
  Vec mode_on(const Grid& target, std::size_t n) const;
};

/// Tridiagonal finite-difference discretization of B with ghost-node Robin
/// treatment. Dirichlet end nodes are eliminated: their rows are zero and the
/// state is held at zero there.
class DiscreteSL {
 public:
  DiscreteSL(const SLProblem& problem, const Grid& grid);

  const Grid& grid() const { return grid_; }
  const Vec& lower() const { return lower_; }  // lower_[k] couples k to k-1
  const Vec& diag() const { return diag_; }
  const Vec& upper() const { return upper_; }  // upper_[k] couples k to k+1
  bool left_dirichlet() const { return left_dirichlet_; }
  bool right_dirichlet() const { return right_dirichlet_; }
  std::size_t first_active() const { return left_dirichlet_ ? 1 : 0; }
  std::size_t last_active() const { return grid_.nodes() - (right_dirichlet_ ? 2 : 1); }

  /// B_h u. Dirichlet components of the result are zero.
  Vec apply(const Vec& u) const;
  /// Zero the Dirichlet nodes of u in place.
  void enforce(Vec& u) const;
  /// |u| at Dirichlet nodes; Robin ends hold by construction of the ghost node.
  double boundary_residual(const Vec& u) const;

 private:
  Grid grid_;
  Vec lower_, diag_, upper_;
  bool left_dirichlet_;
  bool right_dirichlet_;
};

SpectralBasis analytic_eigensystem(const SLProblem& problem, std::size_t modes,
                                   std::size_t nodes = 1001);

SpectralBasis numeric_eigensystem(const SLProblem& problem, std::size_t modes,
                                  std::size_t nodes);

/// Analytic when the problem is one of the four standard constant-q cases,
/// numeric otherwise.
SpectralBasis eigensystem(const SLProblem& problem, std::size_t modes, std::size_t nodes);

struct H1Report {
  bool sign_condition = false;      // b0, a1, b1 ≥ 0 and a0 ≤ 0
  std::size_t first_mode = 0;       // M (one-based)
  std::vector<double> terms;        // λ_n⁻¹ max|φ_n|, n = M … M + J_tail
  double partial_sum = 0.0;
  double decay_exponent = 0.0;      // fitted log-log slope of the second half of terms
  bool convergent = false;          // decay at least like n⁻² (slope ≤ -1.9)
};

/// M is one-based as in the sum Σ_{n ≥ M}. Throws InvalidM when λ_M ≤ 0.
H1Report check_h1(const SLProblem& problem, const SpectralBasis& basis, std::size_t M,
                  std::size_t tail);

/// Forward/inverse map between the original coordinate x and the normal-form
/// coordinate ξ, plus the amplitude factor (r p)^{1/4}.
class CoordinateMap {
 public:
  CoordinateMap(Vec x, Vec xi, Vec amplitude);

  double forward(double x) const;
  double inverse(double xi) const;
  double amplitude(double x) const;

  const Vec& x_samples() const { return x_; }
  const Vec& xi_samples() const { return xi_; }

 private:
  Vec x_, xi_, amplitude_;
};

struct LiouvilleResult {
  SLProblem problem;  // constant diffusion ε, reaction and Robin data in ξ
  CoordinateMap map;
  double epsilon = 0.0;
};

LiouvilleResult liouville_transform(const GeneralSLProblem& problem, std::size_t nodes);

/// Trapezoid coefficients ⟨f, φ_n⟩ for n < J. `f` may live on the basis grid or on
/// a finer grid that restricts to it; anything else is GridMismatch.
Vec project(const Vec& f, const SpectralBasis& basis, std::size_t J);
Vec project(const Profile& f, const SpectralBasis& basis, std::size_t J);

}  // namespace sdobs

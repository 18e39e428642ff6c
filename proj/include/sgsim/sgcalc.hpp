#pragma once

#include <map>
#include <string>
#include <vector>

#include "sgsim/grid.hpp"
#include "sgsim/symbol.hpp"

namespace sgsim {

/// Index pair (z, ζ) of a Sobolev–Kato space H^{z,ζ}.
struct SobolevKatoIndex {
  double z = 0.0;
  double zeta = 0.0;
};

/// ‖⟨·⟩^z ⟨D⟩^ζ u‖_{L²} computed as: weight by ⟨x⟩^z, transform, weight by
/// ⟨ξ⟩^ζ, weighted ℓ² sum with the (2π)^{−d} Parseval factor (so index (0,0)
/// reduces to the plain L² norm). Throws nonfinite_error on overflow.
double sk_norm(const Field& u, SobolevKatoIndex idx);

/// Kohn–Nirenberg quantization Op(a)u(x) = (2π)^{−d} Σ_ξ e^{ixξ} a(t,x,ξ) û(ξ) Δξ^d.
/// Multiplier / weight / separable structures use exact O(N^d log N) or
/// O(N^d) paths; general symbols fall back to the dense O(N^{2d}) sum.
Field apply_op(const SgSymbol& a, double t, const Field& u);

/// Sample points for sup-style estimates: radii log-spaced in |x| (resp.
/// |ξ|) up to the grid maxima plus the origin; in d > 1 each radius is
/// expanded along coordinate axes and deterministic pseudo-random directions.
struct StressPoints {
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> xi;
};
StressPoints make_stress_points(const Grid& g, int n_radii = 12,
                                std::uint64_t seed = 0x5eed);

/// Estimate of the SG seminorm ‖a‖^{m,μ}_ℓ = max_{|α+β| ≤ ℓ} sup
/// ⟨x⟩^{−m+|α|} ⟨ξ⟩^{−μ+|β|} |∂^α_x ∂^β_ξ a| over the stress points of the
/// given grid. Derivatives use fourth-order central stencils with steps h in
/// x and π/X in ξ. ℓ is capped at 4.
double seminorm_estimate(const SgSymbol& a, int ell, const Grid& stress_grid,
                         double t = 0.0);

/// Finite-difference steps used when a composed symbol differentiates its
/// factors at evaluation time.
struct FdSteps {
  double hx = 1e-2;
  double hxi = 1e-2;
};

/// Truncated composition c_N = Σ_{|α| < n_terms} (1/α!) ∂^α_ξ a · (−i)^{|α|}
/// ∂^α_x b at the fixed time t; the leading term is the pointwise product.
/// Orders add. n_terms is capped at 4.
SgSymbol compose_symbols(const SgSymbol& a, const SgSymbol& b, int n_terms,
                         double t = 0.0, FdSteps steps = {});

/// Result of the SG-parabolicity test Re a ≥ C ⟨x⟩^{m′} ⟨ξ⟩^{μ′} together
/// with the hypoellipticity derivative-quotient constants
/// C_{αβ} = sup |∂^α_x ∂^β_ξ a| ⟨x⟩^{|α|} ⟨ξ⟩^{|β|} / Re a for |α+β| ≤ 2.
struct ParabolicityReport {
  bool ok = false;
  double constant = 0.0;  // C; meaningful (positive) only when ok
  std::map<std::string, double> derivative_quotients;
  std::string message;
};

/// Evaluates the report over the stress points of the grid and, for
/// time-dependent symbols, a five-point sample of [0, horizon]. Requires the
/// symbol to declare a hypo order (m′, μ′); throws hypothesis_error if absent.
ParabolicityReport check_parabolicity(const SgSymbol& a, const Grid& stress_grid);

}  // namespace sgsim

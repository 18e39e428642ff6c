#pragma once

#include <functional>
#include <vector>

#include "sgsim/sgcalc.hpp"

namespace sgsim {

/// Gauss–Legendre rule with q nodes mapped to [0, 1]; nodes are found by
/// Newton iteration on the Legendre recurrence.
struct GaussLegendre {
  std::vector<double> nodes, weights;
  explicit GaussLegendre(int q);
};

/// Leading fundamental-solution symbol e0(t, s, x, ξ) =
/// exp(−∫_s^t a(τ, x, ξ) dτ) of ∂_t + Op(a). The τ-integral is exact
/// (t − s)·a for time-independent generators and Gauss–Legendre otherwise.
class PropagatorSymbol {
 public:
  explicit PropagatorSymbol(SgSymbol generator, int quad_order = 8);

  const SgSymbol& generator() const { return gen_; }
  int quad_order() const { return static_cast<int>(gl_.nodes.size()); }

  /// −∫_s^t a(τ, x, ξ) dτ.
  cplx exponent(double t, double s, std::span<const double> x,
                std::span<const double> xi) const;
  cplx e0(double t, double s, std::span<const double> x,
          std::span<const double> xi) const;

 private:
  SgSymbol gen_;
  GaussLegendre gl_;
};

cplx e0_eval(const PropagatorSymbol& sym, double t, double s,
             std::span<const double> x, std::span<const double> xi);

/// E0(t, s) assembled on a grid for one (t, s) pair; applying it repeatedly
/// is cheap. The shape follows the generator's structure:
///   multiplier a(ξ)         → frequency factor, O(N^d log N) per apply
///   weight a(x)             → pointwise factor, O(N^d)
///   sum-separable p(x)+q(ξ) → e0 factorizes, weight ∘ multiplier
///   otherwise               → dense Kohn–Nirenberg sum, O(N^{2d})
class PropagatorApplier {
 public:
  Field apply(const Field& u) const;

 private:
  friend class Propagator;
  enum class Mode { multiplier, pointwise, separable, dense, dense_lazy };
  Mode mode_ = Mode::dense;
  GridPtr grid_;
  std::vector<cplx> freq_factor_;   // multiplier / separable
  std::vector<cplx> space_factor_;  // pointwise / separable
  std::vector<cplx> matrix_;        // dense: row-major, phase and scale folded in
  std::function<Field(const Field&)> lazy_;  // dense_lazy (large d=2 grids)
};

/// Numerical propagator E(t, s) = Op(e0(t, s)) on a fixed grid.
class Propagator {
 public:
  Propagator(PropagatorSymbol sym, GridPtr grid);

  const PropagatorSymbol& symbol() const { return sym_; }
  const GridPtr& grid() const { return grid_; }

  /// Assemble E0(t, s); requires s ≤ t but does not clamp to the horizon
  /// (time-difference stencils probe slightly beyond it).
  PropagatorApplier applier(double t, double s) const;

  /// E0(t, s) u with the precondition 0 ≤ s ≤ t ≤ horizon enforced.
  Field propagate(double t, double s, const Field& u) const;

 private:
  PropagatorSymbol sym_;
  GridPtr grid_;
};

/// Relative L² size of (∂_t + Op(a)) E0(t, s) u, the defect of the leading
/// parametrix. ∂_t uses a central difference with step max(1e−4, (t−s)/100).
struct ResidualReport {
  double residual = 0.0;
  double fd_step = 0.0;
  /// True when the two propagated fields agree to within a few ulps, so the
  /// difference quotient is dominated by rounding.
  bool cancellation_risk = false;
};
ResidualReport residual_check(const Propagator& P, double t, double s,
                              const Field& u);

/// Checks |e0(t,s,x,ξ)| ≤ K (t−s)^{−ℓ} ⟨x⟩^{−l·m′} ⟨ξ⟩^{−λ·μ′} with
/// ℓ = max{l, λ} and K = ℓ^ℓ e^{−ℓ} / C^ℓ, C the measured parabolicity
/// constant. Sampled over stress points and the supplied (t, s) pairs.
struct DecayReport {
  bool ok = false;
  double max_ratio = 0.0;  // worst |e0| / bound, ≤ 1 when the bound holds
  double bound_constant = 0.0;  // K
  double parabolicity_constant = 0.0;
};
DecayReport decay_bound_check(const Propagator& P, double l, double lambda,
                              const std::vector<std::pair<double, double>>& ts_pairs,
                              double tolerance = 1e-9);

enum class TimeRule { left_endpoint, trapezoid, simpson };

/// Mild-solution assembly u(t_i) = E(t_i, s) u0 + ∫_s^{t_i} E(t_i, τ) f(τ) dτ
/// for every t_i in the increasing t_grid. The τ-integral uses the composite
/// rule on each t_grid interval split into `refine` pieces.
std::vector<Field> duhamel_solve(const Propagator& P, const Field& u0,
                                 const std::function<Field(double)>& f, double s,
                                 const std::vector<double>& t_grid,
                                 TimeRule rule = TimeRule::simpson, int refine = 16);

}  // namespace sgsim

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgsim/grid.hpp"
#include "sgsim/sgcalc.hpp"

namespace sgsim {

/// Mapping indices declared for a composition operator: w ↦ g(t,·,w) is
/// claimed to send H^{z+r,ζ+ρ} into H^{z,ζ} with modulus C(t), both for the
/// affine growth bound and for Lipschitz differences. r and ρ are the orders
/// the map is allowed to consume and must be nonnegative.
struct LipParams {
  double z = 0.0;
  double zeta = 0.0;
  double r = 0.0;
  double rho = 0.0;
};

/// Ball in H^{z+r,ζ+ρ} on which a locally-defined coefficient is certified.
struct LocalityBall {
  double radius = 0.0;
  Field center;
};

/// Scalar right-hand-side coefficient g(t, x, w), applied to fields by
/// pointwise composition, bundled with its declared mapping certificate.
/// The declared bounds are falsifiable claims, spot-checked by verify_lip
/// on sample batteries; nothing here constitutes a proof.
class NemytskiiFn {
 public:
  using EvalFn = std::function<cplx(double t, std::span<const double> x, cplx w)>;
  using ModulusFn = std::function<double(double t)>;

  NemytskiiFn(EvalFn eval, LipParams lip, ModulusFn modulus);
  NemytskiiFn(EvalFn eval, LipParams lip, double modulus_const = 1.0);

  /// Builds the evaluator from expression text over t, x coordinates, ⟨x⟩
  /// and the state u. Frequency variables have no meaning in a pointwise
  /// coefficient and are rejected.
  static NemytskiiFn from_expr_text(const std::string& text, LipParams lip,
                                    double modulus_const = 1.0);

  /// Restricts the certificate to the given ball in H^{z+r,ζ+ρ};
  /// apply_nemytskii then refuses inputs outside it.
  NemytskiiFn& restrict_to_ball(double radius, Field center);

  /// Declares that real-valued inputs produce real-valued outputs;
  /// apply_nemytskii asserts the claim on exactly-real inputs.
  NemytskiiFn& declare_preserves_real(bool flag = true);

  /// Declares that the value ignores the state argument w. Expression-built
  /// coefficients derive this from the parse; the callable constructors
  /// default to state-dependent, which is the conservative assumption.
  NemytskiiFn& declare_state_independent(bool flag = true);

  cplx eval(double t, std::span<const double> x, cplx w) const;
  double modulus(double t) const;
  const LipParams& lip() const { return lip_; }
  const std::optional<LocalityBall>& ball() const { return ball_; }
  bool preserves_real() const { return preserves_real_; }
  bool depends_on_state() const { return depends_on_state_; }

 private:
  EvalFn eval_;
  LipParams lip_;
  ModulusFn modulus_;
  std::optional<LocalityBall> ball_;
  bool preserves_real_ = false;
  bool depends_on_state_ = true;
};

/// Pointwise composition x ↦ g(t, x, w(x)) at every grid node. For a
/// ball-restricted g the input must satisfy
/// ‖w − center‖_{z+r,ζ+ρ} ≤ radius; otherwise locality_error, with the
/// evaluation time in the message so path solvers can surface when the
/// state escaped. Pure and safe to call concurrently.
Field apply_nemytskii(const NemytskiiFn& g, double t, const Field& w);

/// Outcome of spot-checking the declared mapping bounds. For every sample
/// pair (v₁, v₂) and every time t the checks are
///   growth:     ‖g(t,·,v)‖_{z,ζ} ≤ C(t)·(1 + ‖v‖_{z+r,ζ+ρ}), v ∈ {v₁, v₂}
///   Lipschitz:  ‖g(t,·,v₁) − g(t,·,v₂)‖_{z,ζ} ≤ C(t)·‖v₁ − v₂‖_{z+r,ζ+ρ}
/// Margins are declared right side minus observed left side; a negative
/// margin is a falsified claim. The c_hat entries record the smallest
/// constant that would have passed every check at that time, so they give
/// the empirical modulus of the battery.
struct LipReport {
  bool ok = false;
  double worst_growth_margin = 0.0;
  double worst_lip_margin = 0.0;
  double c_hat_growth = 0.0;
  double c_hat_lip = 0.0;
  std::vector<double> c_hat;  // per entry of t_samples
  int n_growth_checks = 0;
  int n_lip_checks = 0;
};

/// Runs the battery above. Pairs with coinciding members contribute growth
/// checks only. Sample fields must respect the locality ball when one is
/// declared (locality_error otherwise).
LipReport verify_lip(const NemytskiiFn& g,
                     const std::vector<std::pair<Field, Field>>& samples,
                     const std::vector<double>& t_samples);

}  // namespace sgsim

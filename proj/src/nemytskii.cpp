#include "sgsim/nemytskii.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "sgsim/expr.hpp"

namespace sgsim {

namespace {

// Numerical zero for the imaginary residue of a real-preserving coefficient.
// Power nodes with a negative real base evaluate through the complex
// logarithm and can leave a few ulp of imaginary part on mathematically real
// results, so the assertion cannot demand an exact zero.
constexpr double kRealResidueTol = 1e-12;

void validate_lip(const LipParams& p) {
  if (p.r < 0.0 || p.rho < 0.0)
    throw hypothesis_error("nemytskii: consumed orders r, rho must be nonnegative");
}

}  // namespace

NemytskiiFn::NemytskiiFn(EvalFn eval, LipParams lip, ModulusFn modulus)
    : eval_(std::move(eval)), lip_(lip), modulus_(std::move(modulus)) {
  if (!eval_) throw error("nemytskii: empty evaluator");
  if (!modulus_) throw error("nemytskii: empty modulus function");
  validate_lip(lip_);
}

NemytskiiFn::NemytskiiFn(EvalFn eval, LipParams lip, double modulus_const)
    : NemytskiiFn(std::move(eval), lip,
                  [modulus_const](double) { return modulus_const; }) {}

NemytskiiFn NemytskiiFn::from_expr_text(const std::string& text, LipParams lip,
                                        double modulus_const) {
  Expr e = Expr::parse(text);
  if (e.uses_xi())
    throw parse_error(
        "nemytskii: coefficient '" + text +
        "' references a frequency variable, which has no meaning pointwise");
  const bool uses_state = e.uses_u();
  EvalFn fn = [e](double t, std::span<const double> x, cplx w) {
    EvalCtx ctx;
    ctx.t = t;
    ctx.x = x;
    ctx.u = w;
    ctx.has_u = true;
    return e.eval(ctx);
  };
  NemytskiiFn result(std::move(fn), lip, modulus_const);
  result.declare_state_independent(!uses_state);
  return result;
}

NemytskiiFn& NemytskiiFn::restrict_to_ball(double radius, Field center) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw hypothesis_error("nemytskii: locality radius must be positive and finite");
  ball_.emplace(LocalityBall{radius, std::move(center)});
  return *this;
}

NemytskiiFn& NemytskiiFn::declare_preserves_real(bool flag) {
  preserves_real_ = flag;
  return *this;
}

NemytskiiFn& NemytskiiFn::declare_state_independent(bool flag) {
  depends_on_state_ = !flag;
  return *this;
}

cplx NemytskiiFn::eval(double t, std::span<const double> x, cplx w) const {
  return eval_(t, x, w);
}

double NemytskiiFn::modulus(double t) const {
  const double c = modulus_(t);
  if (!std::isfinite(c) || c < 0.0)
    throw hypothesis_error("nemytskii: modulus C(t) must be finite and nonnegative");
  return c;
}

Field apply_nemytskii(const NemytskiiFn& g, double t, const Field& w) {
  if (g.ball()) {
    const LocalityBall& ball = *g.ball();
    const LipParams& p = g.lip();
    const double dist =
        sk_norm(w - ball.center, {p.z + p.r, p.zeta + p.rho});
    if (dist > ball.radius) {
      std::ostringstream msg;
      msg << "nemytskii: state at t=" << t
          << " is outside the certified ball: distance " << dist << " > radius "
          << ball.radius;
      throw locality_error(msg.str());
    }
  }

  const Grid& gr = w.grid();
  const bool real_input = [&] {
    if (!g.preserves_real()) return false;
    for (cplx v : w.values())
      if (v.imag() != 0.0) return false;
    return true;
  }();

  std::vector<cplx> out(gr.size());
  std::vector<double> x(static_cast<std::size_t>(gr.dim()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    gr.x_at(i, x);
    out[i] = g.eval(t, x, w[i]);
  }
  Field result(w.grid_ptr(), std::move(out));
  result.require_finite("nemytskii output");

  if (real_input) {
    double worst_imag = 0.0;
    for (cplx v : result.values())
      worst_imag = std::max(worst_imag, std::abs(v.imag()));
    if (worst_imag > kRealResidueTol * (1.0 + result.max_abs()))
      throw hypothesis_error(
          "nemytskii: coefficient declared real-preserving but produced "
          "imaginary parts on a real input");
  }
  return result;
}

LipReport verify_lip(const NemytskiiFn& g,
                     const std::vector<std::pair<Field, Field>>& samples,
                     const std::vector<double>& t_samples) {
  if (samples.empty()) throw hypothesis_error("nemytskii: verify needs sample pairs");
  if (t_samples.empty()) throw hypothesis_error("nemytskii: verify needs sample times");

  const LipParams& p = g.lip();
  const SobolevKatoIndex target{p.z, p.zeta};
  const SobolevKatoIndex source{p.z + p.r, p.zeta + p.rho};

  LipReport rep;
  rep.worst_growth_margin = std::numeric_limits<double>::infinity();
  rep.worst_lip_margin = std::numeric_limits<double>::infinity();
  rep.c_hat.reserve(t_samples.size());

  for (double t : t_samples) {
    const double ct = g.modulus(t);
    double c_here = 0.0;
    for (const auto& [v1, v2] : samples) {
      const Field g1 = apply_nemytskii(g, t, v1);
      const Field g2 = apply_nemytskii(g, t, v2);

      const auto growth_check = [&](const Field& v, const Field& gv) {
        const double lhs = sk_norm(gv, target);
        const double src = sk_norm(v, source);
        const double margin = ct * (1.0 + src) - lhs;
        rep.worst_growth_margin = std::min(rep.worst_growth_margin, margin);
        const double ratio = lhs / (1.0 + src);
        rep.c_hat_growth = std::max(rep.c_hat_growth, ratio);
        c_here = std::max(c_here, ratio);
        ++rep.n_growth_checks;
      };
      growth_check(v1, g1);
      growth_check(v2, g2);

      const double dn = sk_norm(v1 - v2, source);
      if (dn > 0.0) {
        const double ln = sk_norm(g1 - g2, target);
        const double margin = ct * dn - ln;
        rep.worst_lip_margin = std::min(rep.worst_lip_margin, margin);
        const double ratio = ln / dn;
        rep.c_hat_lip = std::max(rep.c_hat_lip, ratio);
        c_here = std::max(c_here, ratio);
        ++rep.n_lip_checks;
      }
    }
    rep.c_hat.push_back(c_here);
  }

  rep.ok = rep.worst_growth_margin >= 0.0 && rep.worst_lip_margin >= 0.0;
  return rep;
}

}  // namespace sgsim

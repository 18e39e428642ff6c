#include "sgsim/fundsol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgsim {

GaussLegendre::GaussLegendre(int q) {
  if (q < 1 || q > 64) throw hypothesis_error("gauss-legendre: order must be 1..64");
  nodes.resize(static_cast<std::size_t>(q));
  weights.resize(static_cast<std::size_t>(q));
  // Roots of P_q on (−1, 1) by Newton, then affine map to (0, 1).
  for (int i = 0; i < q; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int n = 2; n <= q; ++n) {
        const double p2 = ((2 * n - 1) * x * p1 - (n - 1) * p0) / n;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);  // descending roots → ascending nodes
    weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  std::sort(nodes.begin(), nodes.end());
}

PropagatorSymbol::PropagatorSymbol(SgSymbol generator, int quad_order)
    : gen_(std::move(generator)), gl_(quad_order) {}

cplx PropagatorSymbol::exponent(double t, double s, std::span<const double> x,
                                std::span<const double> xi) const {
  if (t < s) throw hypothesis_error("propagator symbol: t < s");
  if (gen_.time_independent()) return -(t - s) * gen_(s, x, xi);
  cplx acc(0.0, 0.0);
  for (std::size_t q = 0; q < gl_.nodes.size(); ++q)
    acc += gl_.weights[q] * gen_(s + gl_.nodes[q] * (t - s), x, xi);
  return -(t - s) * acc;
}

cplx PropagatorSymbol::e0(double t, double s, std::span<const double> x,
                          std::span<const double> xi) const {
  return std::exp(exponent(t, s, x, xi));
}

cplx e0_eval(const PropagatorSymbol& sym, double t, double s,
             std::span<const double> x, std::span<const double> xi) {
  return sym.e0(t, s, x, xi);
}

namespace {

// Time integral of a single separable part p(τ, v) over [s, t].
cplx part_integral(const PartFn& part, bool time_independent, const GaussLegendre& gl,
                   double t, double s, std::span<const double> v) {
  if (time_independent) return (t - s) * part(s, v);
  cplx acc(0.0, 0.0);
  for (std::size_t q = 0; q < gl.nodes.size(); ++q)
    acc += gl.weights[q] * part(s + gl.nodes[q] * (t - s), v);
  return (t - s) * acc;
}

constexpr std::size_t kDenseMatrixCap = (std::size_t{1} << 22);  // entries

}  // namespace

Field PropagatorApplier::apply(const Field& u) const {
  if (!u.grid().compatible(*grid_))
    throw grid_mismatch_error("propagator: field on incompatible grid");
  switch (mode_) {
    case Mode::multiplier: {
      Field uh = forward_dft(u);
      std::vector<cplx> v(uh.values().begin(), uh.values().end());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] *= freq_factor_[k];
      return inverse_dft(Field(u.grid_ptr(), std::move(v)));
    }
    case Mode::pointwise: {
      std::vector<cplx> v(u.values().begin(), u.values().end());
      for (std::size_t j = 0; j < v.size(); ++j) v[j] *= space_factor_[j];
      return Field(u.grid_ptr(), std::move(v));
    }
    case Mode::separable: {
      Field uh = forward_dft(u);
      std::vector<cplx> v(uh.values().begin(), uh.values().end());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] *= freq_factor_[k];
      Field w = inverse_dft(Field(u.grid_ptr(), std::move(v)));
      std::vector<cplx> out(w.values().begin(), w.values().end());
      for (std::size_t j = 0; j < out.size(); ++j) out[j] *= space_factor_[j];
      return Field(u.grid_ptr(), std::move(out));
    }
    case Mode::dense: {
      Field uh = forward_dft(u);
      const std::size_t n = u.size();
      std::vector<cplx> out(n);
      for (std::size_t j = 0; j < n; ++j) {
        cplx acc(0.0, 0.0);
        const cplx* row = matrix_.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) acc += row[k] * uh[k];
        out[j] = acc;
      }
      return Field(u.grid_ptr(), std::move(out));
    }
    case Mode::dense_lazy:
      return lazy_(u);
  }
  throw error("propagator applier: corrupt mode");
}

Propagator::Propagator(PropagatorSymbol sym, GridPtr grid)
    : sym_(std::move(sym)), grid_(std::move(grid)) {}

PropagatorApplier Propagator::applier(double t, double s) const {
  if (t < s) throw hypothesis_error("propagator: t < s");
  const SgSymbol& a = sym_.generator();
  const Grid& g = *grid_;
  const int d = g.dim();
  PropagatorApplier ap;
  ap.grid_ = grid_;

  const GaussLegendre gl(sym_.quad_order());
  const auto fill_freq = [&](const PartFn& q) {
    ap.freq_factor_.resize(g.size());
    std::vector<double> xi(static_cast<std::size_t>(d));
    for (std::size_t k = 0; k < g.size(); ++k) {
      g.xi_at(k, xi);
      ap.freq_factor_[k] =
          std::exp(-part_integral(q, a.time_independent(), gl, t, s, xi));
    }
  };
  const auto fill_space = [&](const PartFn& p) {
    ap.space_factor_.resize(g.size());
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < g.size(); ++j) {
      g.x_at(j, x);
      ap.space_factor_[j] =
          std::exp(-part_integral(p, a.time_independent(), gl, t, s, x));
    }
  };

  switch (a.structure()) {
    case SymbolStructure::multiplier:
      ap.mode_ = PropagatorApplier::Mode::multiplier;
      fill_freq(a.xi_part());
      return ap;
    case SymbolStructure::weight:
      ap.mode_ = PropagatorApplier::Mode::pointwise;
      fill_space(a.x_part());
      return ap;
    case SymbolStructure::sum_separable:
      // exp(−∫(p+q)) = exp(−∫p) · exp(−∫q): the propagator symbol factorizes.
      ap.mode_ = PropagatorApplier::Mode::separable;
      fill_freq(a.xi_part());
      fill_space(a.x_part());
      return ap;
    default:
      break;
  }

  const std::size_t n = g.size();
  const double scale = std::pow(g.freq_spacing() / (2.0 * M_PI), d);
  if (n * n <= kDenseMatrixCap) {
    ap.mode_ = PropagatorApplier::Mode::dense;
    ap.matrix_.resize(n * n);
    std::vector<std::vector<double>> xis(n, std::vector<double>(d));
    for (std::size_t k = 0; k < n; ++k) g.xi_at(k, xis[k]);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < n; ++j) {
      g.x_at(j, x);
      cplx* row = ap.matrix_.data() + j * n;
      for (std::size_t k = 0; k < n; ++k) {
        double phase = 0.0;
        for (int c = 0; c < d; ++c)
          phase += x[static_cast<std::size_t>(c)] * xis[k][static_cast<std::size_t>(c)];
        row[k] = scale * std::polar(1.0, phase) * std::exp(sym_.exponent(t, s, x, xis[k]));
      }
    }
    return ap;
  }

  // Large grids: keep nothing, evaluate the dense sum on demand.
  ap.mode_ = PropagatorApplier::Mode::dense_lazy;
  const PropagatorSymbol sym_copy = sym_;
  const GridPtr grid_copy = grid_;
  ap.lazy_ = [sym_copy, grid_copy, t, s, scale](const Field& u) {
    const Grid& gg = *grid_copy;
    const int dd = gg.dim();
    Field uh = forward_dft(u);
    std::vector<cplx> out(u.size());
    std::vector<double> x(static_cast<std::size_t>(dd)), xi(static_cast<std::size_t>(dd));
    for (std::size_t j = 0; j < out.size(); ++j) {
      gg.x_at(j, x);
      cplx acc(0.0, 0.0);
      for (std::size_t k = 0; k < uh.size(); ++k) {
        gg.xi_at(k, xi);
        double phase = 0.0;
        for (int c = 0; c < dd; ++c)
          phase += x[static_cast<std::size_t>(c)] * xi[static_cast<std::size_t>(c)];
        acc += std::polar(1.0, phase) * std::exp(sym_copy.exponent(t, s, x, xi)) * uh[k];
      }
      out[j] = acc * scale;
    }
    return Field(u.grid_ptr(), std::move(out));
  };
  return ap;
}

Field Propagator::propagate(double t, double s, const Field& u) const {
  if (!(0.0 <= s && s <= t))
    throw hypothesis_error("propagate: requires 0 <= s <= t");
  if (t > sym_.generator().horizon() + 1e-12)
    throw hypothesis_error("propagate: t beyond the generator horizon");
  Field out = applier(t, s).apply(u);
  out.require_finite("propagate");
  return out;
}

ResidualReport residual_check(const Propagator& P, double t, double s,
                              const Field& u) {
  if (!(s < t)) throw hypothesis_error("residual_check: requires s < t");
  ResidualReport rep;
  rep.fd_step = std::max(1e-4, (t - s) / 100.0);
  if (t - s <= 2.0 * rep.fd_step)
    throw hypothesis_error(
        "residual_check: interval too short for the time stencil");

  Field up = P.applier(t + rep.fd_step, s).apply(u);
  Field um = P.applier(t - rep.fd_step, s).apply(u);
  Field diff = up - um;
  // Cancellation: difference at rounding level of the propagated fields.
  if (diff.max_abs() < 64.0 * std::numeric_limits<double>::epsilon() *
                           std::max(up.max_abs(), um.max_abs()))
    rep.cancellation_risk = true;

  Field dudt = diff * cplx(1.0 / (2.0 * rep.fd_step), 0.0);
  Field mid = P.applier(t, s).apply(u);
  Field lu = dudt + apply_op(P.symbol().generator(), t, mid);
  rep.residual = lu.l2_norm() / u.l2_norm();
  return rep;
}

DecayReport decay_bound_check(const Propagator& P, double l, double lambda,
                              const std::vector<std::pair<double, double>>& ts_pairs,
                              double tolerance) {
  const SgSymbol& a = P.symbol().generator();
  if (!a.hypo_order())
    throw hypothesis_error("decay_bound_check: generator lacks a hypo order");
  ParabolicityReport par = check_parabolicity(a, *P.grid());
  if (!par.ok) throw hypothesis_error("decay_bound_check: " + par.message);

  const double mp = a.hypo_order()->m;
  const double mup = a.hypo_order()->mu;
  const double ell = std::max(l, lambda);
  const double K = ell > 0.0
                       ? std::pow(ell, ell) * std::exp(-ell) / std::pow(par.constant, ell)
                       : 1.0;

  StressPoints pts = make_stress_points(*P.grid());
  DecayReport rep;
  rep.bound_constant = K;
  rep.parabolicity_constant = par.constant;
  for (const auto& [t, s] : ts_pairs) {
    if (!(t > s)) throw hypothesis_error("decay_bound_check: needs t > s");
    for (const auto& x : pts.x) {
      for (const auto& xi : pts.xi) {
        const double e0_abs = std::abs(P.symbol().e0(t, s, x, xi));
        const double bound = K * std::pow(t - s, -ell) *
                             std::pow(bracket(x), -l * mp) *
                             std::pow(bracket(xi), -lambda * mup);
        rep.max_ratio = std::max(rep.max_ratio, e0_abs / bound);
      }
    }
  }
  rep.ok = rep.max_ratio <= 1.0 + tolerance;
  return rep;
}

std::vector<Field> duhamel_solve(const Propagator& P, const Field& u0,
                                 const std::function<Field(double)>& f, double s,
                                 const std::vector<double>& t_grid, TimeRule rule,
                                 int refine) {
  if (refine < 1) throw hypothesis_error("duhamel_solve: refine must be >= 1");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double prev = i == 0 ? s : t_grid[i - 1];
    if (!(t_grid[i] >= prev))
      throw hypothesis_error("duhamel_solve: t_grid must be increasing and >= s");
  }

  std::vector<Field> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    Field u = P.applier(t, s).apply(u0);
    // quadrature nodes: refinement of the t_grid points inside [s, t]
    std::vector<double> knots{s};
    for (double tj : t_grid) {
      if (tj > s && tj < t) knots.push_back(tj);
    }
    knots.push_back(t);
    Field integral(u.grid_ptr());
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
      const double a = knots[seg], b = knots[seg + 1];
      const double dt = (b - a) / refine;
      if (dt <= 0.0) continue;
      for (int r = 0; r < refine; ++r) {
        const double lo = a + r * dt, hi = lo + dt;
        switch (rule) {
          case TimeRule::left_endpoint:
            integral = integral + P.applier(t, lo).apply(f(lo)) * cplx(dt, 0.0);
            break;
          case TimeRule::trapezoid:
            integral = integral + (P.applier(t, lo).apply(f(lo)) +
                                   P.applier(t, hi).apply(f(hi))) *
                                      cplx(0.5 * dt, 0.0);
            break;
          case TimeRule::simpson: {
            const double mid = 0.5 * (lo + hi);
            integral = integral + (P.applier(t, lo).apply(f(lo)) +
                                   P.applier(t, mid).apply(f(mid)) * cplx(4.0, 0.0) +
                                   P.applier(t, hi).apply(f(hi))) *
                                      cplx(dt / 6.0, 0.0);
            break;
          }
        }
      }
    }
    u = u + integral;
    u.require_finite("duhamel_solve");
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace sgsim

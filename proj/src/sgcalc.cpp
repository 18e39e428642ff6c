#include "sgsim/sgcalc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "sgsim/rng.hpp"

namespace sgsim {

double sk_norm(const Field& u, SobolevKatoIndex idx) {
  const Grid& g = u.grid();
  const int d = g.dim();
  std::vector<cplx> weighted(u.size());
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < u.size(); ++i) {
    g.x_at(i, x);
    weighted[i] = u[i] * std::pow(bracket(x), idx.z);
  }
  Field wh = forward_dft(Field(u.grid_ptr(), std::move(weighted)));
  double acc = 0.0;
  std::vector<double> xi(static_cast<std::size_t>(d));
  for (std::size_t k = 0; k < wh.size(); ++k) {
    g.xi_at(k, xi);
    acc += std::pow(bracket(xi), 2.0 * idx.zeta) * std::norm(wh[k]);
  }
  acc *= std::pow(g.freq_spacing() / (2.0 * M_PI), d);
  const double result = std::sqrt(acc);
  if (!std::isfinite(result))
    throw nonfinite_error("sk_norm: overflow for index (" + std::to_string(idx.z) +
                          ", " + std::to_string(idx.zeta) + ")");
  return result;
}

namespace {

Field apply_multiplier(const PartFn& q, double t, const Field& u) {
  const Grid& g = u.grid();
  Field uh = forward_dft(u);
  std::vector<cplx> out(uh.values().begin(), uh.values().end());
  std::vector<double> xi(static_cast<std::size_t>(g.dim()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    g.xi_at(k, xi);
    out[k] *= q(t, xi);
  }
  return inverse_dft(Field(u.grid_ptr(), std::move(out)));
}

Field apply_weight(const PartFn& p, double t, const Field& u) {
  const Grid& g = u.grid();
  std::vector<cplx> out(u.values().begin(), u.values().end());
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  for (std::size_t j = 0; j < out.size(); ++j) {
    g.x_at(j, x);
    out[j] *= p(t, x);
  }
  return Field(u.grid_ptr(), std::move(out));
}

Field apply_dense(const SgSymbol& a, double t, const Field& u) {
  const Grid& g = u.grid();
  const int d = g.dim();
  Field uh = forward_dft(u);
  const double scale = std::pow(g.freq_spacing() / (2.0 * M_PI), d);

  std::vector<std::vector<double>> xis(uh.size(), std::vector<double>(d));
  for (std::size_t k = 0; k < uh.size(); ++k) g.xi_at(k, xis[k]);

  std::vector<cplx> out(u.size());
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < out.size(); ++j) {
    g.x_at(j, x);
    cplx acc(0.0, 0.0);
    for (std::size_t k = 0; k < uh.size(); ++k) {
      double phase = 0.0;
      for (int c = 0; c < d; ++c) phase += x[static_cast<std::size_t>(c)] * xis[k][static_cast<std::size_t>(c)];
      acc += std::polar(1.0, phase) * a(t, x, xis[k]) * uh[k];
    }
    out[j] = acc * scale;
  }
  return Field(u.grid_ptr(), std::move(out));
}

}  // namespace

Field apply_op(const SgSymbol& a, double t, const Field& u) {
  switch (a.structure()) {
    case SymbolStructure::multiplier:
      return apply_multiplier(a.xi_part(), t, u);
    case SymbolStructure::weight:
      return apply_weight(a.x_part(), t, u);
    case SymbolStructure::product_separable:
      // Op(p·q) = p(x) · Op(q), exactly.
      return apply_weight(a.x_part(), t, apply_multiplier(a.xi_part(), t, u));
    case SymbolStructure::sum_separable:
      return apply_weight(a.x_part(), t, u) + apply_multiplier(a.xi_part(), t, u);
    case SymbolStructure::general:
      return apply_dense(a, t, u);
  }
  throw error("apply_op: corrupt symbol structure");
}

StressPoints make_stress_points(const Grid& g, int n_radii, std::uint64_t seed) {
  const int d = g.dim();
  StressPoints pts;

  auto build = [&](double r_max, double r_min,
                   std::vector<std::vector<double>>& out, std::uint64_t salt) {
    r_min = std::min(r_min, r_max / 4.0);
    out.push_back(std::vector<double>(static_cast<std::size_t>(d), 0.0));
    std::vector<std::vector<double>> dirs;
    if (d == 1) {
      dirs.push_back({1.0});
      dirs.push_back({-1.0});
    } else {
      for (int a = 0; a < d; ++a) {
        std::vector<double> e(static_cast<std::size_t>(d), 0.0);
        e[static_cast<std::size_t>(a)] = 1.0;
        dirs.push_back(e);
        e[static_cast<std::size_t>(a)] = -1.0;
        dirs.push_back(e);
      }
      for (int r = 0; r < 4; ++r) {
        std::vector<double> v(static_cast<std::size_t>(d));
        double norm2 = 0.0;
        for (int a = 0; a < d; ++a) {
          v[static_cast<std::size_t>(a)] = rng::normal(
              seed ^ salt, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(a), 0);
          norm2 += v[static_cast<std::size_t>(a)] * v[static_cast<std::size_t>(a)];
        }
        const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-30));
        for (double& c : v) c *= inv;
        dirs.push_back(v);
      }
    }
    for (int j = 0; j < n_radii; ++j) {
      const double frac = n_radii == 1 ? 1.0 : static_cast<double>(j) / (n_radii - 1);
      const double r = r_min * std::pow(r_max / r_min, frac);
      for (const auto& dir : dirs) {
        std::vector<double> p(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) p[static_cast<std::size_t>(a)] = r * dir[static_cast<std::size_t>(a)];
        out.push_back(std::move(p));
      }
    }
  };

  build(g.half_width(), std::min(g.spacing(), 0.5), pts.x, 0x1111);
  build(g.freq_max(), std::min(g.freq_spacing(), 0.5), pts.xi, 0x2222);
  return pts;
}

namespace {

/// All multi-index pairs (α, β) in dimension d with |α| + |β| ≤ ell.
void enumerate_pairs(int d, int ell,
                     std::vector<std::pair<std::vector<int>, std::vector<int>>>& out) {
  std::vector<int> combined(static_cast<std::size_t>(2 * d), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t slot, int budget) {
    if (slot == combined.size()) {
      out.emplace_back(std::vector<int>(combined.begin(), combined.begin() + d),
                       std::vector<int>(combined.begin() + d, combined.end()));
      return;
    }
    for (int v = 0; v <= budget; ++v) {
      combined[slot] = v;
      rec(slot + 1, budget - v);
    }
    combined[slot] = 0;
  };
  rec(0, ell);
}

int abs_order(const std::vector<int>& idx) {
  int s = 0;
  for (int v : idx) s += v;
  return s;
}

}  // namespace

double seminorm_estimate(const SgSymbol& a, int ell, const Grid& stress_grid,
                         double t) {
  if (ell < 0 || ell > 4)
    throw hypothesis_error("seminorm_estimate: derivative budget must be 0..4");
  const int d = stress_grid.dim();
  const double m = a.order().m;
  const double mu = a.order().mu;
  const double hx = stress_grid.spacing();
  const double hxi = stress_grid.freq_spacing();

  StressPoints pts = make_stress_points(stress_grid);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  enumerate_pairs(d, ell, pairs);

  double best = 0.0;
  for (const auto& [alpha, beta] : pairs) {
    const int na = abs_order(alpha);
    const int nb = abs_order(beta);
    for (const auto& x : pts.x) {
      const double wx = std::pow(bracket(x), -m + na);
      for (const auto& xi : pts.xi) {
        const double wxi = std::pow(bracket(xi), -mu + nb);
        const cplx da = symbol_derivative(a, t, x, xi, alpha, beta, hx, hxi);
        const double v = wx * wxi * std::abs(da);
        if (!std::isfinite(v))
          throw nonfinite_error("seminorm_estimate: non-finite derivative sample");
        best = std::max(best, v);
      }
    }
  }
  return best;
}

SgSymbol compose_symbols(const SgSymbol& a, const SgSymbol& b, int n_terms,
                         double t, FdSteps steps) {
  if (n_terms < 1 || n_terms > 4)
    throw hypothesis_error("compose_symbols: n_terms must be 1..4");
  const OrderPair order{a.order().m + b.order().m, a.order().mu + b.order().mu};

  // The closure carries copies of both factors; derivative orders are bounded
  // so evaluation cost stays polynomial in the stencil width.
  SgSymbol ac = a, bc = b;
  const double tc = t;
  SymbolFn fn = [ac, bc, n_terms, steps, tc](double, std::span<const double> x,
                                             std::span<const double> xi) {
    const int d = static_cast<int>(x.size());
    std::vector<std::vector<int>> alphas;
    // enumerate α with |α| < n_terms over d axes
    std::vector<int> alpha(static_cast<std::size_t>(d), 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t slot, int budget) {
      if (slot == alpha.size()) {
        alphas.push_back(alpha);
        return;
      }
      for (int v = 0; v <= budget; ++v) {
        alpha[slot] = v;
        rec(slot + 1, budget - v);
      }
      alpha[slot] = 0;
    };
    rec(0, n_terms - 1);

    const std::vector<int> zero(static_cast<std::size_t>(d), 0);
    cplx acc(0.0, 0.0);
    for (const auto& al : alphas) {
      int order_al = 0;
      double factorial = 1.0;
      for (int v : al) {
        order_al += v;
        for (int k = 2; k <= v; ++k) factorial *= k;
      }
      // (−i)^{|α|} from D^α_x = (−i)^{|α|} ∂^α_x
      static const cplx minus_i_pow[4] = {
          {1.0, 0.0}, {0.0, -1.0}, {-1.0, 0.0}, {0.0, 1.0}};
      const cplx da =
          symbol_derivative(ac, tc, x, xi, zero, al, steps.hx, steps.hxi);
      const cplx db =
          symbol_derivative(bc, tc, x, xi, al, zero, steps.hx, steps.hxi);
      acc += minus_i_pow[order_al % 4] / factorial * da * db;
    }
    return acc;
  };
  return SgSymbol::general(std::move(fn), order, true);
}

ParabolicityReport check_parabolicity(const SgSymbol& a, const Grid& stress_grid) {
  if (!a.hypo_order())
    throw hypothesis_error("check_parabolicity: symbol lacks a hypo order (m', mu')");
  const double mp = a.hypo_order()->m;
  const double mup = a.hypo_order()->mu;
  const int d = stress_grid.dim();

  std::vector<double> t_samples{0.0};
  if (!a.time_independent()) {
    t_samples = {0.0, 0.25 * a.horizon(), 0.5 * a.horizon(), 0.75 * a.horizon(),
                 a.horizon()};
  }

  StressPoints pts = make_stress_points(stress_grid);
  ParabolicityReport rep;
  double cmin = std::numeric_limits<double>::infinity();
  std::string worst_loc;

  for (double t : t_samples) {
    for (const auto& x : pts.x) {
      for (const auto& xi : pts.xi) {
        const double denom = std::pow(bracket(x), mp) * std::pow(bracket(xi), mup);
        const double re = a(t, x, xi).real();
        const double ratio = re / denom;
        if (!std::isfinite(ratio)) {
          rep.ok = false;
          rep.message = "non-finite symbol value during parabolicity scan";
          return rep;
        }
        if (ratio < cmin) {
          cmin = ratio;
          worst_loc = "t=" + std::to_string(t) +
                      " |x|=" + std::to_string(bracket(x)) +
                      " |xi|=" + std::to_string(bracket(xi));
        }
      }
    }
  }

  rep.constant = cmin;
  if (!(cmin > 0.0)) {
    rep.ok = false;
    rep.message = "operator not SG-parabolic: min Re a / (<x>^m' <xi>^mu') = " +
                  std::to_string(cmin) + " at " + worst_loc;
    return rep;
  }

  // Derivative quotient constants |∂^α_x ∂^β_ξ a| ⟨x⟩^{|α|} ⟨ξ⟩^{|β|} / Re a
  // witness the SG-hypoellipticity estimates.
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  enumerate_pairs(d, 2, pairs);
  const double hx = stress_grid.spacing();
  const double hxi = stress_grid.freq_spacing();
  for (const auto& [alpha, beta] : pairs) {
    if (abs_order(alpha) + abs_order(beta) == 0) continue;
    double worst = 0.0;
    for (double t : t_samples) {
      for (const auto& x : pts.x) {
        for (const auto& xi : pts.xi) {
          const double re = a(t, x, xi).real();
          if (!(re > 0.0)) continue;
          const cplx da = symbol_derivative(a, t, x, xi, alpha, beta, hx, hxi);
          const double q = std::abs(da) * std::pow(bracket(x), abs_order(alpha)) *
                           std::pow(bracket(xi), abs_order(beta)) / re;
          worst = std::max(worst, q);
        }
      }
    }
    std::string key = "d";
    for (int v : alpha) key += std::to_string(v);
    key += "_";
    for (int v : beta) key += std::to_string(v);
    rep.derivative_quotients[key] = worst;
  }

  rep.ok = true;
  rep.message = "SG-parabolic with C = " + std::to_string(cmin);
  return rep;
}

}  // namespace sgsim

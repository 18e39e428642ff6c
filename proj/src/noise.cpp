#include "sgsim/noise.hpp"

#include <algorithm>
#include <cmath>

#include "sgsim/rng.hpp"

namespace sgsim {

std::size_t mirror_index(const Grid& g, std::size_t flat) {
  std::size_t out = 0;
  std::size_t rest = flat;
  const int n = g.n();
  std::size_t stride = g.size();
  for (int axis = 0; axis < g.dim(); ++axis) {
    stride /= static_cast<std::size_t>(n);
    const int k = static_cast<int>(rest / stride);
    rest %= stride;
    const int mk = k == 0 ? 0 : n - k;
    out += static_cast<std::size_t>(mk) * stride;
  }
  return out;
}

bool touches_nyquist(const Grid& g, std::size_t flat) {
  const int n = g.n();
  std::size_t rest = flat;
  std::size_t stride = g.size();
  for (int axis = 0; axis < g.dim(); ++axis) {
    stride /= static_cast<std::size_t>(n);
    if (static_cast<int>(rest / stride) == n / 2) return true;
    rest %= stride;
  }
  return false;
}

SpectralMeasure::SpectralMeasure(GridPtr grid, DensityFn density,
                                 std::vector<Atom> atoms)
    : grid_(std::move(grid)), density_fn_(std::move(density)), atoms_(std::move(atoms)) {
  const Grid& g = *grid_;
  density_.assign(g.size(), 0.0);
  if (density_fn_) {
    std::vector<double> xi(static_cast<std::size_t>(g.dim()));
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (touches_nyquist(g, k)) continue;  // unpaired frequency stays massless
      g.xi_at(k, xi);
      const double v = density_fn_(xi);
      if (!(v >= 0.0))
        throw hypothesis_error("spectral measure: density must be nonnegative");
      density_[k] = v;
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double m = density_[mirror_index(g, k)];
      if (std::abs(density_[k] - m) > 1e-12 * (1.0 + std::abs(density_[k])))
        throw hypothesis_error(
            "spectral measure: density is not symmetric under frequency reflection");
    }
  }
  for (const Atom& a : atoms_) {
    if (static_cast<int>(a.location.size()) != g.dim())
      throw hypothesis_error("spectral measure: atom dimension mismatch");
    if (!(a.mass > 0.0))
      throw hypothesis_error("spectral measure: atom masses must be positive");
  }
  for (const Atom& a : atoms_) {
    bool mirrored = false;
    for (const Atom& b : atoms_) {
      bool match = std::abs(a.mass - b.mass) <= 1e-12 * a.mass;
      for (std::size_t c = 0; c < a.location.size() && match; ++c)
        match = std::abs(a.location[c] + b.location[c]) <= 1e-12;
      if (match) {
        mirrored = true;
        break;
      }
    }
    if (!mirrored)
      throw hypothesis_error(
          "spectral measure: atoms must come in symmetric pairs (or sit at 0)");
  }
  if (!(total_mass() > 0.0))
    throw hypothesis_error("spectral measure: measure has no mass");
}

SpectralMeasure SpectralMeasure::from_density_expr(GridPtr grid, const std::string& text,
                                                   std::vector<Atom> atoms) {
  Expr e = Expr::parse(text);
  if (e.uses_x() || e.uses_u() || e.uses_t())
    throw parse_error("spectral density may depend on frequency only");
  DensityFn fn = [e](std::span<const double> xi) {
    EvalCtx ctx;
    ctx.xi = xi;
    const cplx v = e.eval(ctx);
    if (std::abs(v.imag()) > 1e-14 * (1.0 + std::abs(v.real())))
      throw hypothesis_error("spectral density must be real-valued");
    return v.real();
  };
  return SpectralMeasure(std::move(grid), std::move(fn), std::move(atoms));
}

SpectralMeasure SpectralMeasure::atoms_only(GridPtr grid, std::vector<Atom> atoms) {
  return SpectralMeasure(std::move(grid), nullptr, std::move(atoms));
}

double SpectralMeasure::integrate(
    const std::function<double(std::span<const double>)>& f) const {
  const Grid& g = *grid_;
  const double cell = std::pow(g.freq_spacing(), g.dim());
  double acc = 0.0;
  std::vector<double> xi(static_cast<std::size_t>(g.dim()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (density_[k] == 0.0) continue;
    g.xi_at(k, xi);
    acc += density_[k] * f(xi);
  }
  acc *= cell;
  for (const Atom& a : atoms_) acc += a.mass * f(a.location);
  return acc;
}

double SpectralMeasure::integrate_extended(
    const std::function<double(std::span<const double>)>& f, int factor) const {
  if (factor < 1) throw hypothesis_error("integrate_extended: factor must be >= 1");
  const Grid& g = *grid_;
  const int d = g.dim();
  const double dxi = g.freq_spacing();
  const double cell = std::pow(dxi, d);
  const int half = factor * g.n() / 2;  // signed indices in [−half, half)
  double acc = 0.0;
  if (density_fn_) {
    std::vector<int> idx(static_cast<std::size_t>(d), -half);
    std::vector<double> xi(static_cast<std::size_t>(d));
    while (true) {
      bool nyquist = false;
      for (int c = 0; c < d; ++c) {
        if (idx[static_cast<std::size_t>(c)] == -half) nyquist = true;
        xi[static_cast<std::size_t>(c)] = idx[static_cast<std::size_t>(c)] * dxi;
      }
      if (!nyquist) {
        const double rho = density_fn_(xi);
        if (!(rho >= 0.0))
          throw hypothesis_error("spectral measure: density must be nonnegative");
        acc += rho * f(xi);
      }
      int axis = d - 1;
      for (; axis >= 0; --axis) {
        if (++idx[static_cast<std::size_t>(axis)] < half) break;
        idx[static_cast<std::size_t>(axis)] = -half;
      }
      if (axis < 0) break;
    }
  }
  acc *= cell;
  for (const Atom& a : atoms_) acc += a.mass * f(a.location);
  return acc;
}

double SpectralMeasure::total_mass() const {
  return integrate([](std::span<const double>) { return 1.0; });
}

std::vector<std::vector<double>> make_eta_grid(const Grid& g) {
  std::vector<std::vector<double>> etas;
  std::vector<double> xi(static_cast<std::size_t>(g.dim()));
  for (std::size_t k = 0; k < g.size(); ++k) {
    g.xi_at(k, xi);
    etas.emplace_back(xi.begin(), xi.end());
  }
  const double step = 10.0 * g.freq_spacing();
  for (int axis = 0; axis < g.dim(); ++axis) {
    for (double sign : {1.0, -1.0}) {
      for (double r = g.freq_max(); r <= 4.0 * g.freq_max() + 1e-12; r += step) {
        std::vector<double> eta(static_cast<std::size_t>(g.dim()), 0.0);
        eta[static_cast<std::size_t>(axis)] = sign * r;
        etas.push_back(std::move(eta));
      }
    }
  }
  return etas;
}

SpectralConditionReport check_spectral_condition(
    const SpectralMeasure& M, double lambda, double mu_prime,
    const std::vector<std::vector<double>>& eta_grid) {
  if (lambda < 0.0)
    throw hypothesis_error("spectral condition: lambda must be nonnegative");
  if (!(mu_prime > 0.0))
    throw hypothesis_error("spectral condition: mu' must be positive");
  const std::vector<std::vector<double>> fallback =
      eta_grid.empty() ? make_eta_grid(*M.grid()) : std::vector<std::vector<double>>{};
  const auto& etas = eta_grid.empty() ? fallback : eta_grid;

  const double p = 2.0 * lambda * mu_prime;
  const int d = M.grid()->dim();
  const auto weight = [&](std::span<const double> eta) {
    return [&, eta](std::span<const double> xi) {
      double s2 = 1.0;
      for (int c = 0; c < d; ++c) {
        const double v = xi[static_cast<std::size_t>(c)] + eta[static_cast<std::size_t>(c)];
        s2 += v * v;
      }
      return std::pow(s2, -0.5 * p);
    };
  };

  SpectralConditionReport rep;
  const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  rep.value_at_zero = M.integrate(weight(origin));
  for (const auto& eta : etas) {
    rep.value = std::max(rep.value, M.integrate(weight(eta)));
    rep.doubled_value = std::max(rep.doubled_value, M.integrate_extended(weight(eta), 2));
  }
  rep.growth = (rep.doubled_value - rep.value) / rep.value;
  rep.finite = rep.growth <= kDivergenceGrowth;
  rep.admissible = rep.finite && lambda < 0.5;
  return rep;
}

namespace {

double cosine_seed(std::span<const int> n, std::span<const double> xi, double xi_max) {
  double v = 1.0;
  for (std::size_t c = 0; c < n.size(); ++c)
    v *= std::cos(n[c] * M_PI * xi[c] / xi_max);
  return v;
}

std::vector<std::vector<int>> enumerate_seeds(int dim, int per_axis_max) {
  std::vector<std::vector<int>> seeds;
  if (dim == 1) {
    for (int n = 0; n <= per_axis_max; ++n) seeds.push_back({n});
    return seeds;
  }
  // graded order: total degree, then lexicographic
  for (int total = 0; total <= dim * per_axis_max; ++total) {
    std::vector<int> n(static_cast<std::size_t>(dim), 0);
    while (true) {
      int sum = 0;
      for (int c : n) sum += c;
      if (sum == total) seeds.push_back(n);
      int axis = dim - 1;
      for (; axis >= 0; --axis) {
        if (++n[static_cast<std::size_t>(axis)] <= per_axis_max) break;
        n[static_cast<std::size_t>(axis)] = 0;
      }
      if (axis < 0) break;
    }
  }
  return seeds;
}

}  // namespace

CameronMartinBasis::CameronMartinBasis(const SpectralMeasure& M, int K) : measure_(M) {
  if (K < 1) throw hypothesis_error("basis: K must be positive");
  const Grid& g = *measure_.grid();
  const double cell = std::pow(g.freq_spacing(), g.dim());
  const std::size_t n_atoms = measure_.atoms().size();
  const std::size_t vec_len = g.size() + n_atoms;
  std::span<const double> rho = measure_.density();

  const auto inner = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (rho[k] != 0.0) acc += rho[k] * u[k] * v[k];
    acc *= cell;
    for (std::size_t a = 0; a < n_atoms; ++a)
      acc += measure_.atoms()[a].mass * u[g.size() + a] * v[g.size() + a];
    return acc;
  };

  const int per_axis = g.n() / 2 + static_cast<int>(n_atoms) + 4;
  const std::vector<std::vector<int>> candidates = enumerate_seeds(g.dim(), per_axis);
  std::vector<std::vector<double>> basis_vecs;

  std::vector<double> xi(static_cast<std::size_t>(g.dim()));
  for (const std::vector<int>& n : candidates) {
    if (k_ == K) break;
    std::vector<double> v(vec_len);
    for (std::size_t k = 0; k < g.size(); ++k) {
      g.xi_at(k, xi);
      v[k] = cosine_seed(n, xi, g.freq_max());
    }
    for (std::size_t a = 0; a < n_atoms; ++a)
      v[g.size() + a] = cosine_seed(n, measure_.atoms()[a].location, g.freq_max());
    std::vector<double> coeff(seeds_.size() + 1, 0.0);

    const double norm0 = std::sqrt(inner(v, v));
    if (!(norm0 > 1e-14)) continue;  // seed vanishes on the support

    // track the expansion of v over previously used seeds plus this one
    std::vector<std::vector<double>> coeff_rows = seed_coeff_;
    for (auto& row : coeff_rows) row.resize(seeds_.size() + 1, 0.0);
    coeff.back() = 1.0;

    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k_; ++j) {
        const double r = inner(v, basis_vecs[static_cast<std::size_t>(j)]);
        for (std::size_t k = 0; k < vec_len; ++k)
          v[k] -= r * basis_vecs[static_cast<std::size_t>(j)][k];
        for (std::size_t s = 0; s < coeff.size(); ++s)
          coeff[s] -= r * coeff_rows[static_cast<std::size_t>(j)][s];
      }
    }
    const double norm = std::sqrt(inner(v, v));
    if (norm < 1e-6 * norm0) continue;  // dependent on the accepted modes
    for (std::size_t k = 0; k < vec_len; ++k) v[k] /= norm;
    for (double& c : coeff) c /= norm;

    seeds_.push_back(n);
    for (auto& row : seed_coeff_) row.resize(seeds_.size(), 0.0);
    seed_coeff_.push_back(std::move(coeff));
    basis_vecs.push_back(std::move(v));
    ++k_;
  }
  if (k_ < K)
    throw hypothesis_error("basis rank failure: the symmetric space of this measure has only " +
                           std::to_string(k_) + " modes, " + std::to_string(K) +
                           " requested");

  f_grid_.resize(static_cast<std::size_t>(k_));
  f_atoms_.resize(static_cast<std::size_t>(k_));
  for (int j = 0; j < k_; ++j) {
    auto& vec = basis_vecs[static_cast<std::size_t>(j)];
    f_grid_[static_cast<std::size_t>(j)].assign(vec.begin(), vec.begin() + g.size());
    f_atoms_[static_cast<std::size_t>(j)].assign(vec.begin() + g.size(), vec.end());
  }

  // h_j = 𝓕(f_j 𝔐): density part via the inverse transform (even symmetry
  // makes the sign of the phase immaterial), atoms added as plane waves.
  const double two_pi_d = std::pow(2.0 * M_PI, g.dim());
  std::vector<double> x(static_cast<std::size_t>(g.dim()));
  for (int j = 0; j < k_; ++j) {
    std::vector<cplx> frho(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
      frho[k] = cplx(f_grid_[static_cast<std::size_t>(j)][k] * rho[k], 0.0);
    Field h = inverse_dft(Field(measure_.grid(), std::move(frho))) * cplx(two_pi_d, 0.0);
    if (n_atoms > 0) {
      std::vector<cplx> vals(h.values().begin(), h.values().end());
      for (std::size_t p = 0; p < g.size(); ++p) {
        g.x_at(p, x);
        for (std::size_t a = 0; a < n_atoms; ++a) {
          const auto& atom = measure_.atoms()[a];
          double phase = 0.0;
          for (int c = 0; c < g.dim(); ++c)
            phase -= x[static_cast<std::size_t>(c)] *
                     atom.location[static_cast<std::size_t>(c)];
          vals[p] += atom.mass * f_atoms_[static_cast<std::size_t>(j)][a] *
                     std::polar(1.0, phase);
        }
      }
      h = Field(measure_.grid(), std::move(vals));
    }
    h_.push_back(std::move(h));
  }
}

double CameronMartinBasis::f_at(int j, std::span<const double> xi) const {
  const auto& coeff = seed_coeff_[static_cast<std::size_t>(j)];
  double acc = 0.0;
  for (std::size_t s = 0; s < coeff.size(); ++s) {
    if (coeff[s] == 0.0) continue;
    acc += coeff[s] * cosine_seed(seeds_[s], xi, measure_.grid()->freq_max());
  }
  return acc;
}

double CameronMartinBasis::gram_defect() const {
  const Grid& g = *measure_.grid();
  const double cell = std::pow(g.freq_spacing(), g.dim());
  std::span<const double> rho = measure_.density();
  double worst = 0.0;
  for (int i = 0; i < k_; ++i) {
    for (int j = i; j < k_; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (rho[k] != 0.0)
          acc += rho[k] * f_grid_[static_cast<std::size_t>(i)][k] *
                 f_grid_[static_cast<std::size_t>(j)][k];
      acc *= cell;
      for (std::size_t a = 0; a < measure_.atoms().size(); ++a)
        acc += measure_.atoms()[a].mass * f_atoms_[static_cast<std::size_t>(i)][a] *
               f_atoms_[static_cast<std::size_t>(j)][a];
      worst = std::max(worst, std::abs(acc - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

CameronMartinBasis build_basis(const SpectralMeasure& M, int K) {
  return CameronMartinBasis(M, K);
}

NoisePath sample_increments(const CameronMartinBasis& basis, int n_steps, double dt,
                            std::uint64_t seed) {
  if (n_steps < 1) throw hypothesis_error("noise path: need at least one step");
  if (!(dt > 0.0)) throw hypothesis_error("noise path: time step must be positive");
  NoisePath path;
  path.dt = dt;
  path.n_steps = n_steps;
  path.k_modes = basis.size();
  path.seed = seed;
  path.beta.resize(static_cast<std::size_t>(n_steps) * basis.size());
  const double scale = std::sqrt(dt);
  for (int k = 0; k < n_steps; ++k)
    for (int j = 0; j < basis.size(); ++j)
      path.beta[static_cast<std::size_t>(k) * basis.size() + j] =
          scale * rng::normal(seed, 0, static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(j));
  return path;
}

double hs_norm(const Propagator& P, double t, double s, const Field& sigma_field,
               const CameronMartinBasis& basis, SobolevKatoIndex idx) {
  if (!(s < t)) throw hypothesis_error("hs_norm: requires s < t");
  if (!sigma_field.grid().compatible(*basis.grid()))
    throw grid_mismatch_error("hs_norm: field and basis live on different grids");
  if (!P.grid()->compatible(*basis.grid()))
    throw grid_mismatch_error("hs_norm: propagator and basis live on different grids");
  const PropagatorApplier E = P.applier(t, s);
  double acc = 0.0;
  for (int j = 0; j < basis.size(); ++j) {
    const double term = sk_norm(E.apply(sigma_field.hadamard(basis.h_field(j))), idx);
    acc += term * term;
  }
  return std::sqrt(acc);
}

}  // namespace sgsim

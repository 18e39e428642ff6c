#include "sgsim/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "sgsim/rng.hpp"

namespace sgsim {

namespace {

// Stream tags keep the derived RNG streams of the different harnesses
// disjoint under one user seed.
constexpr std::uint64_t kStreamMc = 1;
constexpr std::uint64_t kStreamSweep = 2;
constexpr std::uint64_t kStreamIsometry = 3;
constexpr std::uint64_t kStreamCrosscheck = 4;

/// Real smooth random field with unit H^{z,ζ} norm: Gaussian-damped random
/// spectrum, spatial envelope, real part, then normalization.
Field unit_probe(const GridPtr& g, SobolevKatoIndex idx, std::uint64_t seed,
                 std::uint64_t salt) {
  const double xi_width = g->freq_max() / 7.0;
  const double x_width = g->half_width() / 7.0;
  std::vector<cplx> spec(g->size());
  std::vector<double> xi(static_cast<std::size_t>(g->dim()));
  for (std::size_t m = 0; m < spec.size(); ++m) {
    g->xi_at(m, xi);
    double r2 = 0.0;
    for (double c : xi) r2 += c * c;
    spec[m] = cplx(rng::normal(seed, salt, m, 0), rng::normal(seed, salt, m, 1)) *
              std::exp(-r2 / (2.0 * xi_width * xi_width));
  }
  Field rough = inverse_dft(Field(g, std::move(spec)));
  std::vector<cplx> vals(g->size());
  std::vector<double> x(static_cast<std::size_t>(g->dim()));
  for (std::size_t i = 0; i < vals.size(); ++i) {
    g->x_at(i, x);
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    vals[i] = cplx(rough[i].real() * std::exp(-r2 / (2.0 * x_width * x_width)), 0.0);
  }
  Field p(g, std::move(vals));
  const double n = sk_norm(p, idx);
  return p * cplx(1.0 / std::max(n, 1e-300), 0.0);
}

/// Propagator applications on the uniform time grid {0, Δt, …, nΔt}. For
/// time-independent frequency multipliers the kernel reduces to a per-lag
/// frequency factor, so a whole Picard sweep needs one forward and one
/// inverse transform per knot instead of one pair per (target, source)
/// combination. Everything here is const after construction and safe to
/// share across path workers.
class Engine {
 public:
  Engine(const CauchyProblemSpec& spec, int n_steps, double dt)
      : grid_(spec.u0.grid_ptr()),
        n_(n_steps),
        dt_(dt),
        prop_(PropagatorSymbol(spec.generator), grid_) {
    const bool time_indep = spec.generator.time_independent();
    fast_ = time_indep && spec.generator.structure() == SymbolStructure::multiplier;
    if (fast_) {
      const PropagatorSymbol& ps = prop_.symbol();
      std::vector<double> x0(static_cast<std::size_t>(grid_->dim()), 0.0);
      std::vector<double> xi(static_cast<std::size_t>(grid_->dim()));
      factors_.reserve(static_cast<std::size_t>(n_) + 1);
      for (int lag = 0; lag <= n_; ++lag) {
        std::vector<cplx> f(grid_->size());
        for (std::size_t m = 0; m < f.size(); ++m) {
          grid_->xi_at(m, xi);
          f[m] = ps.e0(lag * dt_, 0.0, x0, xi);
        }
        factors_.emplace_back(grid_, std::move(f));
      }
    } else if (time_indep) {
      appliers_.reserve(static_cast<std::size_t>(n_) + 1);
      for (int lag = 0; lag <= n_; ++lag)
        appliers_.push_back(prop_.applier(lag * dt_, 0.0));
    }
    time_indep_ = time_indep;
  }

  int n_steps() const { return n_; }
  double dt() const { return dt_; }
  const GridPtr& grid() const { return grid_; }

  /// E(t_i, t_k) u for one pair.
  Field apply_pair(int i, int k, const Field& u) const {
    if (fast_) return inverse_dft(forward_dft(u).hadamard(factors_[static_cast<std::size_t>(i - k)]));
    if (time_indep_) return appliers_[static_cast<std::size_t>(i - k)].apply(u);
    return prop_.applier(i * dt_, k * dt_).apply(u);
  }

  /// Free evolution of the initial state over every knot.
  std::vector<Field> v0_row(const Field& u0) const {
    std::vector<Field> row;
    row.reserve(static_cast<std::size_t>(n_) + 1);
    row.push_back(u0);  // E(0,0) is the identity by definition
    if (fast_) {
      const Field u0_hat = forward_dft(u0);
      for (int i = 1; i <= n_; ++i)
        row.push_back(inverse_dft(u0_hat.hadamard(factors_[static_cast<std::size_t>(i)])));
    } else {
      for (int i = 1; i <= n_; ++i) row.push_back(apply_pair(i, 0, u0));
    }
    return row;
  }

  /// out(t_i) = v0row[i] + Σ_{k<i} E(t_i, t_k) args[k].
  std::vector<Field> sweep(const std::vector<Field>& v0row,
                           const std::vector<Field>& args) const {
    std::vector<Field> out;
    out.reserve(static_cast<std::size_t>(n_) + 1);
    out.push_back(v0row[0]);
    if (fast_) {
      std::vector<Field> args_hat;
      args_hat.reserve(args.size());
      for (const Field& a : args) args_hat.push_back(forward_dft(a));
      for (int i = 1; i <= n_; ++i) {
        Field acc(grid_);
        for (int k = 0; k < i; ++k)
          acc = acc + args_hat[static_cast<std::size_t>(k)].hadamard(
                          factors_[static_cast<std::size_t>(i - k)]);
        out.push_back(v0row[static_cast<std::size_t>(i)] + inverse_dft(acc));
      }
      return out;
    }
    for (int i = 1; i <= n_; ++i) {
      Field acc = v0row[static_cast<std::size_t>(i)];
      for (int k = 0; k < i; ++k)
        acc = acc + apply_pair(i, k, args[static_cast<std::size_t>(k)]);
      out.push_back(std::move(acc));
    }
    return out;
  }

 private:
  GridPtr grid_;
  int n_;
  double dt_;
  Propagator prop_;
  bool fast_ = false;
  bool time_indep_ = true;
  std::vector<Field> factors_;             // fast path, by lag
  std::vector<PropagatorApplier> appliers_;  // generic time-independent, by lag
};

/// ΔW_k = Σ_j ĥ_j β_j^{(k)} for every step of the path.
std::vector<Field> synthesize_increments(const CameronMartinBasis& basis,
                                         const NoisePath& path) {
  const GridPtr& g = basis.grid();
  std::vector<Field> dw;
  dw.reserve(static_cast<std::size_t>(path.n_steps));
  for (int k = 0; k < path.n_steps; ++k) {
    std::vector<cplx> acc(g->size(), cplx(0.0, 0.0));
    const auto betas = path.step_increments(k);
    for (int j = 0; j < path.k_modes; ++j) {
      const double b = betas[static_cast<std::size_t>(j)];
      const Field& h = basis.h_field(j);
      for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += b * h[m];
    }
    dw.emplace_back(g, std::move(acc));
  }
  return dw;
}

/// Δt·γ(t_k, u(t_k)) + σ(t_k, u(t_k))·ΔW_k for every source knot.
std::vector<Field> map_arguments(const CauchyProblemSpec& spec, double dt,
                                 const std::vector<Field>& dw,
                                 const std::vector<Field>& u) {
  std::vector<Field> args;
  args.reserve(dw.size());
  for (std::size_t k = 0; k < dw.size(); ++k) {
    const double tk = static_cast<double>(k) * dt;
    const Field gk = apply_nemytskii(spec.gamma, tk, u[k]);
    const Field sk = apply_nemytskii(spec.sigma, tk, u[k]);
    args.push_back(gk * cplx(dt, 0.0) + sk.hadamard(dw[k]));
  }
  return args;
}

void check_path_against_basis(const NoisePath& path, const CameronMartinBasis& basis) {
  if (path.n_steps < 1 || path.dt <= 0.0)
    throw hypothesis_error("solver: noise path must have at least one positive step");
  if (path.k_modes != basis.size())
    throw hypothesis_error("solver: noise path mode count does not match the basis");
}

/// √(Σ_k Δt‖v_a(t_k) − v_b(t_k)‖²_{z,ζ}) over all knots.
double path_distance(const std::vector<Field>& a, const std::vector<Field>& b,
                     double dt, SobolevKatoIndex idx) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = sk_norm(a[k] - b[k], idx);
    sum += dt * d * d;
  }
  return std::sqrt(sum);
}

double estimate_T0_impl(const CauchyProblemSpec& spec, const SolverConfig& config,
                        const CameronMartinBasis& basis) {
  const OrderPair hyp = *spec.generator.hypo_order();
  const double ell = std::max(spec.kappa, spec.lambda);
  const double sup_integral =
      check_spectral_condition(spec.measure, spec.lambda, hyp.mu).value;

  double t0 = spec.horizon;
  for (int halvings = 0; halvings <= 60; ++halvings, t0 *= 0.5) {
    if (t0 < config.dt * (1.0 - 1e-12)) break;

    double c_gamma = 0.0, c_sigma = 0.0;
    for (int i = 0; i <= 8; ++i) {
      const double s = t0 * static_cast<double>(i) / 8.0;
      c_gamma = std::max(c_gamma, spec.gamma.modulus(s));
      c_sigma = std::max(c_sigma, spec.sigma.modulus(s));
    }
    const double certificate =
        c_gamma * c_gamma * std::pow(t0, 1.0 - 2.0 * spec.kappa) /
            (1.0 - 2.0 * spec.kappa) +
        c_sigma * c_sigma * std::pow(t0, 1.0 - 2.0 * ell) / (1.0 - 2.0 * ell) *
            (1.0 + sup_integral);
    if (certificate >= 1.0) continue;

    const double q = contraction_factor(spec, config, basis, t0, 5, 3,
                                        rng::combine(config.seed, kStreamSweep));
    if (q < 0.9) return t0;
  }
  std::ostringstream msg;
  msg << "solver: no contraction horizon at or above the time step " << config.dt
      << " (sweep started at " << spec.horizon << ")";
  throw convergence_error(msg.str());
}

/// Runs body(p) for p in [0, count) across the requested worker count.
/// Results must go into per-index slots; failures other than the listed
/// per-path ones are rethrown in index order after the join.
void parallel_paths(int count, int threads, const std::function<void(int)>& body) {
  const int nt = std::max(1, std::min(threads, count));
  if (nt == 1) {
    for (int p = 0; p < count; ++p) body(p);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  for (int w = 0; w < nt; ++w) {
    pool.emplace_back([&] {
      for (int p = next.fetch_add(1); p < count; p = next.fetch_add(1)) {
        try {
          body(p);
        } catch (...) {
          errors[static_cast<std::size_t>(p)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void validate_problem(const CauchyProblemSpec& spec) {
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon))
    throw hypothesis_error("problem: horizon must be positive and finite");
  if (!(spec.kappa >= 0.0 && spec.kappa < 0.5))
    throw hypothesis_error("problem: kappa must lie in [0, 1/2)");
  if (!(spec.lambda >= 0.0 && spec.lambda < 0.5))
    throw hypothesis_error("problem: lambda must lie in [0, 1/2)");
  if (!spec.generator.hypo_order())
    throw hypothesis_error("problem: generator must declare a parabolicity order");
  const OrderPair hyp = *spec.generator.hypo_order();
  if (!(hyp.mu > 0.0))
    throw hypothesis_error("problem: parabolicity order needs mu' > 0");
  if (!spec.u0.grid().compatible(*spec.measure.grid()))
    throw grid_mismatch_error("problem: initial state and measure use different grids");
  spec.u0.require_finite("initial state");

  const double tol = 1e-9;
  const double needed_z = spec.index.z - spec.kappa * hyp.m;
  const auto check_coefficient = [&](const NemytskiiFn& g, const char* name) {
    const LipParams& p = g.lip();
    const bool target_ok = p.z >= needed_z - tol && p.zeta >= spec.index.zeta - tol;
    const bool source_ok = p.z + p.r <= spec.index.z + tol &&
                           p.zeta + p.rho <= spec.index.zeta + tol;
    if (!target_ok || !source_ok) {
      std::ostringstream msg;
      msg << "problem: " << name << " mapping indices (" << p.z << ", " << p.zeta
          << ", " << p.r << ", " << p.rho << ") do not cover the required ("
          << needed_z << ", " << spec.index.zeta << ", " << spec.kappa * hyp.m
          << ", 0)";
      throw hypothesis_error(msg.str());
    }
  };
  check_coefficient(spec.gamma, "gamma");
  check_coefficient(spec.sigma, "sigma");

  const SpectralConditionReport sc =
      check_spectral_condition(spec.measure, spec.lambda, hyp.mu);
  if (!sc.admissible) {
    std::ostringstream msg;
    msg << "problem: spectral condition fails at lambda=" << spec.lambda
        << ", mu'=" << hyp.mu << " (growth " << sc.growth << ")";
    throw hypothesis_error(msg.str());
  }
}

void validate_config(const SolverConfig& config) {
  if (!(config.dt > 0.0) || !std::isfinite(config.dt))
    throw hypothesis_error("config: time step must be positive and finite");
  if (!(config.tolerance > 0.0))
    throw hypothesis_error("config: tolerance must be positive");
  if (config.k_modes < 1) throw hypothesis_error("config: need at least one noise mode");
  if (config.n_paths < 1) throw hypothesis_error("config: need at least one path");
  if (config.max_iterations < 1)
    throw hypothesis_error("config: need at least one iteration");
  if (config.threads < 1) throw hypothesis_error("config: need at least one thread");
}

std::vector<Field> picard_map(const CauchyProblemSpec& spec,
                              const SolverConfig& config,
                              const CameronMartinBasis& basis,
                              const NoisePath& path,
                              const std::vector<Field>& u) {
  validate_config(config);
  check_path_against_basis(path, basis);
  if (u.size() != static_cast<std::size_t>(path.n_steps) + 1)
    throw hypothesis_error("solver: state must carry one field per time knot");
  if (!spec.u0.grid().compatible(*basis.grid()))
    throw grid_mismatch_error("solver: initial state and noise basis grids differ");

  const Engine engine(spec, path.n_steps, path.dt);
  const std::vector<Field> v0row = engine.v0_row(spec.u0);
  const std::vector<Field> dw = synthesize_increments(basis, path);
  return engine.sweep(v0row, map_arguments(spec, path.dt, dw, u));
}

PathSolution solve_path(const CauchyProblemSpec& spec, const SolverConfig& config,
                        const CameronMartinBasis& basis, const NoisePath& path) {
  validate_config(config);
  check_path_against_basis(path, basis);
  if (!spec.u0.grid().compatible(*basis.grid()))
    throw grid_mismatch_error("solver: initial state and noise basis grids differ");

  const Engine engine(spec, path.n_steps, path.dt);
  const std::vector<Field> v0row = engine.v0_row(spec.u0);
  const std::vector<Field> dw = synthesize_increments(basis, path);

  PathSolution out;
  out.times.reserve(v0row.size());
  for (int k = 0; k <= path.n_steps; ++k) out.times.push_back(k * path.dt);

  std::vector<Field> u = v0row;
  for (int m = 1; m <= config.max_iterations; ++m) {
    std::vector<Field> next =
        engine.sweep(v0row, map_arguments(spec, path.dt, dw, u));
    double residual = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k)
      residual = std::max(residual, sk_norm(next[k] - u[k], spec.index));
    out.residuals.push_back(residual);
    out.iterations = m;
    u = std::move(next);
    if (residual <= config.tolerance) {
      out.converged = true;
      break;
    }
  }
  for (std::size_t m = 1; m < out.residuals.size(); ++m)
    if (out.residuals[m - 1] > config.tolerance)
      out.q_hat = std::max(out.q_hat, out.residuals[m] / out.residuals[m - 1]);
  out.u = std::move(u);
  return out;
}

double contraction_factor(const CauchyProblemSpec& spec, const SolverConfig& config,
                          const CameronMartinBasis& basis, double t0, int n_pairs,
                          int n_paths, std::uint64_t stream) {
  validate_config(config);
  if (!(t0 > 0.0)) throw hypothesis_error("solver: contraction horizon must be positive");
  if (n_pairs < 1 || n_paths < 1)
    throw hypothesis_error("solver: contraction probe counts must be positive");

  const int n = std::max(1, static_cast<int>(std::ceil(t0 / config.dt - 1e-9)));
  const Engine engine(spec, n, config.dt);
  const std::vector<Field> v0row = engine.v0_row(spec.u0);
  const double amp = 0.5 * std::max(sk_norm(spec.u0, spec.index), 1e-3);
  const GridPtr& g = engine.grid();

  // Probe pairs are perturbations of the free evolution at the source knots
  // (the last knot never feeds the map, so it stays unperturbed).
  std::vector<std::pair<std::vector<Field>, std::vector<Field>>> pairs;
  pairs.reserve(static_cast<std::size_t>(n_pairs));
  for (int pr = 0; pr < n_pairs; ++pr) {
    const std::uint64_t sa = rng::combine(stream, 2u * static_cast<std::uint64_t>(pr));
    const std::uint64_t sb = rng::combine(stream, 2u * static_cast<std::uint64_t>(pr) + 1u);
    std::vector<Field> ua = v0row, ub = v0row;
    for (int k = 0; k < n; ++k) {
      ua[static_cast<std::size_t>(k)] =
          v0row[static_cast<std::size_t>(k)] +
          unit_probe(g, spec.index, sa, static_cast<std::uint64_t>(k)) * cplx(amp, 0.0);
      ub[static_cast<std::size_t>(k)] =
          v0row[static_cast<std::size_t>(k)] +
          unit_probe(g, spec.index, sb, static_cast<std::uint64_t>(k)) * cplx(amp, 0.0);
    }
    pairs.emplace_back(std::move(ua), std::move(ub));
  }

  double worst = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    const NoisePath path = sample_increments(
        basis, n, config.dt, rng::combine(stream, 0x50000u + static_cast<std::uint64_t>(p)));
    const std::vector<Field> dw = synthesize_increments(basis, path);
    for (const auto& [ua, ub] : pairs) {
      const std::vector<Field> ta =
          engine.sweep(v0row, map_arguments(spec, config.dt, dw, ua));
      const std::vector<Field> tb =
          engine.sweep(v0row, map_arguments(spec, config.dt, dw, ub));
      const double den = path_distance(ua, ub, config.dt, spec.index);
      const double num = path_distance(ta, tb, config.dt, spec.index);
      if (den > 0.0) worst = std::max(worst, num / den);
    }
  }
  return worst;
}

double estimate_T0(const CauchyProblemSpec& spec, const SolverConfig& config) {
  validate_problem(spec);
  validate_config(config);
  const CameronMartinBasis basis = build_basis(spec.measure, config.k_modes);
  return estimate_T0_impl(spec, config, basis);
}

MomentReport mc_moments(const CauchyProblemSpec& spec, const SolverConfig& config) {
  validate_problem(spec);
  validate_config(config);
  const CameronMartinBasis basis = build_basis(spec.measure, config.k_modes);
  const double t0 = estimate_T0_impl(spec, config, basis);
  const int n = std::max(1, static_cast<int>(std::ceil(t0 / config.dt - 1e-9)));

  const int paths = config.n_paths;
  const std::size_t knots = static_cast<std::size_t>(n) + 1;
  std::vector<std::vector<double>> sq(static_cast<std::size_t>(paths));
  std::vector<double> qh(static_cast<std::size_t>(paths), 0.0);
  std::vector<char> failed(static_cast<std::size_t>(paths), 0);
  const std::uint64_t stream = rng::combine(config.seed, kStreamMc);

  parallel_paths(paths, config.threads, [&](int p) {
    const NoisePath path = sample_increments(
        basis, n, config.dt, rng::combine(stream, static_cast<std::uint64_t>(p)));
    try {
      PathSolution sol = solve_path(spec, config, basis, path);
      if (!sol.converged) {
        failed[static_cast<std::size_t>(p)] = 1;
        return;
      }
      std::vector<double> row(knots);
      for (std::size_t k = 0; k < knots; ++k) {
        const double v = sk_norm(sol.u[k], spec.index);
        row[k] = v * v;
      }
      sq[static_cast<std::size_t>(p)] = std::move(row);
      qh[static_cast<std::size_t>(p)] = sol.q_hat;
    } catch (const locality_error&) {
      failed[static_cast<std::size_t>(p)] = 1;
    } catch (const nonfinite_error&) {
      failed[static_cast<std::size_t>(p)] = 1;
    }
  });

  MomentReport rep;
  rep.t0 = t0;
  rep.n_paths_requested = paths;
  for (int k = 0; k <= n; ++k) rep.times.push_back(k * config.dt);
  for (int p = 0; p < paths; ++p) rep.n_failures += failed[static_cast<std::size_t>(p)];
  rep.n_paths_used = paths - rep.n_failures;
  if (rep.n_failures * 10 > paths) {
    std::ostringstream msg;
    msg << "solver: " << rep.n_failures << " of " << paths
        << " paths failed to converge (limit is 10%)";
    throw convergence_error(msg.str());
  }

  rep.mean_sq.assign(knots, 0.0);
  rep.se.assign(knots, 0.0);
  for (int p = 0; p < paths; ++p) {
    if (failed[static_cast<std::size_t>(p)]) continue;
    rep.worst_q_hat = std::max(rep.worst_q_hat, qh[static_cast<std::size_t>(p)]);
    for (std::size_t k = 0; k < knots; ++k)
      rep.mean_sq[k] += sq[static_cast<std::size_t>(p)][k];
  }
  for (std::size_t k = 0; k < knots; ++k) rep.mean_sq[k] /= rep.n_paths_used;
  if (rep.n_paths_used > 1) {
    for (int p = 0; p < paths; ++p) {
      if (failed[static_cast<std::size_t>(p)]) continue;
      for (std::size_t k = 0; k < knots; ++k) {
        const double d = sq[static_cast<std::size_t>(p)][k] - rep.mean_sq[k];
        rep.se[k] += d * d;
      }
    }
    for (std::size_t k = 0; k < knots; ++k)
      rep.se[k] = std::sqrt(rep.se[k] / (rep.n_paths_used - 1) / rep.n_paths_used);
  }
  return rep;
}

IsometryReport ito_isometry_test(const CauchyProblemSpec& spec,
                                 const SolverConfig& config,
                                 const std::vector<OperatorStep>& phi) {
  validate_config(config);
  if (phi.empty()) throw hypothesis_error("isometry: step process must have steps");
  for (const OperatorStep& s : phi)
    if (!s.apply) throw hypothesis_error("isometry: empty step operator");

  const CameronMartinBasis basis = build_basis(spec.measure, config.k_modes);
  const int n = static_cast<int>(phi.size());
  const double dt = config.dt;

  double exact = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < basis.size(); ++j) {
      const double v = sk_norm(phi[static_cast<std::size_t>(k)].apply(basis.h_field(j)),
                               spec.index);
      exact += dt * v * v;
    }

  const int paths = config.n_paths;
  std::vector<double> vals(static_cast<std::size_t>(paths), 0.0);
  const std::uint64_t stream = rng::combine(config.seed, kStreamIsometry);
  parallel_paths(paths, config.threads, [&](int p) {
    const NoisePath path = sample_increments(
        basis, n, dt, rng::combine(stream, static_cast<std::uint64_t>(p)));
    const std::vector<Field> dw = synthesize_increments(basis, path);
    Field x(basis.grid());
    for (int k = 0; k < n; ++k)
      x = x + phi[static_cast<std::size_t>(k)].apply(dw[static_cast<std::size_t>(k)]);
    const double v = sk_norm(x, spec.index);
    vals[static_cast<std::size_t>(p)] = v * v;
  });

  IsometryReport rep;
  rep.n_paths = paths;
  rep.exact_sum = exact;
  for (double v : vals) rep.mc_mean += v;
  rep.mc_mean /= paths;
  if (paths > 1) {
    double var = 0.0;
    for (double v : vals) var += (v - rep.mc_mean) * (v - rep.mc_mean);
    rep.mc_se = std::sqrt(var / (paths - 1) / paths);
  }
  rep.pass = std::abs(rep.mc_mean - rep.exact_sum) <= 4.0 * rep.mc_se;
  return rep;
}

CrosscheckReport linear_crosscheck(const CauchyProblemSpec& spec,
                                   const SolverConfig& config) {
  validate_problem(spec);
  validate_config(config);
  if (spec.gamma.depends_on_state() || spec.sigma.depends_on_state())
    throw hypothesis_error(
        "crosscheck: coefficients must not depend on the state "
        "(declare state independence if the callables ignore it)");

  const SpectralMeasure& M = spec.measure;
  const GridPtr& g = M.grid();
  double density_mass = 0.0;
  for (double r : M.density()) density_mass += r;
  const bool has_density = density_mass > 0.0;
  const bool has_atoms = !M.atoms().empty();
  if (has_density && has_atoms)
    throw hypothesis_error(
        "crosscheck: supports absolutely continuous or purely atomic measures, "
        "not mixtures");

  const CameronMartinBasis basis = build_basis(M, config.k_modes);
  const int n = std::max(
      1, static_cast<int>(std::llround(spec.horizon / config.dt)));
  const double dt = config.dt;
  const Engine engine(spec, n, dt);
  const std::uint64_t stream = rng::combine(config.seed, kStreamCrosscheck);
  const double dxi_d = std::pow(g->freq_spacing(), g->dim());
  const double two_pi_d = std::pow(2.0 * std::numbers::pi, g->dim());
  const Field zero_state(g);

  Field va(g), vb(g);
  for (int k = 0; k < n; ++k) {
    const Field sigma_k = apply_nemytskii(spec.sigma, k * dt, zero_state);

    // One realization of the step increment, drawn per canonical frequency
    // (mirror pairs share a value, so the field is even and real).
    Field delta_xi(g);
    std::vector<double> beta(static_cast<std::size_t>(basis.size()), 0.0);
    if (has_density) {
      const auto rho = M.density();
      std::vector<double> phi(g->size(), 0.0);
      for (std::size_t m = 0; m < phi.size(); ++m) {
        if (touches_nyquist(*g, m)) continue;
        const std::size_t mirror = mirror_index(*g, m);
        if (m > mirror) continue;
        if (!(rho[m] > 0.0)) continue;
        const double var = (m == mirror) ? dt / (dxi_d * rho[m])
                                         : dt / (2.0 * dxi_d * rho[m]);
        const double draw = std::sqrt(var) *
                            rng::normal(stream, 0, static_cast<std::uint64_t>(k), m);
        phi[m] = draw;
        phi[mirror] = draw;
      }
      std::vector<cplx> spec_vals(g->size());
      for (std::size_t m = 0; m < spec_vals.size(); ++m)
        spec_vals[m] = cplx(phi[m] * rho[m], 0.0);
      delta_xi = inverse_dft(Field(g, std::move(spec_vals))) * cplx(two_pi_d, 0.0);
      for (int j = 0; j < basis.size(); ++j) {
        double acc = 0.0;
        for (std::size_t m = 0; m < phi.size(); ++m)
          if (rho[m] > 0.0) acc += phi[m] * basis.f_value(j, m) * rho[m];
        beta[static_cast<std::size_t>(j)] = dxi_d * acc;
      }
    } else {
      const auto& atoms = M.atoms();
      std::vector<double> phi(atoms.size(), 0.0);
      for (std::size_t a = 0; a < atoms.size(); ++a) {
        // Canonical member of the mirror pair: the lowest index whose
        // location is the negation of this one.
        std::size_t mirror = a;
        for (std::size_t b = 0; b < atoms.size(); ++b) {
          bool neg = true;
          for (std::size_t c = 0; c < atoms[a].location.size(); ++c)
            if (std::abs(atoms[b].location[c] + atoms[a].location[c]) > 1e-12)
              neg = false;
          if (neg) {
            mirror = b;
            break;
          }
        }
        if (a > mirror) continue;
        const double var = (a == mirror) ? dt / atoms[a].mass
                                         : dt / (2.0 * atoms[a].mass);
        const double draw = std::sqrt(var) *
                            rng::normal(stream, 0, static_cast<std::uint64_t>(k), a);
        phi[a] = draw;
        phi[mirror] = draw;
      }
      std::vector<cplx> vals(g->size(), cplx(0.0, 0.0));
      std::vector<double> x(static_cast<std::size_t>(g->dim()));
      for (std::size_t i = 0; i < vals.size(); ++i) {
        g->x_at(i, x);
        cplx acc(0.0, 0.0);
        for (std::size_t a = 0; a < atoms.size(); ++a) {
          double dot = 0.0;
          for (std::size_t c = 0; c < x.size(); ++c)
            dot += x[c] * atoms[a].location[c];
          acc += atoms[a].mass * phi[a] * std::exp(cplx(0.0, dot));
        }
        vals[i] = acc;
      }
      delta_xi = Field(g, std::move(vals));
      for (int j = 0; j < basis.size(); ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < atoms.size(); ++a)
          acc += atoms[a].mass * phi[a] * basis.f_at(j, atoms[a].location);
        beta[static_cast<std::size_t>(j)] = acc;
      }
    }

    Field dw(g);
    for (int j = 0; j < basis.size(); ++j)
      dw = dw + basis.h_field(j) * cplx(beta[static_cast<std::size_t>(j)], 0.0);

    va = va + engine.apply_pair(n, k, sigma_k.hadamard(dw));
    vb = vb + engine.apply_pair(n, k, sigma_k.hadamard(delta_xi));
  }

  CrosscheckReport rep;
  rep.k_modes = basis.size();
  rep.expansion_norm = va.l2_norm();
  rep.synthesis_norm = vb.l2_norm();
  const double gap = (va - vb).l2_norm();
  rep.rel_l2 = rep.synthesis_norm > 1e-300 ? gap / rep.synthesis_norm : 0.0;
  rep.pass = rep.rel_l2 < 0.01;
  return rep;
}

}  // namespace sgsim

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "sgsim/solver.hpp"
#include "test_common.hpp"

using namespace sgsim;
using testing::gaussian;
using testing::random_smooth_field;
using testing::rel_l2_diff;

namespace {

SgSymbol heat_generator(double c = 1.0) {
  SgSymbol a = SgSymbol::multiplier(
      [c](double, std::span<const double> xi) {
        const double b = bracket(xi);
        return cplx(c * b * b, 0.0);
      },
      {0.0, 2.0});
  a.set_hypo_order({0.0, 2.0});
  return a;
}

/// Vanishing generator with a declared order: the propagator degenerates to
/// the identity, which isolates the stochastic sum in the mild formula.
SgSymbol zero_generator() {
  SgSymbol a = SgSymbol::multiplier(
      [](double, std::span<const double>) { return cplx(0.0, 0.0); }, {0.0, 0.0});
  a.set_hypo_order({0.0, 2.0});
  return a;
}

NemytskiiFn zero_fn() {
  return NemytskiiFn::from_expr_text("0", {0.0, 0.0, 0.0, 0.0}, 0.0);
}

NemytskiiFn expr_fn(const std::string& text, LipParams lip, double modulus) {
  return NemytskiiFn::from_expr_text(text, lip, modulus);
}

SpectralMeasure delta0(GridPtr g, double mass = 1.0) {
  return SpectralMeasure::atoms_only(
      std::move(g), {{std::vector<double>(1, 0.0), mass}});
}

SpectralMeasure cauchy_measure(GridPtr g) {
  return SpectralMeasure::from_density_expr(std::move(g), "<xi>^-2");
}

double sup_knot_distance(const std::vector<Field>& a, const std::vector<Field>& b,
                         SobolevKatoIndex idx) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, sk_norm(a[k] - b[k], idx));
  return worst;
}

}  // namespace

TEST_CASE("zero coefficients reduce the map to free evolution") {
  auto g = make_grid(1, 64, 8.0);
  const Field u0 = gaussian(g);
  CauchyProblemSpec spec{heat_generator(), zero_fn(), zero_fn(),
                         u0,               delta0(g), 0.4};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, cfg.k_modes);
  const NoisePath path = sample_increments(basis, 8, cfg.dt, 3);

  std::vector<Field> ua, ub;
  for (int k = 0; k <= 8; ++k) {
    ua.push_back(random_smooth_field(g, 100 + k));
    ub.push_back(random_smooth_field(g, 200 + k));
  }
  const std::vector<Field> ta = picard_map(spec, cfg, basis, path, ua);
  const std::vector<Field> tb = picard_map(spec, cfg, basis, path, ub);

  // With γ = σ = 0 the map ignores its argument entirely.
  REQUIRE(ta.size() == 9);
  for (int k = 0; k <= 8; ++k) CHECK((ta[k] - tb[k]).max_abs() == 0.0);

  // And its value is the freely propagated initial state.
  const Propagator P(PropagatorSymbol(spec.generator), g);
  CHECK((ta[0] - u0).max_abs() == 0.0);
  for (int k = 1; k <= 8; ++k)
    CHECK(rel_l2_diff(ta[k], P.propagate(k * cfg.dt, 0.0, u0)) < 1e-12);
}

TEST_CASE("zero coefficients: one sweep converges and the full horizon survives") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{heat_generator(), zero_fn(), zero_fn(),
                         gaussian(g),      delta0(g), 0.8};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, cfg.k_modes);
  const NoisePath path = sample_increments(basis, 16, cfg.dt, 11);

  const PathSolution sol = solve_path(spec, cfg, basis, path);
  CHECK(sol.converged);
  CHECK(sol.iterations == 1);
  REQUIRE(sol.residuals.size() == 1);
  CHECK(sol.residuals[0] == 0.0);
  CHECK(sol.q_hat == 0.0);
  REQUIRE(sol.times.size() == 17);
  CHECK(sol.times[16] == doctest::Approx(0.8).epsilon(1e-14));

  // No forcing and no noise: nothing can shorten the contraction window.
  CHECK(estimate_T0(spec, cfg) == 0.8);
}

TEST_CASE("state-independent coefficients converge in exactly two sweeps") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{heat_generator(),
                         expr_fn("<x>^-2", {0.0, 0.0, 0.0, 0.0}, 1.0),
                         expr_fn("0.4", {0.0, 0.0, 0.0, 0.0}, 0.4),
                         gaussian(g),
                         delta0(g),
                         0.5};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, cfg.k_modes);
  const NoisePath path = sample_increments(basis, 10, cfg.dt, 17);

  const PathSolution sol = solve_path(spec, cfg, basis, path);
  CHECK(sol.converged);
  CHECK(sol.iterations == 2);
  REQUIRE(sol.residuals.size() == 2);
  CHECK(sol.residuals[0] > cfg.tolerance);
  // The second sweep reuses identical arguments, so it reproduces the first
  // result bit for bit.
  CHECK(sol.residuals[1] == 0.0);
  CHECK(sol.q_hat == 0.0);
}

TEST_CASE("drift-only paths match the mild-solution quadrature") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{heat_generator(),
                         expr_fn("<x>^-2", {0.0, 0.0, 0.0, 0.0}, 1.0),
                         zero_fn(),
                         gaussian(g),
                         delta0(g),
                         0.2};
  SolverConfig cfg;
  cfg.dt = 0.02;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, cfg.k_modes);
  const int n = 10;
  const NoisePath path = sample_increments(basis, n, cfg.dt, 23);
  const PathSolution sol = solve_path(spec, cfg, basis, path);
  REQUIRE(sol.converged);

  const Propagator P(PropagatorSymbol(spec.generator), g);
  const Field kappa_field = apply_nemytskii(spec.gamma, 0.0, Field(g));
  const auto forcing = [&](double) { return kappa_field; };
  std::vector<double> t_grid;
  for (int k = 1; k <= n; ++k) t_grid.push_back(k * cfg.dt);

  // Left-endpoint quadrature without refinement is the solver's own Riemann
  // sum, so the two constructions agree to rounding.
  const std::vector<Field> same_rule =
      duhamel_solve(P, spec.u0, forcing, 0.0, t_grid, TimeRule::left_endpoint, 1);
  for (int k = 1; k <= n; ++k)
    CHECK(rel_l2_diff(sol.u[static_cast<std::size_t>(k)], same_rule[k - 1]) < 1e-10);

  // A refined Simpson rule bounds the left-endpoint time-stepping error.
  const std::vector<Field> accurate =
      duhamel_solve(P, spec.u0, forcing, 0.0, t_grid, TimeRule::simpson, 16);
  for (int k = 1; k <= n; ++k)
    CHECK(rel_l2_diff(sol.u[static_cast<std::size_t>(k)], accurate[k - 1]) < 0.05);
}

TEST_CASE("multiplier fast path agrees with the dense operator route") {
  auto g = make_grid(1, 64, 8.0);
  // Same frequency symbol, once with the multiplier structure and once as an
  // opaque general symbol that forces the dense operator representation.
  SgSymbol dense = SgSymbol::general(
      [](double, std::span<const double>, std::span<const double> xi) {
        const double b = bracket(xi);
        return cplx(b * b, 0.0);
      },
      {0.0, 2.0});
  dense.set_hypo_order({0.0, 2.0});

  const Field u0 = gaussian(g);
  CauchyProblemSpec fast_spec{heat_generator(),
                              expr_fn("<x>^-2", {0.0, 0.0, 0.0, 0.0}, 1.0),
                              expr_fn("0.4", {0.0, 0.0, 0.0, 0.0}, 0.4),
                              u0,
                              delta0(g),
                              0.3};
  CauchyProblemSpec dense_spec = fast_spec;
  dense_spec.generator = dense;

  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(fast_spec.measure, cfg.k_modes);
  const NoisePath path = sample_increments(basis, 6, cfg.dt, 29);
  std::vector<Field> u;
  for (int k = 0; k <= 6; ++k) u.push_back(random_smooth_field(g, 300 + k));

  const std::vector<Field> via_fast = picard_map(fast_spec, cfg, basis, path, u);
  const std::vector<Field> via_dense = picard_map(dense_spec, cfg, basis, path, u);
  for (int k = 0; k <= 6; ++k)
    CHECK(rel_l2_diff(via_fast[static_cast<std::size_t>(k)],
                      via_dense[static_cast<std::size_t>(k)]) < 1e-10);
}

TEST_CASE("moments of the driftless problem grow like the truncated wiener field") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{zero_generator(),
                         zero_fn(),
                         expr_fn("1", {0.0, 0.0, 0.0, 0.0}, 1.0),
                         Field(g),
                         delta0(g),
                         0.25};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  cfg.n_paths = 400;
  cfg.threads = 2;
  cfg.seed = 7;

  const MomentReport rep = mc_moments(spec, cfg);
  CHECK(rep.t0 == 0.25);
  REQUIRE(rep.times.size() == 6);
  CHECK(rep.n_paths_used == 400);
  CHECK(rep.n_failures == 0);
  CHECK(rep.worst_q_hat == 0.0);

  const CameronMartinBasis basis = build_basis(spec.measure, 1);
  const double mode_sq = std::pow(sk_norm(basis.h_field(0), spec.index), 2);
  CHECK(rep.mean_sq[0] == 0.0);
  for (std::size_t k = 1; k < rep.times.size(); ++k) {
    const double exact = rep.times[k] * mode_sq;  // E‖W(t)‖² = t‖ĥ‖²
    CHECK(std::abs(rep.mean_sq[k] - exact) <= 4.0 * rep.se[k]);
  }
}

TEST_CASE("dissipative linear dynamics reproduce the discrete variance recursion") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{heat_generator(),
                         zero_fn(),
                         expr_fn("1", {0.0, 0.0, 0.0, 0.0}, 1.0),
                         Field(g),
                         delta0(g),
                         0.4};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  cfg.n_paths = 600;
  cfg.threads = 3;
  cfg.seed = 41;

  const MomentReport rep = mc_moments(spec, cfg);
  CHECK(rep.t0 == 0.4);
  REQUIRE(rep.times.size() == 9);
  CHECK(rep.n_failures == 0);

  // The point-mass mode is constant in x, so the generator acts on it by
  // e^{−(t−s)} exactly (the weight at frequency zero is one) and the state is
  // a scalar Ornstein–Uhlenbeck process scaled by the mode field.
  const CameronMartinBasis basis = build_basis(spec.measure, 1);
  const double mode_sq = std::pow(sk_norm(basis.h_field(0), spec.index), 2);
  for (std::size_t i = 1; i < rep.times.size(); ++i) {
    double discrete = 0.0;
    for (std::size_t k = 0; k < i; ++k)
      discrete += cfg.dt * std::exp(-2.0 * (rep.times[i] - rep.times[k]));
    const double exact = discrete * mode_sq;
    CHECK(std::abs(rep.mean_sq[i] - exact) <= 4.0 * rep.se[i]);
    // The continuous-time variance (1 − e^{−2t})/2 is the Δt → 0 limit.
    const double continuum = 0.5 * (1.0 - std::exp(-2.0 * rep.times[i])) * mode_sq;
    CHECK(rep.mean_sq[i] == doctest::Approx(continuum).epsilon(0.15));
  }
}

TEST_CASE("contraction factor scales with the window for a linear drift") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{zero_generator(),
                         expr_fn("1.2 * u", {0.0, 0.0, 0.0, 0.0}, 1.2),
                         zero_fn(),
                         gaussian(g),
                         delta0(g),
                         0.4};
  SolverConfig cfg;
  cfg.dt = 0.0125;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, cfg.k_modes);

  const double q_full = contraction_factor(spec, cfg, basis, 0.2, 4, 2, 5);
  const double q_half = contraction_factor(spec, cfg, basis, 0.1, 4, 2, 5);
  CHECK(q_full > 0.0);
  CHECK(q_full < 0.9);
  // Δt·Σ_{k<i} is a Volterra sum: its discrete L²-in-time norm is linear in
  // the window, so halving the window halves the factor up to O(Δt/T) terms.
  CHECK(q_full / q_half > 1.4);
  CHECK(q_full / q_half < 2.6);
}

TEST_CASE("estimated window shrinks as the noise singularity index grows") {
  auto g = make_grid(1, 64, 8.0);
  const double c = std::sqrt(0.045);
  SolverConfig cfg;
  cfg.dt = 0.02;
  cfg.k_modes = 4;
  cfg.seed = 3;

  const auto window_at = [&](double lambda) {
    CauchyProblemSpec spec{heat_generator(),
                           zero_fn(),
                           expr_fn(std::to_string(c), {0.0, 0.0, 0.0, 0.0}, c),
                           gaussian(g),
                           cauchy_measure(g),
                           1.0};
    spec.lambda = lambda;
    return estimate_T0(spec, cfg);
  };

  const double t_mild = window_at(0.1);
  const double t_mid = window_at(0.3);
  const double t_sharp = window_at(0.45);
  CHECK(t_mild >= t_mid);
  CHECK(t_mid >= t_sharp);
  CHECK(t_mild > t_sharp);  // the ends of the sweep must separate
  CHECK(t_sharp >= cfg.dt);
}

TEST_CASE("no window above the step raises a convergence error") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{heat_generator(),
                         zero_fn(),
                         expr_fn("40", {0.0, 0.0, 0.0, 0.0}, 40.0),
                         gaussian(g),
                         delta0(g),
                         0.1};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  CHECK_THROWS_AS(estimate_T0(spec, cfg), convergence_error);
}

TEST_CASE("cubic damping has a unique fixed point reached from any start") {
  auto g = make_grid(1, 64, 8.0);
  NemytskiiFn cubic =
      expr_fn("0 - (0.8 * u^3)", {0.0, 1.0, 0.0, 0.0}, 5.0);
  cubic.restrict_to_ball(20.0, Field(g));
  CauchyProblemSpec spec{heat_generator(),
                         cubic,
                         expr_fn("0.1", {0.0, 1.0, 0.0, 0.0}, 0.1),
                         gaussian(g) * cplx(0.2, 0.0),
                         delta0(g),
                         0.5,
                         {0.0, 1.0}};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, cfg.k_modes);
  const NoisePath path = sample_increments(basis, 10, cfg.dt, 31);

  const PathSolution sol = solve_path(spec, cfg, basis, path);
  REQUIRE(sol.converged);
  CHECK(sol.q_hat < 1.0);

  // Applying the map once more moves the fixed point by at most one residual
  // on each side of the last iterate.
  const std::vector<Field> once = picard_map(spec, cfg, basis, path, sol.u);
  CHECK(sup_knot_distance(once, sol.u, spec.index) <= 2.0 * cfg.tolerance);

  // Iterating from unrelated starting rows lands on the same fixed point.
  const auto iterate_from = [&](std::vector<Field> u) {
    for (int m = 0; m < cfg.max_iterations; ++m) {
      std::vector<Field> next = picard_map(spec, cfg, basis, path, u);
      const double r = sup_knot_distance(next, u, spec.index);
      u = std::move(next);
      if (r <= cfg.tolerance) break;
    }
    return u;
  };
  const std::vector<Field> from_zero =
      iterate_from(std::vector<Field>(11, Field(g)));
  std::vector<Field> doubled;
  for (int k = 0; k <= 10; ++k) doubled.push_back(sol.u[0] * cplx(2.0, 0.0));
  const std::vector<Field> from_doubled = iterate_from(doubled);
  CHECK(sup_knot_distance(from_zero, sol.u, spec.index) <= 2.0 * cfg.tolerance);
  CHECK(sup_knot_distance(from_doubled, sol.u, spec.index) <= 2.0 * cfg.tolerance);
}

TEST_CASE("widespread nonconvergence aborts the moment run") {
  auto g = make_grid(1, 64, 8.0);
  CauchyProblemSpec spec{zero_generator(),
                         expr_fn("0.3 * u", {0.0, 0.0, 0.0, 0.0}, 0.3),
                         zero_fn(),
                         gaussian(g),
                         delta0(g),
                         0.5};
  SolverConfig cfg;
  cfg.dt = 0.1;
  cfg.k_modes = 1;
  cfg.n_paths = 10;
  cfg.max_iterations = 1;  // no path can reach the fixed point in one sweep
  CHECK_THROWS_WITH_AS(mc_moments(spec, cfg),
                       doctest::Contains("paths failed"), convergence_error);
}

TEST_CASE("locality violations surface with the offending time") {
  auto g = make_grid(1, 64, 8.0);
  NemytskiiFn tight = expr_fn("u^2", {0.0, 1.0, 0.0, 0.0}, 1.0);
  tight.restrict_to_ball(1e-6, Field(g));
  CauchyProblemSpec spec{heat_generator(),
                         zero_fn(),
                         tight,
                         gaussian(g),
                         delta0(g),
                         0.5,
                         {0.0, 1.0}};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, cfg.k_modes);
  const NoisePath path = sample_increments(basis, 4, cfg.dt, 37);
  std::vector<Field> u(5, gaussian(g));
  CHECK_THROWS_WITH_AS(picard_map(spec, cfg, basis, path, u),
                       doctest::Contains("outside the certified ball"),
                       locality_error);
}

TEST_CASE("moment reduction is invariant under threading and sensitive to seeds") {
  auto g = make_grid(1, 32, 6.0);
  CauchyProblemSpec spec{zero_generator(),
                         zero_fn(),
                         expr_fn("1", {0.0, 0.0, 0.0, 0.0}, 1.0),
                         Field(g),
                         delta0(g),
                         0.2};
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.k_modes = 1;
  cfg.n_paths = 60;
  cfg.seed = 99;

  cfg.threads = 1;
  const MomentReport serial = mc_moments(spec, cfg);
  cfg.threads = 4;
  const MomentReport threaded = mc_moments(spec, cfg);
  REQUIRE(serial.mean_sq.size() == threaded.mean_sq.size());
  for (std::size_t k = 0; k < serial.mean_sq.size(); ++k) {
    CHECK(serial.mean_sq[k] == threaded.mean_sq[k]);
    CHECK(serial.se[k] == threaded.se[k]);
  }

  cfg.seed = 100;
  const MomentReport other = mc_moments(spec, cfg);
  double shift = 0.0;
  for (std::size_t k = 0; k < other.mean_sq.size(); ++k)
    shift = std::max(shift, std::abs(other.mean_sq[k] - serial.mean_sq[k]));
  CHECK(shift > 0.0);
}

TEST_CASE("stochastic sums satisfy the ito isometry for linear steps") {
  auto g = make_grid(1, 32, 6.0);
  CauchyProblemSpec spec{heat_generator(),
                         zero_fn(),
                         expr_fn("1", {0.0, 0.0, 0.0, 0.0}, 1.0),
                         Field(g),
                         cauchy_measure(g),
                         0.3};
  SolverConfig cfg;
  cfg.dt = 0.1;
  cfg.k_modes = 6;
  cfg.n_paths = 3000;
  cfg.threads = 4;
  cfg.seed = 13;

  const Propagator P(PropagatorSymbol(spec.generator), g);
  auto half_step = std::make_shared<PropagatorApplier>(P.applier(0.3, 0.1));
  const Field damp = Field::from_function(g, [](std::span<const double> x) {
    return cplx(1.0 / bracket(x), 0.0);
  });
  std::vector<OperatorStep> phi;
  phi.push_back({[](const Field& f) { return f * cplx(0.7, 0.0); }});
  phi.push_back({[half_step](const Field& f) { return half_step->apply(f); }});
  phi.push_back({[damp](const Field& f) { return damp.hadamard(f); }});

  const IsometryReport rep = ito_isometry_test(spec, cfg, phi);
  CHECK(rep.exact_sum > 0.0);
  CHECK(rep.mc_se > 0.0);
  CHECK(rep.pass);

  // The degenerate integrand passes through the same inequality.
  std::vector<OperatorStep> zero_steps(
      2, OperatorStep{[g](const Field&) { return Field(g); }});
  const IsometryReport zero_rep = ito_isometry_test(spec, cfg, zero_steps);
  CHECK(zero_rep.exact_sum == 0.0);
  CHECK(zero_rep.mc_mean == 0.0);
  CHECK(zero_rep.pass);

  CHECK_THROWS_AS(ito_isometry_test(spec, cfg, {}), hypothesis_error);
  CHECK_THROWS_AS(ito_isometry_test(spec, cfg, std::vector<OperatorStep>(1)),
                  hypothesis_error);
}

TEST_CASE("noise route crosscheck: exact cases and truncation decay") {
  auto g = make_grid(1, 64, 8.0);
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.seed = 21;

  // Without diffusion both routes produce the zero field.
  CauchyProblemSpec silent{heat_generator(), zero_fn(),         zero_fn(),
                           gaussian(g),      cauchy_measure(g), 0.3};
  cfg.k_modes = 4;
  const CrosscheckReport none = linear_crosscheck(silent, cfg);
  CHECK(none.rel_l2 == 0.0);
  CHECK(none.pass);

  // A single point mass is spanned exactly by one mode.
  CauchyProblemSpec point{heat_generator(),
                          zero_fn(),
                          expr_fn("0.5", {0.0, 0.0, 0.0, 0.0}, 0.5),
                          gaussian(g),
                          delta0(g),
                          0.3};
  cfg.k_modes = 1;
  const CrosscheckReport atom = linear_crosscheck(point, cfg);
  CHECK(atom.synthesis_norm > 0.0);
  CHECK(atom.rel_l2 < 1e-10);
  CHECK(atom.pass);

  // An absolutely continuous measure is only reached in the limit; the gap
  // is the basis truncation and shrinks as modes are added.
  CauchyProblemSpec spread{heat_generator(),
                           zero_fn(),
                           expr_fn("0.5 * <x>^-1", {0.0, 0.0, 0.0, 0.0}, 0.5),
                           gaussian(g),
                           cauchy_measure(g),
                           0.3};
  cfg.k_modes = 4;
  const CrosscheckReport coarse = linear_crosscheck(spread, cfg);
  cfg.k_modes = 32;
  const CrosscheckReport fine = linear_crosscheck(spread, cfg);
  CHECK(fine.rel_l2 < 0.01);
  CHECK(fine.pass);
  CHECK(coarse.rel_l2 > fine.rel_l2);

  // Mixed measures and state-dependent diffusion have no expansion route.
  CauchyProblemSpec mixed = spread;
  mixed.measure = SpectralMeasure::from_density_expr(
      g, "<xi>^-2", {{std::vector<double>(1, 0.0), 0.5}});
  CHECK_THROWS_AS(linear_crosscheck(mixed, cfg), hypothesis_error);

  CauchyProblemSpec statedep = spread;
  statedep.sigma = expr_fn("u", {0.0, 0.0, 0.0, 0.0}, 1.0);
  CHECK_THROWS_AS(linear_crosscheck(statedep, cfg), hypothesis_error);
}

TEST_CASE("problem validation rejects each broken hypothesis") {
  auto g = make_grid(1, 32, 6.0);
  const CauchyProblemSpec good{heat_generator(), zero_fn(), zero_fn(),
                               gaussian(g),      delta0(g), 0.5};
  CHECK_NOTHROW(validate_problem(good));

  CauchyProblemSpec bad = good;
  bad.horizon = 0.0;
  CHECK_THROWS_AS(validate_problem(bad), hypothesis_error);

  bad = good;
  bad.kappa = 0.5;
  CHECK_THROWS_AS(validate_problem(bad), hypothesis_error);

  bad = good;
  bad.lambda = -0.1;
  CHECK_THROWS_AS(validate_problem(bad), hypothesis_error);

  bad = good;
  bad.generator = SgSymbol::multiplier(
      [](double, std::span<const double>) { return cplx(1.0, 0.0); }, {0.0, 0.0});
  CHECK_THROWS_AS(validate_problem(bad), hypothesis_error);  // no declared order

  bad = good;
  bad.measure = delta0(make_grid(1, 48, 6.0));
  CHECK_THROWS_AS(validate_problem(bad), grid_mismatch_error);

  bad = good;
  bad.gamma = expr_fn("u", {0.0, 0.0, 2.0, 0.0}, 1.0);  // reads above H^{z,ζ}
  CHECK_THROWS_AS(validate_problem(bad), hypothesis_error);

  bad = good;
  bad.measure = SpectralMeasure::from_density_expr(g, "<xi>^2");
  bad.lambda = 0.1;  // growing density: the translated integrals diverge
  CHECK_THROWS_AS(validate_problem(bad), hypothesis_error);

  SolverConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(validate_config(cfg), hypothesis_error);
  cfg = SolverConfig{};
  cfg.threads = 0;
  CHECK_THROWS_AS(validate_config(cfg), hypothesis_error);
}

TEST_CASE("map input validation: lengths, modes, and grids must agree") {
  auto g = make_grid(1, 32, 6.0);
  CauchyProblemSpec spec{heat_generator(), zero_fn(), zero_fn(),
                         gaussian(g),      delta0(g), 0.5};
  SolverConfig cfg;
  cfg.k_modes = 1;
  const CameronMartinBasis basis = build_basis(spec.measure, 1);
  const NoisePath path = sample_increments(basis, 4, 0.05, 43);

  std::vector<Field> short_u(4, Field(g));  // needs n_steps + 1 knots
  CHECK_THROWS_AS(picard_map(spec, cfg, basis, path, short_u), hypothesis_error);

  NoisePath wrong_modes = path;
  wrong_modes.k_modes = 2;
  wrong_modes.beta.resize(8, 0.0);
  std::vector<Field> u(5, Field(g));
  CHECK_THROWS_AS(picard_map(spec, cfg, basis, wrong_modes, u), hypothesis_error);

  NoisePath bad_dt = path;
  bad_dt.dt = 0.0;
  CHECK_THROWS_AS(solve_path(spec, cfg, basis, bad_dt), hypothesis_error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sgsim/noise.hpp"
#include "sgsim/rng.hpp"
#include "test_common.hpp"

using namespace sgsim;
using testing::gaussian;
using testing::rel_l2_diff;

namespace {

double poly_density(std::span<const double> xi, double beta) {
  double s2 = 1.0;
  for (double c : xi) s2 += c * c;
  return std::pow(s2, -0.5 * beta);
}

SpectralMeasure power_measure(GridPtr g, double beta) {
  return SpectralMeasure(std::move(g),
                         [beta](std::span<const double> xi) { return poly_density(xi, beta); });
}

SgSymbol zero_generator() {
  return SgSymbol::multiplier(
      [](double, std::span<const double>) { return cplx(0.0, 0.0); }, {0.0, 0.0});
}

SgSymbol sk_heat() {
  return SgSymbol::multiplier(
      [](double, std::span<const double> xi) {
        const double b = bracket(xi);
        return cplx(b * b, 0.0);
      },
      {0.0, 2.0});
}

}  // namespace

TEST_CASE("measure construction validates sign, symmetry, and mass") {
  auto g = make_grid(1, 64, 8.0);

  CHECK_THROWS_AS(SpectralMeasure(g, [](std::span<const double> xi) { return -1.0 + 0.0 * xi[0]; }),
                  hypothesis_error);
  CHECK_THROWS_AS(SpectralMeasure(g, [](std::span<const double> xi) { return std::exp(xi[0]); }),
                  hypothesis_error);
  CHECK_THROWS_AS(SpectralMeasure::atoms_only(g, {{{1.0}, 1.0}}), hypothesis_error);
  CHECK_THROWS_AS(SpectralMeasure::atoms_only(g, {{{0.0}, -1.0}}), hypothesis_error);
  CHECK_THROWS_AS(SpectralMeasure(g, nullptr, {}), hypothesis_error);  // no mass at all

  CHECK_NOTHROW(SpectralMeasure::atoms_only(g, {{{1.5}, 0.3}, {{-1.5}, 0.3}}));
  CHECK_NOTHROW(SpectralMeasure::atoms_only(g, {{{0.0}, 1.0}}));

  // the unpaired Nyquist frequency carries no mass
  SpectralMeasure lebesgue(g, [](std::span<const double>) { return 1.0; });
  CHECK(lebesgue.density()[g->n() / 2] == 0.0);
  CHECK(lebesgue.density()[0] == 1.0);

  SpectralMeasure delta0 = SpectralMeasure::atoms_only(g, {{{0.0}, 1.0}});
  const double at0 = delta0.integrate([](std::span<const double> xi) {
    return 3.0 + xi[0];  // evaluates to 3 at the origin atom
  });
  CHECK(at0 == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(delta0.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("density expressions parse and reject non-frequency variables") {
  auto g = make_grid(1, 64, 8.0);
  SpectralMeasure m = SpectralMeasure::from_density_expr(g, "<xi>^-2");
  std::vector<double> xi(1);
  g->xi_at(1, xi);
  CHECK(m.density()[1] == doctest::Approx(1.0 / (1.0 + xi[0] * xi[0])).epsilon(1e-13));
  CHECK_THROWS_AS(SpectralMeasure::from_density_expr(g, "<x>^-2"), parse_error);
  CHECK_THROWS_AS(SpectralMeasure::from_density_expr(g, "u + 1"), parse_error);
}

TEST_CASE("spectral condition: point mass peaks at the origin and is admissible") {
  auto g = make_grid(1, 128, 8.0);
  SpectralMeasure delta0 = SpectralMeasure::atoms_only(g, {{{0.0}, 1.0}});
  SpectralConditionReport rep = check_spectral_condition(delta0, 0.3, 2.0);
  CHECK(rep.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.value_at_zero == doctest::Approx(rep.value).epsilon(1e-12));
  CHECK(rep.growth == doctest::Approx(0.0));
  CHECK(rep.admissible);

  CHECK_THROWS_AS(check_spectral_condition(delta0, -0.1, 2.0), hypothesis_error);
  CHECK_THROWS_AS(check_spectral_condition(delta0, 0.3, 0.0), hypothesis_error);

  // finite integral but lambda out of the admissible range
  SpectralConditionReport big = check_spectral_condition(delta0, 0.6, 2.0);
  CHECK(big.finite);
  CHECK_FALSE(big.admissible);
}

TEST_CASE("spectral condition matrix matches the integrability criterion") {
  auto g = make_grid(1, 256, 8.0);
  const double lambda = 0.4;
  // admissible iff 2*lambda*mu' + beta > 1
  const struct {
    double beta, mu_prime;
    bool finite;
  } cases[] = {
      {0.5, 0.5, false},  // exponent 0.9
      {0.5, 1.5, true},   // 1.7
      {0.5, 2.5, true},   // 2.5
      {2.0, 0.5, true},   // 2.4
      {2.0, 1.5, true},   // 3.2
      {2.0, 2.5, true},   // 4.0
  };
  for (const auto& c : cases) {
    SpectralMeasure m = power_measure(g, c.beta);
    SpectralConditionReport rep = check_spectral_condition(m, lambda, c.mu_prime);
    CAPTURE(c.beta);
    CAPTURE(c.mu_prime);
    CAPTURE(rep.growth);
    CHECK(rep.finite == c.finite);
    CHECK(rep.admissible == c.finite);
  }
}

TEST_CASE("spectral condition on white noise follows the tail exponent") {
  auto g = make_grid(1, 256, 8.0);
  SpectralMeasure lebesgue(g, [](std::span<const double>) { return 1.0; });
  CHECK(check_spectral_condition(lebesgue, 0.4, 2.0).finite);     // exponent 1.6
  CHECK_FALSE(check_spectral_condition(lebesgue, 0.125, 2.0).finite);  // 0.5
}

TEST_CASE("translation sweep finds off-origin suprema") {
  auto g = make_grid(1, 128, 8.0);
  SpectralMeasure bumps(g, [](std::span<const double> xi) {
    const double a = xi[0] - 3.0, b = xi[0] + 3.0;
    return std::exp(-a * a) + std::exp(-b * b);
  });
  SpectralConditionReport rep = check_spectral_condition(bumps, 0.25, 2.0);
  CHECK(rep.value > 1.3 * rep.value_at_zero);
  CHECK(rep.finite);
}

TEST_CASE("point-mass basis is the constant function") {
  auto g = make_grid(1, 64, 8.0);
  SpectralMeasure delta0 = SpectralMeasure::atoms_only(g, {{{0.0}, 1.0}});
  CameronMartinBasis basis = build_basis(delta0, 1);
  CHECK(basis.size() == 1);
  const double origin[] = {0.0};
  CHECK(basis.f_at(0, origin) == doctest::Approx(1.0).epsilon(1e-12));
  // the noise field of a unit mass at frequency zero is the constant 1
  const Field& h = basis.h_field(0);
  for (std::size_t p = 0; p < h.size(); p += 7)
    CHECK(std::abs(h[p] - cplx(1.0, 0.0)) < 1e-12);

  CHECK_THROWS_AS(build_basis(delta0, 2), hypothesis_error);  // 1-dimensional space
}

TEST_CASE("two symmetric atoms span a one-dimensional symmetric space") {
  auto g = make_grid(1, 64, 8.0);
  const double w = 0.3;
  SpectralMeasure m = SpectralMeasure::atoms_only(g, {{{1.5}, w}, {{-1.5}, w}});
  CameronMartinBasis basis = build_basis(m, 1);
  const double expait = 1.0 / std::sqrt(2.0 * w);  // normalization over both atoms
  const double plus[] = {1.5}, minus[] = {-1.5};
  CHECK(basis.f_at(0, plus) == doctest::Approx(expait).epsilon(1e-10));
  CHECK(basis.f_at(0, minus) == doctest::Approx(expait).epsilon(1e-10));
  CHECK_THROWS_AS(build_basis(m, 2), hypothesis_error);
}

TEST_CASE("basis is orthonormal, even, and exhausts the symmetric sector") {
  auto g = make_grid(1, 32, 6.0);
  SpectralMeasure lebesgue(g, [](std::span<const double>) { return 1.0; });

  CameronMartinBasis basis = build_basis(lebesgue, 4);
  CHECK(basis.gram_defect() < 1e-10);
  for (int j = 0; j < 4; ++j) {
    for (std::size_t k = 1; k < g->size(); ++k) {
      const std::size_t mirror = g->size() - k;
      CHECK(basis.f_value(j, k) == doctest::Approx(basis.f_value(j, mirror)).epsilon(1e-10));
    }
  }

  // even sector of a 32-point line has 16 degrees of freedom
  CHECK_NOTHROW(build_basis(lebesgue, 16));
  CHECK_THROWS_AS(build_basis(lebesgue, 17), hypothesis_error);
}

TEST_CASE("full basis attains the reproducing kernel of the weighted space") {
  auto g = make_grid(1, 64, 8.0);
  SpectralMeasure m = power_measure(g, 2.0);
  CameronMartinBasis basis = build_basis(m, g->n() / 2);
  CHECK(basis.gram_defect() < 1e-9);

  const double dxi = g->freq_spacing();
  for (std::size_t node : {std::size_t{0}, std::size_t{3}, std::size_t{17}}) {
    double ksum = 0.0;
    for (int j = 0; j < basis.size(); ++j) ksum += basis.f_value(j, node) * basis.f_value(j, node);
    const double rho = m.density()[node];
    const double expect = node == 0 ? 1.0 / (dxi * rho) : 1.0 / (2.0 * dxi * rho);
    CHECK(ksum == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("increment sampling is deterministic with the declared moments") {
  auto g = make_grid(1, 64, 8.0);
  SpectralMeasure m = power_measure(g, 2.0);
  CameronMartinBasis basis = build_basis(m, 4);

  NoisePath a = sample_increments(basis, 100, 0.01, 77);
  NoisePath b = sample_increments(basis, 100, 0.01, 77);
  CHECK(a.beta == b.beta);
  NoisePath c = sample_increments(basis, 100, 0.01, 78);
  CHECK(a.beta != c.beta);

  // moments over 1e5 draws of one mode
  const double dt = 0.01;
  const int n = 100000;
  NoisePath big = sample_increments(basis, n, dt, 5);
  double mean = 0.0, var = 0.0, cross = 0.0;
  for (int k = 0; k < n; ++k) mean += big.increment(k, 0);
  mean /= n;
  for (int k = 0; k < n; ++k) {
    const double d0 = big.increment(k, 0) - mean;
    var += d0 * d0;
    cross += big.increment(k, 0) * big.increment(k, 1);
  }
  var /= (n - 1);
  cross /= n;
  const double se_var = dt * std::sqrt(2.0 / (n - 1));
  const double se_cross = dt / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(var - dt) < 3.0 * se_var);
  CHECK(std::abs(cross) < 3.0 * se_cross);

  CHECK_THROWS_AS(sample_increments(basis, 0, 0.01, 1), hypothesis_error);
  CHECK_THROWS_AS(sample_increments(basis, 5, 0.0, 1), hypothesis_error);
}

TEST_CASE("noise fields are real, even, and reproduce the covariance functional") {
  auto g = make_grid(1, 64, 8.0);
  SpectralMeasure m = power_measure(g, 2.0);
  const int K = g->n() / 2;  // full symmetric rank: no truncation bias
  CameronMartinBasis basis = build_basis(m, K);

  for (int j = 0; j < K; j += 5) {
    const Field& h = basis.h_field(j);
    for (std::size_t p = 0; p < h.size(); ++p) CHECK(std::abs(h[p].imag()) < 1e-10);
    for (std::size_t p = 1; p < h.size(); ++p)
      CHECK(std::abs(h[p] - h[h.size() - p]) < 1e-9);
  }

  // test fields, even in x so they live in the symmetric sector
  Field phi = gaussian(g, 1.0);
  Field psi = Field::from_function(g, [](std::span<const double> x) {
    return cplx(std::exp(-x[0] * x[0] / 1.4) * (1.0 + x[0] * x[0]), 0.0);
  });

  // deterministic completeness: sum of projections equals the spectral pairing
  std::vector<double> cj(static_cast<std::size_t>(K)), dj(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    cj[static_cast<std::size_t>(j)] = quadrature(phi.hadamard(basis.h_field(j))).real();
    dj[static_cast<std::size_t>(j)] = quadrature(psi.hadamard(basis.h_field(j))).real();
  }
  double pair_sum = 0.0;
  for (int j = 0; j < K; ++j)
    pair_sum += cj[static_cast<std::size_t>(j)] * dj[static_cast<std::size_t>(j)];

  Field phih = forward_dft(phi), psih = forward_dft(psi);
  double target = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k)
    target += (phih[k] * std::conj(psih[k])).real() * m.density()[k];
  target *= g->freq_spacing();
  CHECK(pair_sum == doctest::Approx(target).epsilon(1e-8));

  // Monte Carlo covariance of the smoothed increments
  const double dt = 0.13;
  const int paths = 20000;
  double acc = 0.0, acc2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    NoisePath path = sample_increments(basis, 1, dt, rng::combine(424242, p));
    double xi_phi = 0.0, xi_psi = 0.0;
    for (int j = 0; j < K; ++j) {
      xi_phi += path.increment(0, j) * cj[static_cast<std::size_t>(j)];
      xi_psi += path.increment(0, j) * dj[static_cast<std::size_t>(j)];
    }
    const double prod = xi_phi * xi_psi;
    acc += prod;
    acc2 += prod * prod;
  }
  const double mean = acc / paths;
  const double se = std::sqrt((acc2 / paths - mean * mean) / paths);
  CHECK(std::abs(mean - dt * target) < 4.0 * se);
}

TEST_CASE("hilbert-schmidt norm: degenerate cases and mode monotonicity") {
  auto g = make_grid(1, 128, 10.0);
  Propagator identity(PropagatorSymbol(zero_generator()), g);
  SpectralMeasure delta0 = SpectralMeasure::atoms_only(g, {{{0.0}, 1.0}});
  CameronMartinBasis db = build_basis(delta0, 1);
  SobolevKatoIndex idx{0.0, 0.3};

  Field zero(g);
  CHECK(hs_norm(identity, 0.5, 0.0, zero, db, idx) == 0.0);

  Field ones = Field::from_function(g, [](std::span<const double>) { return cplx(1.0, 0.0); });
  const double want = sk_norm(db.h_field(0), idx);
  CHECK(hs_norm(identity, 0.5, 0.0, ones, db, idx) == doctest::Approx(want).epsilon(1e-12));

  CHECK_THROWS_AS(hs_norm(identity, 0.0, 0.0, ones, db, idx), hypothesis_error);
  auto g2 = make_grid(1, 64, 10.0);
  Field wrong(g2);
  CHECK_THROWS_AS(hs_norm(identity, 0.5, 0.0, wrong, db, idx), grid_mismatch_error);

  // richer measure: the mode sum grows with K and saturates by K = 32
  SpectralMeasure m = power_measure(g, 2.0);
  Propagator heat(PropagatorSymbol(sk_heat()), g);
  Field sigma = gaussian(g, 1.0);
  double prev = 0.0;
  double hs32 = 0.0, hs64 = 0.0;
  for (int K : {8, 16, 32, 64}) {
    CameronMartinBasis basis = build_basis(m, K);
    const double val = hs_norm(heat, 0.1, 0.0, sigma, basis, idx);
    CHECK(val >= prev);
    if (K == 32) hs32 = val;
    if (K == 64) hs64 = val;
    prev = val;
  }
  CHECK(std::abs(hs64 - hs32) / hs32 < 0.05);
}

TEST_CASE("hilbert-schmidt norm obeys the smoothing-cost envelope") {
  // White noise into plain L²: the propagator must absorb the full
  // ⟨ξ⟩^{λμ′} deficit of the measure, at elapsed-time cost (t−s)^{−λ}.
  // The squared norm stays under k_bound·(t−s)^{−2λ}·(measure condition);
  // k_bound was calibrated once on this configuration (observed peak of the
  // ratio 1.45 near t−s = 0.2) and is frozen as a regression guard.
  auto g = make_grid(1, 128, 10.0);
  SgSymbol a = sk_heat().set_hypo_order({0.0, 2.0});
  Propagator heat(PropagatorSymbol(a), g);
  const double lambda = 0.4, mu_prime = 2.0;
  SpectralMeasure m(g, [](std::span<const double>) { return 1.0; });  // white noise
  CameronMartinBasis basis = build_basis(m, g->n() / 2);
  Field ones = Field::from_function(g, [](std::span<const double>) { return cplx(1.0, 0.0); });
  SobolevKatoIndex idx{0.0, 0.0};

  const double sup_integral = check_spectral_condition(m, lambda, mu_prime).value;
  const double k_bound = 2.0;  // frozen calibration constant
  double prev = 0.0;
  for (double delta : {0.4, 0.2, 0.1, 0.05, 0.025, 0.0125}) {
    const double hs = hs_norm(heat, delta, 0.0, ones, basis, idx);
    CHECK(hs > prev);  // less elapsed time, less smoothing, larger norm
    prev = hs;
    CHECK(hs * hs <= k_bound * std::pow(delta, -2.0 * lambda) * sup_integral);
  }
}

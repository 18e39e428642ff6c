#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgsim/fundsol.hpp"
#include "sgsim/sgcalc.hpp"

namespace sgsim {

/// Spatially homogeneous Gaussian noise is described by its spectral measure:
/// an absolutely continuous part (a nonnegative density sampled on the
/// frequency grid) plus point atoms. The measure must be symmetric under
/// ξ → −ξ so the corresponding spatial correlation is real. To keep the
/// sampled part exactly symmetric on an even grid, rows touching the
/// unpaired Nyquist frequency are zeroed.
class SpectralMeasure {
 public:
  struct Atom {
    std::vector<double> location;
    double mass = 0.0;
  };

  using DensityFn = std::function<double(std::span<const double> xi)>;

  /// density may be null for purely atomic measures.
  SpectralMeasure(GridPtr grid, DensityFn density, std::vector<Atom> atoms = {});
  static SpectralMeasure from_density_expr(GridPtr grid, const std::string& text,
                                           std::vector<Atom> atoms = {});
  static SpectralMeasure atoms_only(GridPtr grid, std::vector<Atom> atoms);

  const GridPtr& grid() const { return grid_; }
  /// Sampled density in natural frequency order, Nyquist rows zeroed.
  std::span<const double> density() const { return density_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool absolutely_continuous() const { return atoms_.empty(); }

  /// ∫ f d𝔐 by the rectangle rule on the frequency grid plus exact atom sums.
  double integrate(const std::function<double(std::span<const double>)>& f) const;
  /// Same integral with the density resampled on a window enlarged by the
  /// given integer factor (same spacing); used by tail-divergence probes.
  double integrate_extended(const std::function<double(std::span<const double>)>& f,
                            int factor) const;
  double total_mass() const;

 private:
  GridPtr grid_;
  DensityFn density_fn_;
  std::vector<double> density_;
  std::vector<Atom> atoms_;
};

/// Admissibility probe for the noise/operator compatibility condition
/// sup_η ∫ 𝔐(dξ) ⟨ξ+η⟩^{−2λμ′} < ∞ with λ ∈ [0, 1/2). On a finite grid every
/// sum is finite, so divergence is detected by doubling the frequency window:
/// growth of the sup beyond 10% flags a divergent tail.
struct SpectralConditionReport {
  double value = 0.0;          // sup over the η grid
  double value_at_zero = 0.0;  // the untranslated integral
  double doubled_value = 0.0;  // sup recomputed on the doubled window
  double growth = 0.0;         // (doubled − value) / value
  bool finite = false;
  bool admissible = false;  // finite and λ < 1/2
};

inline constexpr double kDivergenceGrowth = 0.10;

/// Flat index of −ξ for a natural-order flat frequency index.
std::size_t mirror_index(const Grid& g, std::size_t flat);
/// True when any per-axis index equals N/2, the unpaired frequency row.
bool touches_nyquist(const Grid& g, std::size_t flat);

/// Default η samples: every grid frequency plus a 10× coarser axis extension
/// out to four times the grid maximum (the sup over all of ℝ^d is
/// unreachable; the extension catches slowly decaying integrands).
std::vector<std::vector<double>> make_eta_grid(const Grid& g);

SpectralConditionReport check_spectral_condition(
    const SpectralMeasure& M, double lambda, double mu_prime,
    const std::vector<std::vector<double>>& eta_grid = {});

/// Orthonormal basis {f_j} of the symmetric 𝔐-weighted L² space, built by
/// modified Gram–Schmidt (with re-orthogonalization) on even cosine seeds
/// Π_a cos(n_a π ξ_a / ξ_max). Each f_j is a seed combination, so it can be
/// evaluated off-grid (needed at atom locations), and its noise field
/// realization h_j = 𝓕(f_j 𝔐) is cached on the grid.
class CameronMartinBasis {
 public:
  CameronMartinBasis(const SpectralMeasure& M, int K);

  int size() const { return k_; }
  const GridPtr& grid() const { return measure_.grid(); }
  const SpectralMeasure& measure() const { return measure_; }

  /// f_j at grid node (natural frequency order).
  double f_value(int j, std::size_t node) const {
    return f_grid_[static_cast<std::size_t>(j)][node];
  }
  /// f_j at an arbitrary frequency point.
  double f_at(int j, std::span<const double> xi) const;
  /// Field realization of 𝓕(f_j 𝔐); real-valued up to rounding.
  const Field& h_field(int j) const { return h_[static_cast<std::size_t>(j)]; }

  /// max_{i,j} |⟨f_i, f_j⟩_𝔐 − δ_{ij}|, recomputed from the stored values.
  double gram_defect() const;

 private:
  SpectralMeasure measure_;
  int k_ = 0;
  std::vector<std::vector<int>> seeds_;          // multi-indices actually used
  std::vector<std::vector<double>> seed_coeff_;  // f_j = Σ_s coeff[j][s]·seed_s
  std::vector<std::vector<double>> f_grid_;      // values on the frequency grid
  std::vector<std::vector<double>> f_atoms_;     // values at atom locations
  std::vector<Field> h_;
};

CameronMartinBasis build_basis(const SpectralMeasure& M, int K);

/// One sampled path of the cylindrical Wiener process, reduced to its
/// basis coefficients: β^{(k)}_j ~ N(0, Δt) i.i.d. over (step k, mode j),
/// generated counter-based so any entry is reproducible in isolation.
struct NoisePath {
  double dt = 0.0;
  int n_steps = 0;
  int k_modes = 0;
  std::uint64_t seed = 0;
  std::vector<double> beta;  // n_steps × k_modes, step-major

  double increment(int step, int j) const {
    return beta[static_cast<std::size_t>(step) * k_modes + j];
  }
  std::span<const double> step_increments(int step) const {
    return {beta.data() + static_cast<std::size_t>(step) * k_modes,
            static_cast<std::size_t>(k_modes)};
  }
};

NoisePath sample_increments(const CameronMartinBasis& basis, int n_steps,
                            double dt, std::uint64_t seed);

/// Hilbert–Schmidt norm of v ↦ E(t,s)[σ·v] over the noise modes:
/// sqrt(Σ_j ‖E(t,s)[σ_field · h_j]‖²_{idx}).
double hs_norm(const Propagator& P, double t, double s, const Field& sigma_field,
               const CameronMartinBasis& basis, SobolevKatoIndex idx);

}  // namespace sgsim

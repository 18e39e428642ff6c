#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sgsim/errors.hpp"

namespace sgsim {

using cplx = std::complex<double>;

/// ⟨v⟩ = sqrt(1 + |v|²), the Japanese bracket used by every weight in the
/// calculus.
double bracket(std::span<const double> v);
double bracket1(double v);

/// Uniform periodic grid on [−X, X)^d with N points per axis (N even).
///
/// Spatial nodes   x_j = −X + j·(2X/N),        j = 0..N−1 per axis.
/// Frequency nodes ξ_k = (π/X)·k̃,  k̃ = k for k < N/2, k − N otherwise,
/// so the dual grid covers [−ξ_max, ξ_max) with ξ_max = πN/(2X) and spacing
/// Δξ = π/X. Frequencies are kept in FFT natural order; helpers translate.
///
/// Transform convention (continuum analogue F u(ξ) = ∫ e^{−ixξ} u dx):
///   forward:  û(ξ_k) = h^d Σ_j e^{−i x_j·ξ_k} u(x_j)
///   inverse:  u(x_j) = (2π)^{−d} Δξ^d Σ_k e^{i x_j·ξ_k} û(ξ_k)
/// which makes inverse∘forward the identity in exact arithmetic and gives the
/// Parseval identity  Δξ^d Σ|û|² = (2π)^d h^d Σ|u|².
///
/// Grids are immutable; FFTW plans are created at construction (guarded by a
/// global planner lock) and safe for concurrent execution afterwards.
class Grid {
 public:
  Grid(int dim, int n, double half_width);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int dim() const { return dim_; }
  int n() const { return n_; }                  // points per axis
  std::size_t size() const { return size_; }    // N^d
  double half_width() const { return x_max_; }  // X
  double spacing() const { return h_; }         // h = 2X/N
  double freq_spacing() const { return dxi_; }  // Δξ = π/X
  double freq_max() const { return xi_max_; }   // πN/(2X)

  bool compatible(const Grid& other) const {
    return dim_ == other.dim_ && n_ == other.n_ && x_max_ == other.x_max_;
  }

  /// Coordinates of flat index (row-major, axis 0 slowest).
  void x_at(std::size_t flat, std::span<double> out) const;
  /// Frequency of flat index in natural FFT order (signed value).
  void xi_at(std::size_t flat, std::span<double> out) const;
  /// Signed integer frequency index along one axis for a per-axis index.
  int signed_index(int k) const { return k < n_ / 2 ? k : k - n_; }

  /// Unnormalized FFTW transforms on caller-owned buffers (thread-safe).
  void fft_forward_raw(cplx* data) const;   // Σ_j e^{−2πi jk/N} in place
  void fft_backward_raw(cplx* data) const;  // Σ_k e^{+2πi jk/N} in place

 private:
  int dim_, n_;
  double x_max_, h_, dxi_, xi_max_;
  std::size_t size_;
  void* plan_fwd_;  // fftw_plan, kept opaque here
  void* plan_bwd_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int dim, int n, double half_width);

/// Complex-valued function sampled on a Grid. Values are immutable after
/// construction; all binary operations check grid compatibility and throw
/// grid_mismatch_error on conflict.
class Field {
 public:
  Field(GridPtr grid, std::vector<cplx> values);
  /// Zero field.
  explicit Field(GridPtr grid);
  /// Sample a callable x ↦ value over the grid.
  static Field from_function(GridPtr grid,
                             const std::function<cplx(std::span<const double>)>& f);

  const Grid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  cplx operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  bool all_finite() const;
  /// Throws nonfinite_error (with context tag) unless all entries are finite.
  void require_finite(const std::string& what) const;

  Field operator+(const Field& o) const;
  Field operator-(const Field& o) const;
  Field operator*(cplx s) const;
  /// Pointwise product.
  Field hadamard(const Field& o) const;

  /// L² norm under the trapezoid-free box rule: sqrt(h^d Σ|u|²).
  double l2_norm() const;
  double max_abs() const;

 private:
  GridPtr grid_;
  std::vector<cplx> values_;
};

/// Discrete analogue of ∫ f dx on the grid: h^d Σ_j f(x_j).
cplx quadrature(const Field& f);

/// û with the convention documented on Grid; output in natural frequency
/// order on the same grid object.
Field forward_dft(const Field& u);
/// Inverse of forward_dft (exact up to rounding).
Field inverse_dft(const Field& u_hat);

/// Serialization: raw little-endian complex values (re,im interleaved) plus a
/// JSON sidecar named <path>.json recording {dim, n, half_width, dtype,
/// layout}. dtype is complex128 on write; complex64 files are widened on read.
void write_field(const Field& f, const std::string& path);
Field read_field(const std::string& path);

}  // namespace sgsim

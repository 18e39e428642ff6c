#include "sgsim/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>

namespace sgsim {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

double bracket(std::span<const double> v) {
  double s = 1.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

double bracket1(double v) { return std::sqrt(1.0 + v * v); }

Grid::Grid(int dim, int n, double half_width)
    : dim_(dim), n_(n), x_max_(half_width) {
  if (dim < 1 || dim > 3) throw hypothesis_error("grid: dim must be 1..3");
  if (n < 2 || n % 2 != 0) throw hypothesis_error("grid: N must be even and >= 2");
  if (!(half_width > 0.0)) throw hypothesis_error("grid: half width must be positive");
  h_ = 2.0 * x_max_ / n_;
  dxi_ = M_PI / x_max_;
  xi_max_ = M_PI * n_ / (2.0 * x_max_);
  size_ = 1;
  for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(n_);

  std::vector<int> dims(static_cast<std::size_t>(dim_), n_);
  // Planned once on a scratch buffer; FFTW_UNALIGNED lets fftw_execute_dft run
  // on any caller buffer later.
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_complex* scratch = fftw_alloc_complex(size_);
  plan_fwd_ = fftw_plan_dft(dim_, dims.data(), scratch, scratch, FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_bwd_ = fftw_plan_dft(dim_, dims.data(), scratch, scratch, FFTW_BACKWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  if (!plan_fwd_ || !plan_bwd_) throw error("grid: fftw plan creation failed");
}

Grid::~Grid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

void Grid::x_at(std::size_t flat, std::span<double> out) const {
  for (int a = dim_ - 1; a >= 0; --a) {
    out[static_cast<std::size_t>(a)] =
        -x_max_ + h_ * static_cast<double>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
}

void Grid::xi_at(std::size_t flat, std::span<double> out) const {
  for (int a = dim_ - 1; a >= 0; --a) {
    int k = static_cast<int>(flat % static_cast<std::size_t>(n_));
    out[static_cast<std::size_t>(a)] = dxi_ * signed_index(k);
    flat /= static_cast<std::size_t>(n_);
  }
}

void Grid::fft_forward_raw(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_),
                   reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

void Grid::fft_backward_raw(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_),
                   reinterpret_cast<fftw_complex*>(data),
                   reinterpret_cast<fftw_complex*>(data));
}

GridPtr make_grid(int dim, int n, double half_width) {
  return std::make_shared<const Grid>(dim, n, half_width);
}

Field::Field(GridPtr grid, std::vector<cplx> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size())
    throw grid_mismatch_error("field: value count does not match grid size");
}

Field::Field(GridPtr grid)
    : grid_(std::move(grid)), values_(grid_->size(), cplx(0.0, 0.0)) {}

Field Field::from_function(GridPtr grid,
                           const std::function<cplx(std::span<const double>)>& f) {
  std::vector<cplx> vals(grid->size());
  std::vector<double> x(static_cast<std::size_t>(grid->dim()));
  for (std::size_t i = 0; i < vals.size(); ++i) {
    grid->x_at(i, x);
    vals[i] = f(x);
  }
  return Field(std::move(grid), std::move(vals));
}

bool Field::all_finite() const {
  for (const cplx& v : values_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

void Field::require_finite(const std::string& what) const {
  if (!all_finite()) throw nonfinite_error(what + ": non-finite field values");
}

namespace {
void check_same_grid(const Field& a, const Field& b, const char* op) {
  if (!a.grid().compatible(b.grid()))
    throw grid_mismatch_error(std::string("field ") + op +
                              ": operands on incompatible grids");
}
}  // namespace

Field Field::operator+(const Field& o) const {
  check_same_grid(*this, o, "add");
  std::vector<cplx> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i] + o.values_[i];
  return Field(grid_, std::move(v));
}

Field Field::operator-(const Field& o) const {
  check_same_grid(*this, o, "sub");
  std::vector<cplx> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i] - o.values_[i];
  return Field(grid_, std::move(v));
}

Field Field::operator*(cplx s) const {
  std::vector<cplx> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i] * s;
  return Field(grid_, std::move(v));
}

Field Field::hadamard(const Field& o) const {
  check_same_grid(*this, o, "hadamard");
  std::vector<cplx> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i] * o.values_[i];
  return Field(grid_, std::move(v));
}

double Field::l2_norm() const {
  double s = 0.0;
  for (const cplx& v : values_) s += std::norm(v);
  return std::sqrt(s * std::pow(grid_->spacing(), grid_->dim()));
}

double Field::max_abs() const {
  double m = 0.0;
  for (const cplx& v : values_) m = std::max(m, std::abs(v));
  return m;
}

cplx quadrature(const Field& f) {
  cplx s(0.0, 0.0);
  for (const cplx& v : f.values()) s += v;
  return s * std::pow(f.grid().spacing(), f.grid().dim());
}

namespace {
// Parity of the summed per-axis indices; (−1)^{Σ k̃_a} equals (−1)^{Σ k_a}
// for even N, and the same sign pattern converts between the origin-centred
// grid and FFTW's zero-based indexing on both sides of the transform.
int index_parity(const Grid& g, std::size_t flat) {
  int p = 0;
  for (int a = 0; a < g.dim(); ++a) {
    p += static_cast<int>(flat % static_cast<std::size_t>(g.n()));
    flat /= static_cast<std::size_t>(g.n());
  }
  return p & 1;
}
}  // namespace

Field forward_dft(const Field& u) {
  const Grid& g = u.grid();
  std::vector<cplx> buf(u.values().begin(), u.values().end());
  g.fft_forward_raw(buf.data());
  const double scale = std::pow(g.spacing(), g.dim());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] *= index_parity(g, i) ? -scale : scale;
  return Field(u.grid_ptr(), std::move(buf));
}

Field inverse_dft(const Field& u_hat) {
  const Grid& g = u_hat.grid();
  std::vector<cplx> buf(u_hat.values().begin(), u_hat.values().end());
  for (std::size_t i = 0; i < buf.size(); ++i)
    if (index_parity(g, i)) buf[i] = -buf[i];
  g.fft_backward_raw(buf.data());
  const double scale =
      std::pow(g.freq_spacing() / (2.0 * M_PI), g.dim());
  for (cplx& v : buf) v *= scale;
  return Field(u_hat.grid_ptr(), std::move(buf));
}

}  // namespace sgsim

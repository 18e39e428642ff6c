#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "sgsim/expr.hpp"

namespace sgsim {

/// SG order pair (m, μ): weight growth ⟨x⟩^m in space, ⟨ξ⟩^μ in frequency.
struct OrderPair {
  double m = 0.0;
  double mu = 0.0;
};

/// Structural shape of a symbol a(t, x, ξ), used to pick quantization fast
/// paths. product/sum separability means a = p(t,x)·q(t,ξ) resp. p + q.
enum class SymbolStructure {
  general,
  multiplier,          // no x dependence
  weight,              // no ξ dependence
  product_separable,
  sum_separable,
};

using SymbolFn =
    std::function<cplx(double t, std::span<const double> x, std::span<const double> xi)>;
using PartFn = std::function<cplx(double t, std::span<const double> v)>;

/// A symbol in the SG class S^{m,μ} together with the structural metadata the
/// operator algebra needs: order, optional SG-parabolicity order (m′, μ′),
/// time horizon, and the separability shape with its factor callables.
class SgSymbol {
 public:
  SgSymbol() = default;

  static SgSymbol multiplier(PartFn q, OrderPair order, bool time_independent = true);
  static SgSymbol weight(PartFn p, OrderPair order, bool time_independent = true);
  static SgSymbol product(PartFn p, PartFn q, OrderPair order,
                          bool time_independent = true);
  static SgSymbol sum(PartFn p, PartFn q, OrderPair order,
                      bool time_independent = true);
  static SgSymbol general(SymbolFn f, OrderPair order, bool time_independent = true);
  /// Parse an expression over t, x*, xi*, <x>, <xi> and detect separability
  /// from the term structure.
  static SgSymbol from_expr(const Expr& e, OrderPair order,
                            std::optional<OrderPair> hypo = std::nullopt);
  static SgSymbol from_expr_text(const std::string& text, OrderPair order,
                                 std::optional<OrderPair> hypo = std::nullopt);

  cplx operator()(double t, std::span<const double> x,
                  std::span<const double> xi) const;

  SymbolStructure structure() const { return structure_; }
  /// x-only factor/term; only meaningful for weight/product/sum structures.
  const PartFn& x_part() const { return x_part_; }
  /// ξ-only factor/term; only meaningful for multiplier/product/sum.
  const PartFn& xi_part() const { return xi_part_; }

  const OrderPair& order() const { return order_; }
  const std::optional<OrderPair>& hypo_order() const { return hypo_order_; }
  bool time_independent() const { return time_independent_; }
  double horizon() const { return horizon_; }

  SgSymbol& set_hypo_order(OrderPair h) {
    hypo_order_ = h;
    return *this;
  }
  SgSymbol& set_horizon(double T) {
    horizon_ = T;
    return *this;
  }

 private:
  SymbolFn fn_;
  PartFn x_part_, xi_part_;
  SymbolStructure structure_ = SymbolStructure::general;
  OrderPair order_{};
  std::optional<OrderPair> hypo_order_;
  bool time_independent_ = true;
  double horizon_ = 1.0;
};

/// Central finite-difference derivative ∂^α_x ∂^β_ξ a(t, x, ξ) with
/// fourth-order stencils (per-axis orders ≤ 4), steps hx along x-axes and
/// hxi along ξ-axes.
cplx symbol_derivative(const SgSymbol& a, double t, std::span<const double> x,
                       std::span<const double> xi, std::span<const int> alpha,
                       std::span<const int> beta, double hx, double hxi);

}  // namespace sgsim

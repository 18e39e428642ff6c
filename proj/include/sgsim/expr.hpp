#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>

#include "sgsim/errors.hpp"

namespace sgsim {

using cplx = std::complex<double>;

/// Evaluation point for an expression. Unused slots may stay empty; an
/// expression that references a variable absent from the context throws.
struct EvalCtx {
  double t = 0.0;
  std::span<const double> x{};
  std::span<const double> xi{};
  cplx u{0.0, 0.0};
  bool has_u = false;
};

struct ExprNode;

/// Parsed arithmetic expression over the variables of the calculus:
/// ⟨x⟩ and ⟨ξ⟩ brackets, coordinates x1.., xi1.., time t, state u, the
/// imaginary unit i, pi, exp(...), and + − * / ^ with usual precedence.
/// Grammar reference: docs/expressions.md.
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& text);

  bool empty() const { return !root_; }
  cplx eval(const EvalCtx& ctx) const;

  bool uses_x() const;
  bool uses_xi() const;
  bool uses_u() const;
  bool uses_t() const;
  /// Highest coordinate index referenced (0 when only brackets appear).
  int max_coord_dim() const;

  const std::string& text() const { return text_; }
  std::shared_ptr<const ExprNode> root() const { return root_; }

 private:
  std::shared_ptr<const ExprNode> root_;
  std::string text_;
};

/// Exposed for structural analysis (separability detection in symbols).
struct ExprNode {
  enum class Kind {
    number,     // value
    imag_unit,  // i
    bracket_x,  // ⟨x⟩
    bracket_xi, // ⟨ξ⟩
    coord_x,    // x_index (1-based)
    coord_xi,   // ξ_index
    time,       // t
    state,      // u
    add, sub, mul, div, pow, neg,
    exp_fn,
  };
  Kind kind;
  double value = 0.0;
  int index = 0;
  std::shared_ptr<const ExprNode> a, b;
};

cplx eval_node(const ExprNode& n, const EvalCtx& ctx);

}  // namespace sgsim

#include "sgsim/symbol.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace sgsim {

namespace {

SymbolFn wrap_parts(SymbolStructure s, PartFn p, PartFn q) {
  switch (s) {
    case SymbolStructure::multiplier:
      return [q](double t, std::span<const double>, std::span<const double> xi) {
        return q(t, xi);
      };
    case SymbolStructure::weight:
      return [p](double t, std::span<const double> x, std::span<const double>) {
        return p(t, x);
      };
    case SymbolStructure::product_separable:
      return [p, q](double t, std::span<const double> x, std::span<const double> xi) {
        return p(t, x) * q(t, xi);
      };
    case SymbolStructure::sum_separable:
      return [p, q](double t, std::span<const double> x, std::span<const double> xi) {
        return p(t, x) + q(t, xi);
      };
    case SymbolStructure::general:
      break;
  }
  throw error("symbol: wrap_parts on general structure");
}

}  // namespace

SgSymbol SgSymbol::multiplier(PartFn q, OrderPair order, bool time_independent) {
  SgSymbol sym;
  sym.structure_ = SymbolStructure::multiplier;
  sym.fn_ = wrap_parts(sym.structure_, nullptr, q);
  sym.xi_part_ = std::move(q);
  sym.order_ = order;
  sym.time_independent_ = time_independent;
  return sym;
}

SgSymbol SgSymbol::weight(PartFn p, OrderPair order, bool time_independent) {
  SgSymbol sym;
  sym.structure_ = SymbolStructure::weight;
  sym.fn_ = wrap_parts(sym.structure_, p, nullptr);
  sym.x_part_ = std::move(p);
  sym.order_ = order;
  sym.time_independent_ = time_independent;
  return sym;
}

SgSymbol SgSymbol::product(PartFn p, PartFn q, OrderPair order, bool time_independent) {
  SgSymbol sym;
  sym.structure_ = SymbolStructure::product_separable;
  sym.fn_ = wrap_parts(sym.structure_, p, q);
  sym.x_part_ = std::move(p);
  sym.xi_part_ = std::move(q);
  sym.order_ = order;
  sym.time_independent_ = time_independent;
  return sym;
}

SgSymbol SgSymbol::sum(PartFn p, PartFn q, OrderPair order, bool time_independent) {
  SgSymbol sym;
  sym.structure_ = SymbolStructure::sum_separable;
  sym.fn_ = wrap_parts(sym.structure_, p, q);
  sym.x_part_ = std::move(p);
  sym.xi_part_ = std::move(q);
  sym.order_ = order;
  sym.time_independent_ = time_independent;
  return sym;
}

SgSymbol SgSymbol::general(SymbolFn f, OrderPair order, bool time_independent) {
  SgSymbol sym;
  sym.structure_ = SymbolStructure::general;
  sym.fn_ = std::move(f);
  sym.order_ = order;
  sym.time_independent_ = time_independent;
  return sym;
}

cplx SgSymbol::operator()(double t, std::span<const double> x,
                          std::span<const double> xi) const {
  if (!fn_) throw error("symbol: evaluation of empty symbol");
  return fn_(t, x, xi);
}

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;
using Kind = ExprNode::Kind;

bool node_uses(const ExprNode& n, bool want_x) {
  if (want_x ? (n.kind == Kind::bracket_x || n.kind == Kind::coord_x)
             : (n.kind == Kind::bracket_xi || n.kind == Kind::coord_xi))
    return true;
  if (n.kind == Kind::state)
    throw parse_error("symbol: 'u' is not allowed in operator symbols");
  if (n.a && node_uses(*n.a, want_x)) return true;
  if (n.b && node_uses(*n.b, want_x)) return true;
  return false;
}

void flatten(const NodePtr& n, Kind op, Kind inverse_op, bool positive,
             std::vector<std::pair<NodePtr, bool>>& out) {
  if (n->kind == op) {
    flatten(n->a, op, inverse_op, positive, out);
    flatten(n->b, op, inverse_op, positive, out);
  } else if (n->kind == inverse_op && op == Kind::add) {
    // subtraction: right child flips sign
    flatten(n->a, op, inverse_op, positive, out);
    flatten(n->b, op, inverse_op, !positive, out);
  } else {
    out.emplace_back(n, positive);
  }
}

PartFn part_from_nodes(std::vector<std::pair<NodePtr, bool>> nodes, bool is_x,
                       bool multiply, cplx init) {
  return [nodes = std::move(nodes), is_x, multiply, init](
             double t, std::span<const double> v) {
    EvalCtx ctx;
    ctx.t = t;
    if (is_x) ctx.x = v; else ctx.xi = v;
    cplx acc = init;
    for (const auto& [node, pos] : nodes) {
      const cplx val = eval_node(*node, ctx);
      if (multiply) acc *= val;
      else acc += pos ? val : -val;
    }
    return acc;
  };
}

SgSymbol classify_expr(const Expr& e, OrderPair order) {
  const NodePtr root = e.root();
  const bool time_indep = !e.uses_t();
  const bool ux = e.uses_x();
  const bool uxi = e.uses_xi();
  if (e.uses_u()) throw parse_error("symbol: 'u' is not allowed in operator symbols");

  if (!ux) {
    std::vector<std::pair<NodePtr, bool>> one{{root, true}};
    return SgSymbol::multiplier(part_from_nodes(std::move(one), false, true, cplx(1.0)),
                                order, time_indep);
  }
  if (!uxi) {
    std::vector<std::pair<NodePtr, bool>> one{{root, true}};
    return SgSymbol::weight(part_from_nodes(std::move(one), true, true, cplx(1.0)),
                            order, time_indep);
  }

  // Product split: every top-level factor must be x-free or ξ-free.
  {
    std::vector<std::pair<NodePtr, bool>> factors;
    flatten(root, Kind::mul, Kind::mul, true, factors);
    std::vector<std::pair<NodePtr, bool>> xf, xif;
    bool ok = factors.size() > 1;
    for (const auto& f : factors) {
      const bool fx = node_uses(*f.first, true);
      const bool fxi = node_uses(*f.first, false);
      if (fx && fxi) { ok = false; break; }
      if (fxi) xif.push_back(f);
      else xf.push_back(f);  // constants ride along with the x factor
    }
    if (ok && !xif.empty()) {
      return SgSymbol::product(part_from_nodes(std::move(xf), true, true, cplx(1.0)),
                               part_from_nodes(std::move(xif), false, true, cplx(1.0)),
                               order, time_indep);
    }
  }

  // Sum split: every top-level term must be x-free or ξ-free.
  {
    std::vector<std::pair<NodePtr, bool>> terms;
    flatten(root, Kind::add, Kind::sub, true, terms);
    std::vector<std::pair<NodePtr, bool>> xt, xit;
    bool ok = terms.size() > 1;
    for (const auto& f : terms) {
      const bool fx = node_uses(*f.first, true);
      const bool fxi = node_uses(*f.first, false);
      if (fx && fxi) { ok = false; break; }
      if (fxi) xit.push_back(f);
      else xt.push_back(f);
    }
    if (ok && !xit.empty() && !xt.empty()) {
      return SgSymbol::sum(part_from_nodes(std::move(xt), true, false, cplx(0.0)),
                           part_from_nodes(std::move(xit), false, false, cplx(0.0)),
                           order, time_indep);
    }
  }

  Expr copy = e;
  return SgSymbol::general(
      [copy](double t, std::span<const double> x, std::span<const double> xi) {
        EvalCtx ctx;
        ctx.t = t;
        ctx.x = x;
        ctx.xi = xi;
        return copy.eval(ctx);
      },
      order, time_indep);
}

}  // namespace

SgSymbol SgSymbol::from_expr(const Expr& e, OrderPair order,
                             std::optional<OrderPair> hypo) {
  SgSymbol s = classify_expr(e, order);
  if (hypo) s.set_hypo_order(*hypo);
  return s;
}

SgSymbol SgSymbol::from_expr_text(const std::string& text, OrderPair order,
                                  std::optional<OrderPair> hypo) {
  return from_expr(Expr::parse(text), order, hypo);
}

namespace {

// Central stencils of fourth-order accuracy over offsets −3..3; row = the
// derivative order. Polynomials up to degree 4 differentiate exactly.
constexpr double kStencil[5][7] = {
    {0, 0, 0, 1, 0, 0, 0},
    {0, 1.0 / 12, -2.0 / 3, 0, 2.0 / 3, -1.0 / 12, 0},
    {0, -1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12, 0},
    {1.0 / 8, -1.0, 13.0 / 8, 0, -13.0 / 8, 1.0, -1.0 / 8},
    {-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6},
};

struct DerivPlan {
  std::span<const int> alpha, beta;
  double hx, hxi;
  const SgSymbol* sym;
  double t;
};

cplx d_recurse(const DerivPlan& plan, std::vector<double>& x, std::vector<double>& xi,
               std::size_t slot) {
  const std::size_t dx = x.size();
  const std::size_t total = dx + xi.size();
  while (slot < total) {
    const int ord = slot < dx ? plan.alpha[slot] : plan.beta[slot - dx];
    if (ord > 0) break;
    ++slot;
  }
  if (slot >= total) return (*plan.sym)(plan.t, x, xi);

  const bool on_x = slot < dx;
  const int ord = on_x ? plan.alpha[slot] : plan.beta[slot - dx];
  if (ord > 4) throw error("symbol derivative: per-axis order > 4 unsupported");
  const double h = on_x ? plan.hx : plan.hxi;
  double& coord = on_x ? x[slot] : xi[slot - dx];
  const double center = coord;

  cplx acc(0.0, 0.0);
  for (int off = -3; off <= 3; ++off) {
    const double c = kStencil[ord][off + 3];
    if (c == 0.0) continue;
    coord = center + off * h;
    acc += c * d_recurse(plan, x, xi, slot + 1);
  }
  coord = center;
  return acc / std::pow(h, ord);
}

}  // namespace

cplx symbol_derivative(const SgSymbol& a, double t, std::span<const double> x,
                       std::span<const double> xi, std::span<const int> alpha,
                       std::span<const int> beta, double hx, double hxi) {
  std::vector<double> xv(x.begin(), x.end());
  std::vector<double> xiv(xi.begin(), xi.end());
  DerivPlan plan{alpha, beta, hx, hxi, &a, t};
  return d_recurse(plan, xv, xiv, 0);
}

}  // namespace sgsim

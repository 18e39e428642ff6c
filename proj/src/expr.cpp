#include "sgsim/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace sgsim {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;
using Kind = ExprNode::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_number(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::number;
  n->value = v;
  return n;
}

NodePtr make_coord(Kind k, int index) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->index = index;
  return n;
}

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& why) {
    throw parse_error("expression: " + why + " at position " +
                      std::to_string(pos) + " in \"" + s + "\"");
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (true) {
      if (eat('+')) lhs = make(Kind::add, lhs, parse_term());
      else if (eat('-')) lhs = make(Kind::sub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (true) {
      if (eat('*')) lhs = make(Kind::mul, lhs, parse_unary());
      else if (eat('/')) lhs = make(Kind::div, lhs, parse_unary());
      else return lhs;
    }
  }

  // '^' binds tighter than a leading sign, so -2^2 = -(2^2); the exponent
  // re-enters through parse_unary, giving right associativity and 2^-3.
  NodePtr parse_unary() {
    if (eat('-')) return make(Kind::neg, parse_unary());
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (eat('^')) return make(Kind::pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    const char c = s[pos];
    if (c == '(') {
      ++pos;
      NodePtr e = parse_expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    if (c == '<') return parse_bracket();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_word();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_bracket() {
    // "<x>" or "<xi>"
    std::size_t close = s.find('>', pos);
    if (close == std::string::npos) fail("missing '>'");
    std::string inner = s.substr(pos + 1, close - pos - 1);
    pos = close + 1;
    if (inner == "x") return make(Kind::bracket_x);
    if (inner == "xi") return make(Kind::bracket_xi);
    fail("unknown bracket <" + inner + ">, expected <x> or <xi>");
  }

  NodePtr parse_number() {
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos += static_cast<std::size_t>(end - begin);
    return make_number(v);
  }

  NodePtr parse_word() {
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    const std::string w = s.substr(start, pos - start);
    if (w == "exp") {
      if (!eat('(')) fail("exp needs '('");
      NodePtr arg = parse_expr();
      if (!eat(')')) fail("missing ')'");
      return make(Kind::exp_fn, arg);
    }
    if (w == "pi") return make_number(M_PI);
    if (w == "i") return make(Kind::imag_unit);
    if (w == "t") return make(Kind::time);
    if (w == "u") return make(Kind::state);
    if (w.size() >= 2 && w[0] == 'x' && w[1] == 'i') {
      if (w.size() == 2) fail("coordinate 'xi' needs an index, e.g. xi1");
      int idx = std::atoi(w.c_str() + 2);
      if (idx < 1 || idx > 9) fail("bad coordinate index in " + w);
      return make_coord(Kind::coord_xi, idx);
    }
    if (w[0] == 'x') {
      if (w.size() == 1) fail("coordinate 'x' needs an index, e.g. x1");
      int idx = std::atoi(w.c_str() + 1);
      if (idx < 1 || idx > 9) fail("bad coordinate index in " + w);
      return make_coord(Kind::coord_x, idx);
    }
    fail("unknown name '" + w + "'");
  }
};

double bracket_of(std::span<const double> v, const char* which) {
  if (v.empty())
    throw error(std::string("expression: ") + which +
                " evaluated without coordinates in context");
  double s = 1.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

double coord_of(std::span<const double> v, int index, const char* which) {
  if (index < 1 || static_cast<std::size_t>(index) > v.size())
    throw error(std::string("expression: ") + which + std::to_string(index) +
                " out of range for dimension " + std::to_string(v.size()));
  return v[static_cast<std::size_t>(index - 1)];
}

bool walk_any(const ExprNode& n, bool (*pred)(const ExprNode&)) {
  if (pred(n)) return true;
  if (n.a && walk_any(*n.a, pred)) return true;
  if (n.b && walk_any(*n.b, pred)) return true;
  return false;
}

}  // namespace

cplx eval_node(const ExprNode& n, const EvalCtx& ctx) {
  switch (n.kind) {
    case Kind::number: return cplx(n.value, 0.0);
    case Kind::imag_unit: return cplx(0.0, 1.0);
    case Kind::bracket_x: return cplx(bracket_of(ctx.x, "<x>"), 0.0);
    case Kind::bracket_xi: return cplx(bracket_of(ctx.xi, "<xi>"), 0.0);
    case Kind::coord_x: return cplx(coord_of(ctx.x, n.index, "x"), 0.0);
    case Kind::coord_xi: return cplx(coord_of(ctx.xi, n.index, "xi"), 0.0);
    case Kind::time: return cplx(ctx.t, 0.0);
    case Kind::state:
      if (!ctx.has_u) throw error("expression: 'u' evaluated without state in context");
      return ctx.u;
    case Kind::add: return eval_node(*n.a, ctx) + eval_node(*n.b, ctx);
    case Kind::sub: return eval_node(*n.a, ctx) - eval_node(*n.b, ctx);
    case Kind::mul: return eval_node(*n.a, ctx) * eval_node(*n.b, ctx);
    case Kind::div: return eval_node(*n.a, ctx) / eval_node(*n.b, ctx);
    case Kind::neg: return -eval_node(*n.a, ctx);
    case Kind::exp_fn: return std::exp(eval_node(*n.a, ctx));
    case Kind::pow: {
      const cplx base = eval_node(*n.a, ctx);
      const cplx ex = eval_node(*n.b, ctx);
      if (ex.imag() == 0.0 && base.imag() == 0.0 && base.real() > 0.0)
        return cplx(std::pow(base.real(), ex.real()), 0.0);
      return std::pow(base, ex);
    }
  }
  throw error("expression: corrupt node");
}

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  Expr e;
  e.root_ = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  e.text_ = text;
  return e;
}

cplx Expr::eval(const EvalCtx& ctx) const {
  if (!root_) throw error("expression: eval on empty expression");
  return eval_node(*root_, ctx);
}

bool Expr::uses_x() const {
  return root_ && walk_any(*root_, [](const ExprNode& n) {
    return n.kind == Kind::bracket_x || n.kind == Kind::coord_x;
  });
}

bool Expr::uses_xi() const {
  return root_ && walk_any(*root_, [](const ExprNode& n) {
    return n.kind == Kind::bracket_xi || n.kind == Kind::coord_xi;
  });
}

bool Expr::uses_u() const {
  return root_ && walk_any(*root_, [](const ExprNode& n) {
    return n.kind == Kind::state;
  });
}

bool Expr::uses_t() const {
  return root_ && walk_any(*root_, [](const ExprNode& n) {
    return n.kind == Kind::time;
  });
}

namespace {
int max_dim_walk(const ExprNode& n) {
  int d = 0;
  if (n.kind == Kind::coord_x || n.kind == Kind::coord_xi) d = n.index;
  if (n.a) d = std::max(d, max_dim_walk(*n.a));
  if (n.b) d = std::max(d, max_dim_walk(*n.b));
  return d;
}
}  // namespace

int Expr::max_coord_dim() const { return root_ ? max_dim_walk(*root_) : 0; }

}  // namespace sgsim

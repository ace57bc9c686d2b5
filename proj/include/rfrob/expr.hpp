// Field expressions: "(1, y*log(abs(y)))" and friends.
//
//   tuple  := expr | '(' expr (',' expr)+ ')'
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//
// Identifiers are x, y, z and pi; functions are log, abs, sgn, sin, cos, exp
// and sqrt. Non-finite values evaluate to 0.
#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfrob/grid.hpp"
#include "rfrob/vector_field.hpp"

namespace rfrob::expr {

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::invalid_argument(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Node {
  enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call } kind = Kind::Number;
  double value = 0.0;
  int var = 0;
  std::string fn;
  std::shared_ptr<const Node> a, b;

  double eval(const Point& p) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::Var: return p[var];
      case Kind::Neg: return -a->eval(p);
      case Kind::Add: return a->eval(p) + b->eval(p);
      case Kind::Sub: return a->eval(p) - b->eval(p);
      case Kind::Mul: return a->eval(p) * b->eval(p);
      case Kind::Div: return a->eval(p) / b->eval(p);
      case Kind::Pow: return std::pow(a->eval(p), b->eval(p));
      case Kind::Call: {
        const double x = a->eval(p);
        if (fn == "log") return std::log(x);
        if (fn == "abs") return std::abs(x);
        if (fn == "sgn") return static_cast<double>((x > 0) - (x < 0));
        if (fn == "sin") return std::sin(x);
        if (fn == "cos") return std::cos(x);
        if (fn == "exp") return std::exp(x);
        return std::sqrt(x);
      }
    }
    return 0.0;
  }
  int max_var() const {
    int m = kind == Kind::Var ? var : -1;
    if (a) m = std::max(m, a->max_var());
    if (b) m = std::max(m, b->max_var());
    return m;
  }
};

using NodePtr = std::shared_ptr<const Node>;

struct FieldExpr {
  std::string source;
  std::vector<NodePtr> components;

  int dim() const { return static_cast<int>(components.size()); }
  // Highest coordinate index referenced plus one.
  int variables() const {
    int m = -1;
    for (const auto& c : components) m = std::max(m, c->max_var());
    return m + 1;
  }
  Point operator()(const Point& p) const {
    Point out{0, 0, 0};
    for (int i = 0; i < dim(); ++i) {
      const double v = components[i]->eval(p);
      out[i] = std::isfinite(v) ? v : 0.0;
    }
    return out;
  }
  double scalar(const Point& p) const { return (*this)(p)[0]; }
};

namespace detail {

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  FieldExpr parse() {
    FieldExpr f;
    f.source = s_;
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    // A parenthesised list with a top-level comma is a tuple.
    if (peek() == '(' && has_top_level_comma()) {
      ++pos_;
      f.components.push_back(expr());
      while (true) {
        skip();
        if (peek() == ',') {
          ++pos_;
          f.components.push_back(expr());
        } else if (peek() == ')') {
          ++pos_;
          break;
        } else {
          throw ParseError("expected ',' or ')'", pos_);
        }
      }
    } else {
      f.components.push_back(expr());
    }
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    if (f.dim() > 3) throw ParseError("at most 3 components are supported", 0);
    return f;
  }

 private:
  bool has_top_level_comma() const {
    int depth = 0;
    for (std::size_t i = pos_; i < s_.size(); ++i) {
      if (s_[i] == '(') ++depth;
      if (s_[i] == ')' && --depth == 0) return false;
      if (s_[i] == ',' && depth == 1) return true;
    }
    return depth > 0 && s_.find(',', pos_) != std::string::npos;
  }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  static NodePtr make(Node::Kind k, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr expr() {
    NodePtr left = term();
    while (true) {
      skip();
      const char c = peek();
      if (c != '+' && c != '-') return left;
      ++pos_;
      left = make(c == '+' ? Node::Kind::Add : Node::Kind::Sub, left, term());
    }
  }
  NodePtr term() {
    NodePtr left = unary();
    while (true) {
      skip();
      const char c = peek();
      if (c != '*' && c != '/') return left;
      ++pos_;
      left = make(c == '*' ? Node::Kind::Mul : Node::Kind::Div, left, unary());
    }
  }
  NodePtr unary() {
    skip();
    if (peek() == '-') {
      ++pos_;
      return make(Node::Kind::Neg, unary());
    }
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    skip();
    if (peek() == '^') {
      ++pos_;
      return make(Node::Kind::Pow, base, unary());
    }
    return base;
  }
  NodePtr atom() {
    skip();
    const std::size_t start = pos_;
    const char c = peek();
    if (c == '\0') throw ParseError("unexpected end of input", pos_);
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      skip();
      if (peek() != ')') throw ParseError("expected ')'", pos_);
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        throw ParseError("malformed number", start);
      }
      pos_ += used;
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      auto n = std::make_shared<Node>();
      if (id == "x" || id == "y" || id == "z") {
        n->kind = Node::Kind::Var;
        n->var = id[0] - 'x';
        return n;
      }
      if (id == "pi") {
        n->value = M_PI;
        return n;
      }
      static const char* fns[] = {"log", "abs", "sgn", "sin", "cos", "exp", "sqrt"};
      for (const char* f : fns) {
        if (id != f) continue;
        skip();
        if (peek() != '(') throw ParseError("expected '(' after " + id, pos_);
        ++pos_;
        NodePtr arg = expr();
        skip();
        if (peek() == ',') throw ParseError(id + " takes one argument", pos_);
        if (peek() != ')') throw ParseError("expected ')'", pos_);
        ++pos_;
        n->kind = Node::Kind::Call;
        n->fn = id;
        n->a = std::move(arg);
        return n;
      }
      throw ParseError("unknown identifier '" + id + "'", start);
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", start);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline FieldExpr parse_field_expr(const std::string& text) { return detail::Parser(text).parse(); }

// A field on the cube [-half, half]^dim; a scalar expression is read as a
// 1-component field. Components must match the ambient dimension.
inline AnalyticVF to_field(const FieldExpr& f, int dim, double half = 1.0) {
  if (f.dim() != dim)
    throw std::invalid_argument("arity mismatch: expression has " + std::to_string(f.dim()) + " components, expected " +
                                std::to_string(dim));
  if (f.variables() > dim) throw std::invalid_argument("expression references a coordinate beyond dimension " +
                                                       std::to_string(dim));
  AnalyticVF X;
  X.label = f.source;
  X.dim = dim;
  X.eval = [f](const Point& p) { return f(p); };
  X.box = Box::cube(dim, half);
  return X;
}

}  // namespace rfrob::expr

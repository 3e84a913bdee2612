// Copyright 2026 The nhimpact Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nhimpact/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nhimpact {

struct Expression::Node {
  enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Sqrt };
  Op op;
  double value = 0.0;
  int var = -1;
  std::shared_ptr<const Node> a, b;
};

namespace {

using Op = Expression::Node::Op;
using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
  return std::make_shared<const Expression::Node>(
      Expression::Node{Op::Const, v, -1, nullptr, nullptr});
}

NodePtr make_var(int i) {
  return std::make_shared<const Expression::Node>(
      Expression::Node{Op::Var, 0.0, i, nullptr, nullptr});
}

bool is_const(const NodePtr& n, double v) {
  return n->op == Op::Const && n->value == v;
}

double eval(const NodePtr& n, const Vector& q) {
  switch (n->op) {
    case Op::Const: return n->value;
    case Op::Var: return q[n->var];
    case Op::Add: return eval(n->a, q) + eval(n->b, q);
    case Op::Sub: return eval(n->a, q) - eval(n->b, q);
    case Op::Mul: return eval(n->a, q) * eval(n->b, q);
    case Op::Div: return eval(n->a, q) / eval(n->b, q);
    case Op::Pow: return std::pow(eval(n->a, q), eval(n->b, q));
    case Op::Neg: return -eval(n->a, q);
    case Op::Sin: return std::sin(eval(n->a, q));
    case Op::Cos: return std::cos(eval(n->a, q));
    case Op::Sqrt: return std::sqrt(eval(n->a, q));
  }
  return 0.0;
}

bool has_var(const NodePtr& n) {
  if (!n) return false;
  return n->op == Op::Var || has_var(n->a) || has_var(n->b);
}

// Builders with light constant folding so derivatives stay small.
NodePtr unary(Op op, NodePtr a) {
  if (a->op == Op::Const) {
    const Vector none;
    return make_const(eval(std::make_shared<const Expression::Node>(
                               Expression::Node{op, 0.0, -1, a, nullptr}),
                           none));
  }
  return std::make_shared<const Expression::Node>(
      Expression::Node{op, 0.0, -1, std::move(a), nullptr});
}

NodePtr binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) {
    const Vector none;
    return make_const(eval(std::make_shared<const Expression::Node>(
                               Expression::Node{op, 0.0, -1, a, b}),
                           none));
  }
  switch (op) {
    case Op::Add:
      if (is_const(a, 0)) return b;
      if (is_const(b, 0)) return a;
      break;
    case Op::Sub:
      if (is_const(b, 0)) return a;
      if (is_const(a, 0)) return unary(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_const(a, 0) || is_const(b, 0)) return make_const(0);
      if (is_const(a, 1)) return b;
      if (is_const(b, 1)) return a;
      break;
    case Op::Div:
      if (is_const(a, 0)) return make_const(0);
      if (is_const(b, 1)) return a;
      break;
    case Op::Pow:
      if (is_const(b, 1)) return a;
      if (is_const(b, 0)) return make_const(1);
      break;
    default:
      break;
  }
  return std::make_shared<const Expression::Node>(
      Expression::Node{op, 0.0, -1, std::move(a), std::move(b)});
}

NodePtr diff(const NodePtr& n, int i) {
  switch (n->op) {
    case Op::Const: return make_const(0);
    case Op::Var: return make_const(n->var == i ? 1 : 0);
    case Op::Add: return binary(Op::Add, diff(n->a, i), diff(n->b, i));
    case Op::Sub: return binary(Op::Sub, diff(n->a, i), diff(n->b, i));
    case Op::Neg: return unary(Op::Neg, diff(n->a, i));
    case Op::Mul:
      return binary(Op::Add, binary(Op::Mul, diff(n->a, i), n->b),
                    binary(Op::Mul, n->a, diff(n->b, i)));
    case Op::Div:
      return binary(
          Op::Div,
          binary(Op::Sub, binary(Op::Mul, diff(n->a, i), n->b),
                 binary(Op::Mul, n->a, diff(n->b, i))),
          binary(Op::Mul, n->b, n->b));
    case Op::Pow:
      if (has_var(n->b))
        throw ConfigError("cannot differentiate a power with a variable exponent");
      return binary(
          Op::Mul,
          binary(Op::Mul, n->b,
                 binary(Op::Pow, n->a, binary(Op::Sub, n->b, make_const(1)))),
          diff(n->a, i));
    case Op::Sin:
      return binary(Op::Mul, unary(Op::Cos, n->a), diff(n->a, i));
    case Op::Cos:
      return unary(Op::Neg,
                   binary(Op::Mul, unary(Op::Sin, n->a), diff(n->a, i)));
    case Op::Sqrt:
      return binary(Op::Div, diff(n->a, i),
                    binary(Op::Mul, make_const(2), n));
  }
  return make_const(0);
}

void print(const NodePtr& n, const std::vector<std::string>& names,
           std::ostream& out) {
  switch (n->op) {
    case Op::Const: out << n->value; return;
    case Op::Var: out << "q" << (n->var + 1); return;
    case Op::Neg: out << "(-"; print(n->a, names, out); out << ")"; return;
    case Op::Sin: out << "sin("; print(n->a, names, out); out << ")"; return;
    case Op::Cos: out << "cos("; print(n->a, names, out); out << ")"; return;
    case Op::Sqrt: out << "sqrt("; print(n->a, names, out); out << ")"; return;
    default: break;
  }
  const char* sym = n->op == Op::Add   ? " + "
                    : n->op == Op::Sub ? " - "
                    : n->op == Op::Mul ? " * "
                    : n->op == Op::Div ? " / "
                                       : "^";
  out << "(";
  print(n->a, names, out);
  out << sym;
  print(n->b, names, out);
  out << ")";
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars)
      : s_(text), vars_(vars) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "': " + what + " at column " +
                      std::to_string(pos_ + 1));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = binary(Op::Add, n, term());
      else if (eat('-')) n = binary(Op::Sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    NodePtr n = signed_factor();
    for (;;) {
      if (eat('*')) n = binary(Op::Mul, n, signed_factor());
      else if (eat('/')) n = binary(Op::Div, n, signed_factor());
      else return n;
    }
  }

  NodePtr signed_factor() {
    if (eat('-')) return unary(Op::Neg, signed_factor());
    if (eat('+')) return signed_factor();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) {
      NodePtr exponent = signed_factor();
      if (has_var(exponent)) fail("exponent depends on a coordinate");
      return binary(Op::Pow, base, exponent);
    }
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!eat(')')) fail("missing ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<size_t>(end - begin);
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      for (size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == id) return make_var(static_cast<int>(i));
      if (id == "pi") return make_const(std::numbers::pi);
      Op op;
      if (id == "sin") op = Op::Sin;
      else if (id == "cos") op = Op::Cos;
      else if (id == "sqrt") op = Op::Sqrt;
      else fail("unknown name '" + id + "'");
      if (!eat('(')) fail("expected '(' after " + id);
      NodePtr arg = expr();
      if (!eat(')')) fail("missing ')'");
      return unary(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string s_;
  const std::vector<std::string>& vars_;
  size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make_const(0)) {}

Expression::Expression(std::shared_ptr<const Node> root)
    : root_(std::move(root)) {}

Expression Expression::parse(const std::string& text,
                             const std::vector<std::string>& variables) {
  return Expression(Parser(text, variables).parse());
}

Expression Expression::constant(double value) {
  return Expression(make_const(value));
}

double Expression::operator()(const Vector& q) const { return eval(root_, q); }

Expression Expression::derivative(int variable) const {
  return Expression(diff(root_, variable));
}

bool Expression::is_constant() const { return !has_var(root_); }

std::string Expression::str() const {
  std::ostringstream out;
  out.precision(17);
  print(root_, {}, out);
  return out.str();
}

}  // namespace nhimpact

#include "nvjac/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace nvjac {

struct Expr::Node {
  enum class Kind { Const, VarX, VarY, VarR, VarTheta, Unary, Binary } kind;
  double value = 0.0;
  char op = 0;                       // + - * / ^ for Binary
  std::string fn;                    // for Unary
  std::shared_ptr<const Node> a, b;  // children
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = sum();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return e;
  }

 private:
  NodePtr sum() {
    NodePtr left = product();
    for (;;) {
      skip_ws();
      if (peek() == '+' || peek() == '-') {
        char op = get();
        left = binary(op, left, product());
      } else {
        return left;
      }
    }
  }

  NodePtr product() {
    NodePtr left = power();
    for (;;) {
      skip_ws();
      if (peek() == '*' || peek() == '/') {
        char op = get();
        left = binary(op, left, power());
      } else {
        return left;
      }
    }
  }

  NodePtr power() {
    NodePtr base = unary();
    skip_ws();
    if (peek() == '^') {
      get();
      return binary('^', base, power());  // right associative
    }
    return base;
  }

  NodePtr unary() {
    skip_ws();
    if (peek() == '-') {
      get();
      return binary('-', constant(0.0), unary());
    }
    if (peek() == '+') {
      get();
      return unary();
    }
    return atom();
  }

  NodePtr atom() {
    skip_ws();
    char c = peek();
    if (c == '(') {
      get();
      NodePtr e = sum();
      skip_ws();
      if (get() != ')') fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character");
    return nullptr;
  }

  NodePtr number() {
    size_t end = pos_;
    while (end < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
            s_[end] == 'e' || s_[end] == 'E' ||
            ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
             (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
      ++end;
    double v = std::stod(s_.substr(pos_, end - pos_));
    pos_ = end;
    return constant(v);
  }

  NodePtr identifier() {
    size_t end = pos_;
    while (end < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
      ++end;
    std::string name = s_.substr(pos_, end - pos_);
    pos_ = end;
    auto mk = [](Expr::Node::Kind k) {
      auto n = std::make_shared<Expr::Node>();
      n->kind = k;
      return n;
    };
    if (name == "x") return mk(Expr::Node::Kind::VarX);
    if (name == "y") return mk(Expr::Node::Kind::VarY);
    if (name == "r") return mk(Expr::Node::Kind::VarR);
    if (name == "theta") return mk(Expr::Node::Kind::VarTheta);
    if (name == "pi") return constant(M_PI);
    // function call
    skip_ws();
    if (peek() != '(') fail("unknown identifier '" + name + "'");
    get();
    NodePtr arg = sum();
    skip_ws();
    if (get() != ')') fail("expected ')' after function argument");
    static const char* known[] = {"sin", "cos", "tan",  "exp", "log",
                                  "sqrt", "sinh", "cosh", "abs"};
    bool ok = false;
    for (const char* k : known) ok = ok || (name == k);
    if (!ok) fail("unknown function '" + name + "'");
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::Kind::Unary;
    n->fn = name;
    n->a = arg;
    return n;
  }

  static NodePtr constant(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::Kind::Const;
    n->value = v;
    return n;
  }

  static NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Node::Kind::Binary;
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  char get() { return pos_ < s_.size() ? s_[pos_++] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("expression '" + s_ + "': " + why + " at offset " +
                                std::to_string(pos_));
  }

  const std::string& s_;
  size_t pos_ = 0;
};

double eval_node(const Expr::Node& n, const Eigen::Vector2d& p) {
  using K = Expr::Node::Kind;
  switch (n.kind) {
    case K::Const:
      return n.value;
    case K::VarX:
      return p.x();
    case K::VarY:
      return p.y();
    case K::VarR:
      return p.norm();
    case K::VarTheta:
      return std::atan2(p.y(), p.x());
    case K::Unary: {
      double a = eval_node(*n.a, p);
      if (n.fn == "sin") return std::sin(a);
      if (n.fn == "cos") return std::cos(a);
      if (n.fn == "tan") return std::tan(a);
      if (n.fn == "exp") return std::exp(a);
      if (n.fn == "log") return std::log(a);
      if (n.fn == "sqrt") return std::sqrt(a);
      if (n.fn == "sinh") return std::sinh(a);
      if (n.fn == "cosh") return std::cosh(a);
      if (n.fn == "abs") return std::abs(a);
      throw std::logic_error("unreachable function");
    }
    case K::Binary: {
      double a = eval_node(*n.a, p);
      double b = eval_node(*n.b, p);
      switch (n.op) {
        case '+':
          return a + b;
        case '-':
          return a - b;
        case '*':
          return a * b;
        case '/':
          return a / b;
        case '^':
          return std::pow(a, b);
      }
      throw std::logic_error("unreachable operator");
    }
  }
  throw std::logic_error("unreachable node kind");
}

bool node_is_constant(const Expr::Node& n) {
  using K = Expr::Node::Kind;
  switch (n.kind) {
    case K::Const:
      return true;
    case K::VarX:
    case K::VarY:
    case K::VarR:
    case K::VarTheta:
      return false;
    case K::Unary:
      return node_is_constant(*n.a);
    case K::Binary:
      return node_is_constant(*n.a) && node_is_constant(*n.b);
  }
  return false;
}

}  // namespace

Expr Expr::parse(const std::string& text) {
  Expr e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

Expr Expr::constant(double c) { return parse(std::to_string(c)); }

double Expr::operator()(const Eigen::Vector2d& p) const {
  if (!root_) throw std::logic_error("evaluating an empty expression");
  return eval_node(*root_, p);
}

bool Expr::is_constant() const { return root_ && node_is_constant(*root_); }

}  // namespace nvjac

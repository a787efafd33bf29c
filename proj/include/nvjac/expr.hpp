#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

namespace nvjac {

// Closed-form scalar field of (x, y). Grammar: numbers, x, y, r, theta, pi,
// + - * / ^, parentheses, and sin cos tan exp log sqrt sinh cosh abs.
class Expr {
 public:
  static Expr parse(const std::string& text);
  static Expr constant(double c);

  double operator()(const Eigen::Vector2d& p) const;
  double operator()(double x, double y) const { return (*this)(Eigen::Vector2d(x, y)); }

  const std::string& text() const { return text_; }
  bool is_constant() const;

  struct Node;  // implementation detail, public for the out-of-line parser

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace nvjac

#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "nvjac/geometry.hpp"

namespace nvjac {

// d* = d on the parallelizable spheres, d+1 otherwise.
constexpr int dstar(int d) { return (d == 2 || d == 4 || d == 8) ? d : d + 1; }

namespace detail {
inline void require_unit(double norm, double tol) {
  if (std::abs(norm - 1.0) > tol)
    throw std::invalid_argument("frame evaluator: input is not a unit vector");
}
}  // namespace detail

// Orthonormal positively-oriented frame on S^{d-1}, rows h_1..h_d, h_1 = x.
// Only d = 2, 4, 8 admit one.
template <int D>
Eigen::Matrix<double, D, D> sphere_frame(const Eigen::Matrix<double, D, 1>& x) {
  static_assert(D == 2 || D == 4 || D == 8, "sphere frames exist for d = 2, 4, 8 only");
  detail::require_unit(x.norm(), 1e-12);
  Eigen::Matrix<double, D, D> H;
  if constexpr (D == 2) {
    H.row(0) << x(0), x(1);
    H.row(1) << -x(1), x(0);
  } else if constexpr (D == 4) {
    H.row(0) << x(0), x(1), x(2), x(3);
    H.row(1) << -x(1), x(0), -x(3), x(2);
    H.row(2) << x(2), -x(3), -x(0), x(1);
    H.row(3) << x(3), x(2), -x(1), -x(0);
  } else {
    H.row(0) << x(0), x(1), x(2), x(3), x(4), x(5), x(6), x(7);
    H.row(1) << -x(1), x(0), -x(3), x(2), -x(5), x(4), x(7), -x(6);
    H.row(2) << -x(2), x(3), x(0), -x(1), -x(6), -x(7), x(4), x(5);
    H.row(3) << -x(3), -x(2), x(1), x(0), -x(7), x(6), -x(5), x(4);
    H.row(4) << -x(4), x(5), x(6), x(7), x(0), -x(1), -x(2), -x(3);
    H.row(5) << -x(5), -x(4), x(7), -x(6), x(1), x(0), x(3), -x(2);
    H.row(6) << -x(6), -x(7), -x(4), x(5), x(2), -x(3), x(0), x(1);
    H.row(7) << -x(7), x(6), -x(5), -x(4), x(3), x(2), -x(1), x(0);
  }
  return H;
}

Eigen::MatrixXd sphere_frame_dyn(const Eigen::VectorXd& x);

// Sign of det H_d before correction: (-1)^(d(d+3)/2).
inline int hd_sign(int d) { return ((static_cast<long long>(d) * (d + 3) / 2) % 2 == 0) ? 1 : -1; }

// The (d+1)x(d+1) tangent-frame matrix for arbitrary d >= 2. Row 1 is (x, 1);
// row i (i >= 2) is (h_i, x_{d+2-i}) with h_i tangent to the sphere at x.
// The last row carries the sign correction making det = +1.
Eigen::MatrixXd hd_frame(const Eigen::VectorXd& x);
Eigen::MatrixXd hd_frame_raw(const Eigen::VectorXd& x);  // before the sign fix

// The coefficient-coupling matrix: columns (A^T p_1; b . p_1), (p_2; 0), ...,
// (p_dstar; 0), (p_last; 1) where p_k is the first-d-components projection of
// zeta_k. Its rank equals rank(xi_1..xi_dstar) + 1 when called with embedded
// vectors and e_{d+1} in the last slot.
Eigen::MatrixXd t_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const std::vector<Eigen::VectorXd>& zetas);

// Embed R^d -> R^{d+1} (zero last coordinate).
Eigen::VectorXd embed(const Eigen::VectorXd& xi);

// Lipschitz frame field on a 2-D scene: identity away from the interfaces,
// (normal, tangent) on each interface circle, shortest-rotation interpolation
// across an annulus around each circle. Immutable after construction.
class FrameField {
 public:
  struct Annulus {
    Circle circle;
    double r_inner = 0.0;   // annulus inner radius
    double r_outer = 0.0;   // annulus outer radius
  };

  FrameField(const Scene& scene, double annulus_halfwidth_factor = 0.25);

  // Columns f_1, f_2 of the frame at x; an SO(2) matrix everywhere.
  Eigen::Matrix2d frame(const Vec2& x) const;
  Vec2 f1(const Vec2& x) const { return frame(x).col(0); }
  Vec2 f2(const Vec2& x) const { return frame(x).col(1); }

  const std::vector<Annulus>& annuli() const { return annuli_; }
  double lipschitz_estimate() const { return lipschitz_; }
  const Scene& scene() const { return *scene_; }

 private:
  const Scene* scene_;
  std::vector<Annulus> annuli_;
  double lipschitz_ = 0.0;
};

FrameField build_frame_field(const Scene& scene);

}  // namespace nvjac

#include "nvjac/frames.hpp"

#include <cmath>

namespace nvjac {

Eigen::MatrixXd sphere_frame_dyn(const Eigen::VectorXd& x) {
  switch (x.size()) {
    case 2:
      return sphere_frame<2>(Eigen::Vector2d(x));
    case 4:
      return sphere_frame<4>(Eigen::Matrix<double, 4, 1>(x));
    case 8:
      return sphere_frame<8>(Eigen::Matrix<double, 8, 1>(x));
    default:
      throw std::invalid_argument("sphere_frame: dimension must be 2, 4 or 8");
  }
}

Eigen::MatrixXd hd_frame_raw(const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  if (d < 2) throw std::invalid_argument("hd_frame: dimension must be >= 2");
  detail::require_unit(x.norm(), 1e-12);
  Eigen::MatrixXd H(d + 1, d + 1);
  H.row(0).head(d) = x.transpose();
  H(0, d) = 1.0;
  for (int i = 2; i <= d + 1; ++i) {
    const int m = d + 2 - i;  // 1-based coordinate index paired with row i
    for (int k = 1; k <= d; ++k)
      H(i - 1, k - 1) = x(k - 1) * x(m - 1) - (k == m ? 1.0 : 0.0);
    H(i - 1, d) = x(m - 1);
  }
  return H;
}

Eigen::MatrixXd hd_frame(const Eigen::VectorXd& x) {
  Eigen::MatrixXd H = hd_frame_raw(x);
  H.row(H.rows() - 1) *= hd_sign(static_cast<int>(x.size()));
  return H;
}

Eigen::VectorXd embed(const Eigen::VectorXd& xi) {
  Eigen::VectorXd z(xi.size() + 1);
  z.head(xi.size()) = xi;
  z(xi.size()) = 0.0;
  return z;
}

Eigen::MatrixXd t_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const std::vector<Eigen::VectorXd>& zetas) {
  const int d = static_cast<int>(A.rows());
  if (A.cols() != d || b.size() != d) throw std::invalid_argument("t_matrix: bad coefficient sizes");
  const int cols = static_cast<int>(zetas.size());
  if (cols < 2) throw std::invalid_argument("t_matrix: need at least two zeta vectors");
  Eigen::MatrixXd T(d + 1, cols);
  for (int k = 0; k < cols; ++k) {
    if (zetas[k].size() != d + 1) throw std::invalid_argument("t_matrix: zeta must be in R^{d+1}");
    const Eigen::VectorXd p = zetas[k].head(d);
    if (k == 0) {
      T.col(0).head(d) = A.transpose() * p;
      T(d, 0) = b.dot(p);
    } else {
      T.col(k).head(d) = p;
      T(d, k) = (k == cols - 1) ? 1.0 : 0.0;
    }
  }
  return T;
}

FrameField::FrameField(const Scene& scene, double annulus_halfwidth_factor) : scene_(&scene) {
  for (const auto& c : scene.circles) {
    const double w = std::min(scene.d0, c.radius) * annulus_halfwidth_factor;
    Annulus a;
    a.circle = c;
    a.r_inner = c.radius - w;
    a.r_outer = c.radius + w;
    annuli_.push_back(a);
  }
  // Annuli around distinct interfaces must not overlap and must not touch any
  // other interface circle. With half-width <= d0/4 this holds by
  // construction; kept as a guard for hand-built scenes.
  auto curve_gap = [](const Circle& a, const Circle& b) {
    const double dc = (a.center - b.center).norm();
    if (dc > a.radius + b.radius) return dc - a.radius - b.radius;
    const double inner_r = std::min(a.radius, b.radius);
    const double outer_r = std::max(a.radius, b.radius);
    return outer_r - (dc + inner_r);
  };
  for (size_t i = 0; i < annuli_.size(); ++i) {
    const double wi = annuli_[i].circle.radius - annuli_[i].r_inner;
    for (size_t j = i + 1; j < annuli_.size(); ++j) {
      const double wj = annuli_[j].circle.radius - annuli_[j].r_inner;
      if (curve_gap(annuli_[i].circle, annuli_[j].circle) <= wi + wj)
        throw std::runtime_error("frame field: interface annuli overlap or touch another interface");
    }
  }
  // Max sampled rotation-rate: angle interpolation turns by up to pi over the
  // annulus half-width, plus the tangential rate psi' = 1/r.
  lipschitz_ = 0.0;
  const double delta = 1e-4;
  for (const auto& a : annuli_) {
    const double w = a.circle.radius - a.r_inner;
    for (int s = 0; s < 64; ++s) {
      const double theta = 2.0 * M_PI * (s + 0.37) / 64.0;
      for (double rr : {a.r_inner + 0.25 * w, a.circle.radius, a.r_outer - 0.25 * w}) {
        const Vec2 x = a.circle.center + rr * Vec2(std::cos(theta), std::sin(theta));
        for (const Vec2& step : {Vec2(delta, 0), Vec2(0, delta)}) {
          const Eigen::Matrix2d d = frame(x + step) - frame(x);
          lipschitz_ = std::max(lipschitz_, d.norm() / delta);
        }
      }
    }
  }
}

Eigen::Matrix2d FrameField::frame(const Vec2& x) const {
  for (const auto& a : annuli_) {
    const double r = (x - a.circle.center).norm();
    if (r < a.r_inner || r > a.r_outer) continue;
    const double R = a.circle.radius;
    // linear-in-radius weight: 0 on both annulus rims, 1 on the circle
    const double t = (r <= R) ? (r - a.r_inner) / (R - a.r_inner)
                              : (a.r_outer - r) / (a.r_outer - R);
    const double psi = std::atan2(x.y() - a.circle.center.y(), x.x() - a.circle.center.x());
    const double ang = t * psi;
    Eigen::Matrix2d F;
    F << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
    return F;
  }
  return Eigen::Matrix2d::Identity();
}

FrameField build_frame_field(const Scene& scene) { return FrameField(scene); }

}  // namespace nvjac

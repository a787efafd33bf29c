#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "nvjac/expr.hpp"
#include "nvjac/geometry.hpp"

namespace nvjac {

// Closed-form coefficients of one region: symmetric A, drift b, c, potential q.
struct RegionCoefficients {
  std::array<Expr, 3> A{Expr::constant(1), Expr::constant(0), Expr::constant(1)};  // a11 a12 a22
  std::array<Expr, 2> b{Expr::constant(0), Expr::constant(0)};
  std::array<Expr, 2> c{Expr::constant(0), Expr::constant(0)};
  Expr q = Expr::constant(0);

  Eigen::Matrix2d A_at(const Vec2& x) const {
    Eigen::Matrix2d m;
    const double a11 = A[0](x), a12 = A[1](x), a22 = A[2](x);
    m << a11, a12, a12, a22;
    return m;
  }
  Vec2 b_at(const Vec2& x) const { return Vec2(b[0](x), b[1](x)); }
  Vec2 c_at(const Vec2& x) const { return Vec2(c[0](x), c[1](x)); }
  double q_at(const Vec2& x) const { return q(x); }
};

struct CoefficientSet {
  std::vector<RegionCoefficients> regions;  // size N+1, index = region id - 1
  double lambda = 1.0;
  double alpha = 1.0;

  static CoefficientSet isotropic(const std::vector<double>& gamma, double lambda,
                                  double alpha = 1.0);
  static CoefficientSet laplace(int region_count);
};

// Coefficient audit on a sampled grid: ellipticity margin, sup norms and
// in-region Hoelder quotients against the lambda bounds.
struct CoefficientAudit {
  bool ok = true;
  double min_ellipticity_margin = 0.0;  // min over samples of A z.z - lambda |z|^2
  double max_sup_norm = 0.0;
  double max_holder_quotient = 0.0;
  double max_asymmetry = 0.0;
  std::vector<std::string> violations;
};
CoefficientAudit audit_coefficients(const CoefficientSet& coeffs, const Scene& scene,
                                    int samples = 400, unsigned seed = 7);

// Coefficient-swapped operator L[i_1..i_{N+1}] + kappa: region j of the scene
// carries the coefficients of region assignment[j-1], with q shifted by kappa.
struct OperatorSpec {
  std::shared_ptr<const CoefficientSet> coeffs;
  std::vector<int> assignment;
  double kappa = 0.0;

  int source_region(int region) const { return assignment.at(region - 1); }
  const RegionCoefficients& region_coeffs(int region) const {
    return coeffs->regions.at(source_region(region) - 1);
  }
  Eigen::Matrix2d A_at(const Vec2& x, int region) const { return region_coeffs(region).A_at(x); }
  Vec2 b_at(const Vec2& x, int region) const { return region_coeffs(region).b_at(x); }
  Vec2 c_at(const Vec2& x, int region) const { return region_coeffs(region).c_at(x); }
  double q_at(const Vec2& x, int region) const { return region_coeffs(region).q_at(x) + kappa; }
  bool is_symmetric() const;  // b = c = 0 written as constants
};

OperatorSpec make_operator(std::shared_ptr<const CoefficientSet> coeffs,
                           const std::vector<int>& assignment, double kappa);

struct ShiftReport {
  double M = 0.0;      // lambda^-1 + lambda^-3 + 1
  double aleph = 0.0;  // estimated spectral-gap radius
  double theta = 0.0;  // aleph M^2 / (1 + aleph M)
  double kappa = 0.0;  // chosen shift, in (0, theta)
  bool all_probes_pass = false;
  std::vector<double> probe_min_singular;  // per index-map assignment, relative
};

struct Mesh;  // solver module

// Picks a zeroth-order shift kappa < theta making the discrete systems of all
// index-map assignments invertible on the given mesh.
ShiftReport coercivity_shift(std::shared_ptr<const CoefficientSet> coeffs, const Scene& scene,
                             const Mesh& mesh);

}  // namespace nvjac

#include "nvjac/coefficients.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nvjac {

CoefficientSet CoefficientSet::isotropic(const std::vector<double>& gamma, double lambda,
                                         double alpha) {
  CoefficientSet cs;
  cs.lambda = lambda;
  cs.alpha = alpha;
  for (double g : gamma) {
    RegionCoefficients rc;
    rc.A = {Expr::constant(g), Expr::constant(0), Expr::constant(g)};
    cs.regions.push_back(rc);
  }
  return cs;
}

CoefficientSet CoefficientSet::laplace(int region_count) {
  return isotropic(std::vector<double>(region_count, 1.0), 0.5);
}

CoefficientAudit audit_coefficients(const CoefficientSet& coeffs, const Scene& scene,
                                    int samples, unsigned seed) {
  CoefficientAudit audit;
  audit.min_ellipticity_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };

  // region-wise rejection sampling of points
  const double diam = outer_diameter(scene.outer);
  const Vec2 c0 = outer_centroid(scene.outer);
  std::vector<std::vector<Vec2>> pts(scene.region_count());
  int placed = 0, guard = 0;
  while (placed < samples && guard < samples * 200) {
    ++guard;
    Vec2 p = c0 + diam * Vec2(unit() - 0.5, unit() - 0.5);
    if (!outer_contains(scene.outer, p)) continue;
    pts[scene.region_of(p) - 1].push_back(p);
    ++placed;
  }

  const double bound = 1.0 / coeffs.lambda;
  for (int r = 1; r <= scene.region_count(); ++r) {
    const auto& rc = coeffs.regions.at(r - 1);
    const auto& ps = pts[r - 1];
    for (size_t a = 0; a < ps.size(); ++a) {
      const Eigen::Matrix2d A = rc.A_at(ps[a]);
      audit.max_asymmetry = std::max(audit.max_asymmetry, std::abs(A(0, 1) - A(1, 0)));
      for (int k = 0; k < 8; ++k) {
        const double t = 2.0 * M_PI * k / 8.0 + 0.1;
        const Vec2 z(std::cos(t), std::sin(t));
        audit.min_ellipticity_margin =
            std::min(audit.min_ellipticity_margin, z.dot(A * z) - coeffs.lambda);
      }
      double sup = std::max({std::abs(A(0, 0)), std::abs(A(0, 1)), std::abs(A(1, 1)),
                             rc.b_at(ps[a]).cwiseAbs().maxCoeff(),
                             rc.c_at(ps[a]).cwiseAbs().maxCoeff(), std::abs(rc.q_at(ps[a]))});
      audit.max_sup_norm = std::max(audit.max_sup_norm, sup);
      // in-region Hoelder quotients against a few partner points
      for (size_t b = a + 1; b < std::min(ps.size(), a + 4); ++b) {
        const double dist = (ps[a] - ps[b]).norm();
        if (dist < 1e-12) continue;
        const double denom = std::pow(dist, coeffs.alpha);
        const Eigen::Matrix2d dA = rc.A_at(ps[a]) - rc.A_at(ps[b]);
        double q = std::max({dA.cwiseAbs().maxCoeff(),
                             (rc.b_at(ps[a]) - rc.b_at(ps[b])).cwiseAbs().maxCoeff(),
                             (rc.c_at(ps[a]) - rc.c_at(ps[b])).cwiseAbs().maxCoeff(),
                             std::abs(rc.q_at(ps[a]) - rc.q_at(ps[b]))}) /
                   denom;
        audit.max_holder_quotient = std::max(audit.max_holder_quotient, q);
      }
    }
  }

  if (audit.min_ellipticity_margin <= 0)
    audit.violations.push_back("ellipticity: A z.z <= lambda |z|^2 at a sample");
  if (audit.max_sup_norm > bound + 1e-12)
    audit.violations.push_back("sup norm exceeds lambda^-1");
  if (audit.max_holder_quotient > bound + 1e-12)
    audit.violations.push_back("Hoelder quotient exceeds lambda^-1");
  if (audit.max_asymmetry > 1e-12) audit.violations.push_back("A not symmetric");
  audit.ok = audit.violations.empty();
  return audit;
}

bool OperatorSpec::is_symmetric() const {
  for (int r : assignment) {
    const auto& rc = coeffs->regions.at(r - 1);
    for (const auto& e : rc.b)
      if (!(e.is_constant() && e(Vec2::Zero()) == 0.0)) return false;
    for (const auto& e : rc.c)
      if (!(e.is_constant() && e(Vec2::Zero()) == 0.0)) return false;
  }
  return true;
}

OperatorSpec make_operator(std::shared_ptr<const CoefficientSet> coeffs,
                           const std::vector<int>& assignment, double kappa) {
  if (!coeffs) throw std::invalid_argument("make_operator: null coefficient set");
  const int n1 = static_cast<int>(coeffs->regions.size());
  if (static_cast<int>(assignment.size()) != n1)
    throw std::invalid_argument("make_operator: assignment length must be N+1");
  for (int e : assignment)
    if (e < 1 || e > n1) {
      std::ostringstream os;
      os << "make_operator: assignment entry " << e << " outside 1.." << n1;
      throw std::invalid_argument(os.str());
    }
  if (kappa < 0) throw std::invalid_argument("make_operator: kappa must be >= 0");
  OperatorSpec spec;
  spec.coeffs = std::move(coeffs);
  spec.assignment = assignment;
  spec.kappa = kappa;
  return spec;
}

}  // namespace nvjac

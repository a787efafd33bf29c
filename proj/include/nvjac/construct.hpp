#pragma once

#include <optional>

#include "nvjac/jacobian.hpp"
#include "nvjac/solver.hpp"

namespace nvjac {

// Solution of the constant-coefficient second-order ODE
//   a f'' - beta f' - g0 f = 0
// with either (f(0), f'(0)) = (0, 1) or (1, 0), in closed form through the
// characteristic roots (distinct real, double, or complex pair).
struct OdeSolution {
  enum class Kind { RealPair, DoubleRoot, ComplexPair } kind = Kind::DoubleRoot;
  double r1 = 0.0, r2 = 0.0;  // real roots / (mu, omega) for the complex pair
  bool primary = true;        // (0,1) data when true, (1,0) data otherwise

  double value(double t) const;
  double deriv(double t) const;
  double second(double t) const;  // closed form, not via the ODE identity

  static OdeSolution make(double a, double beta, double g0, bool primary);
};

// Local non-vanishing Jacobian seed at an anchor point: u_i(y) = f_i(y_i - x_i)
// for i = 1..d and u_{d+1}(y) = ftilde(y_1 - x_1); det of the generalized
// Jacobian at the anchor is exactly one.
struct LocalSeed {
  Vec2 anchor = Vec2::Zero();
  int region = 0;
  Eigen::Matrix2d A_frozen;
  Vec2 b_frozen, c_frozen;
  double q_frozen = 0.0;  // includes the kappa shift
  std::array<OdeSolution, 3> comps;

  double value(int i, const Vec2& y) const;
  Vec2 grad(int i, const Vec2& y) const;
  Eigen::Matrix3d jac_at(const Vec2& y) const;  // rows (Du_i, u_i)
  // residual of the frozen-coefficient operator applied to component i at y
  double frozen_residual(int i, const Vec2& y) const;
};

LocalSeed local_ode_solutions(const OperatorSpec& op, const Vec2& x, int region);
LocalSeed local_ode_solutions(const OperatorSpec& op, const Scene& scene, const Vec2& x);

// Global discrete solves with Fourier boundary traces cos(k theta), sin(k theta),
// k <= m/2, all sharing one factorization.
struct RungeDictionary {
  const Mesh* mesh = nullptr;
  OperatorSpec op;
  int m = 0;
  std::vector<SolutionField> members;  // 1, cos t, sin t, cos 2t, ...
};

RungeDictionary build_runge_dictionary(const OperatorSpec& op, const Mesh& mesh,
                                       const DirichletSolver& solver, int m);

struct RungeFit {
  std::vector<SolutionField> fields;   // d+1 fitted global solutions
  std::vector<double> fit_error;       // RMS over the fit samples, per component
  int m = 0;
  double fit_radius = 0.0;
};

// Regularized least-squares fit of (u, Du) of dictionary combinations to the
// seed over the ball B(anchor, fit_radius) restricted to the anchor's region.
// m_use <= dictionary m selects a nested sub-dictionary.
RungeFit runge_fit(const RungeDictionary& dict, const LocalSeed& seed, double fit_radius,
                   int m_use = -1);
RungeFit runge_fit(const OperatorSpec& op, const Mesh& mesh, const LocalSeed& seed, int m,
                   double fit_radius);

// Greedy per-region cover of the sampling lattice by balls of radius eps.
std::vector<Vec2> ball_cover(const Scene& scene, double eps, double sample_spacing = 0.0);
// The cardinality bound (diam/eps)^2 + 1 the cover must respect.
int ball_cover_bound(const Scene& scene, double eps);

struct CenterReport {
  Vec2 center = Vec2::Zero();
  int region = 0;
  bool skipped = false;      // already certified by the running family
  bool certified = false;
  double eps = 0.0;
  double fit_error = 0.0;
  double margin_shifted = 0.0;   // min det over the ball, shifted operator
  double margin_original = 0.0;  // after the shift-back re-solve
  std::string note;
};

struct AdmissibleFamily {
  std::vector<SolutionField> fields;  // solutions of the original operator
  double sigma = 0.0;
  double eps = 0.0;
  double kappa = 0.0;
  std::vector<CenterReport> centers;
  JacobianReport report;              // final admissibility report
  std::vector<Eigen::VectorXd> reduction_coefficients;
  bool all_centers_certified = false;
};

struct ConstructOptions {
  int dict_size = 32;       // m
  double grid_spacing = 0;  // admissibility grid; <= 0 means h
  int reduce_retry_cap = 64;
  std::uint64_t seed = 1;
  bool reduce_to_pstar = true;
};

// Full constructive pipeline: coercivity shift, per-center seed + fit under
// L + kappa, shift-back under L, margin certification at sigma/2, then Whitney
// reduction toward P*.
AdmissibleFamily build_admissible_family(const Scene& scene,
                                         std::shared_ptr<const CoefficientSet> coeffs,
                                         double sigma, const Mesh& mesh,
                                         const ConstructOptions& opts = {});

}  // namespace nvjac

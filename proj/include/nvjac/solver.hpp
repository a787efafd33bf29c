#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <memory>

#include "nvjac/coefficients.hpp"
#include "nvjac/mesh.hpp"

namespace nvjac {

using BoundaryTrace = std::function<double(const Vec2&)>;

// Duplicated degrees of freedom along one interface circle: triangles inside
// the circle reference the duplicate of each ring vertex.
struct SplitLayout {
  int circle_id = 0;
  int base_count = 0;                // mesh vertex count
  std::map<int, int> child_dof;      // ring vertex -> duplicate dof id
  int total() const { return base_count + static_cast<int>(child_dof.size()); }
  int dof(const Mesh& mesh, int tri, int corner) const;
};

// Discrete solution with one-sided evaluation. `nodal` is indexed by vertex
// id, plus duplicated interface dofs when `split` is set.
struct SolutionField {
  const Mesh* mesh = nullptr;
  OperatorSpec op;
  Eigen::VectorXd nodal;
  std::shared_ptr<const SplitLayout> split;
  double residual = 0.0;  // relative residual of the discrete weak form

  double value_at_vertex(int v, bool child_side) const;
};

// Linear combination a*f + b*g of fields sharing a mesh and layout.
SolutionField field_lincomb(double a, const SolutionField& f, double b, const SolutionField& g);

struct FieldSample {
  double u = 0.0;
  Vec2 grad = Vec2::Zero();
  double laplacian = 0.0;
};

// One-sided evaluation of (u, Du, Lap u) at x. side = 0 picks the region
// containing x; the Laplacian comes from a quadratic fit over the same-side
// element patch of radius ~2h and is skipped when with_laplacian is false.
FieldSample field_eval(const SolutionField& f, const Vec2& x, int side = 0,
                       bool with_laplacian = true);

// Dirichlet solver with a reusable factorization (one matrix, many traces).
class DirichletSolver {
 public:
  DirichletSolver(const OperatorSpec& op, const Mesh& mesh);
  SolutionField solve(const BoundaryTrace& g) const;
  // Solve with prescribed boundary values given nodally.
  SolutionField solve_nodal_bc(const Eigen::VectorXd& full_values) const;

 private:
  Eigen::VectorXd solve_linear(const Eigen::VectorXd& rhs) const;

  const Mesh* mesh_;
  OperatorSpec op_;
  bool symmetric_ = false;
  std::vector<int> interior_;  // interior vertex ids
  std::vector<int> interior_index_;
  Eigen::SparseMatrix<double> K_ii_, K_ib_;
  std::vector<int> boundary_;
  mutable std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

SolutionField solve_dirichlet(const OperatorSpec& op, const Mesh& mesh, const BoundaryTrace& g);

// Prescribed-jump transmission solve across one interface circle: [S] = jump_u
// (child minus parent, along the interface normal), natural flux jump
// [(A DS + b S) . n] = jump_flux, S = g on the outer boundary.
SolutionField solve_transmission(const OperatorSpec& op, const Mesh& mesh, int sigma_circle,
                                 const BoundaryTrace& jump_u, const BoundaryTrace& jump_flux,
                                 const BoundaryTrace& g);

// Full stiffness matrix of the operator on the mesh (no boundary conditions).
Eigen::SparseMatrix<double> assemble_stiffness(const OperatorSpec& op, const Mesh& mesh);
// L2 mass matrix and Laplace (H1-seminorm) stiffness.
Eigen::SparseMatrix<double> assemble_mass(const Mesh& mesh);
Eigen::SparseMatrix<double> assemble_laplace(const Mesh& mesh);

// sqrt(u' (K_lap + M) u): discrete H1 norm of a nodal field.
double h1_norm(const Mesh& mesh, const Eigen::VectorXd& nodal);
double l2_error_vs(const Mesh& mesh, const Eigen::VectorXd& nodal,
                   const std::function<double(const Vec2&)>& exact);

// Smallest Dirichlet eigenvalue of the annulus t < |x| < s, computed from the
// radial problem by finite differences and inverse iteration.
double annulus_eigenvalue(double t, double s, double tol);

// min over H^1_0 of the band of <sym(K) u, u> / |u|^2_{H^1_0} for the given
// operator on a (thin) band mesh; the discrete coercivity constant.
double coercivity_ratio(const OperatorSpec& op, const Mesh& band_mesh);

// Relative smallest/largest singular value probe of the Dirichlet-reduced
// stiffness; first = sigma_min / sigma_max.
std::pair<double, double> singular_probe(const OperatorSpec& op, const Mesh& mesh);

}  // namespace nvjac

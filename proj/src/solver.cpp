#include "nvjac/solver.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nvjac {

namespace {

struct ElementGeometry {
  double area;
  std::array<Vec2, 3> grad;  // P1 basis gradients
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
  const auto& tr = mesh.triangles[t];
  const Vec2& p0 = mesh.vertices[tr[0]];
  const Vec2& p1 = mesh.vertices[tr[1]];
  const Vec2& p2 = mesh.vertices[tr[2]];
  const double twoS = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x());
  ElementGeometry g;
  g.area = 0.5 * twoS;
  g.grad[0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / twoS;
  g.grad[1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / twoS;
  g.grad[2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / twoS;
  return g;
}

// Element stiffness with coefficients frozen at the centroid.
Eigen::Matrix3d element_stiffness(const OperatorSpec& op, const Mesh& mesh, int t) {
  const ElementGeometry g = element_geometry(mesh, t);
  const Vec2 xc = mesh.centroid(t);
  const int region = mesh.tri_region[t];
  const Eigen::Matrix2d A = op.A_at(xc, region);
  const Vec2 b = op.b_at(xc, region);
  const Vec2 c = op.c_at(xc, region);
  const double q = op.q_at(xc, region);
  Eigen::Matrix3d Ke;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double v = g.area * g.grad[i].dot(A * g.grad[j]);
      v += g.area / 3.0 * b.dot(g.grad[i]);   // trial u = phi_j, int phi_j = S/3
      v += g.area / 3.0 * c.dot(g.grad[j]);
      v += q * g.area * (i == j ? 2.0 : 1.0) / 12.0;
      Ke(i, j) = v;
    }
  }
  return Ke;
}

using Triplet = Eigen::Triplet<double>;

}  // namespace

int SplitLayout::dof(const Mesh& mesh, int tri, int corner) const {
  const int v = mesh.triangles[tri][corner];
  const auto it = child_dof.find(v);
  if (it == child_dof.end()) return v;
  const Circle& c = mesh.scene.circles[circle_id - 1];
  return c.contains(mesh.centroid(tri)) ? it->second : v;
}

double SolutionField::value_at_vertex(int v, bool child_side) const {
  if (split && child_side) {
    const auto it = split->child_dof.find(v);
    if (it != split->child_dof.end()) return nodal[it->second];
  }
  return nodal[v];
}

SolutionField field_lincomb(double a, const SolutionField& f, double b, const SolutionField& g) {
  if (f.mesh != g.mesh || f.split != g.split)
    throw std::invalid_argument("field_lincomb: fields live on different meshes or layouts");
  SolutionField out = f;
  out.nodal = a * f.nodal + b * g.nodal;
  return out;
}

Eigen::SparseMatrix<double> assemble_stiffness(const OperatorSpec& op, const Mesh& mesh) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(mesh.triangle_count()) * 9);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Matrix3d Ke = element_stiffness(op, mesh, t);
    const auto& tr = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(tr[i], tr[j], Ke(i, j));
  }
  Eigen::SparseMatrix<double> K(mesh.vertex_count(), mesh.vertex_count());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

Eigen::SparseMatrix<double> assemble_mass(const Mesh& mesh) {
  std::vector<Triplet> trips;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double S = mesh.area(t);
    const auto& tr = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tr[i], tr[j], S * (i == j ? 2.0 : 1.0) / 12.0);
  }
  Eigen::SparseMatrix<double> M(mesh.vertex_count(), mesh.vertex_count());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

Eigen::SparseMatrix<double> assemble_laplace(const Mesh& mesh) {
  std::vector<Triplet> trips;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ElementGeometry g = element_geometry(mesh, t);
    const auto& tr = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tr[i], tr[j], g.area * g.grad[i].dot(g.grad[j]));
  }
  Eigen::SparseMatrix<double> K(mesh.vertex_count(), mesh.vertex_count());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

double h1_norm(const Mesh& mesh, const Eigen::VectorXd& nodal) {
  const auto K = assemble_laplace(mesh);
  const auto M = assemble_mass(mesh);
  return std::sqrt(nodal.dot(K * nodal) + nodal.dot(M * nodal));
}

double l2_error_vs(const Mesh& mesh, const Eigen::VectorXd& nodal,
                   const std::function<double(const Vec2&)>& exact) {
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double S = mesh.area(t);
    const auto& tr = mesh.triangles[t];
    // midpoint-rule quadrature (exact for quadratics) on the error
    for (int e = 0; e < 3; ++e) {
      const Vec2 m = 0.5 * (mesh.vertices[tr[e]] + mesh.vertices[tr[(e + 1) % 3]]);
      const double uh = 0.5 * (nodal[tr[e]] + nodal[tr[(e + 1) % 3]]);
      const double d = uh - exact(m);
      acc += S / 3.0 * d * d;
    }
  }
  return std::sqrt(acc);
}

DirichletSolver::DirichletSolver(const OperatorSpec& op, const Mesh& mesh)
    : mesh_(&mesh), op_(op), symmetric_(op.is_symmetric()) {
  const auto K = assemble_stiffness(op, mesh);
  interior_index_.assign(mesh.vertex_count(), -1);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (mesh.on_outer_boundary(v))
      boundary_.push_back(v);
    else {
      interior_index_[v] = static_cast<int>(interior_.size());
      interior_.push_back(v);
    }
  }
  const int ni = static_cast<int>(interior_.size());
  std::vector<Triplet> tii, tib;
  for (int col = 0; col < K.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      const int c = static_cast<int>(it.col());
      if (interior_index_[r] < 0) continue;
      if (interior_index_[c] >= 0)
        tii.emplace_back(interior_index_[r], interior_index_[c], it.value());
      else {
        auto bpos = std::lower_bound(boundary_.begin(), boundary_.end(), c);
        tib.emplace_back(interior_index_[r], static_cast<int>(bpos - boundary_.begin()),
                         it.value());
      }
    }
  }
  K_ii_.resize(ni, ni);
  K_ii_.setFromTriplets(tii.begin(), tii.end());
  K_ib_.resize(ni, static_cast<int>(boundary_.size()));
  K_ib_.setFromTriplets(tib.begin(), tib.end());
}

Eigen::VectorXd DirichletSolver::solve_linear(const Eigen::VectorXd& rhs) const {
  if (symmetric_) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg(K_ii_);
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20 * K_ii_.rows() + 1000);
    Eigen::VectorXd x = cg.solve(rhs);
    if ((K_ii_ * x - rhs).norm() <= 1e-11 * std::max(1e-300, rhs.norm())) return x;
    // fall through to the direct factorization
  }
  if (!lu_) {
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(K_ii_);
    if (lu_->info() != Eigen::Success)
      throw std::runtime_error("solve_dirichlet: singular system (shift kappa misconfigured?)");
  }
  Eigen::VectorXd x = lu_->solve(rhs);
  x += lu_->solve(rhs - K_ii_ * x);
  return x;
}

SolutionField DirichletSolver::solve(const BoundaryTrace& g) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(mesh_->vertex_count());
  for (int v : boundary_) full[v] = g(mesh_->vertices[v]);
  return solve_nodal_bc(full);
}

SolutionField DirichletSolver::solve_nodal_bc(const Eigen::VectorXd& full_values) const {
  Eigen::VectorXd gb(boundary_.size());
  for (size_t i = 0; i < boundary_.size(); ++i) gb[i] = full_values[boundary_[i]];
  const Eigen::VectorXd rhs = -(K_ib_ * gb);
  const Eigen::VectorXd ui = solve_linear(rhs);

  SolutionField f;
  f.mesh = mesh_;
  f.op = op_;
  f.nodal = Eigen::VectorXd::Zero(mesh_->vertex_count());
  for (size_t i = 0; i < boundary_.size(); ++i) f.nodal[boundary_[i]] = gb[i];
  for (size_t i = 0; i < interior_.size(); ++i) f.nodal[interior_[i]] = ui[i];
  const double scale = std::max(1e-300, (K_ii_ * ui).norm() + (K_ib_ * gb).norm());
  f.residual = (K_ii_ * ui + K_ib_ * gb).norm() / scale;
  if (f.residual > 1e-10)
    throw std::runtime_error("solve_dirichlet: relative residual above 1e-10");
  return f;
}

SolutionField solve_dirichlet(const OperatorSpec& op, const Mesh& mesh, const BoundaryTrace& g) {
  return DirichletSolver(op, mesh).solve(g);
}

SolutionField solve_transmission(const OperatorSpec& op, const Mesh& mesh, int sigma_circle,
                                 const BoundaryTrace& jump_u, const BoundaryTrace& jump_flux,
                                 const BoundaryTrace& g) {
  const auto it_edges = mesh.interface_edges.find(sigma_circle);
  if (it_edges == mesh.interface_edges.end())
    throw std::invalid_argument("solve_transmission: sigma is not an interface of the mesh");

  auto split = std::make_shared<SplitLayout>();
  split->circle_id = sigma_circle;
  split->base_count = mesh.vertex_count();
  {
    int next = mesh.vertex_count();
    for (int v = 0; v < mesh.vertex_count(); ++v)
      if (mesh.vertex_mark[v] == sigma_circle) split->child_dof[v] = next++;
  }
  const int n = split->total();

  // stiffness over split dofs
  std::vector<Triplet> trips;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const Eigen::Matrix3d Ke = element_stiffness(op, mesh, t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(split->dof(mesh, t, i), split->dof(mesh, t, j), Ke(i, j));
  }
  Eigen::SparseMatrix<double> Ks(n, n);
  Ks.setFromTriplets(trips.begin(), trips.end());

  // natural jump term and essential jump offsets
  Eigen::VectorXd Fnat = Eigen::VectorXd::Zero(n);
  for (const auto& e : it_edges->second) {
    const Vec2& pa = mesh.vertices[e[0]];
    const Vec2& pb = mesh.vertices[e[1]];
    const double len = (pb - pa).norm();
    const double ja = jump_flux(pa), jb = jump_flux(pb);
    // a(S, v) = -int_Sigma jump_flux v ds for continuous test functions
    Fnat[e[0]] -= len * (2.0 * ja + jb) / 6.0;
    Fnat[e[1]] -= len * (ja + 2.0 * jb) / 6.0;
  }
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
  for (const auto& [v, d] : split->child_dof) offset[d] = jump_u(mesh.vertices[v]);

  // fold duplicates back: child dof = parent dof + offset
  std::vector<Triplet> rtr;
  for (int v = 0; v < split->base_count; ++v) rtr.emplace_back(v, v, 1.0);
  for (const auto& [v, d] : split->child_dof) rtr.emplace_back(d, v, 1.0);
  Eigen::SparseMatrix<double> R(n, split->base_count);
  R.setFromTriplets(rtr.begin(), rtr.end());

  const Eigen::SparseMatrix<double> Kred = R.transpose() * Ks * R;
  const Eigen::VectorXd Fred = R.transpose() * (Fnat - Ks * offset);

  // Dirichlet elimination on the outer boundary
  std::vector<int> interior_index(split->base_count, -1);
  std::vector<int> interior, boundary;
  for (int v = 0; v < split->base_count; ++v) {
    if (mesh.on_outer_boundary(v))
      boundary.push_back(v);
    else {
      interior_index[v] = static_cast<int>(interior.size());
      interior.push_back(v);
    }
  }
  Eigen::VectorXd full = Eigen::VectorXd::Zero(split->base_count);
  for (int v : boundary) full[v] = g(mesh.vertices[v]);

  std::vector<Triplet> tii;
  Eigen::VectorXd rhs(interior.size());
  for (size_t i = 0; i < interior.size(); ++i) rhs[i] = Fred[interior[i]];
  for (int col = 0; col < Kred.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator itk(Kred, col); itk; ++itk) {
      const int r = static_cast<int>(itk.row());
      const int c = static_cast<int>(itk.col());
      if (interior_index[r] < 0) continue;
      if (interior_index[c] >= 0)
        tii.emplace_back(interior_index[r], interior_index[c], itk.value());
      else
        rhs[interior_index[r]] -= itk.value() * full[c];
    }
  }
  Eigen::SparseMatrix<double> Kii(interior.size(), interior.size());
  Kii.setFromTriplets(tii.begin(), tii.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Kii);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve_transmission: singular system");
  Eigen::VectorXd ui = lu.solve(rhs);
  ui += lu.solve(rhs - Kii * ui);

  Eigen::VectorXd red = full;
  for (size_t i = 0; i < interior.size(); ++i) red[interior[i]] = ui[i];

  SolutionField f;
  f.mesh = &mesh;
  f.op = op;
  f.split = split;
  f.nodal = R * red + offset;
  f.residual = (Kii * ui - rhs).norm() / std::max(1e-300, rhs.norm() + (Kii * ui).norm());
  return f;
}

FieldSample field_eval(const SolutionField& f, const Vec2& x, int side, bool with_laplacian) {
  const Mesh& mesh = *f.mesh;
  if (side == 0) side = mesh.scene.region_of(x);
  const int t = mesh.locate(x, side);
  if (t < 0) throw std::domain_error("field_eval: point outside the domain");
  if (mesh.tri_region[t] != side) {
    std::ostringstream os;
    os << "field_eval: point not in the closure of region " << side;
    throw std::domain_error(os.str());
  }
  const ElementGeometry g = element_geometry(mesh, t);
  const auto& tr = mesh.triangles[t];
  FieldSample s;
  const Vec2& p1 = mesh.vertices[tr[1]];
  const Vec2& p2 = mesh.vertices[tr[2]];
  const double twoS = 2.0 * g.area;
  const double l0 = ((p1 - x).x() * (p2 - x).y() - (p1 - x).y() * (p2 - x).x()) / twoS;
  const double l1 = ((p2 - x).x() * (mesh.vertices[tr[0]] - x).y() -
                     (p2 - x).y() * (mesh.vertices[tr[0]] - x).x()) /
                    twoS;
  const std::array<double, 3> lambda{l0, l1, 1.0 - l0 - l1};
  for (int e = 0; e < 3; ++e) {
    const double ve = f.nodal[f.split ? f.split->dof(mesh, t, e) : tr[e]];
    s.u += lambda[e] * ve;
    s.grad += ve * g.grad[e];
  }

  if (!with_laplacian) return s;

  // same-side patch of triangles within ~2h, quadratic least squares
  const double radius = 2.0 * mesh.h;
  std::set<int> visited{t};
  std::vector<int> queue{t};
  std::map<int, double> nodes;  // vertex -> one-sided value
  auto absorb = [&](int tri) {
    for (int e = 0; e < 3; ++e) {
      const int v = mesh.triangles[tri][e];
      const int dof = f.split ? f.split->dof(mesh, tri, e) : v;
      nodes.emplace(v, f.nodal[dof]);
    }
  };
  absorb(t);
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    const int cur = queue[qi];
    for (int e = 0; e < 3; ++e) {
      const int nb = mesh.tri_adj[cur][e];
      if (nb < 0 || visited.count(nb) || mesh.tri_region[nb] != side) continue;
      if ((mesh.centroid(nb) - x).norm() > radius + mesh.h) continue;
      visited.insert(nb);
      queue.push_back(nb);
      absorb(nb);
    }
  }
  std::vector<std::pair<Vec2, double>> pts;
  for (const auto& [v, val] : nodes)
    if ((mesh.vertices[v] - x).norm() <= radius * 1.25) pts.push_back({mesh.vertices[v] - x, val});
  if (pts.size() < 6)
    for (const auto& [v, val] : nodes) {
      if ((mesh.vertices[v] - x).norm() > radius * 1.25)
        pts.push_back({mesh.vertices[v] - x, val});
      if (pts.size() >= 10) break;
    }
  if (pts.size() < 6) throw std::runtime_error("field_eval: patch too small for a quadratic fit");
  Eigen::MatrixXd Afit(pts.size(), 6);
  Eigen::VectorXd rhs(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    const Vec2& d = pts[i].first;
    Afit.row(i) << 1.0, d.x(), d.y(), d.x() * d.x(), d.x() * d.y(), d.y() * d.y();
    rhs[i] = pts[i].second;
  }
  const Eigen::VectorXd coef = Afit.colPivHouseholderQr().solve(rhs);
  s.laplacian = 2.0 * (coef[3] + coef[5]);
  return s;
}

double annulus_eigenvalue(double t, double s, double tol) {
  if (!(0 < t && t < s)) throw std::invalid_argument("annulus_eigenvalue: need 0 < t < s");
  auto solve_n = [&](int n) {
    const double delta = (s - t) / n;
    // A f = rho B f with A = -(r f')' central difference scaled by r_i delta
    Eigen::VectorXd main(n - 1), off(n - 2), w(n - 1);
    for (int i = 1; i < n; ++i) {
      const double r = t + i * delta;
      const double rm = r - 0.5 * delta, rp = r + 0.5 * delta;
      main[i - 1] = (rm + rp) / (delta);
      if (i < n - 1) off[i - 1] = -rp / delta;
      w[i - 1] = r * delta;
    }
    // inverse iteration with the Thomas algorithm
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n - 1);
    double rho = 0.0;
    for (int it = 0; it < 400; ++it) {
      // solve tridiagonal A y = B v
      Eigen::VectorXd d = main, rhs = w.cwiseProduct(v);
      Eigen::VectorXd e = off;
      for (int i = 1; i < n - 1; ++i) {
        const double m = e[i - 1] / d[i - 1];
        d[i] -= m * e[i - 1];
        rhs[i] -= m * rhs[i - 1];
      }
      Eigen::VectorXd y(n - 1);
      y[n - 2] = rhs[n - 2] / d[n - 2];
      for (int i = n - 3; i >= 0; --i) y[i] = (rhs[i] - off[i] * y[i + 1]) / d[i];
      const double nrm = std::sqrt(y.dot(w.cwiseProduct(y)));
      y /= nrm;
      double num = 0.0;
      num += main.cwiseProduct(y).dot(y);
      for (int i = 0; i < n - 2; ++i) num += 2.0 * off[i] * y[i] * y[i + 1];
      const double rho_new = num / y.dot(w.cwiseProduct(y));
      if (std::abs(rho_new - rho) <= 1e-14 * std::abs(rho_new) && it > 3) {
        rho = rho_new;
        break;
      }
      rho = rho_new;
      v = y;
    }
    return rho;
  };
  int n = 512;
  double prev = solve_n(n);
  for (int k = 0; k < 10; ++k) {
    n *= 2;
    const double cur = solve_n(n);
    if (std::abs(cur - prev) <= tol * std::abs(cur)) return cur;
    prev = cur;
  }
  throw std::runtime_error("annulus_eigenvalue: did not converge within the refinement cap");
}

double coercivity_ratio(const OperatorSpec& op, const Mesh& band) {
  const auto K = assemble_stiffness(op, band);
  const auto L = assemble_laplace(band);
  std::vector<int> interior;
  for (int v = 0; v < band.vertex_count(); ++v)
    if (!band.on_outer_boundary(v)) interior.push_back(v);
  const int ni = static_cast<int>(interior.size());
  std::vector<int> idx(band.vertex_count(), -1);
  for (int i = 0; i < ni; ++i) idx[interior[i]] = i;
  auto reduce = [&](const Eigen::SparseMatrix<double>& Min) {
    std::vector<Triplet> tr;
    for (int col = 0; col < Min.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Min, col); it; ++it)
        if (idx[it.row()] >= 0 && idx[it.col()] >= 0)
          tr.emplace_back(idx[it.row()], idx[it.col()], it.value());
    Eigen::SparseMatrix<double> Mout(ni, ni);
    Mout.setFromTriplets(tr.begin(), tr.end());
    return Mout;
  };
  Eigen::SparseMatrix<double> Ki = reduce(K);
  const Eigen::SparseMatrix<double> Ksym = 0.5 * (Ki + Eigen::SparseMatrix<double>(Ki.transpose()));
  const Eigen::SparseMatrix<double> Li = reduce(L);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Ksym);
  if (lu.info() != Eigen::Success) return 0.0;  // not even positive definite
  Eigen::VectorXd v = Eigen::VectorXd::Ones(ni).normalized();
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd y = lu.solve(Li * v);
    y.normalize();
    const double num = y.dot(Ksym * y), den = y.dot(Li * y);
    const double lam_new = num / den;
    if (std::abs(lam_new - lam) < 1e-12 * std::abs(lam_new) && it > 3) return lam_new;
    lam = lam_new;
    v = y;
  }
  return lam;
}

std::pair<double, double> singular_probe(const OperatorSpec& op, const Mesh& mesh) {
  const auto K = assemble_stiffness(op, mesh);
  std::vector<int> interior;
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (!mesh.on_outer_boundary(v)) interior.push_back(v);
  const int ni = static_cast<int>(interior.size());
  std::vector<int> idx(mesh.vertex_count(), -1);
  for (int i = 0; i < ni; ++i) idx[interior[i]] = i;
  std::vector<Triplet> tr;
  for (int col = 0; col < K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
      if (idx[it.row()] >= 0 && idx[it.col()] >= 0)
        tr.emplace_back(idx[it.row()], idx[it.col()], it.value());
  Eigen::SparseMatrix<double> Kii(ni, ni);
  Kii.setFromTriplets(tr.begin(), tr.end());
  const Eigen::SparseMatrix<double> KiiT = Kii.transpose();

  // deterministic start vector
  Eigen::VectorXd v(ni);
  for (int i = 0; i < ni; ++i) v[i] = std::sin(1.0 + i);
  v.normalize();

  // sigma_max by power iteration on K^T K
  double smax = 0.0;
  for (int it = 0; it < 100; ++it) {
    v = KiiT * (Kii * v);
    const double nrm = v.norm();
    if (nrm == 0) break;
    v /= nrm;
    smax = std::sqrt(nrm);
  }
  // sigma_min by inverse iteration on K^T K via LU of K
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Kii);
  if (lu.info() != Eigen::Success) return {0.0, smax};
  Eigen::SparseLU<Eigen::SparseMatrix<double>> luT(KiiT);
  if (luT.info() != Eigen::Success) return {0.0, smax};
  Eigen::VectorXd w(ni);
  for (int i = 0; i < ni; ++i) w[i] = std::cos(2.0 + 3.0 * i);
  w.normalize();
  double smin = 0.0;
  for (int it = 0; it < 100; ++it) {
    w = lu.solve(luT.solve(w));
    const double nrm = w.norm();
    if (!std::isfinite(nrm) || nrm == 0) return {0.0, smax};
    w /= nrm;
    smin = 1.0 / std::sqrt(nrm);
  }
  return {smin, smax};
}

}  // namespace nvjac

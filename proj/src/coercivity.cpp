#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

#include "nvjac/coefficients.hpp"
#include "nvjac/solver.hpp"

namespace nvjac {

namespace {

Eigen::MatrixXd densify_interior(const Eigen::SparseMatrix<double>& K,
                                 const std::vector<int>& idx, int ni) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(ni, ni);
  for (int col = 0; col < K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
      if (idx[it.row()] >= 0 && idx[it.col()] >= 0) D(idx[it.row()], idx[it.col()]) = it.value();
  return D;
}

}  // namespace

ShiftReport coercivity_shift(std::shared_ptr<const CoefficientSet> coeffs, const Scene& scene,
                             const Mesh& mesh) {
  ShiftReport rep;
  const double lambda = coeffs->lambda;
  rep.M = 1.0 / lambda + 1.0 / (lambda * lambda * lambda) + 1.0;

  Scene sc = scene;
  sc.finalize();
  const ConstructionMap cmap = construction_map(sc, 1);
  const auto assignments = index_maps(cmap);

  // spectral-gap estimate on a coarse probe mesh: distance from 1/M to the
  // eigenvalues 1/(mu + M) of the inverted shifted operator
  const double diam = outer_diameter(sc.outer);
  double hc = diam / 14.0;
  if (sc.inclusion_count() > 0) hc = std::min(hc, sc.d0 / 4.5);
  const Mesh probe = build_mesh(sc, hc);
  std::vector<int> idx(probe.vertex_count(), -1);
  int ni = 0;
  for (int v = 0; v < probe.vertex_count(); ++v)
    if (!probe.on_outer_boundary(v)) idx[v] = ni++;
  const Eigen::MatrixXd Mass = densify_interior(assemble_mass(probe), idx, ni);

  double min_dist = std::numeric_limits<double>::infinity();
  for (const auto& assign : assignments) {
    const OperatorSpec op = make_operator(coeffs, assign, 0.0);
    const Eigen::MatrixXd K = densify_interior(assemble_stiffness(op, probe), idx, ni);
    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(K, Mass, /*computeEigenvectors=*/false);
    for (int k = 0; k < ges.alphas().size(); ++k) {
      if (std::abs(ges.betas()(k)) < 1e-300) continue;
      const std::complex<double> mu(ges.alphas()(k).real() / ges.betas()(k),
                                    ges.alphas()(k).imag() / ges.betas()(k));
      if (std::abs(mu) < 1e-8 * rep.M) continue;  // the ill-posed point itself
      const std::complex<double> ev = 1.0 / (mu + rep.M);
      min_dist = std::min(min_dist, std::abs(ev - 1.0 / rep.M));
    }
  }
  rep.aleph = 0.5 * min_dist;
  rep.theta = rep.aleph * rep.M * rep.M / (1.0 + rep.aleph * rep.M);

  // invertibility probe on the working mesh, bisection ladder over kappa
  const double floor_rel = 1e-10;
  std::vector<double> candidates;
  candidates.push_back(std::min(rep.theta / 2.0, 1e-2));
  for (double f : {0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875, 0.0625})
    candidates.push_back(rep.theta * f);
  for (double kappa : candidates) {
    if (!(kappa > 0 && kappa < rep.theta)) continue;
    bool all_pass = true;
    std::vector<double> probes;
    for (const auto& assign : assignments) {
      const OperatorSpec op = make_operator(coeffs, assign, kappa);
      const auto [smin, smax] = singular_probe(op, mesh);
      const double rel = smax > 0 ? smin / smax : 0.0;
      probes.push_back(rel);
      all_pass = all_pass && (rel > floor_rel);
    }
    if (all_pass) {
      rep.kappa = kappa;
      rep.all_probes_pass = true;
      rep.probe_min_singular = probes;
      return rep;
    }
    if (rep.probe_min_singular.empty()) rep.probe_min_singular = probes;
  }
  rep.all_probes_pass = false;
  throw std::runtime_error(
      "coercivity_shift: no kappa in (0, theta) passed the invertibility probe");
}

}  // namespace nvjac

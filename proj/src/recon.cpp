#include "nvjac/recon.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nvjac {

std::shared_ptr<CoefficientSet> Phantom::coefficients(double lambda) const {
  auto cs = std::make_shared<CoefficientSet>();
  cs->lambda = lambda;
  cs->alpha = 1.0;
  for (const auto& g : gamma) {
    RegionCoefficients rc;
    rc.A = {g, Expr::constant(0), g};
    cs->regions.push_back(rc);
  }
  return cs;
}

JumpEstimate recover_jumps(const std::vector<SolutionField>& us, const Interface& iface,
                           const FrameField& frames, double probe_offset, int n_samples) {
  (void)frames;  // the interface carries the oriented normal for circles
  if (us.empty()) throw std::invalid_argument("recover_jumps: empty family");
  JumpEstimate est;
  est.interface_id = iface.j;
  std::vector<double> values;
  for (int k = 0; k < n_samples; ++k) {
    const double t = 2.0 * M_PI * (k + 0.5) / n_samples;
    const Vec2 xg = iface.circle.center + iface.circle.radius * Vec2(std::cos(t), std::sin(t));
    const Vec2 n = iface.normal_at(xg);
    const Vec2 xp = xg + probe_offset * n;  // region j side
    const Vec2 xm = xg - probe_offset * n;  // region i side

    // the member with the largest one-sided gradient on the + side
    int p = 0;
    double best = -1.0;
    std::vector<FieldSample> plus(us.size());
    for (size_t l = 0; l < us.size(); ++l) {
      plus[l] = field_eval(us[l], xp, iface.j, false);
      if (plus[l].grad.norm() > best) {
        best = plus[l].grad.norm();
        p = static_cast<int>(l);
      }
    }
    const FieldSample minus = field_eval(us[p], xm, iface.i, false);
    const double dn_plus = plus[p].grad.dot(n);
    const double dn_minus = minus.grad.dot(n);
    // samples with a vanishing normal derivative carry no flux information
    if (std::abs(dn_plus) < 1e-2 * best || std::abs(dn_minus) < 1e-12) {
      ++est.excluded;
      continue;
    }
    values.push_back(-(std::log(std::abs(dn_plus)) - std::log(std::abs(dn_minus))));
  }
  if (values.empty())
    throw std::runtime_error(
        "recover_jumps: every sample excluded; family is not admissible on the interface");
  std::sort(values.begin(), values.end());
  est.used = static_cast<int>(values.size());
  est.value = values[values.size() / 2];
  if (values.size() % 2 == 0) est.value = 0.5 * (est.value + values[values.size() / 2 - 1]);
  double mad = 0.0;
  for (double v : values) mad += std::abs(v - est.value);
  est.dispersion = mad / values.size();
  return est;
}

GradientField recover_log_gradient(const std::vector<SolutionField>& us, int region,
                                   double spacing, double tube_halfwidth) {
  if (us.empty()) throw std::invalid_argument("recover_log_gradient: empty family");
  const Mesh& mesh = *us.front().mesh;
  const Scene& scene = mesh.scene;
  GradientField gf;
  gf.region = region;
  gf.spacing = spacing;
  for (const Vec2& x : sample_grid(scene, spacing, tube_halfwidth)) {
    if (scene.region_of(x) != region) continue;
    Eigen::MatrixXd D(us.size(), 2);
    Eigen::VectorXd rhs(us.size());
    for (size_t l = 0; l < us.size(); ++l) {
      const FieldSample s = field_eval(us[l], x, region, /*with_laplacian=*/true);
      D.row(l) << s.grad.x(), s.grad.y();
      rhs[l] = -s.laplacian;
    }
    gf.points.push_back(x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const bool deficient = svd.singularValues()(1) <= 1e-8 * svd.singularValues()(0);
    gf.flagged.push_back(deficient ? 1 : 0);
    if (deficient) {
      gf.g.push_back(Vec2::Zero());
      gf.residual.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    const Eigen::Vector2d g = svd.solve(rhs);
    gf.g.push_back(g);
    gf.residual.push_back((D * g - rhs).norm());
  }
  return gf;
}

int ReconResult::Potential::nearest(const Vec2& x) const {
  if (points.empty()) return -1;
  const auto k = key(x);
  for (int radius = 0; radius <= 4; ++radius) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (long dx = -radius; dx <= radius; ++dx)
      for (long dy = -radius; dy <= radius; ++dy) {
        if (std::max(std::abs(dx), std::abs(dy)) != radius) continue;
        const auto it = index.find({k.first + dx, k.second + dy});
        if (it == index.end()) continue;
        const double d = (points[it->second] - x).squaredNorm();
        if (d < bd) {
          bd = d;
          best = it->second;
        }
      }
    if (best >= 0) return best;
  }
  // distant query; fall back to a scan
  int best = 0;
  double bd = (points[0] - x).squaredNorm();
  for (size_t i = 1; i < points.size(); ++i) {
    const double d = (points[i] - x).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double ReconResult::log_gamma_at(const Vec2& x) const {
  const int r = scene_.region_of(x);
  const auto& pot = potentials_.at(r - 1);
  if (pot.points.empty()) return region_offset.at(r - 1);
  return pot.phi[pot.nearest(x)] + region_offset.at(r - 1);
}

ReconResult assemble_conductivity(const Scene& scene, const std::vector<JumpEstimate>& jumps,
                                  const std::vector<GradientField>& gradients, const Vec2& anchor,
                                  double anchor_value, const Phantom* truth) {
  ReconResult res;
  res.scene_ = scene;
  res.anchor = anchor;
  res.anchor_value = anchor_value;
  for (const auto& j : jumps) res.jumps[j.interface_id] = j;

  const int n1 = scene.region_count();
  res.potentials_.resize(n1);
  res.region_offset.assign(n1, 0.0);
  res.gradients = gradients;

  // per-region potential from the gradient samples: least squares over the
  // 4-neighbor lattice graph
  for (const auto& gf : gradients) {
    auto& pot = res.potentials_[gf.region - 1];
    pot.spacing = gf.spacing;
    pot.points = gf.points;
    const int n = static_cast<int>(gf.points.size());
    pot.phi.assign(n, 0.0);
    if (n == 0) continue;
    pot.origin = gf.points[0];
    for (int i = 0; i < n; ++i) pot.index[pot.key(gf.points[i])] = i;
    if (n < 2) continue;

    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> rhs;
    int rows = 0;
    auto add_edge = [&](int a, int b, const Vec2& dir) {
      if (gf.flagged[a] || gf.flagged[b]) return;
      const double target = gf.spacing * 0.5 * (gf.g[a] + gf.g[b]).dot(dir);
      trips.emplace_back(rows, b, 1.0);
      trips.emplace_back(rows, a, -1.0);
      rhs.push_back(target);
      ++rows;
    };
    for (int i = 0; i < n; ++i) {
      const auto k = pot.key(gf.points[i]);
      const auto right = pot.index.find({k.first + 1, k.second});
      if (right != pot.index.end()) add_edge(i, right->second, Vec2(1, 0));
      const auto up = pot.index.find({k.first, k.second + 1});
      if (up != pot.index.end()) add_edge(i, up->second, Vec2(0, 1));
    }
    // pin the first node of every connected component through a tiny diagonal
    Eigen::SparseMatrix<double> B(rows, n);
    B.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseMatrix<double> N = Eigen::SparseMatrix<double>(B.transpose()) * B;
    Eigen::VectorXd Br = Eigen::VectorXd::Zero(n);
    {
      Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rows);
      Br = Eigen::SparseMatrix<double>(B.transpose()) * r;
    }
    Eigen::SparseMatrix<double> reg(n, n);
    {
      std::vector<Eigen::Triplet<double>> rt;
      for (int i = 0; i < n; ++i) rt.emplace_back(i, i, 1e-9);
      reg.setFromTriplets(rt.begin(), rt.end());
    }
    N = N + reg;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(N);
    if (ldlt.info() == Eigen::Success) {
      const Eigen::VectorXd phi = ldlt.solve(Br);
      for (int i = 0; i < n; ++i) pot.phi[i] = phi[i];
    }
  }

  // stitch the region constants along the nesting tree
  const int root = scene.background_id();
  std::vector<char> done(n1 + 1, 0);
  res.region_offset[root - 1] = 0.0;
  done[root] = 1;
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& iface : scene.interfaces) {
      const int parent = iface.i, child = iface.j;
      if (done[parent] && !done[child]) {
        const auto it = res.jumps.find(iface.j);
        const double jump = (it != res.jumps.end()) ? it->second.value : 0.0;
        // mean potential mismatch at interface probe points
        double mismatch = 0.0;
        int cnt = 0;
        const auto& pp = res.potentials_[parent - 1];
        const auto& pc = res.potentials_[child - 1];
        for (int k = 0; k < 16; ++k) {
          const double t = 2.0 * M_PI * (k + 0.5) / 16.0;
          const Vec2 xg =
              iface.circle.center + iface.circle.radius * Vec2(std::cos(t), std::sin(t));
          const Vec2 n = iface.normal_at(xg);
          const double off = 2.0 * std::max(pp.spacing, pc.spacing);
          if (pp.points.empty() || pc.points.empty()) break;
          const int a = pp.nearest(xg - off * n);
          const int b = pc.nearest(xg + off * n);
          mismatch += pp.phi[a] - pc.phi[b];
          ++cnt;
        }
        if (cnt > 0) mismatch /= cnt;
        res.region_offset[child - 1] = res.region_offset[parent - 1] + jump + mismatch;
        done[child] = 1;
        progress = true;
      }
    }
  }
  for (int r = 1; r <= n1; ++r)
    if (!done[r]) throw std::logic_error("assemble_conductivity: nesting tree not spanning");

  // exact normalization at the anchor
  const double shift = std::log(anchor_value) - res.log_gamma_at(anchor);
  for (double& c : res.region_offset) c += shift;

  if (truth) {
    const double tube = 2.0 * std::max_element(gradients.begin(), gradients.end(),
                                               [](const auto& a, const auto& b) {
                                                 return a.spacing < b.spacing;
                                               })
                                  ->spacing;
    res.tube_halfwidth = tube;
    double num = 0.0, den = 0.0;
    for (const Vec2& x : sample_grid(scene, tube / 2.0, tube)) {
      const double gt = truth->gamma_at(x);
      const double gr = res.gamma_at(x);
      num += (gr - gt) * (gr - gt);
      den += gt * gt;
    }
    res.gamma_rel_l2_error = den > 0 ? std::sqrt(num / den) : -1.0;
  }
  return res;
}

ReconResult run_recon(const Phantom& phantom, const ReconOptions& opts) {
  Scene scene = phantom.scene;
  scene.finalize(2.0 * opts.h);
  const Mesh mesh = build_mesh(scene, opts.h);
  auto coeffs = phantom.coefficients(opts.lambda);
  std::vector<int> identity(scene.region_count());
  for (int r = 1; r <= scene.region_count(); ++r) identity[r - 1] = r;
  const OperatorSpec op = make_operator(coeffs, identity, 0.0);

  DirichletSolver solver(op, mesh);
  std::vector<SolutionField> us;
  for (const auto& tr : opts.traces)
    us.push_back(solver.solve([&tr](const Vec2& p) { return tr(p); }));

  const FrameField frames(scene);
  const double probe = opts.probe_offset_factor * opts.h;
  std::vector<JumpEstimate> jumps;
  for (const auto& iface : scene.interfaces)
    jumps.push_back(recover_jumps(us, iface, frames, probe, opts.jump_samples));

  std::vector<GradientField> grads;
  const double spacing = opts.gradient_spacing_factor * opts.h;
  for (int r = 1; r <= scene.region_count(); ++r)
    grads.push_back(recover_log_gradient(us, r, spacing, 2.0 * opts.h));

  return assemble_conductivity(scene, jumps, grads, phantom.anchor, phantom.anchor_value,
                               &phantom);
}

}  // namespace nvjac

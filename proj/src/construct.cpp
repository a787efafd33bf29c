#include "nvjac/construct.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace nvjac {

OdeSolution OdeSolution::make(double a, double beta, double g0, bool primary) {
  if (!(a > 0)) throw std::invalid_argument("seed ODE: leading coefficient must be positive");
  OdeSolution s;
  s.primary = primary;
  const double disc = beta * beta + 4.0 * a * g0;
  const double scale = std::max({beta * beta, std::abs(4.0 * a * g0), 1e-30});
  if (std::abs(disc) <= 1e-12 * scale) {
    s.kind = Kind::DoubleRoot;
    s.r1 = beta / (2.0 * a);
  } else if (disc > 0) {
    s.kind = Kind::RealPair;
    const double root = std::sqrt(disc);
    s.r1 = (beta + root) / (2.0 * a);
    s.r2 = (beta - root) / (2.0 * a);
  } else {
    s.kind = Kind::ComplexPair;
    s.r1 = beta / (2.0 * a);            // mu
    s.r2 = std::sqrt(-disc) / (2.0 * a);  // omega
  }
  return s;
}

double OdeSolution::value(double t) const {
  switch (kind) {
    case Kind::RealPair:
      if (primary) return (std::exp(r1 * t) - std::exp(r2 * t)) / (r1 - r2);
      return (r1 * std::exp(r2 * t) - r2 * std::exp(r1 * t)) / (r1 - r2);
    case Kind::DoubleRoot:
      if (primary) return t * std::exp(r1 * t);
      return (1.0 - r1 * t) * std::exp(r1 * t);
    case Kind::ComplexPair: {
      const double mu = r1, om = r2;
      if (primary) return std::exp(mu * t) * std::sin(om * t) / om;
      return std::exp(mu * t) * (std::cos(om * t) - mu / om * std::sin(om * t));
    }
  }
  return 0.0;
}

double OdeSolution::deriv(double t) const {
  switch (kind) {
    case Kind::RealPair:
      if (primary) return (r1 * std::exp(r1 * t) - r2 * std::exp(r2 * t)) / (r1 - r2);
      return r1 * r2 * (std::exp(r2 * t) - std::exp(r1 * t)) / (r1 - r2);
    case Kind::DoubleRoot:
      if (primary) return (1.0 + r1 * t) * std::exp(r1 * t);
      return -r1 * r1 * t * std::exp(r1 * t);
    case Kind::ComplexPair: {
      const double mu = r1, om = r2;
      const double e = std::exp(mu * t);
      if (primary) return e * (mu * std::sin(om * t) / om + std::cos(om * t));
      return -e * (mu * mu / om + om) * std::sin(om * t);
    }
  }
  return 0.0;
}

double OdeSolution::second(double t) const {
  switch (kind) {
    case Kind::RealPair:
      if (primary)
        return (r1 * r1 * std::exp(r1 * t) - r2 * r2 * std::exp(r2 * t)) / (r1 - r2);
      return r1 * r2 * (r2 * std::exp(r2 * t) - r1 * std::exp(r1 * t)) / (r1 - r2);
    case Kind::DoubleRoot:
      if (primary) return r1 * (2.0 + r1 * t) * std::exp(r1 * t);
      return -r1 * r1 * (1.0 + r1 * t) * std::exp(r1 * t);
    case Kind::ComplexPair: {
      const double mu = r1, om = r2;
      const double e = std::exp(mu * t);
      if (primary) return e * ((mu * mu / om - om) * std::sin(om * t) + 2.0 * mu * std::cos(om * t));
      return -(mu * mu / om + om) * e * (mu * std::sin(om * t) + om * std::cos(om * t));
    }
  }
  return 0.0;
}

LocalSeed local_ode_solutions(const OperatorSpec& op, const Vec2& x, int region) {
  if (!op.coeffs) throw std::invalid_argument("local_ode_solutions: empty operator");
  LocalSeed seed;
  seed.anchor = x;
  seed.region = region;
  seed.A_frozen = op.A_at(x, region);
  seed.b_frozen = op.b_at(x, region);
  seed.c_frozen = op.c_at(x, region);
  seed.q_frozen = op.q_at(x, region);
  for (int i = 0; i < 2; ++i) {
    const double a = seed.A_frozen(i, i);
    if (!(a > 0))
      throw std::logic_error("local_ode_solutions: A_ii <= 0 contradicts ellipticity");
    const double beta = seed.c_frozen(i) - seed.b_frozen(i);
    seed.comps[i] = OdeSolution::make(a, beta, seed.q_frozen, /*primary=*/true);
  }
  seed.comps[2] = OdeSolution::make(seed.A_frozen(0, 0), seed.c_frozen(0) - seed.b_frozen(0),
                                    seed.q_frozen, /*primary=*/false);
  return seed;
}

LocalSeed local_ode_solutions(const OperatorSpec& op, const Scene& scene, const Vec2& x) {
  return local_ode_solutions(op, x, scene.region_of(x));
}

double LocalSeed::value(int i, const Vec2& y) const {
  if (i < 2) return comps[i].value(y[i] - anchor[i]);
  return comps[2].value(y[0] - anchor[0]);
}

Vec2 LocalSeed::grad(int i, const Vec2& y) const {
  Vec2 g = Vec2::Zero();
  if (i < 2)
    g[i] = comps[i].deriv(y[i] - anchor[i]);
  else
    g[0] = comps[2].deriv(y[0] - anchor[0]);
  return g;
}

Eigen::Matrix3d LocalSeed::jac_at(const Vec2& y) const {
  Eigen::Matrix3d J;
  for (int i = 0; i < 3; ++i) {
    const Vec2 g = grad(i, y);
    J.row(i) << g.x(), g.y(), value(i, y);
  }
  return J;
}

double LocalSeed::frozen_residual(int i, const Vec2& y) const {
  // L0 u = -sum A_kl d_k d_l u - b . Du + c . Du + q u with constant data;
  // u depends on one coordinate only, so the second-order term uses A_aa.
  const int axis = (i < 2) ? i : 0;
  const OdeSolution& f = comps[i];
  const double t = y[axis] - anchor[axis];
  const double a = A_frozen(axis, axis);
  const double beta = c_frozen(axis) - b_frozen(axis);
  return -a * f.second(t) + beta * f.deriv(t) + q_frozen * f.value(t);
}

RungeDictionary build_runge_dictionary(const OperatorSpec& op, const Mesh& mesh,
                                       const DirichletSolver& solver, int m) {
  if (m < 2) throw std::invalid_argument("runge dictionary: need m >= 2");
  RungeDictionary dict;
  dict.mesh = &mesh;
  dict.op = op;
  dict.m = m;
  const Vec2 c = outer_centroid(mesh.scene.outer);
  dict.members.push_back(solver.solve([](const Vec2&) { return 1.0; }));
  for (int k = 1; k <= m / 2; ++k) {
    dict.members.push_back(solver.solve([c, k](const Vec2& p) {
      return std::cos(k * std::atan2(p.y() - c.y(), p.x() - c.x()));
    }));
    dict.members.push_back(solver.solve([c, k](const Vec2& p) {
      return std::sin(k * std::atan2(p.y() - c.y(), p.x() - c.x()));
    }));
  }
  return dict;
}

RungeFit runge_fit(const RungeDictionary& dict, const LocalSeed& seed, double fit_radius,
                   int m_use) {
  if (m_use < 0) m_use = dict.m;
  if (m_use < 2 || m_use > dict.m) throw std::invalid_argument("runge_fit: bad sub-dictionary size");
  const int n_members = 1 + 2 * (m_use / 2);
  const Mesh& mesh = *dict.mesh;
  const Scene& scene = mesh.scene;
  const int region = seed.region;

  // polar sample pattern in the anchor's region
  std::vector<Vec2> samples{seed.anchor};
  for (int ring = 1; ring <= 5; ++ring) {
    const double rr = fit_radius * ring / 5.0;
    for (int k = 0; k < 16; ++k) {
      const double t = 2.0 * M_PI * (k + 0.31 * ring) / 16.0;
      const Vec2 p = seed.anchor + rr * Vec2(std::cos(t), std::sin(t));
      if (!outer_contains(scene.outer, p)) continue;
      if (scene.region_of(p) != region) continue;
      if (mesh.locate(p, region) < 0) continue;
      samples.push_back(p);
    }
  }
  if (samples.size() < 12)
    throw std::runtime_error("runge_fit: fit ball leaves too few in-region samples");

  const int S = static_cast<int>(samples.size());
  // cache dictionary values and gradients at the samples
  std::vector<Eigen::MatrixXd> dict_rows(n_members, Eigen::MatrixXd(S, 3));
  for (int c = 0; c < n_members; ++c)
    for (int s = 0; s < S; ++s) {
      const FieldSample fs = field_eval(dict.members[c], samples[s], region, false);
      dict_rows[c].row(s) << fs.u, fs.grad.x(), fs.grad.y();
    }

  Eigen::MatrixXd A(3 * S, n_members);
  for (int c = 0; c < n_members; ++c)
    for (int s = 0; s < S; ++s) {
      A(3 * s + 0, c) = dict_rows[c](s, 0);
      A(3 * s + 1, c) = dict_rows[c](s, 1);
      A(3 * s + 2, c) = dict_rows[c](s, 2);
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-8);  // truncated SVD; Runge dictionaries are ill-conditioned

  RungeFit fit;
  fit.m = m_use;
  fit.fit_radius = fit_radius;
  for (int comp = 0; comp < 3; ++comp) {
    Eigen::VectorXd rhs(3 * S);
    for (int s = 0; s < S; ++s) {
      const Vec2 g = seed.grad(comp, samples[s]);
      rhs[3 * s + 0] = seed.value(comp, samples[s]);
      rhs[3 * s + 1] = g.x();
      rhs[3 * s + 2] = g.y();
    }
    const Eigen::VectorXd coef = svd.solve(rhs);
    SolutionField f = dict.members[0];
    f.nodal = coef[0] * dict.members[0].nodal;
    for (int c = 1; c < n_members; ++c) f.nodal += coef[c] * dict.members[c].nodal;
    fit.fields.push_back(std::move(f));
    fit.fit_error.push_back((A * coef - rhs).norm() / std::sqrt(static_cast<double>(3 * S)));
  }
  return fit;
}

RungeFit runge_fit(const OperatorSpec& op, const Mesh& mesh, const LocalSeed& seed, int m,
                   double fit_radius) {
  DirichletSolver solver(op, mesh);
  const RungeDictionary dict = build_runge_dictionary(op, mesh, solver, m);
  return runge_fit(dict, seed, fit_radius);
}

int ball_cover_bound(const Scene& scene, double eps) {
  const double diam = outer_diameter(scene.outer);
  return static_cast<int>(std::floor((diam / eps) * (diam / eps))) + 1;
}

std::vector<Vec2> ball_cover(const Scene& scene, double eps, double sample_spacing) {
  if (!(eps > 0)) throw std::invalid_argument("ball_cover: eps must be positive");
  if (sample_spacing <= 0) sample_spacing = eps / 6.0;
  Scene sc = scene;
  sc.finalize();
  const auto samples = sample_grid(sc, sample_spacing, 0.0);
  std::vector<int> region(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) region[i] = sc.region_of(samples[i]);

  std::vector<Vec2> centers;
  for (int r = 1; r <= sc.region_count(); ++r) {
    std::vector<int> mine;
    for (size_t i = 0; i < samples.size(); ++i)
      if (region[i] == r) mine.push_back(static_cast<int>(i));
    if (mine.empty()) continue;
    // candidate subsample on a coarser pitch
    std::vector<int> cands;
    {
      const int stride = std::max(1, static_cast<int>(std::round(eps / (3.0 * sample_spacing))));
      std::set<std::pair<long, long>> taken;
      for (int i : mine) {
        const long cx = std::lround(samples[i].x() / (stride * sample_spacing));
        const long cy = std::lround(samples[i].y() / (stride * sample_spacing));
        if (taken.insert({cx, cy}).second) cands.push_back(i);
      }
    }
    std::vector<char> covered(mine.size(), 0);
    size_t n_covered = 0;
    while (n_covered < mine.size()) {
      int best_cand = -1;
      int best_gain = 0;
      for (int c : cands) {
        int gain = 0;
        for (size_t k = 0; k < mine.size(); ++k)
          if (!covered[k] && (samples[mine[k]] - samples[c]).norm() <= eps) ++gain;
        if (gain > best_gain) {
          best_gain = gain;
          best_cand = c;
        }
      }
      if (best_cand < 0) {
        // candidates cannot see the leftovers; promote the first uncovered sample
        for (size_t k = 0; k < mine.size(); ++k)
          if (!covered[k]) {
            best_cand = mine[k];
            break;
          }
      }
      centers.push_back(samples[best_cand]);
      for (size_t k = 0; k < mine.size(); ++k)
        if (!covered[k] && (samples[mine[k]] - samples[best_cand]).norm() <= eps) {
          covered[k] = 1;
          ++n_covered;
        }
    }
  }
  if (static_cast<int>(centers.size()) > ball_cover_bound(sc, eps)) {
    std::ostringstream os;
    os << "ball_cover: " << centers.size() << " centers exceed the bound "
       << ball_cover_bound(sc, eps);
    throw std::runtime_error(os.str());
  }
  return centers;
}

namespace {

// In-region det samples over the ball B(center, eps).
std::vector<Vec2> ball_samples(const Scene& scene, const Mesh& mesh, const Vec2& center,
                               double eps, int region) {
  std::vector<Vec2> out;
  const int rings = 6;
  out.push_back(center);
  for (int ring = 1; ring <= rings; ++ring) {
    const double rr = eps * ring / rings;
    const int na = std::max(8, 4 * ring);
    for (int k = 0; k < na; ++k) {
      const double t = 2.0 * M_PI * (k + 0.17 * ring) / na;
      const Vec2 p = center + rr * Vec2(std::cos(t), std::sin(t));
      if (!outer_contains(scene.outer, p)) continue;
      if (region != 0 && scene.region_of(p) != region) continue;
      if (mesh.locate(p, scene.region_of(p)) < 0) continue;
      out.push_back(p);
    }
  }
  return out;
}

double min_det_over(const std::vector<SolutionField>& triple, const std::vector<Vec2>& pts,
                    const Scene& scene) {
  double worst = std::numeric_limits<double>::infinity();
  for (const Vec2& p : pts) {
    const int side = scene.region_of(p);
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i) {
      const FieldSample s = field_eval(triple[i], p, side, false);
      J.row(i) << s.grad.x(), s.grad.y(), s.u;
    }
    worst = std::min(worst, J.determinant());
  }
  return worst;
}

}  // namespace

AdmissibleFamily build_admissible_family(const Scene& scene,
                                         std::shared_ptr<const CoefficientSet> coeffs,
                                         double sigma, const Mesh& mesh,
                                         const ConstructOptions& opts) {
  AdmissibleFamily fam;
  fam.sigma = sigma;
  Scene sc = mesh.scene;

  const ShiftReport shift = coercivity_shift(coeffs, sc, mesh);
  fam.kappa = shift.kappa;
  std::vector<int> identity(sc.region_count());
  for (int r = 1; r <= sc.region_count(); ++r) identity[r - 1] = r;
  const OperatorSpec op_shift = make_operator(coeffs, identity, shift.kappa);
  const OperatorSpec op_orig = make_operator(coeffs, identity, 0.0);
  DirichletSolver solver_shift(op_shift, mesh);
  DirichletSolver solver_orig(op_orig, mesh);
  const RungeDictionary dict = build_runge_dictionary(op_shift, mesh, solver_shift, opts.dict_size);

  // pick one working eps for all regions by bisection at per-region anchors
  const double diam = outer_diameter(sc.outer);
  double eps = std::min(0.5 * (sc.inclusion_count() > 0 ? sc.d0 : diam), diam / 6.0);
  const double eps_floor = 4.0 * mesh.h;
  {
    std::vector<Vec2> anchors;
    const auto grid = sample_grid(sc, diam / 40.0, 2.0 * mesh.h);
    for (int r = 1; r <= sc.region_count(); ++r) {
      Vec2 best = Vec2::Zero();
      double best_clear = -1.0;
      for (const Vec2& p : grid) {
        if (sc.region_of(p) != r) continue;
        double clear = outer_boundary_distance(sc.outer, p);
        for (const auto& c : sc.circles)
          clear = std::min(clear, std::abs(c.signed_distance(p)));
        if (clear > best_clear) {
          best_clear = clear;
          best = p;
        }
      }
      if (best_clear > 0) anchors.push_back(best);
    }
    for (const Vec2& anchor : anchors) {
      double e = eps;
      while (e >= eps_floor) {
        const int region = sc.region_of(anchor);
        const LocalSeed seed = local_ode_solutions(op_shift, anchor, region);
        const RungeFit fit = runge_fit(dict, seed, e);
        const auto pts = ball_samples(sc, mesh, anchor, e, 0);
        if (min_det_over(fit.fields, pts, sc) > sigma) break;
        e *= 0.6;
      }
      eps = std::min(eps, std::max(e, eps_floor));
    }
  }
  fam.eps = eps;

  const GridSpec grid{opts.grid_spacing, 0.0, 0.0, 64};
  const FrameField frames(sc);

  const auto centers = ball_cover(sc, eps);
  for (const Vec2& center : centers) {
    CenterReport rep;
    rep.center = center;
    rep.region = sc.region_of(center);
    rep.eps = eps;

    const auto pts = ball_samples(sc, mesh, center, eps, 0);
    // skip when the family already certifies this ball
    if (!fam.fields.empty()) {
      double worst = std::numeric_limits<double>::infinity();
      for (const Vec2& p : pts) {
        const Eigen::MatrixXd J = jac_matrix(fam.fields, p, sc.region_of(p));
        worst = std::min(worst, det_margin(J));
      }
      if (worst > sigma) {
        rep.skipped = true;
        rep.certified = true;
        rep.margin_original = worst;
        fam.centers.push_back(rep);
        continue;
      }
    }

    const LocalSeed seed = local_ode_solutions(op_shift, center, rep.region);
    double e = eps;
    RungeFit fit;
    double margin = -std::numeric_limits<double>::infinity();
    while (e >= eps_floor) {
      fit = runge_fit(dict, seed, e);
      margin = min_det_over(fit.fields, ball_samples(sc, mesh, center, e, 0), sc);
      if (margin > sigma) break;
      e *= 0.6;
    }
    rep.eps = e;
    rep.fit_error = *std::max_element(fit.fit_error.begin(), fit.fit_error.end());
    rep.margin_shifted = margin;
    if (!(margin > sigma)) {
      rep.note = "seed fit failed to certify sigma on the ball";
      fam.centers.push_back(rep);
      continue;
    }

    // shift back: re-solve under the original operator with the same traces
    std::vector<SolutionField> triple;
    for (const auto& f : fit.fields) triple.push_back(solver_orig.solve_nodal_bc(f.nodal));
    rep.margin_original = min_det_over(triple, ball_samples(sc, mesh, center, e, 0), sc);
    if (!(rep.margin_original > sigma / 2.0)) {
      rep.note = "margin lost in the shift-back step";
      fam.centers.push_back(rep);
      continue;
    }
    rep.certified = true;
    fam.centers.push_back(rep);
    for (auto& f : triple) fam.fields.push_back(std::move(f));
  }

  fam.all_centers_certified = true;
  for (const auto& c : fam.centers) fam.all_centers_certified &= c.certified;

  if (fam.fields.empty())
    throw std::runtime_error("build_admissible_family: no center produced a certified triple");

  fam.report = admissibility_margin(fam.fields, sc, frames, op_orig, grid);

  if (opts.reduce_to_pstar) {
    const int target = std::max(p_star(2, coeffs->alpha), 3);
    std::uint64_t seed_stream = opts.seed;
    while (static_cast<int>(fam.fields.size()) > target &&
           static_cast<int>(fam.fields.size()) - 1 >= 3) {
      const ReduceResult red = whitney_reduce(fam.fields, sc, frames, op_orig, grid,
                                              seed_stream++, opts.reduce_retry_cap);
      if (!red.ok) break;
      fam.fields = red.fields;
      fam.reduction_coefficients.push_back(red.a);
    }
    fam.report = admissibility_margin(fam.fields, sc, frames, op_orig, grid);
  }
  return fam;
}

}  // namespace nvjac

#include "nvjac/jacobian.hpp"

#include <cmath>
#include <random>

namespace nvjac {

Eigen::MatrixXd jac_matrix(const std::vector<SolutionField>& us, const Vec2& x, int side) {
  Eigen::MatrixXd J(us.size(), 3);
  for (size_t l = 0; l < us.size(); ++l) {
    const FieldSample s = field_eval(us[l], x, side, /*with_laplacian=*/false);
    J.row(l) << s.grad.x(), s.grad.y(), s.u;
  }
  return J;
}

Eigen::RowVector3d flux_jac(const SolutionField& u, const FrameField& frames,
                            const OperatorSpec& op, const Vec2& x, int side) {
  if (side == 0) side = u.mesh->scene.region_of(x);
  const FieldSample s = field_eval(u, x, side, /*with_laplacian=*/false);
  const Eigen::Matrix2d F = frames.frame(x);
  const Eigen::Matrix2d A = op.A_at(x, side);
  const Vec2 b = op.b_at(x, side);
  Eigen::RowVector3d row;
  row << (A * s.grad + b * s.u).dot(F.col(0)), s.grad.dot(F.col(1)), s.u;
  return row;
}

int matrix_rank(const Eigen::MatrixXd& m, double rel_threshold) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cap = rel_threshold * sv(0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cap) ++r;
  return r;
}

double det_margin(const Eigen::MatrixXd& rows) {
  const int P = static_cast<int>(rows.rows());
  if (P < 3) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j)
      for (int k = j + 1; k < P; ++k) {
        Eigen::Matrix3d m;
        m.row(0) = rows.row(i);
        m.row(1) = rows.row(j);
        m.row(2) = rows.row(k);
        acc += std::abs(m.determinant());
      }
  return acc;
}

SampleTable build_sample_table(const std::vector<SolutionField>& us, const GridSpec& grid) {
  if (us.empty()) throw std::invalid_argument("sample table: empty field list");
  const Mesh& mesh = *us.front().mesh;
  for (const auto& u : us)
    if (u.mesh != us.front().mesh)
      throw std::invalid_argument("sample table: fields on different meshes");
  const Scene& scene = mesh.scene;
  const double spacing = grid.spacing > 0 ? grid.spacing : mesh.h;
  const double tube = grid.tube_halfwidth > 0 ? grid.tube_halfwidth : 2.0 * mesh.h;
  const double off = grid.probe_offset > 0 ? grid.probe_offset : 2.0 * mesh.h;

  SampleTable table;
  for (const Vec2& x : sample_grid(scene, spacing, tube)) {
    SampleTable::Point p;
    p.x = x;
    p.side = scene.region_of(x);
    table.points.push_back(p);
  }
  for (const auto& g : scene.interfaces) {
    for (int k = 0; k < grid.probes_per_interface; ++k) {
      const double t = 2.0 * M_PI * (k + 0.5) / grid.probes_per_interface;
      const Vec2 xg = g.circle.center + g.circle.radius * Vec2(std::cos(t), std::sin(t));
      const Vec2 n = g.normal_at(xg);
      SampleTable::Point plus, minus;
      plus.x = xg + off * n;
      plus.side = g.j;
      plus.interface_id = g.j;
      minus.x = xg - off * n;
      minus.side = g.i;
      minus.interface_id = g.j;
      const int base = static_cast<int>(table.points.size());
      plus.pair = base + 1;
      minus.pair = base;
      table.points.push_back(plus);
      table.points.push_back(minus);
    }
  }

  const int S = static_cast<int>(table.points.size());
  table.rows.assign(us.size(), Eigen::MatrixXd(S, 3));
  for (int s = 0; s < S; ++s) {
    const auto& pt = table.points[s];
    const int tri = mesh.locate(pt.x, pt.side);
    if (tri < 0 || mesh.tri_region[tri] != pt.side)
      throw std::runtime_error("sample table: sample point not locatable on its side");
    for (size_t f = 0; f < us.size(); ++f) {
      const FieldSample fs = field_eval(us[f], pt.x, pt.side, /*with_laplacian=*/false);
      table.rows[f].row(s) << fs.grad.x(), fs.grad.y(), fs.u;
    }
  }
  return table;
}

JacobianReport admissibility_margin(const std::vector<SolutionField>& us, const Scene& scene,
                                    const FrameField& frames, const OperatorSpec& op,
                                    const GridSpec& grid) {
  const int P = static_cast<int>(us.size());
  JacobianReport rep;
  rep.P = P;
  if (P == 0) throw std::invalid_argument("admissibility_margin: empty family");
  const SampleTable table = build_sample_table(us, grid);
  if (table.points.empty()) throw std::invalid_argument("admissibility_margin: empty sample set");

  bool full_rank_everywhere = true;
  Eigen::MatrixXd rows(P, 3);
  for (size_t s = 0; s < table.points.size(); ++s) {
    for (int f = 0; f < P; ++f) rows.row(f) = table.rows[f].row(s);
    JacobianSampleRecord rec;
    rec.x = table.points[s].x;
    rec.side = table.points[s].side;
    rec.interface_id = table.points[s].interface_id;
    rec.rank = matrix_rank(rows);
    rec.margin = det_margin(rows);
    rep.margin = std::min(rep.margin, rec.margin);
    full_rank_everywhere = full_rank_everywhere && (rec.rank == 3);
    rep.samples.push_back(rec);
  }
  rep.admissible = (P >= 3) && full_rank_everywhere;

  // flux-Jacobian records on the interfaces themselves
  const Mesh& mesh = *us.front().mesh;
  const double off = grid.probe_offset > 0 ? grid.probe_offset : 2.0 * mesh.h;
  for (const auto& g : scene.interfaces) {
    for (int k = 0; k < grid.probes_per_interface; ++k) {
      const double t = 2.0 * M_PI * (k + 0.5) / grid.probes_per_interface;
      const Vec2 xg = g.circle.center + g.circle.radius * Vec2(std::cos(t), std::sin(t));
      const Vec2 n = g.normal_at(xg);
      InterfaceProbeRecord rec;
      rec.interface_id = g.j;
      rec.x = xg;
      Eigen::MatrixXd fplus(P, 3), fminus(P, 3);
      double raw_jump = 0.0;
      for (int f = 0; f < P; ++f) {
        fplus.row(f) = flux_jac(us[f], frames, op, xg + off * n, g.j);
        fminus.row(f) = flux_jac(us[f], frames, op, xg - off * n, g.i);
        const FieldSample sp = field_eval(us[f], xg + off * n, g.j, false);
        const FieldSample sm = field_eval(us[f], xg - off * n, g.i, false);
        raw_jump = std::max(raw_jump, (sp.grad - sm.grad).norm());
      }
      rec.fluxjac_margin = det_margin(fplus);
      rec.fluxjac_jump = (fplus - fminus).cwiseAbs().maxCoeff();
      rec.raw_gradient_jump = raw_jump;
      rep.interface_probes.push_back(rec);
    }
  }
  return rep;
}

std::vector<SolutionField> reduce_with(const std::vector<SolutionField>& us,
                                       const Eigen::VectorXd& a) {
  const int P = static_cast<int>(us.size());
  if (a.size() != P - 1) throw std::invalid_argument("reduce_with: coefficient size must be P-1");
  std::vector<SolutionField> out;
  for (int i = 0; i < P - 1; ++i) out.push_back(field_lincomb(1.0, us[i], -a[i], us[P - 1]));
  return out;
}

ReductionCheck check_reduction(const SampleTable& table, const Eigen::VectorXd& a,
                               double margin_floor) {
  const int P = table.field_count();
  ReductionCheck chk;
  chk.min_margin = std::numeric_limits<double>::infinity();
  chk.min_rank = 4;
  chk.max_rank = 0;
  Eigen::MatrixXd rows(P - 1, 3);
  bool ok = true;
  for (size_t s = 0; s < table.points.size(); ++s) {
    double row_scale = 0.0;
    for (int f = 0; f < P - 1; ++f) {
      rows.row(f) = table.rows[f].row(s) - a[f] * table.rows[P - 1].row(s);
      row_scale = std::max(row_scale, rows.row(f).norm());
    }
    const double m = det_margin(rows);
    // a comfortably positive margin certifies rank 3 without the SVD
    int r;
    if (m > 1e-7 * row_scale * row_scale * row_scale)
      r = 3;
    else
      r = matrix_rank(rows);
    chk.min_rank = std::min(chk.min_rank, r);
    chk.max_rank = std::max(chk.max_rank, r);
    chk.min_margin = std::min(chk.min_margin, m);
    ok = ok && (r == 3) && (m > margin_floor);
  }
  chk.ok = ok;
  return chk;
}

namespace {
double uniform_pm1(std::mt19937_64& rng) { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; }
}  // namespace

ReduceResult whitney_reduce(const std::vector<SolutionField>& us, const Scene& scene,
                            const FrameField& frames, const OperatorSpec& op,
                            const GridSpec& grid, std::uint64_t seed, int retry_cap) {
  (void)scene;
  (void)frames;
  (void)op;
  const int P = static_cast<int>(us.size());
  if (P - 1 < 3)
    throw std::invalid_argument("whitney_reduce: need P - 1 >= d + 1 fields after reduction");
  const SampleTable table = build_sample_table(us, grid);
  {
    // the input must be admissible to start with
    Eigen::MatrixXd rows(P, 3);
    for (size_t s = 0; s < table.points.size(); ++s) {
      for (int f = 0; f < P; ++f) rows.row(f) = table.rows[f].row(s);
      if (matrix_rank(rows) != 3)
        throw std::invalid_argument("whitney_reduce: input family is not admissible");
    }
  }
  std::mt19937_64 rng(seed);
  ReduceResult res;
  res.a.resize(P - 1);
  for (int draw = 0; draw < retry_cap; ++draw) {
    for (int i = 0; i < P - 1; ++i) res.a[i] = uniform_pm1(rng);
    ++res.draws_used;
    const ReductionCheck chk = check_reduction(table, res.a);
    if (chk.ok) {
      res.ok = true;
      res.post_margin = chk.min_margin;
      res.fields = reduce_with(us, res.a);
      return res;
    }
    ++res.failures;
  }
  res.ok = false;
  return res;
}

std::array<int, 2> gradient_subfamily(const std::vector<SolutionField>& us, const Vec2& x,
                                      int side) {
  const Eigen::MatrixXd J = jac_matrix(us, x, side);
  if (matrix_rank(J) != 3)
    throw std::invalid_argument("gradient_subfamily: rank deficiency at the evaluation point");
  const int P = static_cast<int>(us.size());
  double best = -1.0;
  std::array<int, 2> idx{0, 1};
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j) {
      const double det = J(i, 0) * J(j, 1) - J(i, 1) * J(j, 0);
      if (std::abs(det) > best) {
        best = std::abs(det);
        idx = {i, j};
      }
    }
  if (best <= 0)
    throw std::invalid_argument("gradient_subfamily: all gradient pairs are singular");
  return idx;
}

int p_star(int d, double alpha) {
  return static_cast<int>(std::floor((d + dstar(d) + 1) / alpha));
}

}  // namespace nvjac

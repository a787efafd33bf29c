#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nvjac/jacobian.hpp"
#include "oracles.hpp"

using namespace nvjac;

namespace {

Scene plain_disk() {
  Scene s;
  s.outer = OuterDisk{Vec2(0, 0), 1.0};
  s.finalize();
  return s;
}

Scene one_inclusion() {
  Scene s;
  s.outer = OuterDisk{Vec2(0, 0), 1.0};
  s.circles = {Circle{Vec2(0, 0), 0.5}};
  s.finalize();
  return s;
}

OperatorSpec laplace_op(int regions) {
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::laplace(regions));
  std::vector<int> id(regions);
  for (int r = 1; r <= regions; ++r) id[r - 1] = r;
  return make_operator(cs, id, 0.0);
}

struct Lab {
  Mesh mesh;
  OperatorSpec op;
  DirichletSolver solver;
  Lab(const Scene& scene, double h, const OperatorSpec& op_)
      : mesh(build_mesh(scene, h)), op(op_), solver(op, mesh) {}
  SolutionField solve(const std::function<double(const Vec2&)>& g) { return solver.solve(g); }
};

// the affine family (x1, x2, 1) under Laplace
std::vector<SolutionField> affine_family(Lab& lab) {
  return {lab.solve([](const Vec2& p) { return p.x(); }),
          lab.solve([](const Vec2& p) { return p.y(); }),
          lab.solve([](const Vec2&) { return 1.0; })};
}

// brute-force margin: all 3-subsets by explicit index loops, independent of
// det_margin's implementation
double minor_sum_oracle(const Eigen::MatrixXd& rows) {
  const int P = static_cast<int>(rows.rows());
  double acc = 0;
  for (int i = 0; i < P; ++i)
    for (int j = i + 1; j < P; ++j)
      for (int k = j + 1; k < P; ++k) {
        const double det = rows(i, 0) * (rows(j, 1) * rows(k, 2) - rows(j, 2) * rows(k, 1)) -
                           rows(i, 1) * (rows(j, 0) * rows(k, 2) - rows(j, 2) * rows(k, 0)) +
                           rows(i, 2) * (rows(j, 0) * rows(k, 1) - rows(j, 1) * rows(k, 0));
        acc += std::abs(det);
      }
  return acc;
}

}  // namespace

TEST_CASE("jac_matrix of the affine family") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  const auto us = affine_family(lab);
  for (const Vec2 x : {Vec2(0.2, 0.3), Vec2(-0.5, 0.1), Vec2(0.0, 0.0)}) {
    const Eigen::MatrixXd J = jac_matrix(us, x);
    CHECK(J(0, 0) == doctest::Approx(1).epsilon(1e-9));
    CHECK(J(0, 1) == doctest::Approx(0).epsilon(1e-9));
    CHECK(J(0, 2) == doctest::Approx(x.x()).epsilon(1e-9));
    CHECK(J(1, 2) == doctest::Approx(x.y()).epsilon(1e-9));
    CHECK(J(2, 0) == doctest::Approx(0).epsilon(1e-9));
    CHECK(J(2, 2) == doctest::Approx(1).epsilon(1e-9));
    CHECK(matrix_rank(J) == 3);
  }
}

TEST_CASE("duplicating a field never decreases rank or margin") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  auto us = affine_family(lab);
  const Vec2 x(0.25, -0.15);
  const Eigen::MatrixXd J3 = jac_matrix(us, x);
  us.push_back(us.front());
  const Eigen::MatrixXd J4 = jac_matrix(us, x);
  CHECK(matrix_rank(J4) == matrix_rank(J3));
  CHECK(det_margin(J4) >= det_margin(J3) - 1e-14);
}

TEST_CASE("P = 2 is never admissible") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  std::vector<SolutionField> us{lab.solve([](const Vec2& p) { return p.x(); }),
                                lab.solve([](const Vec2& p) { return p.y(); })};
  const FrameField frames(lab.mesh.scene);
  const auto rep = admissibility_margin(us, lab.mesh.scene, frames, lab.op, GridSpec{0.1});
  CHECK_FALSE(rep.admissible);
  CHECK(jac_matrix(us, Vec2(0.1, 0.1)).rows() == 2);
}

TEST_CASE("flux_jac equals the jac row times the T matrix") {
  const Scene scene = one_inclusion();
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::isotropic({2.0, 1.0}, 0.4));
  cs->regions[0].b = {Expr::constant(0.3), Expr::constant(-0.1)};
  const OperatorSpec op = make_operator(cs, {1, 2}, 0.0);
  Lab lab(scene, 0.05, op);
  const auto u = lab.solve([](const Vec2& p) { return p.x() + 0.5 * p.y(); });
  const FrameField frames(scene);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(-1, 1);
  int tested = 0;
  while (tested < 200) {
    const Vec2 x(ud(rng), ud(rng));
    if (x.norm() > 0.95 || std::abs(x.norm() - 0.5) < 0.03) continue;
    ++tested;
    const int side = scene.region_of(x);
    const Eigen::RowVector3d direct = flux_jac(u, frames, op, x, side);
    const Eigen::Matrix2d F = frames.frame(x);
    const Eigen::MatrixXd T =
        t_matrix(op.A_at(x, side), op.b_at(x, side),
                 {embed(F.col(0)), embed(F.col(1)), Eigen::Vector3d(0, 0, 1)});
    const Eigen::RowVector3d via_t = jac_matrix({u}, x, side).row(0) * T;
    CHECK((direct - via_t).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("flux_jac special cases") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  const FrameField frames(lab.mesh.scene);
  const auto ux = lab.solve([](const Vec2& p) { return p.x(); });
  const Eigen::RowVector3d row = flux_jac(ux, frames, lab.op, Vec2(0.2, 0.1));
  CHECK(row(0) == doctest::Approx(1).epsilon(1e-9));   // (A Du) . e1 with A = I
  CHECK(row(1) == doctest::Approx(0).epsilon(1e-9));
  CHECK(row(2) == doctest::Approx(0.2).epsilon(1e-9));
  const auto uc = lab.solve([](const Vec2&) { return 1.0; });
  const Eigen::RowVector3d rc = flux_jac(uc, frames, lab.op, Vec2(-0.3, 0.4));
  CHECK(rc(0) == doctest::Approx(0).epsilon(1e-10));
  CHECK(rc(1) == doctest::Approx(0).epsilon(1e-10));
  CHECK(rc(2) == doctest::Approx(1).epsilon(1e-10));
}

TEST_CASE("admissibility margins match the brute-force minor enumeration") {
  Lab lab(plain_disk(), 0.08, laplace_op(1));
  std::vector<SolutionField> us{lab.solve([](const Vec2& p) { return p.x(); }),
                                lab.solve([](const Vec2& p) { return p.y(); }),
                                lab.solve([](const Vec2& p) { return p.x() * p.x() - p.y() * p.y(); }),
                                lab.solve([](const Vec2&) { return 1.0; })};
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ud(-0.9, 0.9);
  for (int k = 0; k < 100; ++k) {
    const Vec2 x(ud(rng), ud(rng));
    if (x.norm() > 0.9) continue;
    const Eigen::MatrixXd J = jac_matrix(us, x);
    CHECK(det_margin(J) == doctest::Approx(minor_sum_oracle(J)).epsilon(1e-12));
  }
  const FrameField frames(lab.mesh.scene);
  const auto rep = admissibility_margin(us, lab.mesh.scene, frames, lab.op, GridSpec{0.08});
  CHECK(rep.admissible);
  CHECK(rep.margin > 0);
}

TEST_CASE("affine family margin is one everywhere") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  const auto us = affine_family(lab);
  const FrameField frames(lab.mesh.scene);
  const auto rep = admissibility_margin(us, lab.mesh.scene, frames, lab.op, GridSpec{0.1});
  CHECK(rep.admissible);
  CHECK(rep.margin == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("whitney: forced zero coefficients drop a duplicate") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  auto us = affine_family(lab);
  us.push_back(us.back());  // (x1, x2, 1, 1)
  const auto reduced = reduce_with(us, Eigen::Vector3d(0, 0, 0));
  REQUIRE(reduced.size() == 3);
  const FrameField frames(lab.mesh.scene);
  const auto rep = admissibility_margin(reduced, lab.mesh.scene, frames, lab.op, GridSpec{0.1});
  CHECK(rep.admissible);
}

TEST_CASE("whitney: Monte-Carlo failure rate below 1 percent and rank sandwich") {
  Lab lab(plain_disk(), 0.06, laplace_op(1));
  std::vector<SolutionField> us{
      lab.solve([](const Vec2& p) { return p.x(); }),
      lab.solve([](const Vec2& p) { return p.y(); }),
      lab.solve([](const Vec2& p) { return p.x() * p.x() - p.y() * p.y(); }),
      lab.solve([](const Vec2& p) { return 2.0 * p.x() * p.y(); }),
      lab.solve([](const Vec2&) { return 1.0; })};
  const SampleTable table = build_sample_table(us, GridSpec{0.06});
  std::mt19937_64 rng(2024);
  int failures = 0;
  const int draws = 1000;
  for (int d = 0; d < draws; ++d) {
    Eigen::VectorXd a(4);
    for (int i = 0; i < 4; ++i) a[i] = 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
    const ReductionCheck chk = check_reduction(table, a);
    if (!chk.ok) ++failures;
    CHECK(chk.min_rank >= 2);
    CHECK(chk.max_rank <= 3);
  }
  CHECK(failures < 10);
}

TEST_CASE("whitney: the adversarial coefficient vector is detected and resampled") {
  Lab lab(plain_disk(), 0.08, laplace_op(1));
  std::vector<SolutionField> us{
      lab.solve([](const Vec2& p) { return p.x(); }),
      lab.solve([](const Vec2& p) { return p.y(); }),
      lab.solve([](const Vec2& p) { return p.x() * p.x() - p.y() * p.y(); }),
      lab.solve([](const Vec2& p) { return 2.0 * p.x() * p.y(); }),
      lab.solve([](const Vec2&) { return 1.0; })};
  const SampleTable table = build_sample_table(us, GridSpec{0.08});
  // build a degenerate at the first sample point: with z solving row_P . z = 1,
  // the choice a_i = row_i . z sends every reduced row into z's orthogonal
  // complement, collapsing the rank there
  const int P = table.field_count();
  const Eigen::Vector3d rP = table.rows[P - 1].row(0).transpose();
  REQUIRE(rP.norm() > 0);
  const Eigen::Vector3d z = rP / rP.squaredNorm();
  Eigen::VectorXd a(P - 1);
  for (int i = 0; i < P - 1; ++i) a[i] = table.rows[i].row(0).dot(z);
  const ReductionCheck bad = check_reduction(table, a);
  CHECK_FALSE(bad.ok);
  CHECK(bad.min_rank == 2);

  // the seeded reducer still succeeds by redrawing
  const FrameField frames(lab.mesh.scene);
  const ReduceResult red =
      whitney_reduce(us, lab.mesh.scene, frames, lab.op, GridSpec{0.08}, 99, 50);
  CHECK(red.ok);
  CHECK(red.post_margin > 0);
  CHECK(red.fields.size() == 4);
}

TEST_CASE("whitney preconditions") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  const auto us = affine_family(lab);  // P = 3: P - 1 < d + 1
  const FrameField frames(lab.mesh.scene);
  CHECK_THROWS_AS(whitney_reduce(us, lab.mesh.scene, frames, lab.op, GridSpec{0.1}, 1, 8),
                  std::invalid_argument);
}

TEST_CASE("gradient subfamily") {
  Lab lab(plain_disk(), 0.1, laplace_op(1));
  auto us = affine_family(lab);
  const auto idx = gradient_subfamily(us, Vec2(0.2, 0.2));
  CHECK(idx[0] == 0);
  CHECK(idx[1] == 1);
  // permuting the family returns the same underlying pair
  std::vector<SolutionField> perm{us[2], us[0], us[1]};
  const auto idx2 = gradient_subfamily(perm, Vec2(0.2, 0.2));
  CHECK(idx2[0] == 1);
  CHECK(idx2[1] == 2);

  // whenever the generalized Jacobian has full rank, some pair of gradients
  // is independent
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-0.7, 0.7);
  for (int k = 0; k < 50; ++k) {
    const Vec2 x(ud(rng), ud(rng));
    const auto ij = gradient_subfamily(us, x);
    const Eigen::MatrixXd J = jac_matrix(us, x);
    const double det = J(ij[0], 0) * J(ij[1], 1) - J(ij[0], 1) * J(ij[1], 0);
    CHECK(std::abs(det) > 1e-8);
  }
}

TEST_CASE("flux-Jacobian crosses the interface continuously, raw gradients jump") {
  const Scene scene = one_inclusion();
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::isotropic({2.0, 1.0}, 0.4));
  const OperatorSpec op = make_operator(cs, {1, 2}, 0.0);
  const oracles::TwoPhaseRadial exact(2.0, 1.0, 0.5);

  auto jumps_at = [&](double h) {
    Lab lab(scene, h, op);
    const auto u = lab.solve([](const Vec2& p) { return p.x(); });
    const FrameField frames(scene);
    const Interface& g = scene.interfaces[0];
    double flux_jump = 0.0, raw_jump = 0.0;
    for (int k = 0; k < 32; ++k) {
      const double t = 2.0 * M_PI * (k + 0.5) / 32;
      const Vec2 xg = g.circle.center + 0.5 * Vec2(std::cos(t), std::sin(t));
      const Vec2 n = g.normal_at(xg);
      const Eigen::RowVector3d fp = flux_jac(u, frames, op, xg + 2 * h * n, g.j);
      const Eigen::RowVector3d fm = flux_jac(u, frames, op, xg - 2 * h * n, g.i);
      flux_jump = std::max(flux_jump, (fp - fm).cwiseAbs().maxCoeff());
      const Vec2 gp = field_eval(u, xg + 2 * h * n, g.j, false).grad;
      const Vec2 gm = field_eval(u, xg - 2 * h * n, g.i, false).grad;
      raw_jump = std::max(raw_jump, (gp - gm).cwiseAbs().maxCoeff());
    }
    return std::make_pair(flux_jump, raw_jump);
  };

  const auto [flux1, raw1] = jumps_at(0.05);
  const auto [flux2, raw2] = jumps_at(0.025);
  // flux rows shrink like h
  CHECK(flux2 <= 0.75 * flux1);
  // raw normal derivative keeps an O(1) jump at the oracle value
  const double expected_jump =
      std::abs(exact.normal_derivative_out(0.0) - exact.normal_derivative_in(0.0));
  CHECK(raw2 == doctest::Approx(expected_jump).epsilon(0.15));
  CHECK(raw2 > 10.0 * flux2);
}

TEST_CASE("P* arithmetic") {
  CHECK(p_star(2, 1.0) == 5);
  CHECK(p_star(2, 0.5) == 10);
  CHECK(p_star(3, 1.0) == 8);  // d* = 4 for d = 3
  CHECK(p_star(4, 1.0) == 9);  // d* = 4
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nvjac/solver.hpp"
#include "oracles.hpp"

using namespace nvjac;

namespace {

Scene one_inclusion() {
  Scene s;
  s.outer = OuterDisk{Vec2(0, 0), 1.0};
  s.circles = {Circle{Vec2(0, 0), 0.5}};
  s.finalize();
  return s;
}

Scene plain_disk() {
  Scene s;
  s.outer = OuterDisk{Vec2(0, 0), 1.0};
  s.finalize();
  return s;
}

OperatorSpec two_phase_op(double gin, double gout) {
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::isotropic({gin, gout}, 0.4));
  return make_operator(cs, {1, 2}, 0.0);
}

OperatorSpec laplace_op(int regions) {
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::laplace(regions));
  std::vector<int> id(regions);
  for (int r = 1; r <= regions; ++r) id[r - 1] = r;
  return make_operator(cs, id, 0.0);
}

double two_phase_l2_error(double h) {
  const oracles::TwoPhaseRadial exact(2.0, 1.0, 0.5);
  const Mesh mesh = build_mesh(one_inclusion(), h);
  const SolutionField u = solve_dirichlet(two_phase_op(2.0, 1.0), mesh,
                                          [](const Vec2& p) { return p.x(); });
  return l2_error_vs(mesh, u.nodal, [&](const Vec2& p) { return exact.value(p); });
}

}  // namespace

TEST_CASE("linear boundary data is reproduced exactly under Laplace") {
  const Mesh mesh = build_mesh(plain_disk(), 0.1);
  const SolutionField u = solve_dirichlet(laplace_op(1), mesh,
                                          [](const Vec2& p) { return p.x(); });
  double worst = 0;
  for (int v = 0; v < mesh.vertex_count(); ++v)
    worst = std::max(worst, std::abs(u.nodal[v] - mesh.vertices[v].x()));
  CHECK(worst <= 1e-10);
  CHECK(u.residual <= 1e-10);
}

TEST_CASE("two-phase radial solve converges at second order") {
  const double e1 = two_phase_l2_error(0.05);
  const double e2 = two_phase_l2_error(0.025);
  CHECK(e1 / e2 >= 3.2);
  CHECK(e1 / e2 <= 4.8);
}

TEST_CASE("reaction-diffusion radial profile matches the 1-D oracle") {
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::laplace(1));
  cs->regions[0].q = Expr::constant(1.0);
  const OperatorSpec op = make_operator(cs, {1}, 0.0);
  const Mesh mesh = build_mesh(plain_disk(), 0.045);
  const SolutionField u = solve_dirichlet(op, mesh, [](const Vec2&) { return 1.0; });
  const int n = 4000;
  const auto profile = oracles::radial_reaction_profile(1.0, 1.0, n);
  for (double r : {0.0, 0.25, 0.5, 0.75}) {
    const double uh = field_eval(u, Vec2(r, 0), 0, false).u;
    const double ref = profile[static_cast<int>(std::round(r * n))];
    CHECK(uh == doctest::Approx(ref).epsilon(1e-4));
  }
}

TEST_CASE("nonsymmetric operators take the direct path and still satisfy the residual bound") {
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::laplace(1));
  cs->regions[0].b = {Expr::constant(0.3), Expr::constant(-0.2)};
  cs->regions[0].c = {Expr::constant(-0.1), Expr::constant(0.4)};
  cs->regions[0].q = Expr::constant(0.7);
  const OperatorSpec op = make_operator(cs, {1}, 0.0);
  CHECK_FALSE(op.is_symmetric());
  const Mesh mesh = build_mesh(plain_disk(), 0.08);
  const SolutionField u = solve_dirichlet(op, mesh, [](const Vec2& p) { return p.x() * p.y(); });
  CHECK(u.residual <= 1e-10);
}

TEST_CASE("transmission with zero jumps coincides with the Dirichlet solve") {
  const Mesh mesh = build_mesh(one_inclusion(), 0.08);
  const OperatorSpec op = two_phase_op(2.0, 1.0);
  const auto g = [](const Vec2& p) { return p.x() - 0.3 * p.y(); };
  const SolutionField direct = solve_dirichlet(op, mesh, g);
  const SolutionField trans = solve_transmission(
      op, mesh, 1, [](const Vec2&) { return 0.0; }, [](const Vec2&) { return 0.0; }, g);
  for (int v = 0; v < mesh.vertex_count(); ++v)
    CHECK(trans.nodal[v] == doctest::Approx(direct.nodal[v]).epsilon(1e-9));
}

TEST_CASE("prescribed-jump solve matches the radial piecewise-harmonic oracle at order 2") {
  const oracles::JumpRadial exact(0.5, 2.0, 1.0);
  auto solve_at = [&](double h) {
    const Mesh mesh = build_mesh(one_inclusion(), h);
    const SolutionField S = solve_transmission(
        laplace_op(2), mesh, 1,
        [&](const Vec2& p) { return exact.jump_u(std::atan2(p.y(), p.x())); },
        [&](const Vec2& p) { return exact.jump_flux(std::atan2(p.y(), p.x())); },
        [](const Vec2&) { return 0.0; });
    // split vertices carry one-sided values; measure both sides
    double err2 = 0.0, area = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const Vec2 xc = mesh.centroid(t);
      const double uh = field_eval(S, xc, mesh.tri_region[t], false).u;
      const double ue = mesh.tri_region[t] == 1 ? exact.value_in(xc) : exact.value_out(xc);
      err2 += mesh.area(t) * (uh - ue) * (uh - ue);
      area += mesh.area(t);
    }
    return std::sqrt(err2 / area);
  };
  const double e1 = solve_at(0.05);
  const double e2 = solve_at(0.025);
  CHECK(e1 / e2 >= 3.0);
  CHECK(e1 / e2 <= 5.2);

  // the essential jump is exact at interface nodes
  const Mesh mesh = build_mesh(one_inclusion(), 0.05);
  const SolutionField S = solve_transmission(
      laplace_op(2), mesh, 1,
      [&](const Vec2& p) { return exact.jump_u(std::atan2(p.y(), p.x())); },
      [&](const Vec2& p) { return exact.jump_flux(std::atan2(p.y(), p.x())); },
      [](const Vec2&) { return 0.0; });
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (mesh.vertex_mark[v] != 1) continue;
    const double in = S.value_at_vertex(v, true);
    const double out = S.value_at_vertex(v, false);
    const double theta = std::atan2(mesh.vertices[v].y(), mesh.vertices[v].x());
    CHECK(in - out == doctest::Approx(exact.jump_u(theta)).epsilon(1e-10));
  }
}

TEST_CASE("doubling jump data and boundary trace doubles the solution") {
  const Mesh mesh = build_mesh(one_inclusion(), 0.08);
  const OperatorSpec op = laplace_op(2);
  auto ju = [](const Vec2& p) { return 1.0 + 0.2 * p.x(); };
  auto jf = [](const Vec2& p) { return 0.5 - 0.1 * p.y(); };
  auto g = [](const Vec2& p) { return p.x(); };
  const SolutionField S1 = solve_transmission(op, mesh, 1, ju, jf, g);
  const SolutionField S2 = solve_transmission(
      op, mesh, 1, [&](const Vec2& p) { return 2.0 * ju(p); },
      [&](const Vec2& p) { return 2.0 * jf(p); }, [&](const Vec2& p) { return 2.0 * g(p); });
  for (int i = 0; i < S1.nodal.size(); ++i)
    CHECK(S2.nodal[i] == doctest::Approx(2.0 * S1.nodal[i]).epsilon(1e-9));
}

TEST_CASE("field_eval: laplacian of a linear field vanishes, vertex values are nodal") {
  const Mesh mesh = build_mesh(plain_disk(), 0.1);
  const SolutionField u = solve_dirichlet(laplace_op(1), mesh,
                                          [](const Vec2& p) { return p.x(); });
  const FieldSample s = field_eval(u, Vec2(0.2, 0.1));
  CHECK(s.u == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(s.grad.x() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.grad.y() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(std::abs(s.laplacian) <= 1e-8);
  // a vertex evaluation returns the nodal value
  const int v = mesh.vertex_count() / 2;
  const FieldSample sv = field_eval(u, mesh.vertices[v], 0, false);
  CHECK(sv.u == doctest::Approx(u.nodal[v]).epsilon(1e-12));
  CHECK_THROWS_AS(field_eval(u, Vec2(3, 3), 0, false), std::domain_error);
}

TEST_CASE("flux continuity defect across the interface shrinks linearly") {
  const oracles::TwoPhaseRadial exact(2.0, 1.0, 0.5);
  auto defect = [&](double h) {
    const Mesh mesh = build_mesh(one_inclusion(), h);
    const SolutionField u = solve_dirichlet(two_phase_op(2.0, 1.0), mesh,
                                            [](const Vec2& p) { return p.x(); });
    double worst = 0;
    for (int k = 0; k < 64; ++k) {
      const double t = 2.0 * M_PI * (k + 0.5) / 64;
      const Vec2 xg(0.5 * std::cos(t), 0.5 * std::sin(t));
      const Vec2 n = -xg.normalized();  // parent-to-child normal
      const Vec2 gin = field_eval(u, xg + 2 * h * n, 1, false).grad;
      const Vec2 gout = field_eval(u, xg - 2 * h * n, 2, false).grad;
      worst = std::max(worst, std::abs(2.0 * gin.dot(n) - 1.0 * gout.dot(n)));
    }
    return worst;
  };
  const double d1 = defect(0.05);
  const double d2 = defect(0.025);
  // O(h): the defect per unit h stays bounded
  CHECK(d2 / 0.025 <= 1.6 * (d1 / 0.05) + 1e-9);
  // sanity: the one-sided values match the oracle factors
  const Mesh mesh = build_mesh(one_inclusion(), 0.025);
  const SolutionField u = solve_dirichlet(two_phase_op(2.0, 1.0), mesh,
                                          [](const Vec2& p) { return p.x(); });
  const Vec2 xg(0.5, 0.0);
  const Vec2 n(-1.0, 0.0);
  const double din = field_eval(u, xg + 0.05 * n, 1, false).grad.dot(-n);
  CHECK(din == doctest::Approx(exact.normal_derivative_in(0.0)).epsilon(0.08));
}

TEST_CASE("annulus eigenvalue: exact scaling and the thin-annulus limit") {
  const double tol = 1e-7;
  const double r1 = annulus_eigenvalue(0.5, 0.75, tol);
  const double r2 = annulus_eigenvalue(1.0, 1.5, tol);
  CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.01));
  const double thin = annulus_eigenvalue(1.0, 1.01, tol);
  CHECK(thin == doctest::Approx(M_PI * M_PI / 1e-4).epsilon(0.01));
  CHECK_THROWS_AS(annulus_eigenvalue(1.0, 0.5, tol), std::invalid_argument);
}

TEST_CASE("Poincare inequality holds for random radial test functions") {
  const double t = 0.6, s = 1.3;
  const double rho = annulus_eigenvalue(t, s, 1e-7);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const int n = 2000;
  const double d = (s - t) / n;
  for (int trial = 0; trial < 10; ++trial) {
    // smooth random function vanishing at both ends
    std::vector<double> u(n + 1, 0.0);
    for (int m = 1; m <= 6; ++m) {
      const double c = nd(rng);
      for (int i = 0; i <= n; ++i)
        u[i] += c * std::sin(M_PI * m * (i * d) / (s - t));
    }
    double norm2 = 0, grad2 = 0;
    for (int i = 0; i < n; ++i) {
      const double r = t + (i + 0.5) * d;
      const double um = 0.5 * (u[i] + u[i + 1]);
      const double du = (u[i + 1] - u[i]) / d;
      norm2 += um * um * r * d;
      grad2 += du * du * r * d;
    }
    CHECK(norm2 <= (1.0 / rho) * grad2 * 1.0001);
  }
}

TEST_CASE("discrete coercivity on thin annuli") {
  const Scene s = one_inclusion();
  auto cs = std::make_shared<CoefficientSet>(CoefficientSet::isotropic({2.0, 1.0}, 0.4));
  cs->regions[0].b = {Expr::constant(0.5), Expr::constant(0.0)};
  cs->regions[1].c = {Expr::constant(0.0), Expr::constant(-0.5)};
  cs->regions[0].q = Expr::constant(-0.3);
  const OperatorSpec op = make_operator(cs, {1, 2}, 0.05);
  for (double w : {0.05, 0.02}) {
    const Mesh band = build_annulus_band_mesh(s, 1, w, 8);
    CHECK(coercivity_ratio(op, band) >= cs->lambda / 3.0);
  }
}

TEST_CASE("identical inputs give bitwise-identical solves") {
  const Mesh mesh = build_mesh(one_inclusion(), 0.08);
  const OperatorSpec op = two_phase_op(2.0, 1.0);
  DirichletSolver solver(op, mesh);
  const SolutionField a = solver.solve([](const Vec2& p) { return p.x(); });
  const SolutionField b = solver.solve([](const Vec2& p) { return p.x(); });
  CHECK(a.nodal == b.nodal);
}

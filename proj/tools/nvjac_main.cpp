#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>

#include "nvjac/config.hpp"
#include "nvjac/construct.hpp"
#include "nvjac/io.hpp"
#include "nvjac/jacobian.hpp"
#include "nvjac/recon.hpp"

using nlohmann::json;
using namespace nvjac;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string resolve_prefix(const std::string& out_flag, const std::string& config_prefix) {
  std::string prefix = out_flag.empty() ? config_prefix : out_flag;
  if (const char* dir = std::getenv("NVJAC_OUT_DIR"); dir && *dir && prefix.find('/') == std::string::npos)
    prefix = std::string(dir) + "/" + prefix;
  return prefix;
}

json manifest_header(const std::string& command, const json& config, std::uint64_t seed) {
  json m;
  m["command"] = command;
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  m["config_fnv1a64"] = std::string(hash);
  m["seed"] = seed;
  return m;
}

int run_frames_check(int dim, int samples, std::uint64_t seed, const std::string& out) {
  std::mt19937_64 rng(seed);
  auto normal = [&rng]() {
    const double u1 = ((rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = ((rng() >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  };
  std::vector<std::vector<double>> rows;
  double worst_gram = 0.0, worst_det = 0.0;
  int worst_rank = dim + 1;
  const bool parallelizable = (dim == 2 || dim == 4 || dim == 8);
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = normal();
    x.normalize();
    double gram_err = 0.0, det = 0.0;
    int rank = 0;
    if (parallelizable) {
      const Eigen::MatrixXd H = sphere_frame_dyn(x);
      gram_err = (H * H.transpose() - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
      det = H.determinant();
      rank = matrix_rank(H);
    } else {
      const Eigen::MatrixXd H = hd_frame(x);
      for (int i = 1; i < H.rows(); ++i)
        gram_err = std::max(gram_err, std::abs(H.row(i).head(dim).dot(x)));
      det = hd_frame_raw(x).determinant();
      Eigen::MatrixXd span(dim + 1, dim);
      span.row(0) = x.transpose();
      for (int i = 1; i <= dim; ++i) span.row(i) = H.row(i).head(dim);
      rank = matrix_rank(span);
    }
    worst_gram = std::max(worst_gram, gram_err);
    worst_det = std::max(worst_det, std::abs(det - (parallelizable ? 1.0 : hd_sign(dim))));
    worst_rank = std::min(worst_rank, rank);
    rows.push_back({static_cast<double>(s), gram_err, det, static_cast<double>(rank)});
  }
  OutputSession session(out);
  session.write("frames.csv", make_csv({"sample", "gram_error", "det", "rank"}, rows));
  json summary;
  summary["dim"] = dim;
  summary["samples"] = samples;
  summary["max_gram_error"] = worst_gram;
  summary["max_det_error"] = worst_det;
  summary["min_rank"] = worst_rank;
  summary["expected_rank"] = dim;
  session.write("summary.json", summary.dump(2) + "\n");
  json m = manifest_header("frames check", json{{"dim", dim}, {"samples", samples}}, seed);
  session.commit(m);
  std::cout << "frames check dim=" << dim << ": max gram error " << worst_gram
            << ", max det deviation " << worst_det << ", min rank " << worst_rank << "\n";
  return 0;
}

std::vector<SolutionField> solve_family(const ExperimentConfig& cfg, const Mesh& mesh,
                                        const OperatorSpec& op) {
  if (cfg.traces.empty())
    throw ConfigError("config: this command needs a non-empty \"traces\" list");
  DirichletSolver solver(op, mesh);
  std::vector<SolutionField> us;
  for (const auto& tr : cfg.traces)
    us.push_back(solver.solve([&tr](const Vec2& p) { return tr(p); }));
  return us;
}

int run_solve(const ExperimentConfig& cfg, const json& raw, const std::string& bc,
              const std::string& out) {
  const Mesh mesh = build_mesh(cfg.scene, cfg.h);
  std::vector<int> identity(cfg.scene.region_count());
  for (int r = 1; r <= cfg.scene.region_count(); ++r) identity[r - 1] = r;
  const OperatorSpec op = make_operator(cfg.coeffs, identity, 0.0);
  Expr g;
  try {
    g = Expr::parse(bc);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("--bc is not a valid expression: ") + e.what());
  }
  const SolutionField u = solve_dirichlet(op, mesh, [&g](const Vec2& p) { return g(p); });

  std::vector<std::vector<double>> rows;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    int region = mesh.scene.region_of(mesh.vertices[v]);
    rows.push_back({mesh.vertices[v].x(), mesh.vertices[v].y(), static_cast<double>(region),
                    u.nodal[v]});
  }
  OutputSession session(out);
  session.write("nodal.csv", make_csv({"x", "y", "region", "u"}, rows));
  session.write("u.pgm", make_pgm(mesh.scene, [&](const Vec2& p) {
                  const int t = mesh.locate(p);
                  if (t < 0) return std::numeric_limits<double>::quiet_NaN();
                  return field_eval(u, p, 0, false).u;
                }));
  json m = manifest_header("solve", raw, 0);
  m["residual"] = u.residual;
  session.commit(m);
  std::cout << "solve: " << mesh.vertex_count() << " vertices, residual " << u.residual << "\n";
  return 0;
}

int run_construct(const ExperimentConfig& cfg, const json& raw, std::uint64_t seed,
                  const std::string& out) {
  const Mesh mesh = build_mesh(cfg.scene, cfg.h);
  ConstructOptions opts;
  opts.dict_size = cfg.dict_size;
  opts.seed = seed;
  const AdmissibleFamily fam = build_admissible_family(cfg.scene, cfg.coeffs, cfg.sigma, mesh, opts);

  OutputSession session(out);
  std::vector<std::vector<double>> rows;
  for (const auto& c : fam.centers)
    rows.push_back({c.center.x(), c.center.y(), static_cast<double>(c.region), c.eps,
                    c.fit_error, c.margin_shifted, c.margin_original,
                    c.certified ? 1.0 : 0.0, c.skipped ? 1.0 : 0.0});
  session.write("balls.csv",
                make_csv({"x", "y", "region", "eps", "fit_error", "margin_shifted",
                          "margin_original", "certified", "skipped"},
                         rows));
  json prov;
  prov["sigma"] = fam.sigma;
  prov["eps"] = fam.eps;
  prov["kappa"] = fam.kappa;
  prov["family_size"] = fam.fields.size();
  prov["final_margin"] = fam.report.margin;
  prov["admissible"] = fam.report.admissible;
  prov["all_centers_certified"] = fam.all_centers_certified;
  prov["reductions"] = json::array();
  for (const auto& a : fam.reduction_coefficients) {
    json ja = json::array();
    for (int i = 0; i < a.size(); ++i) ja.push_back(a[i]);
    prov["reductions"].push_back(ja);
  }
  session.write("family.json", prov.dump(2) + "\n");
  session.commit(manifest_header("construct", raw, seed));
  std::cout << "construct: " << fam.fields.size() << " members, margin " << fam.report.margin
            << (fam.report.admissible ? " (admissible)" : " (NOT admissible)") << "\n";
  return fam.report.admissible ? 0 : kExitNumerical;
}

int run_jac_report(const ExperimentConfig& cfg, const json& raw, const std::string& out) {
  const Mesh mesh = build_mesh(cfg.scene, cfg.h);
  std::vector<int> identity(cfg.scene.region_count());
  for (int r = 1; r <= cfg.scene.region_count(); ++r) identity[r - 1] = r;
  const OperatorSpec op = make_operator(cfg.coeffs, identity, 0.0);
  const auto us = solve_family(cfg, mesh, op);
  const FrameField frames(mesh.scene);
  const JacobianReport rep = admissibility_margin(us, mesh.scene, frames, op, GridSpec{});

  OutputSession session(out);
  std::vector<std::vector<double>> rows;
  for (const auto& s : rep.samples)
    rows.push_back({s.x.x(), s.x.y(), static_cast<double>(s.side),
                    static_cast<double>(s.rank), s.margin});
  session.write("samples.csv", make_csv({"x", "y", "side", "rank", "margin"}, rows));
  session.write("margin.pgm", make_pgm(mesh.scene, [&](const Vec2& p) {
                  const int t = mesh.locate(p);
                  if (t < 0) return std::numeric_limits<double>::quiet_NaN();
                  const double m = det_margin(jac_matrix(us, p, mesh.tri_region[t]));
                  return std::log10(std::max(m, 1e-300));
                }));
  json summary;
  summary["P"] = rep.P;
  summary["margin"] = rep.margin;
  summary["admissible"] = rep.admissible;
  session.write("summary.json", summary.dump(2) + "\n");
  session.commit(manifest_header("jac report", raw, 0));
  std::cout << "jac report: P=" << rep.P << " margin=" << rep.margin
            << (rep.admissible ? " (admissible)" : " (NOT admissible)") << "\n";
  return 0;
}

int run_jac_reduce(const ExperimentConfig& cfg, const json& raw, std::uint64_t seed, int draws,
                   const std::string& out) {
  const Mesh mesh = build_mesh(cfg.scene, cfg.h);
  std::vector<int> identity(cfg.scene.region_count());
  for (int r = 1; r <= cfg.scene.region_count(); ++r) identity[r - 1] = r;
  const OperatorSpec op = make_operator(cfg.coeffs, identity, 0.0);
  auto us = solve_family(cfg, mesh, op);
  const FrameField frames(mesh.scene);

  json stages = json::array();
  const int target = std::max(p_star(2, cfg.coeffs->alpha), 3);
  std::uint64_t stage_seed = seed;
  while (static_cast<int>(us.size()) > target && static_cast<int>(us.size()) - 1 >= 3) {
    const ReduceResult red =
        whitney_reduce(us, mesh.scene, frames, op, GridSpec{}, stage_seed++, draws);
    if (!red.ok) break;
    json st;
    st["from"] = us.size();
    st["to"] = us.size() - 1;
    st["draws_used"] = red.draws_used;
    st["failures"] = red.failures;
    st["post_margin"] = red.post_margin;
    json ja = json::array();
    for (int i = 0; i < red.a.size(); ++i) ja.push_back(red.a[i]);
    st["a"] = ja;
    stages.push_back(st);
    us = red.fields;
  }
  OutputSession session(out);
  json rep;
  rep["stages"] = stages;
  rep["final_P"] = us.size();
  session.write("reduce.json", rep.dump(2) + "\n");
  session.commit(manifest_header("jac reduce", raw, seed));
  std::cout << "jac reduce: final P=" << us.size() << " after " << stages.size() << " stages\n";
  return 0;
}

int run_recon_cmd(const ExperimentConfig& cfg, const json& raw, const std::string& out) {
  if (!cfg.phantom) throw ConfigError("config: missing \"recon\" block");
  ReconOptions opts;
  opts.h = cfg.h;
  opts.lambda = cfg.coeffs->lambda;
  opts.traces = cfg.traces;
  if (opts.traces.empty()) throw ConfigError("config: recon needs a non-empty \"traces\" list");
  const ReconResult res = run_recon(*cfg.phantom, opts);

  OutputSession session(out);
  json rep;
  rep["jumps"] = json::object();
  for (const auto& [id, est] : res.jumps) {
    rep["jumps"][std::to_string(id)] = {{"value", est.value},
                                        {"dispersion", est.dispersion},
                                        {"used", est.used},
                                        {"excluded", est.excluded}};
  }
  rep["errors"] = {{"gamma_rel_l2", res.gamma_rel_l2_error}};
  rep["anchor"] = {{"point", {res.anchor.x(), res.anchor.y()}}, {"value", res.anchor_value}};
  session.write("report.json", rep.dump(2) + "\n");

  const Scene& scene = cfg.phantom->scene;
  std::vector<std::vector<double>> rows;
  const double spacing = 2.0 * opts.h;
  for (const Vec2& p : sample_grid(scene, spacing, 0.0))
    rows.push_back({p.x(), p.y(), res.gamma_at(p)});
  session.write("gamma.csv", make_csv({"x", "y", "gamma"}, rows));
  session.write("gamma_true.pgm",
                make_pgm(scene, [&](const Vec2& p) { return cfg.phantom->gamma_at(p); }));
  session.write("gamma_recovered.pgm",
                make_pgm(scene, [&](const Vec2& p) { return res.gamma_at(p); }));
  session.commit(manifest_header("recon", raw, 0));
  std::cout << "recon: gamma relative L2 error " << res.gamma_rel_l2_error << "\n";
  for (const auto& [id, est] : res.jumps)
    std::cout << "  interface " << id << ": [ln gamma] = " << est.value << " +- "
              << est.dispersion << "\n";
  return 0;
}

int run_poincare(double t, double s, double tol, const std::string& out) {
  const double rho = annulus_eigenvalue(t, s, tol);
  OutputSession session(out);
  json rep;
  rep["t"] = t;
  rep["s"] = s;
  rep["tol"] = tol;
  rep["rho1"] = rho;
  session.write("poincare.json", rep.dump(2) + "\n");
  session.commit(manifest_header("poincare", json{{"t", t}, {"s", s}}, 0));
  std::cout << "poincare: rho1(" << t << ", " << s << ") = " << rho << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for non-vanishing Jacobian solution families"};
  app.require_subcommand(1);

  // frames check
  auto* frames_cmd = app.add_subcommand("frames", "frame field diagnostics");
  auto* frames_check = frames_cmd->add_subcommand("check", "verify sphere frame identities");
  int dim = 2, samples = 1000;
  std::uint64_t seed = 1;
  std::string out_flag;
  frames_check->add_option("--dim", dim, "sphere dimension");
  frames_check->add_option("--samples", samples, "number of random unit points");
  frames_check->add_option("--seed", seed, "rng seed");
  frames_check->add_option("--out", out_flag, "output prefix");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "single Dirichlet solve");
  std::string config_path, bc = "x";
  double h_override = 0.0;
  solve_cmd->add_option("--config", config_path, "config file")->required();
  solve_cmd->add_option("--h", h_override, "mesh size override");
  solve_cmd->add_option("--bc", bc, "boundary trace expression");
  solve_cmd->add_option("--out", out_flag, "output prefix");

  // construct
  auto* construct_cmd = app.add_subcommand("construct", "build an admissible family");
  double sigma_override = 0.0;
  int dict_override = 0;
  construct_cmd->add_option("--config", config_path, "config file")->required();
  construct_cmd->add_option("--sigma", sigma_override, "certification margin");
  construct_cmd->add_option("--dict-size", dict_override, "Fourier dictionary size");
  construct_cmd->add_option("--h", h_override, "mesh size override");
  construct_cmd->add_option("--seed", seed, "rng seed");
  construct_cmd->add_option("--out", out_flag, "output prefix");

  // jac report / reduce
  auto* jac_cmd = app.add_subcommand("jac", "generalized Jacobian diagnostics");
  auto* jac_report = jac_cmd->add_subcommand("report", "per-sample rank and margin");
  jac_report->add_option("--config", config_path, "config file")->required();
  jac_report->add_option("--h", h_override, "mesh size override");
  jac_report->add_option("--out", out_flag, "output prefix");
  auto* jac_reduce = jac_cmd->add_subcommand("reduce", "Whitney reduction stages");
  int draws = 0;
  jac_reduce->add_option("--config", config_path, "config file")->required();
  jac_reduce->add_option("--h", h_override, "mesh size override");
  jac_reduce->add_option("--seed", seed, "rng seed");
  jac_reduce->add_option("--draws", draws, "retry cap per stage");
  jac_reduce->add_option("--out", out_flag, "output prefix");

  // recon
  auto* recon_cmd = app.add_subcommand("recon", "conductivity reconstruction");
  recon_cmd->add_option("--config", config_path, "config file")->required();
  recon_cmd->add_option("--h", h_override, "mesh size override");
  recon_cmd->add_option("--out", out_flag, "output prefix");

  // poincare
  auto* poincare_cmd = app.add_subcommand("poincare", "annulus Dirichlet eigenvalue");
  double p_t = 0.5, p_s = 1.0, p_tol = 1e-6;
  poincare_cmd->add_option("--t", p_t, "inner radius")->required();
  poincare_cmd->add_option("--s", p_s, "outer radius")->required();
  poincare_cmd->add_option("--tol", p_tol, "relative tolerance");
  poincare_cmd->add_option("--out", out_flag, "output prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (frames_check->parsed())
      return run_frames_check(dim, samples, seed, resolve_prefix(out_flag, "frames"));
    if (poincare_cmd->parsed())
      return run_poincare(p_t, p_s, p_tol, resolve_prefix(out_flag, "poincare"));

    const json raw = load_json_file(config_path);
    ExperimentConfig cfg = parse_config(raw);
    const auto report = validate_scene(cfg.scene);
    if (!report.ok) {
      for (const auto& v : report.violations)
        std::cerr << "config: scene violates \"" << v.clause << "\": " << v.detail << "\n";
      return kExitConfig;
    }
    if (h_override > 0) cfg.h = h_override;
    if (sigma_override > 0) cfg.sigma = sigma_override;
    if (dict_override > 0) cfg.dict_size = dict_override;
    if (draws > 0) cfg.draws = draws;
    const std::string prefix = resolve_prefix(out_flag, cfg.out_prefix);

    if (solve_cmd->parsed()) return run_solve(cfg, raw, bc, prefix);
    if (construct_cmd->parsed()) return run_construct(cfg, raw, seed, prefix);
    if (jac_report->parsed()) return run_jac_report(cfg, raw, prefix);
    if (jac_reduce->parsed()) return run_jac_reduce(cfg, raw, seed, cfg.draws, prefix);
    if (recon_cmd->parsed()) return run_recon_cmd(cfg, raw, prefix);
    std::cerr << "no subcommand executed\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

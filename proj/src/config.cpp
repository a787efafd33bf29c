#include "nvjac/config.hpp"

#include <fstream>

namespace nvjac {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

namespace {

const json& need(const json& j, const std::string& field, const std::string& where) {
  const auto it = j.find(field);
  if (it == j.end()) throw ConfigError("config: missing field \"" + field + "\" in " + where);
  return *it;
}

Vec2 parse_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError("config: " + where + " must be a [x, y] pair");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

Circle parse_circle(const json& j, const std::string& where) {
  Circle c;
  c.center = parse_point(need(j, "center", where), where + ".center");
  c.radius = need(j, "radius", where).get<double>();
  return c;
}

Expr parse_scalar_expr(const json& j, const std::string& where) {
  if (j.is_number()) return Expr::constant(j.get<double>());
  if (j.is_string()) {
    try {
      return Expr::parse(j.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError("config: bad expression in " + where + ": " + e.what());
    }
  }
  throw ConfigError("config: " + where + " must be a number or an expression string");
}

}  // namespace

Scene parse_scene(const json& j) {
  Scene scene;
  const json& outer = need(j, "outer", "scene");
  if (outer.contains("disk")) {
    OuterDisk d;
    d.center = parse_point(need(outer["disk"], "center", "outer.disk"), "outer.disk.center");
    d.radius = need(outer["disk"], "radius", "outer.disk").get<double>();
    scene.outer = d;
  } else if (outer.contains("rect")) {
    OuterRect r;
    r.lo = parse_point(need(outer["rect"], "lo", "outer.rect"), "outer.rect.lo");
    r.hi = parse_point(need(outer["rect"], "hi", "outer.rect"), "outer.rect.hi");
    scene.outer = r;
  } else {
    throw ConfigError("config: scene.outer must contain \"disk\" or \"rect\"");
  }
  if (j.contains("subdomains")) {
    std::map<int, Circle> by_id;
    for (const auto& sub : j["subdomains"]) {
      const int id = need(sub, "id", "subdomain").get<int>();
      by_id[id] = parse_circle(need(sub, "circle", "subdomain"), "subdomain.circle");
    }
    int expect = 1;
    for (const auto& [id, c] : by_id) {
      if (id != expect++)
        throw ConfigError("config: subdomain ids must be 1..N without gaps");
      scene.circles.push_back(c);
    }
  }
  scene.finalize();
  return scene;
}

std::shared_ptr<CoefficientSet> parse_coefficients(const json& j, int region_count) {
  auto cs = std::make_shared<CoefficientSet>();
  cs->lambda = need(j, "lambda", "coefficients").get<double>();
  cs->alpha = need(j, "alpha", "coefficients").get<double>();
  if (!(cs->lambda > 0)) throw ConfigError("config: lambda must be positive");
  if (!(cs->alpha > 0 && cs->alpha <= 1)) throw ConfigError("config: alpha must be in (0, 1]");
  const json& regions = need(j, "regions", "coefficients");
  if (static_cast<int>(regions.size()) != region_count)
    throw ConfigError("config: coefficients.regions must list exactly N+1 entries");
  for (const auto& r : regions) {
    RegionCoefficients rc;
    if (r.contains("A_scalar")) {
      const Expr g = parse_scalar_expr(r["A_scalar"], "A_scalar");
      rc.A = {g, Expr::constant(0), g};
    } else if (r.contains("A")) {
      const json& A = r["A"];
      if (!A.is_array() || A.size() != 2 || A[0].size() != 2 || A[1].size() != 2)
        throw ConfigError("config: A must be a 2x2 array");
      rc.A = {parse_scalar_expr(A[0][0], "A[0][0]"), parse_scalar_expr(A[0][1], "A[0][1]"),
              parse_scalar_expr(A[1][1], "A[1][1]")};
    } else {
      throw ConfigError("config: region coefficients need \"A\" or \"A_scalar\"");
    }
    if (r.contains("b")) {
      rc.b = {parse_scalar_expr(r["b"][0], "b[0]"), parse_scalar_expr(r["b"][1], "b[1]")};
    }
    if (r.contains("c")) {
      rc.c = {parse_scalar_expr(r["c"][0], "c[0]"), parse_scalar_expr(r["c"][1], "c[1]")};
    }
    if (r.contains("q")) rc.q = parse_scalar_expr(r["q"], "q");
    cs->regions.push_back(rc);
  }
  return cs;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.scene = parse_scene(need(j, "scene", "top level"));
  cfg.coeffs = parse_coefficients(need(j, "coefficients", "top level"), cfg.scene.region_count());

  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("h")) cfg.h = s["h"].get<double>();
    if (s.contains("tolerance")) cfg.tolerance = s["tolerance"].get<double>();
  }
  if (j.contains("construct")) {
    const json& c = j["construct"];
    if (c.contains("sigma")) cfg.sigma = c["sigma"].get<double>();
    if (c.contains("dict_size")) cfg.dict_size = c["dict_size"].get<int>();
  }
  if (j.contains("reduce")) {
    const json& r = j["reduce"];
    cfg.seed = need(r, "seed", "reduce").get<std::uint64_t>();
    if (r.contains("draws")) cfg.draws = r["draws"].get<int>();
  }
  if (j.contains("recon")) {
    const json& r = j["recon"];
    Phantom ph;
    ph.scene = cfg.scene;
    const json& g = need(r, "gamma", "recon");
    if (static_cast<int>(g.size()) != cfg.scene.region_count())
      throw ConfigError("config: recon.gamma must list exactly N+1 entries");
    for (const auto& e : g) ph.gamma.push_back(parse_scalar_expr(e, "recon.gamma"));
    const json& anchor = need(r, "anchor", "recon");
    ph.anchor = parse_point(need(anchor, "point", "recon.anchor"), "recon.anchor.point");
    ph.anchor_value = need(anchor, "value", "recon.anchor").get<double>();
    cfg.phantom = std::move(ph);
  }
  if (j.contains("traces")) {
    for (const auto& t : j["traces"]) cfg.traces.push_back(parse_scalar_expr(t, "traces"));
  }
  if (j.contains("out")) cfg.out_prefix = j["out"].get<std::string>();
  return cfg;
}

}  // namespace nvjac

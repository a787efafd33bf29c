#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nvjac/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(NVJAC_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path sandbox() {
  const fs::path dir = fs::temp_directory_path() / "nvjac_cli_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = sandbox() / name;
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

json two_phase_config() {
  return json{
      {"scene",
       {{"outer", {{"disk", {{"center", {0.0, 0.0}}, {"radius", 1.0}}}}},
        {"subdomains",
         {{{"id", 1}, {"circle", {{"center", {0.0, 0.0}}, {"radius", 0.5}}}}}}}},
      {"coefficients",
       {{"lambda", 0.4}, {"alpha", 1.0}, {"regions", {{{"A_scalar", 2.0}}, {{"A_scalar", 1.0}}}}}},
      {"solver", {{"h", 0.05}}},
      {"traces", {"x", "y", "1", "x*x-y*y", "x*y"}},
      {"recon",
       {{"gamma", {2.0, 1.0}},
        {"anchor", {{"point", {0.8, 0.0}}, {"value", 1.0}}}}},
      {"reduce", {{"seed", 7}, {"draws", 200}}}};
}

}  // namespace

TEST_CASE("frames check writes a csv and a summary with tiny errors") {
  const fs::path out = sandbox() / "frames4";
  REQUIRE(run("frames check --dim 4 --samples 500 --out " + out.string()) == 0);
  const json summary = json::parse(slurp(out.string() + ".summary.json"));
  CHECK(summary["max_gram_error"].get<double>() <= 1e-12);
  CHECK(summary["max_det_error"].get<double>() <= 1e-12);
  CHECK(summary["min_rank"].get<int>() == 4);
  const json manifest = json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(manifest["files"].size() == 2);
}

TEST_CASE("manifest hashes match the file contents") {
  const fs::path out = sandbox() / "frames3";
  REQUIRE(run("frames check --dim 3 --samples 200 --out " + out.string()) == 0);
  const json manifest = json::parse(slurp(out.string() + ".manifest.json"));
  for (const auto& f : manifest["files"]) {
    const std::string data = slurp(out.string() + "." + f["name"].get<std::string>());
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(nvjac::fnv1a64(data)));
    CHECK(f["fnv1a64"].get<std::string>() == std::string(hash));
    CHECK(f["bytes"].get<size_t>() == data.size());
  }
}

TEST_CASE("solve subcommand produces nodal csv and a raster") {
  const fs::path cfg = write_config("solve.json", two_phase_config());
  const fs::path out = sandbox() / "solve_run";
  REQUIRE(run("solve --config " + cfg.string() + " --bc x --out " + out.string()) == 0);
  const std::string csv = slurp(out.string() + ".nodal.csv");
  CHECK(csv.rfind("x,y,region,u", 0) == 0);
  const std::string pgm = slurp(out.string() + ".u.pgm");
  CHECK(pgm.rfind("P2", 0) == 0);
}

TEST_CASE("missing lambda exits with the config code and names the field") {
  json bad = two_phase_config();
  bad["coefficients"].erase("lambda");
  const fs::path cfg = write_config("bad.json", bad);
  const fs::path err = sandbox() / "stderr.txt";
  const std::string cmd = std::string(NVJAC_BIN) + " solve --config " + cfg.string() +
                          " 2> " + err.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  CHECK(slurp(err).find("lambda") != std::string::npos);
}

TEST_CASE("invalid scene exits with the config code") {
  json bad = two_phase_config();
  bad["scene"]["subdomains"][0]["circle"]["radius"] = 1.0;  // touches the boundary
  const fs::path cfg = write_config("bad_scene.json", bad);
  CHECK(run("solve --config " + cfg.string()) == 2);
}

TEST_CASE("identical config and seed give identical manifests") {
  const fs::path cfg = write_config("reduce.json", two_phase_config());
  const fs::path out1 = sandbox() / "r1";
  const fs::path out2 = sandbox() / "r2";
  REQUIRE(run("jac reduce --config " + cfg.string() + " --h 0.08 --seed 11 --out " +
              out1.string()) == 0);
  REQUIRE(run("jac reduce --config " + cfg.string() + " --h 0.08 --seed 11 --out " +
              out2.string()) == 0);
  json m1 = json::parse(slurp(out1.string() + ".manifest.json"));
  json m2 = json::parse(slurp(out2.string() + ".manifest.json"));
  CHECK(m1["files"] == m2["files"]);
  CHECK(slurp(out1.string() + ".reduce.json") == slurp(out2.string() + ".reduce.json"));
}

TEST_CASE("jac report labels the family admissible") {
  const fs::path cfg = write_config("report.json", two_phase_config());
  const fs::path out = sandbox() / "report_run";
  REQUIRE(run("jac report --config " + cfg.string() + " --h 0.06 --out " + out.string()) == 0);
  const json summary = json::parse(slurp(out.string() + ".summary.json"));
  CHECK(summary["admissible"].get<bool>());
  CHECK(summary["P"].get<int>() == 5);
  const std::string pgm = slurp(out.string() + ".margin.pgm");
  CHECK(pgm.rfind("P2", 0) == 0);
}

TEST_CASE("poincare subcommand reports the eigenvalue") {
  const fs::path out = sandbox() / "poincare_run";
  REQUIRE(run("poincare --t 0.5 --s 0.75 --out " + out.string()) == 0);
  const json rep = json::parse(slurp(out.string() + ".poincare.json"));
  const double rho = rep["rho1"].get<double>();
  CHECK(rho > 0);
}

TEST_CASE("recon subcommand recovers the log-2 jump") {
  const fs::path cfg = write_config("recon.json", two_phase_config());
  const fs::path out = sandbox() / "recon_run";
  REQUIRE(run("recon --config " + cfg.string() + " --h 0.03125 --out " + out.string()) == 0);
  const json rep = json::parse(slurp(out.string() + ".report.json"));
  const double jump = rep["jumps"]["1"]["value"].get<double>();
  CHECK(jump == doctest::Approx(std::log(2.0)).epsilon(0.12));
  CHECK(fs::exists(out.string() + ".gamma_true.pgm"));
  CHECK(fs::exists(out.string() + ".gamma_recovered.pgm"));
}

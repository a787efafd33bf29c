#pragma once

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

#include "nvjac/coefficients.hpp"
#include "nvjac/geometry.hpp"
#include "nvjac/recon.hpp"

namespace nvjac {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Scene scene;
  std::shared_ptr<CoefficientSet> coeffs;
  double h = 1.0 / 32.0;
  double tolerance = 1e-10;

  // construct block
  double sigma = 0.5;
  int dict_size = 32;

  // reduce block
  std::uint64_t seed = 1;
  int draws = 1000;

  // recon block
  std::optional<Phantom> phantom;
  std::vector<Expr> traces;

  std::string out_prefix = "out";
};

nlohmann::json load_json_file(const std::string& path);
Scene parse_scene(const nlohmann::json& j);
std::shared_ptr<CoefficientSet> parse_coefficients(const nlohmann::json& j, int region_count);
ExperimentConfig parse_config(const nlohmann::json& j);

}  // namespace nvjac

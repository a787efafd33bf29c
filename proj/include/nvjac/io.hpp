#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvjac/geometry.hpp"

namespace nvjac {

std::uint64_t fnv1a64(const std::string& data);
std::string format_double(double v);  // shortest round-trip formatting

// CSV with a header row; all numbers rendered through format_double.
std::string make_csv(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

// Plain-text PGM (P2) raster of a scalar field over the scene's bounding box;
// pixels outside the domain are black, values min-max scaled.
std::string make_pgm(const Scene& scene, const std::function<double(const Vec2&)>& field,
                     int pixels = 256);

// Collects output files under <prefix>.<name>, removes them on abort, writes
// <prefix>.manifest.json with content hashes on commit.
class OutputSession {
 public:
  explicit OutputSession(std::string prefix);
  ~OutputSession();

  void write(const std::string& name, const std::string& content);
  std::string manifest_path() const;
  void commit(nlohmann::json extra = nlohmann::json::object());
  void abort();

 private:
  std::string prefix_;
  bool committed_ = false;
  std::vector<std::pair<std::string, std::string>> files_;  // name -> path
};

}  // namespace nvjac

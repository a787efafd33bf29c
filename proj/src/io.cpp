#include "nvjac/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nvjac {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string make_csv(const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string make_pgm(const Scene& scene, const std::function<double(const Vec2&)>& field,
                     int pixels) {
  Vec2 lo, hi;
  if (const auto* d = std::get_if<OuterDisk>(&scene.outer)) {
    lo = d->center - Vec2(d->radius, d->radius);
    hi = d->center + Vec2(d->radius, d->radius);
  } else {
    const auto& r = std::get<OuterRect>(scene.outer);
    lo = r.lo;
    hi = r.hi;
  }
  std::vector<double> vals(static_cast<size_t>(pixels) * pixels,
                           std::numeric_limits<double>::quiet_NaN());
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < pixels; ++j) {
    for (int i = 0; i < pixels; ++i) {
      const Vec2 p(lo.x() + (hi.x() - lo.x()) * (i + 0.5) / pixels,
                   lo.y() + (hi.y() - lo.y()) * (pixels - 1 - j + 0.5) / pixels);
      if (!outer_contains(scene.outer, p)) continue;
      const double v = field(p);
      if (!std::isfinite(v)) continue;
      vals[static_cast<size_t>(j) * pixels + i] = v;
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  if (!(vmax > vmin)) vmax = vmin + 1.0;
  std::ostringstream os;
  os << "P2\n" << pixels << " " << pixels << "\n255\n";
  for (int j = 0; j < pixels; ++j) {
    for (int i = 0; i < pixels; ++i) {
      const double v = vals[static_cast<size_t>(j) * pixels + i];
      int g = 0;
      if (std::isfinite(v)) g = 1 + static_cast<int>(254.0 * (v - vmin) / (vmax - vmin));
      os << g << (i + 1 == pixels ? "" : " ");
    }
    os << "\n";
  }
  return os.str();
}

OutputSession::OutputSession(std::string prefix) : prefix_(std::move(prefix)) {
  const std::filesystem::path dir = std::filesystem::path(prefix_).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

OutputSession::~OutputSession() {
  if (!committed_) abort();
}

void OutputSession::write(const std::string& name, const std::string& content) {
  const std::string path = prefix_ + "." + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file " + path);
  out << content;
  out.close();
  files_.emplace_back(name, path);
}

std::string OutputSession::manifest_path() const { return prefix_ + ".manifest.json"; }

void OutputSession::commit(nlohmann::json extra) {
  nlohmann::json manifest = std::move(extra);
  auto sorted = files_;
  std::sort(sorted.begin(), sorted.end());
  manifest["files"] = nlohmann::json::array();
  for (const auto& [name, path] : sorted) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    manifest["files"].push_back(
        {{"name", name}, {"bytes", data.size()}, {"fnv1a64", std::string(hash)}});
  }
  std::ofstream out(manifest_path(), std::ios::binary);
  out << manifest.dump(2) << "\n";
  committed_ = true;
}

void OutputSession::abort() {
  for (const auto& [name, path] : files_) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
  files_.clear();
  committed_ = true;  // nothing left to clean
}

}  // namespace nvjac

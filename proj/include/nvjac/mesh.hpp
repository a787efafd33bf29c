#pragma once

#include <array>
#include <map>
#include <vector>

#include "nvjac/geometry.hpp"

namespace nvjac {

// Interface-fitted triangulation: vertices of interface edges sit exactly on
// the scene's circles, every triangle belongs to one region.
struct Mesh {
  Scene scene;
  double h = 0.0;

  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW
  std::vector<int> tri_region;                // region id per triangle
  std::vector<int> vertex_mark;               // 0 interior, -1 outer boundary, k>0 on circle k
  std::vector<std::array<int, 3>> tri_adj;    // neighbor across edge opposite vertex e; -1 none

  // circle id -> CCW-ordered chord edges {a, b} with both endpoints on the circle
  std::map<int, std::vector<std::array<int, 2>>> interface_edges;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  Vec2 centroid(int t) const {
    const auto& tr = triangles[t];
    return (vertices[tr[0]] + vertices[tr[1]] + vertices[tr[2]]) / 3.0;
  }
  double area(int t) const;
  double min_angle_deg() const;

  // Containing triangle, preferring the requested region when the point sits
  // on an interface edge; -1 if outside. side = 0 accepts any region.
  int locate(const Vec2& x, int side = 0) const;

  bool on_outer_boundary(int v) const { return vertex_mark[v] == -1; }

 private:
  friend Mesh build_mesh(const Scene&, double);
  friend Mesh build_annulus_band_mesh(const Scene&, int, double, int);
  void build_locator();
  struct Locator {
    Vec2 lo;
    double cell = 1.0;
    int nx = 0, ny = 0;
    std::vector<std::vector<int>> bins;
  };
  Locator locator_;
};

// Builds the fitted mesh at target size h. Throws std::runtime_error with a
// diagnostic when the scene cannot be meshed (degenerate input, h too large).
Mesh build_mesh(const Scene& scene, double h);

// Structured polar mesh of the band of the given width around interface
// circle k, with the circle itself as a mesh ring. Rim vertices are marked as
// outer boundary. Used for coercivity probes on thin annuli.
Mesh build_annulus_band_mesh(const Scene& scene, int circle_id, double width, int radial_layers);

}  // namespace nvjac

#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nvjac {

using Vec2 = Eigen::Vector2d;

struct Circle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;

  bool contains(const Vec2& x) const { return (x - center).norm() < radius; }
  // Signed distance to the curve, negative inside.
  double signed_distance(const Vec2& x) const { return (x - center).norm() - radius; }
};

struct OuterDisk {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

struct OuterRect {
  Vec2 lo = Vec2(-1, -1);
  Vec2 hi = Vec2(1, 1);
};

using Outer = std::variant<OuterDisk, OuterRect>;

bool outer_contains(const Outer& outer, const Vec2& x);
// Distance from x to the outer boundary curve (positive inside and outside).
double outer_boundary_distance(const Outer& outer, const Vec2& x);
double outer_diameter(const Outer& outer);
Vec2 outer_centroid(const Outer& outer);

// One interface circle, oriented: the unit normal points from region `i`
// (the enclosing region) into region `j` (the region directly inside the
// circle). Region ids are 1-based, background id is N+1.
struct Interface {
  int i = 0;  // enclosing (parent) region
  int j = 0;  // enclosed (child) region; equals the circle's subdomain id
  Circle circle;
  double tube_halfwidth = 0.0;

  // Unit normal at a point of the circle, pointing from region i into region j.
  Vec2 normal_at(const Vec2& x) const {
    Vec2 outward = (x - circle.center).normalized();
    return -outward;
  }
  Interface flipped() const {
    Interface f = *this;
    std::swap(f.i, f.j);
    return f;
  }
  // Radial chart x -> (x - center)/radius onto the unit circle.
  Vec2 chart(const Vec2& x) const { return (x - circle.center) / circle.radius; }
};

// Piecewise domain: an outer disk or rectangle containing pairwise disjoint
// or strictly nested circles. Region k (1..N) is the inside of circle k minus
// the closures of the circles directly nested in it; region N+1 is the
// remainder of the domain.
struct Scene {
  Outer outer;
  std::vector<Circle> circles;  // circle k has subdomain id k (1-based)

  // Derived on construction (finalize()).
  std::vector<int> parent_region;     // size N; enclosing region id per circle
  std::vector<Interface> interfaces;  // one per circle, (parent, child) oriented
  double d0 = 0.0;                    // minimum separation between interface curves

  int inclusion_count() const { return static_cast<int>(circles.size()); }
  int region_count() const { return inclusion_count() + 1; }
  int background_id() const { return region_count(); }

  // Recompute parent map, interfaces and d0 from outer+circles.
  void finalize(double tube_halfwidth = 0.0);

  // Region id of a point: the smallest circle containing it, else background.
  int region_of(const Vec2& x) const;

  // Number of subdomains strictly contained in region r (contained circles).
  int contained_count(int region) const;

  // Regions adjacent to `region` through an interface.
  std::vector<int> neighbors(int region) const;

  const Interface* interface_between(int a, int b) const;
};

struct SceneViolation {
  std::string clause;
  std::string detail;
};

struct ValidationReport {
  bool ok = true;
  std::vector<SceneViolation> violations;
};

// Checks every Scene invariant; violations are reported, never thrown.
ValidationReport validate_scene(const Scene& scene);

// Permutation of {1..N+1} in which every prefix is connected through
// interfaces, together with the attach positions and the per-stage index
// lists of which region's coefficients act where.
struct ConstructionMap {
  std::vector<int> order;   // order[j-1] = region placed at step j (1-based regions)
  std::vector<int> attach;  // attach[j-1] = k(j) in {1..j-1}; attach[0] unused (0)
};

// Builds the construction map starting at `start`; among admissible next
// regions the smallest id wins. Throws std::runtime_error if the scene's
// adjacency does not admit one (cannot happen for validated scenes).
ConstructionMap construction_map(const Scene& scene, int start);

// The N+1 index lists of a construction map; the last is (1,...,N+1).
std::vector<std::vector<int>> index_maps(const ConstructionMap& cmap);

// Checks a candidate permutation against the defining uniqueness clause
// directly from interface data. Used by construction_map and as an
// independent test predicate.
bool is_construction_map(const Scene& scene, const std::vector<int>& order,
                         std::vector<int>* attach_out = nullptr);

// Rectangular sampling lattice over the domain with the interface tubes
// removed; spacing sets the lattice pitch.
std::vector<Vec2> sample_grid(const Scene& scene, double spacing, double tube_halfwidth);

}  // namespace nvjac

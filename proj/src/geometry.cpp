#include "nvjac/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nvjac {

bool outer_contains(const Outer& outer, const Vec2& x) {
  if (const auto* d = std::get_if<OuterDisk>(&outer))
    return (x - d->center).norm() < d->radius;
  const auto& r = std::get<OuterRect>(outer);
  return x.x() > r.lo.x() && x.x() < r.hi.x() && x.y() > r.lo.y() && x.y() < r.hi.y();
}

double outer_boundary_distance(const Outer& outer, const Vec2& x) {
  if (const auto* d = std::get_if<OuterDisk>(&outer))
    return std::abs(d->radius - (x - d->center).norm());
  const auto& r = std::get<OuterRect>(outer);
  double dx = std::min(std::abs(x.x() - r.lo.x()), std::abs(r.hi.x() - x.x()));
  double dy = std::min(std::abs(x.y() - r.lo.y()), std::abs(r.hi.y() - x.y()));
  return std::min(dx, dy);
}

double outer_diameter(const Outer& outer) {
  if (const auto* d = std::get_if<OuterDisk>(&outer)) return 2.0 * d->radius;
  const auto& r = std::get<OuterRect>(outer);
  return (r.hi - r.lo).norm();
}

Vec2 outer_centroid(const Outer& outer) {
  if (const auto* d = std::get_if<OuterDisk>(&outer)) return d->center;
  const auto& r = std::get<OuterRect>(outer);
  return 0.5 * (r.lo + r.hi);
}

namespace {

// a strictly inside b
bool nested_in(const Circle& a, const Circle& b) {
  return (a.center - b.center).norm() + a.radius < b.radius;
}

bool disjoint(const Circle& a, const Circle& b) {
  return (a.center - b.center).norm() > a.radius + b.radius;
}

// Gap between two non-crossing circle curves.
double circle_gap(const Circle& a, const Circle& b) {
  double d = (a.center - b.center).norm();
  if (d > a.radius + b.radius) return d - a.radius - b.radius;
  // nested: gap of the smaller curve to the larger one
  double inner_r = std::min(a.radius, b.radius);
  double outer_r = std::max(a.radius, b.radius);
  return outer_r - (d + inner_r);
}

double gap_to_outer(const Outer& outer, const Circle& c) {
  if (const auto* d = std::get_if<OuterDisk>(&outer))
    return d->radius - ((c.center - d->center).norm() + c.radius);
  const auto& r = std::get<OuterRect>(outer);
  double g = std::min(std::min(c.center.x() - r.lo.x(), r.hi.x() - c.center.x()),
                      std::min(c.center.y() - r.lo.y(), r.hi.y() - c.center.y()));
  return g - c.radius;
}

}  // namespace

void Scene::finalize(double tube_halfwidth) {
  const int n = inclusion_count();
  parent_region.assign(n, background_id());
  for (int k = 0; k < n; ++k) {
    // parent = smallest circle strictly containing circle k
    int best = -1;
    for (int m = 0; m < n; ++m) {
      if (m == k) continue;
      if (nested_in(circles[k], circles[m])) {
        if (best < 0 || circles[m].radius < circles[best].radius) best = m;
      }
    }
    parent_region[k] = (best >= 0) ? best + 1 : background_id();
  }
  interfaces.clear();
  for (int k = 0; k < n; ++k) {
    Interface g;
    g.i = parent_region[k];
    g.j = k + 1;
    g.circle = circles[k];
    g.tube_halfwidth = tube_halfwidth;
    interfaces.push_back(g);
  }
  d0 = outer_diameter(outer);
  for (int k = 0; k < n; ++k) {
    d0 = std::min(d0, gap_to_outer(outer, circles[k]));
    for (int m = k + 1; m < n; ++m) d0 = std::min(d0, circle_gap(circles[k], circles[m]));
  }
}

int Scene::region_of(const Vec2& x) const {
  int best = background_id();
  double best_r = std::numeric_limits<double>::infinity();
  for (int k = 0; k < inclusion_count(); ++k) {
    if (circles[k].contains(x) && circles[k].radius < best_r) {
      best = k + 1;
      best_r = circles[k].radius;
    }
  }
  return best;
}

int Scene::contained_count(int region) const {
  int cnt = 0;
  for (int k = 0; k < inclusion_count(); ++k) {
    if (region == background_id()) {
      ++cnt;  // every circle is inside the full domain
    } else if (nested_in(circles[k], circles[region - 1])) {
      ++cnt;
    }
  }
  return cnt;
}

std::vector<int> Scene::neighbors(int region) const {
  std::set<int> out;
  for (const auto& g : interfaces) {
    if (g.i == region) out.insert(g.j);
    if (g.j == region) out.insert(g.i);
  }
  return {out.begin(), out.end()};
}

const Interface* Scene::interface_between(int a, int b) const {
  for (const auto& g : interfaces)
    if ((g.i == a && g.j == b) || (g.i == b && g.j == a)) return &g;
  return nullptr;
}

ValidationReport validate_scene(const Scene& scene) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& clause, const std::string& detail) {
    rep.ok = false;
    rep.violations.push_back({clause, detail});
  };

  const int n = scene.inclusion_count();
  for (int k = 0; k < n; ++k) {
    if (!(scene.circles[k].radius > 0)) {
      std::ostringstream os;
      os << "circle " << k + 1 << " has radius " << scene.circles[k].radius;
      fail("positive radius", os.str());
    }
  }

  for (int k = 0; k < n; ++k) {
    for (int m = k + 1; m < n; ++m) {
      const Circle& a = scene.circles[k];
      const Circle& b = scene.circles[m];
      if (!disjoint(a, b) && !nested_in(a, b) && !nested_in(b, a)) {
        std::ostringstream os;
        os << "circles " << k + 1 << " and " << m + 1 << " intersect or touch";
        fail("interfaces intersect", os.str());
      }
    }
  }

  for (int k = 0; k < n; ++k) {
    if (gap_to_outer(scene.outer, scene.circles[k]) <= 0) {
      std::ostringstream os;
      os << "circle " << k + 1 << " reaches the outer boundary";
      fail("d(union Omega_i, complement of Omega) = 0", os.str());
    }
  }

  if (n > 0 && rep.ok) {
    Scene tmp = scene;
    tmp.finalize();
    if (!(tmp.d0 > 0)) fail("separation d0 > 0", "minimum interface gap is not positive");
  }
  return rep;
}

bool is_construction_map(const Scene& scene, const std::vector<int>& order,
                         std::vector<int>* attach_out) {
  const int n1 = scene.region_count();
  if (static_cast<int>(order.size()) != n1) return false;
  std::vector<char> seen(n1 + 1, 0);
  for (int r : order) {
    if (r < 1 || r > n1 || seen[r]) return false;
    seen[r] = 1;
  }
  std::vector<int> attach(n1, 0);
  std::vector<char> placed(n1 + 1, 0);
  placed[order[0]] = 1;
  for (int j = 2; j <= n1; ++j) {
    const int region = order[j - 1];
    // interfaces shared with the already covered union
    int count = 0, pos = 0;
    for (int nb : scene.neighbors(region)) {
      if (placed[nb]) {
        ++count;
        for (int t = 0; t < j - 1; ++t)
          if (order[t] == nb) pos = t + 1;
      }
    }
    if (count != 1) return false;
    attach[j - 1] = pos;
    placed[region] = 1;
  }
  if (attach_out) *attach_out = attach;
  return true;
}

ConstructionMap construction_map(const Scene& scene, int start) {
  const int n1 = scene.region_count();
  if (start < 1 || start > n1) throw std::invalid_argument("construction_map: bad start region");
  ConstructionMap cm;
  cm.order.push_back(start);
  cm.attach.push_back(0);
  std::vector<char> placed(n1 + 1, 0);
  placed[start] = 1;
  while (static_cast<int>(cm.order.size()) < n1) {
    int chosen = -1, chosen_attach = 0;
    for (int r = 1; r <= n1 && chosen < 0; ++r) {
      if (placed[r]) continue;
      int count = 0, pos = 0;
      for (int nb : scene.neighbors(r)) {
        if (placed[nb]) {
          ++count;
          for (size_t t = 0; t < cm.order.size(); ++t)
            if (cm.order[t] == nb) pos = static_cast<int>(t) + 1;
        }
      }
      if (count == 1) {
        chosen = r;
        chosen_attach = pos;
      }
    }
    if (chosen < 0)
      throw std::runtime_error("construction_map: no admissible next region (invalid scene?)");
    cm.order.push_back(chosen);
    cm.attach.push_back(chosen_attach);
    placed[chosen] = 1;
  }
  return cm;
}

std::vector<std::vector<int>> index_maps(const ConstructionMap& cmap) {
  const int n1 = static_cast<int>(cmap.order.size());
  std::vector<std::vector<int>> maps;
  std::vector<int> cur(n1, cmap.order[0]);  // entries indexed by region id - 1
  maps.push_back(cur);
  for (int s = 2; s <= n1; ++s) {
    // entries at order[l-1] for l <= s-1 carry over from the previous stage
    cur = maps.back();
    cur[cmap.order[s - 1] - 1] = cmap.order[s - 1];
    for (int l = s + 1; l <= n1; ++l) {
      const int region = cmap.order[l - 1];
      const int attach_region = cmap.order[cmap.attach[l - 1] - 1];
      cur[region - 1] = cur[attach_region - 1];
    }
    maps.push_back(cur);
  }
  return maps;
}

std::vector<Vec2> sample_grid(const Scene& scene, double spacing, double tube_halfwidth) {
  Vec2 lo, hi;
  if (const auto* d = std::get_if<OuterDisk>(&scene.outer)) {
    lo = d->center - Vec2(d->radius, d->radius);
    hi = d->center + Vec2(d->radius, d->radius);
  } else {
    const auto& r = std::get<OuterRect>(scene.outer);
    lo = r.lo;
    hi = r.hi;
  }
  std::vector<Vec2> pts;
  for (double y = lo.y() + spacing / 2; y < hi.y(); y += spacing) {
    for (double x = lo.x() + spacing / 2; x < hi.x(); x += spacing) {
      Vec2 p(x, y);
      if (!outer_contains(scene.outer, p)) continue;
      if (outer_boundary_distance(scene.outer, p) < tube_halfwidth) continue;
      bool in_tube = false;
      for (const auto& c : scene.circles)
        if (std::abs(c.signed_distance(p)) < tube_halfwidth) {
          in_tube = true;
          break;
        }
      if (!in_tube) pts.push_back(p);
    }
  }
  return pts;
}

}  // namespace nvjac

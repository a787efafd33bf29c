#include "nvjac/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nvjac {

namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// > 0 iff p lies inside the circumcircle of CCW triangle (a, b, c)
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double ax = a.x() - p.x(), ay = a.y() - p.y();
  const double bx = b.x() - p.x(), by = b.y() - p.y();
  const double cx = c.x() - p.x(), cy = c.y() - p.y();
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
}

// Incremental Bowyer-Watson triangulation with walk-based point location.
class Delaunay {
 public:
  explicit Delaunay(const std::vector<Vec2>& points) : pts_(points) {
    Vec2 lo = pts_[0], hi = pts_[0];
    for (const auto& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec2 mid = 0.5 * (lo + hi);
    const double span = std::max((hi - lo).maxCoeff(), 1e-9) * 64.0;
    const int n = static_cast<int>(pts_.size());
    pts_.push_back(mid + Vec2(-span, -span));
    pts_.push_back(mid + Vec2(span, -span));
    pts_.push_back(mid + Vec2(0, span));
    tris_.push_back({{n, n + 1, n + 2}, {{-1, -1, -1}}, true});
    for (int i = 0; i < n; ++i) insert(i);
  }

  // Real triangles (no super-triangle vertices), CCW.
  std::vector<std::array<int, 3>> extract() const {
    const int n = static_cast<int>(pts_.size()) - 3;
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
      out.push_back({t.v[0], t.v[1], t.v[2]});
    }
    return out;
  }

 private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> adj;  // across edge opposite v[e]
    bool alive;
  };

  int locate(const Vec2& p) const {
    int t = hint_;
    if (t < 0 || !tris_[t].alive) {
      for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
        if (tris_[i].alive) {
          t = i;
          break;
        }
    }
    int steps = 0;
    const int cap = static_cast<int>(tris_.size()) + 64;
    while (steps++ < cap) {
      bool moved = false;
      for (int e = 0; e < 3; ++e) {
        const Vec2& a = pts_[tris_[t].v[(e + 1) % 3]];
        const Vec2& b = pts_[tris_[t].v[(e + 2) % 3]];
        if (orient(a, b, p) < 0) {
          const int nb = tris_[t].adj[e];
          if (nb >= 0) {
            t = nb;
            moved = true;
            break;
          }
        }
      }
      if (!moved) return t;
    }
    // walk failed (numeric degeneracy); brute-force scan
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      if (!tris_[i].alive) continue;
      const auto& tr = tris_[i];
      if (orient(pts_[tr.v[0]], pts_[tr.v[1]], p) >= 0 &&
          orient(pts_[tr.v[1]], pts_[tr.v[2]], p) >= 0 &&
          orient(pts_[tr.v[2]], pts_[tr.v[0]], p) >= 0)
        return i;
    }
    throw std::runtime_error("mesh: point location failed");
  }

  void insert(int ip) {
    const Vec2& p = pts_[ip];
    const int t0 = locate(p);

    // grow the cavity of circumcircle-violating triangles
    std::vector<int> bad;
    std::vector<char> in_bad(tris_.size(), 0);
    std::vector<int> stack{t0};
    in_bad[t0] = 1;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      bad.push_back(t);
      for (int e = 0; e < 3; ++e) {
        const int nb = tris_[t].adj[e];
        if (nb < 0 || in_bad[nb]) continue;
        const auto& tr = tris_[nb];
        if (incircle(pts_[tr.v[0]], pts_[tr.v[1]], pts_[tr.v[2]], p) > 0) {
          in_bad[nb] = 1;
          stack.push_back(nb);
        }
      }
    }

    // boundary edges of the cavity, directed as seen from inside
    struct BEdge {
      int a, b, outer;
    };
    std::vector<BEdge> boundary;
    for (int t : bad) {
      for (int e = 0; e < 3; ++e) {
        const int nb = tris_[t].adj[e];
        if (nb >= 0 && in_bad[nb]) continue;
        boundary.push_back({tris_[t].v[(e + 1) % 3], tris_[t].v[(e + 2) % 3], nb});
      }
    }
    for (int t : bad) tris_[t].alive = false;

    // fan p to the boundary; link fan neighbors through shared (p, v) edges
    std::map<int, int> tri_of_first;  // boundary edge start vertex -> new tri
    std::vector<int> created;
    for (const auto& be : boundary) {
      Tri nt;
      nt.v = {ip, be.a, be.b};
      nt.adj = {be.outer, -1, -1};
      nt.alive = true;
      const int id = static_cast<int>(tris_.size());
      tris_.push_back(nt);
      in_bad.push_back(0);
      if (be.outer >= 0) {
        auto& other = tris_[be.outer];
        for (int e = 0; e < 3; ++e)
          if ((other.v[(e + 1) % 3] == be.b && other.v[(e + 2) % 3] == be.a)) other.adj[e] = id;
      }
      tri_of_first[be.a] = id;
      created.push_back(id);
    }
    // fan tri (p,a,b): edge (b,p) meets the fan tri starting at b,
    // edge (p,a) meets the fan tri ending at a
    std::map<int, int> tri_of_second;
    for (int id : created) tri_of_second[tris_[id].v[2]] = id;
    for (int id : created) {
      tris_[id].adj[1] = tri_of_first.at(tris_[id].v[2]);
      tris_[id].adj[2] = tri_of_second.at(tris_[id].v[1]);
    }

    hint_ = created.empty() ? hint_ : created.back();
  }

  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  int hint_ = 0;
};

struct PointSet {
  std::vector<Vec2> pts;
  std::vector<int> mark;      // 0 interior, -1 outer, k>0 circle k
  std::vector<char> movable;  // lattice points only
};

double hash_jitter(int i, int j, int salt) {
  unsigned long long x = 0x9e3779b97f4a7c15ULL;
  x ^= static_cast<unsigned long long>(i + 40000) * 0xff51afd7ed558ccdULL;
  x ^= static_cast<unsigned long long>(j + 40000) * 0xc4ceb9fe1a85ec53ULL;
  x ^= static_cast<unsigned long long>(salt) * 0x2545f4914f6cdd1dULL;
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 29;
  return ((x >> 11) * 0x1.0p-53) - 0.5;  // in [-0.5, 0.5)
}

PointSet generate_points(const Scene& scene, double h) {
  PointSet ps;
  auto push = [&ps](const Vec2& p, int mark, bool movable) {
    ps.pts.push_back(p);
    ps.mark.push_back(mark);
    ps.movable.push_back(movable);
  };

  // outer boundary ring
  if (const auto* d = std::get_if<OuterDisk>(&scene.outer)) {
    const int n = std::max(12, static_cast<int>(std::round(2.0 * M_PI * d->radius / h)));
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * M_PI * k / n;
      push(d->center + d->radius * Vec2(std::cos(t), std::sin(t)), -1, false);
    }
  } else {
    const auto& r = std::get<OuterRect>(scene.outer);
    auto edge = [&](Vec2 a, Vec2 b) {
      const int n = std::max(2, static_cast<int>(std::round((b - a).norm() / h)));
      for (int k = 0; k < n; ++k) push(a + (b - a) * (static_cast<double>(k) / n), -1, false);
    };
    edge(r.lo, Vec2(r.hi.x(), r.lo.y()));
    edge(Vec2(r.hi.x(), r.lo.y()), r.hi);
    edge(r.hi, Vec2(r.lo.x(), r.hi.y()));
    edge(Vec2(r.lo.x(), r.hi.y()), r.lo);
  }

  // interface rings, vertices exactly on the circles
  for (int k = 0; k < scene.inclusion_count(); ++k) {
    const Circle& c = scene.circles[k];
    const int n = std::max(16, static_cast<int>(std::round(2.0 * M_PI * c.radius / h)));
    for (int t = 0; t < n; ++t) {
      const double a = 2.0 * M_PI * t / n;
      push(c.center + c.radius * Vec2(std::cos(a), std::sin(a)), k + 1, false);
    }
  }

  // hex lattice interior with clearance from all fixed curves
  Vec2 lo, hi;
  if (const auto* d = std::get_if<OuterDisk>(&scene.outer)) {
    lo = d->center - Vec2(d->radius, d->radius);
    hi = d->center + Vec2(d->radius, d->radius);
  } else {
    const auto& r = std::get<OuterRect>(scene.outer);
    lo = r.lo;
    hi = r.hi;
  }
  const double row = h * std::sqrt(3.0) / 2.0;
  const double clearance = 0.62 * h;
  int jrow = 0;
  for (double y = lo.y() + 0.5 * row; y < hi.y(); y += row, ++jrow) {
    const double offset = (jrow % 2 == 0) ? 0.0 : 0.5 * h;
    int icol = 0;
    for (double x = lo.x() + 0.5 * h + offset; x < hi.x(); x += h, ++icol) {
      Vec2 p(x + 0.06 * h * hash_jitter(icol, jrow, 1), y + 0.06 * h * hash_jitter(icol, jrow, 2));
      if (!outer_contains(scene.outer, p)) continue;
      if (outer_boundary_distance(scene.outer, p) < clearance) continue;
      bool clear = true;
      for (const auto& c : scene.circles)
        if (std::abs(c.signed_distance(p)) < clearance) {
          clear = false;
          break;
        }
      if (clear) push(p, 0, true);
    }
  }
  return ps;
}

}  // namespace

double Mesh::area(int t) const {
  const auto& tr = triangles[t];
  return 0.5 * orient(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]);
}

double Mesh::min_angle_deg() const {
  double worst = 180.0;
  for (const auto& tr : triangles) {
    for (int e = 0; e < 3; ++e) {
      const Vec2& a = vertices[tr[e]];
      const Vec2& b = vertices[tr[(e + 1) % 3]];
      const Vec2& c = vertices[tr[(e + 2) % 3]];
      const Vec2 u = b - a, v = c - a;
      const double ang = std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v));
      worst = std::min(worst, ang * 180.0 / M_PI);
    }
  }
  return worst;
}

void Mesh::build_locator() {
  Vec2 lo = vertices[0], hi = vertices[0];
  for (const auto& p : vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  locator_.lo = lo;
  locator_.cell = std::max(2.0 * h, 1e-6);
  locator_.nx = std::max(1, static_cast<int>((hi - lo).x() / locator_.cell) + 1);
  locator_.ny = std::max(1, static_cast<int>((hi - lo).y() / locator_.cell) + 1);
  locator_.bins.assign(static_cast<size_t>(locator_.nx) * locator_.ny, {});
  for (int t = 0; t < triangle_count(); ++t) {
    Vec2 tlo = vertices[triangles[t][0]], thi = tlo;
    for (int e = 1; e < 3; ++e) {
      tlo = tlo.cwiseMin(vertices[triangles[t][e]]);
      thi = thi.cwiseMax(vertices[triangles[t][e]]);
    }
    const int i0 = std::clamp(static_cast<int>((tlo.x() - lo.x()) / locator_.cell), 0, locator_.nx - 1);
    const int i1 = std::clamp(static_cast<int>((thi.x() - lo.x()) / locator_.cell), 0, locator_.nx - 1);
    const int j0 = std::clamp(static_cast<int>((tlo.y() - lo.y()) / locator_.cell), 0, locator_.ny - 1);
    const int j1 = std::clamp(static_cast<int>((thi.y() - lo.y()) / locator_.cell), 0, locator_.ny - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i)
        locator_.bins[static_cast<size_t>(j) * locator_.nx + i].push_back(t);
  }
}

int Mesh::locate(const Vec2& x, int side) const {
  const int i = std::clamp(static_cast<int>((x.x() - locator_.lo.x()) / locator_.cell), 0,
                           locator_.nx - 1);
  const int j = std::clamp(static_cast<int>((x.y() - locator_.lo.y()) / locator_.cell), 0,
                           locator_.ny - 1);
  const double tol = -1e-12 * std::max(1.0, h);
  int fallback = -1;
  for (int t : locator_.bins[static_cast<size_t>(j) * locator_.nx + i]) {
    const auto& tr = triangles[t];
    const double s = 2.0 * area(t);
    if (s <= 0) continue;
    const double w0 = orient(vertices[tr[1]], vertices[tr[2]], x);
    const double w1 = orient(vertices[tr[2]], vertices[tr[0]], x);
    const double w2 = orient(vertices[tr[0]], vertices[tr[1]], x);
    if (w0 >= tol * s && w1 >= tol * s && w2 >= tol * s) {
      if (side == 0 || tri_region[t] == side) return t;
      fallback = t;
    }
  }
  return fallback;
}

Mesh build_mesh(const Scene& scene, double h) {
  if (!(h > 0)) throw std::invalid_argument("build_mesh: h must be positive");
  Scene sc = scene;
  sc.finalize(2.0 * h);
  if (sc.inclusion_count() > 0 && !(h < sc.d0 / 4.0)) {
    std::ostringstream os;
    os << "build_mesh: h = " << h << " must be < d0/4 = " << sc.d0 / 4.0;
    throw std::invalid_argument(os.str());
  }

  PointSet ps = generate_points(sc, h);
  if (ps.pts.size() < 6) throw std::runtime_error("build_mesh: scene produced too few points");

  std::vector<std::array<int, 3>> tris;
  // Delaunay + two rounds of Laplacian smoothing of the movable points
  for (int round = 0; round < 3; ++round) {
    Delaunay dt(ps.pts);
    tris = dt.extract();
    if (round == 2) break;
    std::vector<Vec2> accum(ps.pts.size(), Vec2::Zero());
    std::vector<int> degree(ps.pts.size(), 0);
    for (const auto& tr : tris) {
      for (int e = 0; e < 3; ++e) {
        const int a = tr[e], b = tr[(e + 1) % 3];
        accum[a] += ps.pts[b];
        degree[a]++;
        accum[b] += ps.pts[a];
        degree[b]++;
      }
    }
    const double clearance = 0.55 * h;
    for (size_t v = 0; v < ps.pts.size(); ++v) {
      if (!ps.movable[v] || degree[v] == 0) continue;
      Vec2 cand = accum[v] / degree[v];
      if (!outer_contains(sc.outer, cand) ||
          outer_boundary_distance(sc.outer, cand) < clearance)
        continue;
      bool clear = true;
      for (const auto& c : sc.circles)
        if (std::abs(c.signed_distance(cand)) < clearance) {
          clear = false;
          break;
        }
      if (clear) ps.pts[v] = cand;
    }
  }

  Mesh mesh;
  mesh.scene = sc;
  mesh.h = h;
  mesh.vertices = ps.pts;
  mesh.vertex_mark = ps.mark;
  mesh.triangles = tris;

  // drop degenerate hull slivers, normalize orientation to CCW
  std::vector<std::array<int, 3>> kept;
  for (auto tr : mesh.triangles) {
    double a2 = orient(mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]]);
    if (a2 < 0) {
      std::swap(tr[1], tr[2]);
      a2 = -a2;
    }
    if (a2 > 1e-14 * h * h) kept.push_back(tr);
  }
  mesh.triangles = kept;

  mesh.tri_region.resize(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t)
    mesh.tri_region[t] = sc.region_of(mesh.centroid(t));

  // adjacency
  mesh.tri_adj.assign(mesh.triangle_count(), {-1, -1, -1});
  std::map<std::pair<int, int>, std::pair<int, int>> half;  // directed edge -> (tri, e)
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int a = tr[(e + 1) % 3], b = tr[(e + 2) % 3];
      half[{a, b}] = {t, e};
    }
  }
  for (const auto& [edge, te] : half) {
    auto it = half.find({edge.second, edge.first});
    if (it != half.end()) mesh.tri_adj[te.first][te.second] = it->second.first;
  }

  // interface chords: region-change edges; both endpoints must lie on a circle
  std::map<int, std::vector<std::array<int, 2>>> iface;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int nb = mesh.tri_adj[t][e];
      if (nb < 0 || nb < t) continue;
      if (mesh.tri_region[t] == mesh.tri_region[nb]) continue;
      const int a = tr[(e + 1) % 3], b = tr[(e + 2) % 3];
      if (mesh.vertex_mark[a] <= 0 || mesh.vertex_mark[a] != mesh.vertex_mark[b])
        throw std::runtime_error("build_mesh: region-change edge off the interface polygon");
      iface[mesh.vertex_mark[a]].push_back({a, b});
    }
  }
  // order chords CCW by angle around each circle
  for (auto& [k, edges] : iface) {
    const Circle& c = sc.circles[k - 1];
    std::sort(edges.begin(), edges.end(), [&](const auto& e1, const auto& e2) {
      auto ang = [&](const std::array<int, 2>& e) {
        const Vec2 m = 0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]) - c.center;
        return std::atan2(m.y(), m.x());
      };
      return ang(e1) < ang(e2);
    });
  }
  mesh.interface_edges = std::move(iface);

  // every ring chord must have made it into the triangulation
  for (int k = 1; k <= sc.inclusion_count(); ++k) {
    int ring = 0;
    for (int m : mesh.vertex_mark)
      if (m == k) ++ring;
    const auto it = mesh.interface_edges.find(k);
    const int got = (it == mesh.interface_edges.end()) ? 0 : static_cast<int>(it->second.size());
    if (got != ring) {
      std::ostringstream os;
      os << "build_mesh: interface " << k << " recovered " << got << " of " << ring << " chords";
      throw std::runtime_error(os.str());
    }
  }

  mesh.build_locator();
  return mesh;
}

Mesh build_annulus_band_mesh(const Scene& scene, int circle_id, double width, int radial_layers) {
  if (circle_id < 1 || circle_id > scene.inclusion_count())
    throw std::invalid_argument("build_annulus_band_mesh: bad circle id");
  const Circle c = scene.circles[circle_id - 1];
  const double w = width / 2.0;
  if (!(w > 0 && w < c.radius)) throw std::invalid_argument("build_annulus_band_mesh: bad width");
  const int nr = std::max(2, radial_layers);  // rings: nr+1 radii, circle at the middle ring
  const int half = nr / 2;
  const double dr = w / half;
  const double target = dr;  // near-isotropic cells
  const int ntheta = std::max(16, static_cast<int>(std::round(2.0 * M_PI * c.radius / target)));

  Mesh mesh;
  mesh.scene = scene;
  mesh.scene.finalize(0.0);
  mesh.h = std::max(dr, 2.0 * M_PI * c.radius / ntheta);

  for (int j = 0; j <= 2 * half; ++j) {
    const double r = c.radius + (j - half) * dr;
    for (int i = 0; i < ntheta; ++i) {
      const double t = 2.0 * M_PI * i / ntheta;
      mesh.vertices.push_back(c.center + r * Vec2(std::cos(t), std::sin(t)));
      int mark = 0;
      if (j == 0 || j == 2 * half)
        mark = -1;  // band rims act as the Dirichlet boundary
      else if (j == half)
        mark = circle_id;
      mesh.vertex_mark.push_back(mark);
    }
  }
  auto vid = [ntheta](int j, int i) { return j * ntheta + ((i % ntheta) + ntheta) % ntheta; };
  for (int j = 0; j < 2 * half; ++j) {
    for (int i = 0; i < ntheta; ++i) {
      for (auto tr : {std::array<int, 3>{vid(j, i), vid(j, i + 1), vid(j + 1, i + 1)},
                      std::array<int, 3>{vid(j, i), vid(j + 1, i + 1), vid(j + 1, i)}}) {
        if (orient(mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]]) < 0)
          std::swap(tr[1], tr[2]);
        mesh.triangles.push_back(tr);
      }
    }
  }
  mesh.tri_region.resize(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t)
    mesh.tri_region[t] = mesh.scene.region_of(mesh.centroid(t));
  mesh.tri_adj.assign(mesh.triangle_count(), {-1, -1, -1});
  std::map<std::pair<int, int>, std::pair<int, int>> half_edges;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) half_edges[{tr[(e + 1) % 3], tr[(e + 2) % 3]}] = {t, e};
  }
  for (const auto& [edge, te] : half_edges) {
    auto it = half_edges.find({edge.second, edge.first});
    if (it != half_edges.end()) mesh.tri_adj[te.first][te.second] = it->second.first;
  }
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tr = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int nb = mesh.tri_adj[t][e];
      if (nb < 0 || nb < t) continue;
      if (mesh.tri_region[t] == mesh.tri_region[nb]) continue;
      const int a = tr[(e + 1) % 3], b = tr[(e + 2) % 3];
      if (mesh.vertex_mark[a] == circle_id && mesh.vertex_mark[b] == circle_id)
        mesh.interface_edges[circle_id].push_back({a, b});
    }
  }
  mesh.build_locator();
  return mesh;
}

}  // namespace nvjac

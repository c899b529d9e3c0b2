#include "support/solids.hpp"

#include <cstdlib>
#include <set>

namespace qgtest {

namespace {

using i128 = __int128;

struct P3 {
  int64_t x, y, z;
};

i128 orient(const P3& a, const P3& b, const P3& c, const P3& d) {
  i128 bx = b.x - a.x, by = b.y - a.y, bz = b.z - a.z;
  i128 cx = c.x - a.x, cy = c.y - a.y, cz = c.z - a.z;
  i128 dx = d.x - a.x, dy = d.y - a.y, dz = d.z - a.z;
  return bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx);
}

// Brute-force hull: a triple supports a face when every point lies on one
// side. Quadratic-ish but plenty for test sizes; coplanar sets are merged into
// one polygon per supporting plane.
struct PlaneKey {
  i128 a, b, c, d;  // normalized outward plane ax+by+cz = d
  bool operator<(const PlaneKey& o) const {
    if (a != o.a) return a < o.a;
    if (b != o.b) return b < o.b;
    if (c != o.c) return c < o.c;
    return d < o.d;
  }
};

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

Polyhedron random_integer_hull(std::mt19937_64& rng, int points, int64_t coord_range,
                               uint32_t bits) {
  // Sample until the hull is full-dimensional with every vertex extreme and
  // strictly positive curvature (the builder rejects flat vertices).
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<P3> pts;
    std::set<std::array<int64_t, 3>> seen;
    std::uniform_int_distribution<int64_t> d(-coord_range, coord_range);
    while (static_cast<int>(pts.size()) < points) {
      P3 p{d(rng), d(rng), d(rng)};
      if (seen.insert({p.x, p.y, p.z}).second) pts.push_back(p);
    }
    // Collect supporting planes from all triples.
    std::map<PlaneKey, std::vector<int>> planes;
    int n = static_cast<int>(pts.size());
    bool degenerate = false;
    for (int i = 0; i < n && !degenerate; ++i)
      for (int j = i + 1; j < n && !degenerate; ++j)
        for (int k = j + 1; k < n; ++k) {
          // Normal of the triple.
          i128 ax = pts[j].x - pts[i].x, ay = pts[j].y - pts[i].y, az = pts[j].z - pts[i].z;
          i128 bx = pts[k].x - pts[i].x, by = pts[k].y - pts[i].y, bz = pts[k].z - pts[i].z;
          i128 nx = ay * bz - az * by, ny = az * bx - ax * bz, nz = ax * by - ay * bx;
          if (nx == 0 && ny == 0 && nz == 0) continue;
          // Side counts.
          int pos = 0, neg = 0;
          for (int m = 0; m < n; ++m) {
            i128 s = nx * (pts[m].x - pts[i].x) + ny * (pts[m].y - pts[i].y) +
                     nz * (pts[m].z - pts[i].z);
            if (s > 0) ++pos;
            if (s < 0) ++neg;
          }
          if (pos && neg) continue;  // not supporting
          // Outward normal.
          if (pos) { nx = -nx; ny = -ny; nz = -nz; }
          i128 g = gcd128(gcd128(nx, ny), nz);
          if (g == 0) continue;
          nx /= g; ny /= g; nz /= g;
          i128 dplane = nx * pts[i].x + ny * pts[i].y + nz * pts[i].z;
          auto& members = planes[{nx, ny, nz, dplane}];
          for (int m : {i, j, k})
            if (std::find(members.begin(), members.end(), m) == members.end())
              members.push_back(m);
        }
    if (planes.size() < 4) continue;
    // Interior points (on no plane) are dropped; vertices re-indexed.
    std::vector<int> used(n, 0);
    for (auto& [key, members] : planes)
      for (int m : members) used[m] = 1;
    // Demand all points extreme so the requested size is honored.
    bool all_used = std::all_of(used.begin(), used.end(), [](int u) { return u == 1; });
    if (!all_used) continue;

    std::vector<std::vector<int>> faces;
    bool bad = false;
    for (auto& [key, members] : planes) {
      if (members.size() < 3) { bad = true; break; }
      // Order members ccw around the outward normal.
      double nx = static_cast<double>(key.a), ny = static_cast<double>(key.b),
             nz = static_cast<double>(key.c);
      double nl = std::sqrt(nx * nx + ny * ny + nz * nz);
      nx /= nl; ny /= nl; nz /= nl;
      double cx = 0, cy = 0, cz = 0;
      for (int m : members) {
        cx += pts[m].x / double(members.size());
        cy += pts[m].y / double(members.size());
        cz += pts[m].z / double(members.size());
      }
      double ux = pts[members[0]].x - cx, uy = pts[members[0]].y - cy,
             uz = pts[members[0]].z - cz;
      double vx = ny * uz - nz * uy, vy = nz * ux - nx * uz, vz = nx * uy - ny * ux;
      std::sort(members.begin(), members.end(), [&](int a, int b) {
        auto ang = [&](int m) {
          double dx = pts[m].x - cx, dy = pts[m].y - cy, dz = pts[m].z - cz;
          return std::atan2(dx * vx + dy * vy + dz * vz, dx * ux + dy * uy + dz * uz);
        };
        return ang(a) < ang(b);
      });
      faces.push_back(members);
    }
    if (bad) continue;
    try {
      std::vector<std::array<Expression, 3>> coords;
      for (const P3& p : pts)
        coords.push_back({Expression::integer(p.x), Expression::integer(p.y),
                          Expression::integer(p.z)});
      return Polyhedron::from_extrinsic(coords, faces, bits);
    } catch (const qg::PolyError&) {
      continue;  // flat vertex or similar degeneracy; resample
    }
  }
  throw std::runtime_error("random_integer_hull: failed to sample a valid hull");
}

}  // namespace qgtest

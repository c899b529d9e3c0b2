#include "quasigeo/poly.hpp"

#include <algorithm>
#include <map>

namespace qg {

namespace {

ExprLimits unlimited() {
  ExprLimits l;
  l.max_ops = UINT32_MAX;
  l.max_root_degree = UINT32_MAX;
  l.max_leaf_bits = UINT32_MAX;
  return l;
}

Expression zero() { return Expression::integer(0); }

}  // namespace

Vec2E Isometry2E::apply(const Vec2E& p) const {
  return {r00 * p.x + r01 * p.y + tx, r10 * p.x + r11 * p.y + ty};
}

Vec2E Isometry2E::apply_vector(const Vec2E& v) const {
  return {r00 * v.x + r01 * v.y, r10 * v.x + r11 * v.y};
}

Isometry2E Isometry2E::then(const Isometry2E& s) const {
  Isometry2E out;
  out.r00 = s.r00 * r00 + s.r01 * r10;
  out.r01 = s.r00 * r01 + s.r01 * r11;
  out.r10 = s.r10 * r00 + s.r11 * r10;
  out.r11 = s.r10 * r01 + s.r11 * r11;
  out.tx = s.r00 * tx + s.r01 * ty + s.tx;
  out.ty = s.r10 * tx + s.r11 * ty + s.ty;
  return out;
}

Isometry2E Isometry2E::inverse() const {
  // Proper rotation: the transpose inverts R.
  Isometry2E out;
  out.r00 = r00;
  out.r01 = r10;
  out.r10 = r01;
  out.r11 = r11;
  out.tx = zero() - (out.r00 * tx + out.r01 * ty);
  out.ty = zero() - (out.r10 * tx + out.r11 * ty);
  return out;
}

Expression dot2(const Vec2E& a, const Vec2E& b) { return a.x * b.x + a.y * b.y; }
Expression cross2(const Vec2E& a, const Vec2E& b) { return a.x * b.y - a.y * b.x; }
Vec2E sub2(const Vec2E& a, const Vec2E& b) { return {a.x - b.x, a.y - b.y}; }
Vec2E add2(const Vec2E& a, const Vec2E& b) { return {a.x + b.x, a.y + b.y}; }

Expression squared_distance(const Vec2E& a, const Vec2E& b) {
  Vec2E d = sub2(a, b);
  return d.x * d.x + d.y * d.y;
}

Vec2I enclose2(const Vec2E& p, uint64_t prec) {
  return {enclose(p.x, prec), enclose(p.y, prec)};
}

// ---------------------------------------------------------------------------

Polyhedron Polyhedron::from_extrinsic(const std::vector<std::array<Expression, 3>>& vertices,
                                      const std::vector<std::vector<int>>& faces,
                                      uint32_t bits) {
  ScopedExprLimits lift(unlimited());
  Polyhedron p;
  p.bits_ = bits;
  auto sub3 = [](const std::array<Expression, 3>& a, const std::array<Expression, 3>& b) {
    return std::array<Expression, 3>{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  };
  auto dot3 = [](const std::array<Expression, 3>& a, const std::array<Expression, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  };
  auto cross3 = [](const std::array<Expression, 3>& a, const std::array<Expression, 3>& b) {
    return std::array<Expression, 3>{a[1] * b[2] - a[2] * b[1],
                                     a[2] * b[0] - a[0] * b[2],
                                     a[0] * b[1] - a[1] * b[0]};
  };
  for (size_t fi = 0; fi < faces.size(); ++fi) {
    const std::vector<int>& corner_ids = faces[fi];
    if (corner_ids.size() < 3)
      throw PolyError(PolyErrorCode::InputParse, "face with fewer than 3 corners");
    for (int v : corner_ids)
      if (v < 0 || static_cast<size_t>(v) >= vertices.size())
        throw PolyError(PolyErrorCode::InputParse, "face references missing vertex");
    const std::array<Expression, 3>& p0 = vertices[corner_ids[0]];
    std::array<Expression, 3> e1 = sub3(vertices[corner_ids[1]], p0);
    std::array<Expression, 3> e2 = sub3(vertices[corner_ids[2]], p0);
    std::array<Expression, 3> n = cross3(e1, e2);
    Expression n2 = dot3(n, n);
    if (sign(n2) != Sign::Positive)
      throw PolyError(PolyErrorCode::NonConvexFace, "degenerate face corner triple");
    // Planarity: every corner lies in the plane spanned at p0.
    for (size_t k = 3; k < corner_ids.size(); ++k) {
      Expression off = dot3(sub3(vertices[corner_ids[k]], p0), n);
      if (sign(off) != Sign::Zero)
        throw PolyError(PolyErrorCode::NonPlanarFace,
                        "face " + std::to_string(fi) + " is not planar");
    }
    // Isometric chart: x along e1, y along n x e1, both normalized exactly.
    Expression e1len2 = dot3(e1, e1);
    std::array<Expression, 3> v_dir = cross3(n, e1);
    Expression vlen2 = n2 * e1len2;  // |n x e1|^2 = |n|^2 |e1|^2 since n . e1 = 0
    Expression e1len = sqrt(e1len2);
    Expression vlen = sqrt(vlen2);
    FaceChart chart;
    chart.id = static_cast<int>(fi);
    chart.corner_vertices = corner_ids;
    for (int vid : corner_ids) {
      std::array<Expression, 3> d = sub3(vertices[vid], p0);
      Expression cx = simplified(dot3(d, e1) / e1len);
      Expression cy = simplified(dot3(d, v_dir) / vlen);
      chart.corners.push_back({cx, cy});
    }
    p.faces_.push_back(std::move(chart));
  }
  p.build(false);
  return p;
}

Polyhedron Polyhedron::from_intrinsic(std::vector<FaceChart> charts, uint32_t bits) {
  ScopedExprLimits lift(unlimited());
  Polyhedron p;
  p.bits_ = bits;
  for (size_t i = 0; i < charts.size(); ++i) {
    charts[i].id = static_cast<int>(i);
    if (charts[i].corner_vertices.size() != charts[i].corners.size() ||
        charts[i].corner_vertices.size() < 3)
      throw PolyError(PolyErrorCode::InputParse, "malformed chart");
  }
  p.faces_ = std::move(charts);
  p.build(true);
  return p;
}

void Polyhedron::build(bool validate_side_lengths) {
  ScopedExprLimits lift(unlimited());
  // Convex position, counterclockwise, strictly.
  for (const FaceChart& f : faces_) {
    int n = f.side_count();
    for (int i = 0; i < n; ++i) {
      Vec2E a = f.corners[i];
      Vec2E b = f.corners[(i + 1) % n];
      Vec2E c = f.corners[(i + 2) % n];
      Sign s = sign(cross2(sub2(b, a), sub2(c, b)));
      if (s != Sign::Positive)
        throw PolyError(PolyErrorCode::NonConvexFace,
                        "face " + std::to_string(f.id) +
                            " corners not in strictly convex ccw position");
    }
  }
  build_gluings(validate_side_lengths);
  build_fans();
  compute_scale_parameters();
  compute_limits();
}

void Polyhedron::build_gluings(bool validate_side_lengths) {
  // Directed edge (u, v) -> (face, side). A consistently oriented closed
  // surface has each directed edge exactly once, with its twin reversed.
  std::map<std::pair<int, int>, SideRef> directed;
  for (const FaceChart& f : faces_) {
    int n = f.side_count();
    for (int i = 0; i < n; ++i) {
      int u = f.corner_vertices[i];
      int v = f.corner_vertices[(i + 1) % n];
      if (u == v) throw PolyError(PolyErrorCode::InputParse, "degenerate side");
      auto [it, inserted] = directed.emplace(std::make_pair(u, v), SideRef{f.id, i});
      (void)it;
      if (!inserted)
        throw PolyError(PolyErrorCode::OpenSurface,
                        "directed edge appears twice; faces not consistently oriented");
    }
  }
  side_gluing_.assign(faces_.size(), {});
  for (size_t f = 0; f < faces_.size(); ++f)
    side_gluing_[f].assign(faces_[f].side_count(), {-1, false});

  for (auto& [uv, sa] : directed) {
    auto [u, v] = uv;
    if (u > v) continue;  // handle each undirected edge once
    auto twin = directed.find({v, u});
    if (twin == directed.end())
      throw PolyError(PolyErrorCode::OpenSurface, "boundary edge: surface is not closed");
    SideRef sb = twin->second;
    const FaceChart& fa = faces_[sa.face];
    const FaceChart& fb = faces_[sb.face];
    // In face a the side runs u -> v; in face b it runs v -> u.
    Vec2E au = fa.corners[sa.side];
    Vec2E av = fa.corners[(sa.side + 1) % fa.side_count()];
    Vec2E bv = fb.corners[sb.side];
    Vec2E bu = fb.corners[(sb.side + 1) % fb.side_count()];
    Vec2E ea = sub2(av, au);
    Vec2E eb = sub2(bv, bu);  // same geometric direction u -> v in b's chart
    Expression len2_a = dot2(ea, ea);
    Expression len2_b = dot2(eb, eb);
    if (validate_side_lengths && compare(len2_a, len2_b) != Ordering::Equal)
      throw PolyError(PolyErrorCode::LengthMismatch, "glued sides have different lengths");
    // Rotation taking ea onto eb; translation matching the u endpoints.
    Expression c = simplified(dot2(ea, eb) / len2_a);
    Expression s = simplified(cross2(ea, eb) / len2_a);
    Isometry2E ab;
    ab.r00 = c;
    ab.r01 = zero() - s;
    ab.r10 = s;
    ab.r11 = c;
    ab.tx = simplified(bu.x - (c * au.x - s * au.y));
    ab.ty = simplified(bu.y - (s * au.x + c * au.y));
    // Exactness: the far endpoint must land on its mate.
    Vec2E mapped = ab.apply(av);
    if (sign(mapped.x - bv.x) != Sign::Zero || sign(mapped.y - bv.y) != Sign::Zero)
      throw PolyError(PolyErrorCode::LengthMismatch,
                      "gluing isometry does not match endpoints exactly");
    EdgeGluing g;
    g.a = sa;
    g.b = sb;
    g.a_to_b = ab;
    g.b_to_a = ab.inverse();
    g.length = simplified(sqrt(len2_a));
    int idx = static_cast<int>(gluings_.size());
    gluings_.push_back(std::move(g));
    side_gluing_[sa.face][sa.side] = {idx, true};
    side_gluing_[sb.face][sb.side] = {idx, false};
  }
  // Every side glued; contiguous vertex ids; sphere topology.
  std::vector<int> seen_vertex;
  for (const FaceChart& f : faces_) {
    for (int i = 0; i < f.side_count(); ++i)
      if (side_gluing_[f.id][i].first < 0)
        throw PolyError(PolyErrorCode::OpenSurface, "unglued side");
    for (int v : f.corner_vertices) {
      if (v >= static_cast<int>(seen_vertex.size())) seen_vertex.resize(v + 1, 0);
      seen_vertex[v] = 1;
    }
  }
  int nv = static_cast<int>(seen_vertex.size());
  for (int v = 0; v < nv; ++v)
    if (!seen_vertex[v])
      throw PolyError(PolyErrorCode::InputParse, "vertex ids must be contiguous");
  int euler = nv - static_cast<int>(gluings_.size()) + static_cast<int>(faces_.size());
  if (euler != 2)
    throw PolyError(PolyErrorCode::OpenSurface,
                    "Euler characteristic " + std::to_string(euler) + ", expected 2");
  fans_.resize(nv);
}

SideRef Polyhedron::neighbor(int face, int side) const {
  auto [idx, is_a] = side_gluing_[face][side];
  const EdgeGluing& g = gluings_[idx];
  return is_a ? g.b : g.a;
}

const Isometry2E& Polyhedron::transfer(int face, int side) const {
  auto [idx, is_a] = side_gluing_[face][side];
  const EdgeGluing& g = gluings_[idx];
  return is_a ? g.a_to_b : g.b_to_a;
}

const Expression& Polyhedron::side_length(int face, int side) const {
  return gluings_[side_gluing_[face][side].first].length;
}

void Polyhedron::build_fans() {
  uint64_t prec = angle_precision() + 8;
  Interval pi = pi_interval(prec);
  Interval two_pi(pi.lo.mul_pow2(1), pi.hi.mul_pow2(1));
  for (size_t v = 0; v < fans_.size(); ++v) {
    VertexFan& fan = fans_[v];
    fan.vertex = static_cast<int>(v);
    FanIncidence start;
    for (const FaceChart& f : faces_) {
      for (int i = 0; i < f.side_count(); ++i)
        if (f.corner_vertices[i] == static_cast<int>(v)) {
          start = {f.id, i};
          break;
        }
      if (start.face >= 0) break;
    }
    if (start.face < 0) throw PolyError(PolyErrorCode::InputParse, "isolated vertex");
    // Walk counterclockwise: from (f, corner) cross the side that enters the
    // corner (side corner-1); in the neighbor the shared corner starts the
    // glued side.
    FanIncidence cur = start;
    do {
      fan.incidences.push_back(cur);
      const FaceChart& f = faces_[cur.face];
      int n = f.side_count();
      int side_in = (cur.corner + n - 1) % n;
      SideRef nb = neighbor(cur.face, side_in);
      cur = {nb.face, nb.side};
      if (faces_[nb.face].corner_vertices[nb.side] != static_cast<int>(v))
        throw PolyError(PolyErrorCode::OpenSurface, "fan walk lost its vertex");
      if (fan.incidences.size() > faces_.size() * 8 + 8)
        throw PolyError(PolyErrorCode::OpenSurface, "fan walk does not close");
    } while (!(cur.face == start.face && cur.corner == start.corner));

    Interval total{Dyadic(0)};
    fan.cumulative.push_back(total);
    for (const FanIncidence& inc : fan.incidences) {
      const FaceChart& f = faces_[inc.face];
      int n = f.side_count();
      Vec2E corner = f.corners[inc.corner];
      Vec2E out_dir = sub2(f.corners[(inc.corner + 1) % n], corner);
      Vec2E prev_dir = sub2(f.corners[(inc.corner + n - 1) % n], corner);
      Vec2I u = enclose2(out_dir, prec);
      Vec2I w = enclose2(prev_dir, prec);
      Interval angle = angle_between(u.x, u.y, w.x, w.y, prec);
      fan.corner_angles.push_back(angle);
      total = Interval::add(total, angle, prec);
      fan.cumulative.push_back(total);
    }
    fan.total_angle = total;
    fan.curvature = Interval::sub(two_pi, total, prec);
    if (fan.curvature.lo.sign() <= 0)
      throw PolyError(PolyErrorCode::NonConvexVertex,
                      "vertex " + std::to_string(v) +
                          " has nonpositive curvature (total angle >= 2 pi)");
  }
}

void Polyhedron::compute_scale_parameters() {
  Expression best_len2 = zero();
  for (const EdgeGluing& g : gluings_) {
    Expression len2 = g.length * g.length;
    if (compare(len2, best_len2) == Ordering::Greater) best_len2 = len2;
  }
  longest_edge_ = simplified(sqrt(best_len2));

  // Feature size: min over faces of corner-to-nonincident-side distance,
  // carried as a squared expression so comparisons stay radical-free.
  bool have_feature = false;
  Expression best_feat2 = zero();
  for (const FaceChart& f : faces_) {
    int n = f.side_count();
    for (int ci = 0; ci < n; ++ci) {
      const Vec2E& c = f.corners[ci];
      for (int s = 0; s < n; ++s) {
        if (s == ci || (s + 1) % n == ci) continue;  // sides containing the corner
        const Vec2E& a = f.corners[s];
        const Vec2E& b = f.corners[(s + 1) % n];
        Vec2E ab = sub2(b, a);
        Vec2E ac = sub2(c, a);
        Expression t_num = dot2(ac, ab);
        Expression ab2 = dot2(ab, ab);
        Expression d2 = zero();
        if (sign(t_num) != Sign::Positive) {
          d2 = squared_distance(c, a);
        } else if (compare(t_num, ab2) != Ordering::Less) {
          d2 = squared_distance(c, b);
        } else {
          Expression cr = cross2(ab, ac);
          d2 = (cr * cr) / ab2;
        }
        d2 = simplified(d2);
        if (!have_feature || compare(d2, best_feat2) == Ordering::Less) {
          best_feat2 = d2;
          have_feature = true;
        }
      }
    }
  }
  min_feature_ = simplified(sqrt(best_feat2));

  Expression best_diam2 = zero();
  for (const FaceChart& f : faces_) {
    int n = f.side_count();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Expression d2 = squared_distance(f.corners[i], f.corners[j]);
        if (compare(d2, best_diam2) == Ordering::Greater) best_diam2 = d2;
      }
  }
  max_face_diameter_ = simplified(sqrt(best_diam2));

  bool first = true;
  for (const VertexFan& fan : fans_) {
    if (first || fan.curvature.lo.cmp(eps_lower_) < 0) {
      eps_lower_ = fan.curvature.lo;
      first = false;
    }
  }
}

void Polyhedron::compute_limits() {
  uint32_t max_coord_ops = 1;
  for (const FaceChart& f : faces_)
    for (const Vec2E& c : f.corners)
      max_coord_ops = std::max({max_coord_ops, c.x.op_count(), c.y.op_count()});
  for (const EdgeGluing& g : gluings_)
    for (const Expression* e : {&g.a_to_b.r00, &g.a_to_b.r01, &g.a_to_b.tx, &g.a_to_b.ty})
      max_coord_ops = std::max(max_coord_ops, e->op_count());
  limits_.max_ops = std::max<uint32_t>(64, 48 * max_coord_ops + 256);
  limits_.max_root_degree = 2;
  limits_.max_leaf_bits = bits_ + 192;
}

}  // namespace qg

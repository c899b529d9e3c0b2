#include "quasigeo/trace.hpp"

#include <algorithm>
#include <cassert>
#include <map>

#include "quasigeo/trig.hpp"

namespace qg {

namespace {

Expression zero() { return Expression::integer(0); }

ExprLimits unlimited_limits() {
  ExprLimits l;
  l.max_ops = UINT32_MAX;
  l.max_root_degree = UINT32_MAX;
  l.max_leaf_bits = UINT32_MAX;
  return l;
}

Vec2E postprocess_point(const Vec2E& p, const TraceOptions& opt, uint32_t bits) {
  if (opt.mode == TraceMode::Rounded) {
    return {Expression::from_dyadic(approximate(p.x, bits)),
            Expression::from_dyadic(approximate(p.y, bits))};
  }
  return {simplified(p.x), simplified(p.y)};
}

Expression postprocess_scalar(const Expression& e, const TraceOptions& opt, uint32_t bits) {
  if (opt.mode == TraceMode::Rounded) return Expression::from_dyadic(approximate(e, bits));
  return simplified(e);
}

// Signed angle from u to v in (-pi, pi], certified; widens when both the
// cross and dot enclosures straddle zero.
Interval signed_angle(const Vec2I& u, const Vec2I& v, uint64_t prec) {
  Interval cr = Interval::sub(Interval::mul(u.x, v.y, prec), Interval::mul(u.y, v.x, prec), prec);
  Interval dt = Interval::add(Interval::mul(u.x, v.x, prec), Interval::mul(u.y, v.y, prec), prec);
  if (dt.lo.sign() > 0) return atan_interval(Interval::div(cr, dt, prec), prec);
  if (cr.lo.sign() > 0) return atan2_upper(cr, dt, prec);
  if (cr.hi.sign() < 0) return -atan2_upper(Interval(-cr.hi, -cr.lo), dt, prec);
  Interval pi = pi_interval(prec);
  return Interval(-pi.hi, pi.hi);
}

void simp_iso(Isometry2E& iso) {
  iso.r00 = simplified(iso.r00);
  iso.r01 = simplified(iso.r01);
  iso.r10 = simplified(iso.r10);
  iso.r11 = simplified(iso.r11);
  iso.tx = simplified(iso.tx);
  iso.ty = simplified(iso.ty);
}

}  // namespace

// ---------------------------------------------------------------------------

StepOutcome step_face(const Polyhedron& poly, const GeodesicState& state,
                      const TraceOptions& opt) {
  ScopedExprLimits scope(opt.mode == TraceMode::Exact ? unlimited_limits()
                                                      : poly.working_limits());
  const FaceChart& f = poly.face(state.face);
  int n = f.side_count();
  Vec2E dir = sub2(state.p1, state.p0);
  if (sign(dir.x) == Sign::Zero && sign(dir.y) == Sign::Zero)
    throw DegenerateRay("anchor points coincide");

  StepOutcome out;
  // Corner side signs; a forward corner exactly on the line is a vertex hit.
  std::vector<int> sigma(n, 0);
  int hit_corner = -1;
  Expression hit_d2 = zero();
  for (int k = 0; k < n; ++k) {
    Vec2E rel = sub2(f.corners[k], state.p0);
    Sign s = sign(cross2(dir, rel));
    if (s == Sign::Zero) {
      if (sign(dot2(dir, rel)) == Sign::Positive) {
        Expression d2 = dot2(rel, rel);
        if (hit_corner < 0 || compare(d2, hit_d2) == Ordering::Less) {
          hit_corner = k;
          hit_d2 = d2;
        }
      }
      sigma[k] = 0;
    } else {
      sigma[k] = s == Sign::Positive ? 1 : -1;
    }
  }
  if (hit_corner >= 0) {
    StepVertex v;
    v.corner = hit_corner;
    v.vertex = f.corner_vertices[hit_corner];
    v.corner_point = f.corners[hit_corner];
    v.distance_from_p0 = sqrt(hit_d2);
    out.vertex = std::move(v);
    return out;
  }
  int exit_side = -1;
  for (int k = 0; k < n; ++k) {
    if (sigma[k] < 0 && sigma[(k + 1) % n] > 0) {
      exit_side = k;
      break;
    }
  }
  if (exit_side < 0)
    throw std::logic_error("step_face: no exit side (ray does not leave the face)");

  const Vec2E& a = f.corners[exit_side];
  const Vec2E& b = f.corners[(exit_side + 1) % n];
  Vec2E e = sub2(b, a);
  Expression t = cross2(sub2(a, state.p0), e) / cross2(dir, e);
  Vec2E exit_point{state.p0.x + t * dir.x, state.p0.y + t * dir.y};

  const Isometry2E& tr = poly.transfer(state.face, exit_side);
  SideRef nb = poly.neighbor(state.face, exit_side);
  Vec2E q0 = tr.apply(exit_point);
  Vec2E rdir = tr.apply_vector(dir);
  GeodesicState next;
  next.face = nb.face;
  next.entry_side = nb.side;
  next.p0 = postprocess_point(q0, opt, poly.bits());
  next.p1 = postprocess_point({q0.x + rdir.x, q0.y + rdir.y}, opt, poly.bits());
  if (opt.mode == TraceMode::Rounded) {
    Vec2E nd = sub2(next.p1, next.p0);
    if (sign(nd.x) == Sign::Zero && sign(nd.y) == Sign::Zero)
      throw DegenerateRay("anchors collapsed after rounding");
  }
  next.traversed = state.traversed;  // caller accumulates
  StepExit ex;
  ex.exit_side = exit_side;
  ex.exit_point = exit_point;
  ex.next = std::move(next);
  out.exit = std::move(ex);
  return out;
}

// ---------------------------------------------------------------------------

Isometry2E isometry_power(const Isometry2E& m, BigInt k) {
  assert(!k.is_negative());
  Isometry2E result = Isometry2E::identity();
  Isometry2E base = m;
  while (!k.is_zero()) {
    if (k.bit(0)) {
      result = result.then(base);
      simp_iso(result);
    }
    k = k >> 1;
    if (!k.is_zero()) {
      base = base.then(base);
      simp_iso(base);
    }
  }
  return result;
}

Isometry2E isometry_power_rounded(const Isometry2E& m, const BigInt& k, uint64_t prec) {
  // Interval matrix power; log2 k squarings, each at most doubling the
  // relative error, so a guard of 2 log2 k keeps midpoints sharp.
  uint64_t guard = 2 * k.bit_length() + 32;
  uint64_t p = prec + guard;
  struct IvIso {
    Interval r00, r01, r10, r11, tx, ty;
  };
  auto mul_iso = [&](const IvIso& a, const IvIso& b) {  // apply a, then b
    IvIso o;
    o.r00 = Interval::add(Interval::mul(b.r00, a.r00, p), Interval::mul(b.r01, a.r10, p), p);
    o.r01 = Interval::add(Interval::mul(b.r00, a.r01, p), Interval::mul(b.r01, a.r11, p), p);
    o.r10 = Interval::add(Interval::mul(b.r10, a.r00, p), Interval::mul(b.r11, a.r10, p), p);
    o.r11 = Interval::add(Interval::mul(b.r10, a.r01, p), Interval::mul(b.r11, a.r11, p), p);
    o.tx = Interval::add(
        Interval::add(Interval::mul(b.r00, a.tx, p), Interval::mul(b.r01, a.ty, p), p), b.tx, p);
    o.ty = Interval::add(
        Interval::add(Interval::mul(b.r10, a.tx, p), Interval::mul(b.r11, a.ty, p), p), b.ty, p);
    return o;
  };
  IvIso base{enclose(m.r00, p), enclose(m.r01, p), enclose(m.r10, p),
             enclose(m.r11, p), enclose(m.tx, p),  enclose(m.ty, p)};
  IvIso acc{Interval(Dyadic(1)), Interval(Dyadic(0)), Interval(Dyadic(0)),
            Interval(Dyadic(1)), Interval(Dyadic(0)), Interval(Dyadic(0))};
  BigInt kk = k;
  while (!kk.is_zero()) {
    if (kk.bit(0)) acc = mul_iso(acc, base);
    kk = kk >> 1;
    if (!kk.is_zero()) base = mul_iso(base, base);
  }
  auto mid_expr = [&](const Interval& iv) {
    return Expression::from_dyadic(iv.mid().round_to_bits(prec + 16, 0));
  };
  Isometry2E out;
  out.r00 = mid_expr(acc.r00);
  out.r01 = mid_expr(acc.r01);
  out.r10 = mid_expr(acc.r10);
  out.r11 = mid_expr(acc.r11);
  out.tx = mid_expr(acc.tx);
  out.ty = mid_expr(acc.ty);
  return out;
}

// ---------------------------------------------------------------------------

SkipDecision skip_translation(const BlockGeometry& block, const Vec2E& ray_p0,
                              const Vec2E& ray_p1) {
  ScopedExprLimits lift(unlimited_limits());
  Vec2E d = sub2(ray_p1, ray_p0);
  Vec2E delta{block.advance.tx, block.advance.ty};
  SkipDecision out;
  out.exit_edge = -1;
  bool any = false;
  Expression det = cross2(d, delta);
  for (size_t m = 0; m < block.edges.size(); ++m) {
    if (sign(det) == Sign::Zero) continue;  // ray parallel to the advance
    const auto& [a, b] = block.edges[m];
    // Copy k of the edge spans a + k delta .. b + k delta. The ray passes
    // endpoint sweep line A at kappa_a and B at kappa_b; copies between are
    // crossed, so the escape is at the larger parameter.
    // Solve ray_p0 + tau d = q + kappa delta: kappa = cross(d, q - p0) / cross(delta, d).
    Expression kden = cross2(delta, d);
    Expression ka = cross2(d, sub2(a, ray_p0)) / kden;
    Expression kb = cross2(d, sub2(b, ray_p0)) / kden;
    Expression kappa = compare(ka, kb) == Ordering::Greater ? ka : kb;
    BigInt k = floor(kappa);
    if (k.is_negative()) k = BigInt(0);
    if (!any || k < out.last_wrap ||
        (k == out.last_wrap && static_cast<int>(m) < out.exit_edge)) {
      out.last_wrap = k;
      out.exit_edge = static_cast<int>(m);
      any = true;
    }
  }
  if (!any) {
    out.unbounded = true;
    out.exit_edge = -1;
  }
  return out;
}

namespace {

// Fixed point of the advance map (rotation case): (I - R) c = t.
Vec2E rotation_center(const Isometry2E& adv) {
  Expression one = Expression::integer(1);
  Expression a = one - adv.r00, b = zero() - adv.r01;
  Expression c = zero() - adv.r10, d2 = one - adv.r11;
  Expression det = a * d2 - b * c;
  Expression cx = (adv.tx * d2 - b * adv.ty) / det;
  Expression cy = (a * adv.ty - adv.tx * c) / det;
  return {simplified(cx), simplified(cy)};
}

Interval advance_angle(const Isometry2E& adv, uint64_t prec) {
  Vec2I u{Interval(Dyadic(1)), Interval(Dyadic(0))};
  Vec2I v{enclose(adv.r00, prec), enclose(adv.r10, prec)};
  return signed_angle(u, v, prec);
}

// Certified: does the forward ray intersect the copy-k image of [a, b] under
// rotation by k*theta about center? +1 yes, -1 no, 0 unresolved.
int certified_ray_hits_copy(const Vec2E& p0, const Vec2E& d, const Vec2E& a, const Vec2E& b,
                            const Vec2E& center, const Interval& theta, const BigInt& k,
                            uint64_t prec) {
  Interval kt = Interval::mul(Interval(Dyadic(k, 0)), theta, prec);
  Interval ct = cos_interval(kt, prec);
  Interval st = sin_interval(kt, prec);
  Vec2I c{enclose(center.x, prec), enclose(center.y, prec)};
  auto rot = [&](const Vec2E& q) {
    Vec2I qq{enclose(q.x, prec), enclose(q.y, prec)};
    Interval rx = Interval::sub(qq.x, c.x, prec);
    Interval ry = Interval::sub(qq.y, c.y, prec);
    Vec2I o;
    o.x = Interval::add(
        Interval::sub(Interval::mul(ct, rx, prec), Interval::mul(st, ry, prec), prec), c.x, prec);
    o.y = Interval::add(
        Interval::add(Interval::mul(st, rx, prec), Interval::mul(ct, ry, prec), prec), c.y, prec);
    return o;
  };
  Vec2I ak = rot(a), bk = rot(b);
  Vec2I pp{enclose(p0.x, prec), enclose(p0.y, prec)};
  Vec2I dd{enclose(d.x, prec), enclose(d.y, prec)};
  auto cross_iv = [&](const Vec2I& u, const Vec2I& v) {
    return Interval::sub(Interval::mul(u.x, v.y, prec), Interval::mul(u.y, v.x, prec), prec);
  };
  Vec2I ra{Interval::sub(ak.x, pp.x, prec), Interval::sub(ak.y, pp.y, prec)};
  Vec2I rb{Interval::sub(bk.x, pp.x, prec), Interval::sub(bk.y, pp.y, prec)};
  Interval sa = cross_iv(dd, ra);
  Interval sb = cross_iv(dd, rb);
  int ssa = sa.sign(), ssb = sb.sign();
  if (ssa == 2 || ssb == 2) return 0;
  if (ssa != 0 && ssb != 0 && ssa == ssb) return -1;  // same strict side
  Vec2I e{Interval::sub(bk.x, ak.x, prec), Interval::sub(bk.y, ak.y, prec)};
  Interval den = cross_iv(dd, e);
  if (den.contains_zero()) return 0;
  Interval tau = Interval::div(cross_iv(ra, e), den, prec);
  int ts = tau.sign();
  if (ts == 2) return 0;
  return ts >= 0 ? 1 : -1;
}

}  // namespace

SkipDecision skip_rotation(const BlockGeometry& block, const Vec2E& ray_p0,
                           const Vec2E& ray_p1, uint64_t bits) {
  ScopedExprLimits lift(unlimited_limits());
  Vec2E d = sub2(ray_p1, ray_p0);
  Vec2E center = rotation_center(block.advance);
  SkipDecision out;
  out.exit_edge = -1;
  bool any = false;

  auto verified = [&](const Vec2E& a, const Vec2E& b, const BigInt& k) {
    if (k.is_negative()) return false;
    for (uint64_t prec = bits + 64;; prec *= 2) {
      Interval theta = advance_angle(block.advance, prec);
      if (!theta.contains_zero()) {
        int r = certified_ray_hits_copy(ray_p0, d, a, b, center, theta, k, prec);
        if (r != 0) return r > 0;
      }
      if (prec > (uint64_t(1) << 20)) {
        if (k.bit_length() <= 24) {
          // Exact incidence via an exact power of the advance map.
          Isometry2E pow = isometry_power(block.advance, k);
          Vec2E ak = pow.apply(a), bk = pow.apply(b);
          Vec2E e = sub2(bk, ak);
          Sign sa = sign(cross2(d, sub2(ak, ray_p0)));
          Sign sb = sign(cross2(d, sub2(bk, ray_p0)));
          if (sa == sb && sa != Sign::Zero) return false;
          Expression den = cross2(d, e);
          if (sign(den) == Sign::Zero) return false;
          Expression tau = cross2(sub2(ak, ray_p0), e) / den;
          return sign(tau) != Sign::Negative;
        }
        throw PrecisionExhausted("skip_rotation: incidence unresolved");
      }
    }
  };

  for (size_t m = 0; m < block.edges.size(); ++m) {
    const auto& [a, b] = block.edges[m];
    std::vector<BigInt> candidates;
    for (const Vec2E* endpoint : {&a, &b}) {
      // Ray against the circle of copies of this endpoint.
      Vec2E rel = sub2(ray_p0, center);
      Vec2E ec = sub2(*endpoint, center);
      Expression qa = dot2(d, d);
      Expression qb = Expression::integer(2) * dot2(rel, d);
      Expression qc = dot2(rel, rel) - dot2(ec, ec);
      Expression disc = qb * qb - Expression::integer(4) * qa * qc;
      Sign ds = sign(disc);
      if (ds == Sign::Negative) continue;
      Expression sq = sqrt(disc);
      for (int pick = 0; pick < 2; ++pick) {
        Expression tau =
            ((zero() - qb) + (pick ? sq : (zero() - sq))) / (Expression::integer(2) * qa);
        if (sign(tau) == Sign::Negative) continue;
        Vec2E x{ray_p0.x + tau * d.x, ray_p0.y + tau * d.y};
        // kappa = signed angle (endpoint - c) -> (x - c), in advance units.
        for (uint64_t prec = bits + 32;; prec *= 2) {
          Interval theta = advance_angle(block.advance, prec);
          if (theta.contains_zero()) {
            if (prec > (uint64_t(1) << 22))
              throw PrecisionExhausted("skip_rotation: advance angle not certifiable");
            continue;
          }
          Vec2I u{enclose(ec.x, prec), enclose(ec.y, prec)};
          Vec2I xc{Interval::sub(enclose(x.x, prec), enclose(center.x, prec), prec),
                   Interval::sub(enclose(x.y, prec), enclose(center.y, prec), prec)};
          Interval ang = signed_angle(u, xc, prec);
          Interval two_pi = pi_interval(prec);
          two_pi = Interval(two_pi.lo.mul_pow2(1), two_pi.hi.mul_pow2(1));
          bool resolved = true;
          for (int shift = -1; shift <= 1; ++shift) {
            Interval shifted = ang;
            if (shift == 1) shifted = Interval::add(ang, two_pi, prec);
            if (shift == -1) shifted = Interval::sub(ang, two_pi, prec);
            Interval kappa = Interval::div(shifted, theta, prec);
            BigInt flo = kappa.lo.floor_scaled(0);
            BigInt fhi = kappa.hi.floor_scaled(0);
            if (fhi - flo > BigInt(1)) {
              resolved = false;
              break;
            }
            candidates.push_back(flo);
            candidates.push_back(fhi);
            candidates.push_back(fhi + BigInt(1));
          }
          if (resolved) break;
          if (prec > (uint64_t(1) << 22))
            throw PrecisionExhausted("skip_rotation: kappa floor not certifiable");
        }
      }
    }
    BigInt best(-1);
    for (const BigInt& cand : candidates) {
      BigInt k = cand;
      if (k.is_negative()) continue;
      if (k <= best) continue;
      if (!verified(a, b, k)) continue;
      int guard = 0;
      while (guard < 4 * static_cast<int>(block.edges.size()) + 8 &&
             verified(a, b, k + BigInt(1))) {
        k = k + BigInt(1);
        ++guard;
      }
      if (k > best) best = k;
    }
    if (best.is_negative()) continue;
    if (!any || best < out.last_wrap ||
        (best == out.last_wrap && static_cast<int>(m) < out.exit_edge)) {
      out.last_wrap = best;
      out.exit_edge = static_cast<int>(m);
      any = true;
    }
  }
  if (!any) out.unbounded = true;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BlockContext {
  std::vector<Crossing> period;
  Isometry2E phi;  // chart self-map of the block-start face, one period forward
  BlockGeometry geometry;
  GeodesicState entry;  // state at the block start (its chart is the frame)
};

BlockContext build_block(const Polyhedron& poly, const std::vector<Crossing>& prefix,
                         size_t i, const GeodesicState& entry_state) {
  BlockContext ctx;
  ctx.entry = entry_state;
  ctx.period.assign(prefix.begin() + static_cast<long>(i), prefix.end());
  Isometry2E w = Isometry2E::identity();
  Isometry2E phi = Isometry2E::identity();
  for (const Crossing& c : ctx.period) {
    const FaceChart& f = poly.face(c.face);
    const Vec2E& a = f.corners[c.exit_side];
    const Vec2E& b = f.corners[(c.exit_side + 1) % f.side_count()];
    ctx.geometry.edges.emplace_back(w.apply(a), w.apply(b));
    const Isometry2E& t = poly.transfer(c.face, c.exit_side);
    phi = phi.then(t);        // T_{i+m} o ... o T_i
    w = t.inverse().then(w);  // W_{m+1} = W_m o T^-1
    simp_iso(phi);
    simp_iso(w);
  }
  ctx.phi = phi;
  ctx.geometry.advance = w;  // W_p = Phi^-1: maps copy k to copy k+1
  ctx.geometry.is_translation =
      sign(ctx.geometry.advance.r10) == Sign::Zero &&
      sign(ctx.geometry.advance.r00 - Expression::integer(1)) == Sign::Zero;
  return ctx;
}

// Conservative count of whole wraps certainly completed within the remaining
// arc length: may undercount by a small constant, never overcounts. The
// residual is stepped explicitly, so undercounting only costs O(n) steps.
BigInt budget_wraps(const Polyhedron& poly, const BlockContext& ctx,
                    const Expression& remaining) {
  ScopedExprLimits lift(unlimited_limits());
  const Vec2E& p0 = ctx.entry.p0;
  Vec2E d = sub2(ctx.entry.p1, ctx.entry.p0);
  if (ctx.geometry.is_translation) {
    Vec2E delta{ctx.geometry.advance.tx, ctx.geometry.advance.ty};
    Expression step2 = dot2(delta, delta);
    if (sign(step2) != Sign::Positive) return BigInt(0);
    BigInt w = floor(remaining / sqrt(step2));
    if (w < BigInt(2)) return BigInt(0);
    return w - BigInt(2);
  }
  Expression dlen = sqrt(dot2(d, d));
  Vec2E endpoint{p0.x + remaining * d.x / dlen, p0.y + remaining * d.y / dlen};
  Vec2E center = rotation_center(ctx.geometry.advance);
  Vec2E u = sub2(p0, center);
  Vec2E v = sub2(endpoint, center);
  for (uint64_t prec = poly.bits() + 48; prec <= (uint64_t(1) << 22); prec *= 2) {
    Interval theta = advance_angle(ctx.geometry.advance, prec);
    if (theta.contains_zero()) continue;
    Vec2I ui{enclose(u.x, prec), enclose(u.y, prec)};
    Vec2I vi{enclose(v.x, prec), enclose(v.y, prec)};
    Interval ang = signed_angle(ui, vi, prec);
    Interval wraps = Interval::div(ang, theta, prec);
    if ((wraps.hi - wraps.lo).abs_less_than_pow2(4)) {
      BigInt w = wraps.lo.floor_scaled(0);
      if (w < BigInt(3)) return BigInt(0);
      return w - BigInt(3);
    }
  }
  return BigInt(0);
}

}  // namespace

TraceResult trace_segment(const Polyhedron& poly, const GeodesicState& start,
                          const Expression& d, const TraceOptions& opt) {
  // Exact mode is oracle instrumentation: expressions grow past any fixed
  // operator budget and are kept small by simplification instead.
  ScopedExprLimits scope(opt.mode == TraceMode::Exact ? unlimited_limits()
                                                      : poly.working_limits());
  TraceResult out;
  GeodesicState st = start;
  st.traversed = zero();
  std::map<std::pair<int, int>, size_t> seen;
  std::map<size_t, GeodesicState> entry_states;  // keyed by crossing index
  bool skipped = false;
  uint64_t steps = 0;

  auto push_crossing = [&](const Crossing& c) {
    if (skipped) out.residual.push_back(c);
    else out.prefix.push_back(c);
  };

  auto finish_inside = [&](const GeodesicState& cur) {
    Vec2E dir = sub2(cur.p1, cur.p0);
    Expression len = sqrt(dot2(dir, dir));
    Expression rest = d - cur.traversed;
    Vec2E endpoint{cur.p0.x + rest * dir.x / len, cur.p0.y + rest * dir.y / len};
    GeodesicState e = cur;
    e.p0 = postprocess_point(endpoint, opt, poly.bits());
    e.p1 = postprocess_point({endpoint.x + dir.x, endpoint.y + dir.y}, opt, poly.bits());
    e.traversed = d;
    out.endpoint = std::move(e);
  };

  while (true) {
    if (++steps > opt.max_steps)
      throw std::runtime_error("trace_segment: step budget exhausted");
    if (!skipped && opt.enable_skip && st.entry_side >= 0) {
      std::pair<int, int> key{st.face, st.entry_side};
      auto it = seen.find(key);
      if (it != seen.end()) {
        size_t i = it->second;
        BlockContext ctx = build_block(poly, out.prefix, i, entry_states.at(i));
        Expression remaining = d - ctx.entry.traversed;
        BigInt wraps = budget_wraps(poly, ctx, remaining);
        skipped = true;
        if (wraps.sign() > 0) {
          ScopedExprLimits lift(unlimited_limits());
          bool exact = opt.mode == TraceMode::Exact;
          Isometry2E phi_w = exact ? isometry_power(ctx.phi, wraps)
                                   : isometry_power_rounded(ctx.phi, wraps, poly.bits() + 48);
          // Jump the line by W wraps, then re-anchor p0 on the landing entry
          // point (the jumped image of p0 is on the line but W wraps behind).
          Vec2E jp0 = phi_w.apply(st.p0);
          Vec2E jp1 = phi_w.apply(st.p1);
          Vec2E jdir = sub2(jp1, jp0);
          const FaceChart& f = poly.face(st.face);
          const Vec2E& ea = f.corners[st.entry_side];
          const Vec2E& eb = f.corners[(st.entry_side + 1) % f.side_count()];
          Vec2E e = sub2(eb, ea);
          Expression den = cross2(jdir, e);
          bool landed = sign(den) != Sign::Zero;
          Expression landing_ok = zero();
          Vec2E entry_new = jp0;
          if (landed) {
            Expression t = cross2(sub2(ea, jp0), e) / den;
            entry_new = {jp0.x + t * jdir.x, jp0.y + t * jdir.y};
            // The landing must sit strictly inside the entry edge; the wrap
            // estimate is only an accelerator and may not corrupt the trace.
            Expression u_num = dot2(sub2(entry_new, ea), e);
            Expression u_den = dot2(e, e);
            landed = sign(u_num) == Sign::Positive &&
                     compare(u_num, u_den) == Ordering::Less;
          }
          if (landed) {
            // Arc between the current entry and the landing entry, measured
            // in the unfolded frame where the ray is one straight line.
            Isometry2E adv_w1 = exact
                ? isometry_power(ctx.geometry.advance, wraps + BigInt(1))
                : isometry_power_rounded(ctx.geometry.advance, wraps + BigInt(1),
                                         poly.bits() + 48);
            Vec2E q1 = ctx.geometry.advance.apply(st.p0);
            Vec2E qw = adv_w1.apply(entry_new);
            Expression skipped_len = sqrt(squared_distance(qw, q1));
            landing_ok = st.traversed + skipped_len;
            landed = compare(landing_ok, d) == Ordering::Less;
          }
          if (landed) {
            PeriodicBlockInfo info;
            info.crossings = ctx.period;
            info.reps = wraps;
            info.is_translation = ctx.geometry.is_translation;
            info.phi = ctx.phi;
            out.block = std::move(info);
            GeodesicState jumped = st;
            jumped.p0 = postprocess_point(entry_new, opt, poly.bits());
            jumped.p1 = postprocess_point({entry_new.x + jdir.x, entry_new.y + jdir.y},
                                          opt, poly.bits());
            jumped.traversed = postprocess_scalar(landing_ok, opt, poly.bits());
            st = std::move(jumped);
          }
        }
        continue;
      }
      seen.emplace(key, out.prefix.size());
      entry_states.emplace(out.prefix.size(), st);
    }

    StepOutcome so = step_face(poly, st, opt);
    if (so.vertex) {
      Expression dist = st.traversed + so.vertex->distance_from_p0;
      if (compare(dist, d) != Ordering::Greater) {
        VertexHitInfo hit;
        hit.vertex = so.vertex->vertex;
        hit.face = st.face;
        hit.distance = postprocess_scalar(dist, opt, poly.bits());
        out.vertex_hit = std::move(hit);
        return out;
      }
      finish_inside(st);
      return out;
    }
    const StepExit& ex = *so.exit;
    Expression arc = sqrt(squared_distance(ex.exit_point, st.p0));
    Expression at_exit = st.traversed + arc;
    if (compare(at_exit, d) != Ordering::Less) {
      finish_inside(st);
      return out;
    }
    Crossing c;
    c.face = st.face;
    c.entry_side = st.entry_side;
    c.exit_side = ex.exit_side;
    push_crossing(c);
    st = ex.next;
    st.traversed = postprocess_scalar(at_exit, opt, poly.bits());
  }
}

std::vector<TraceResult> trace_ray(const Polyhedron& poly, const GeodesicState& start,
                                   const Expression& total, const TraceOptions& opt) {
  ScopedExprLimits scope(opt.mode == TraceMode::Exact ? unlimited_limits()
                                                      : poly.working_limits());
  std::vector<TraceResult> chunks;
  Expression chunk_len = poly.min_feature() / Expression::integer(2);
  Expression remaining = total;
  GeodesicState st = start;
  while (sign(remaining) == Sign::Positive) {
    Expression d = compare(remaining, chunk_len) == Ordering::Less ? remaining : chunk_len;
    TraceResult r = trace_segment(poly, st, d, opt);
    bool hit = r.hit_vertex();
    bool have_end = r.endpoint.has_value();
    chunks.push_back(std::move(r));
    if (hit) break;
    if (!have_end) throw std::logic_error("trace_ray: segment ended without endpoint");
    st = *chunks.back().endpoint;
    st.traversed = zero();
    Expression next_remaining = remaining - d;
    remaining = opt.mode == TraceMode::Rounded
                    ? Expression::from_dyadic(approximate(next_remaining, poly.bits() + 16))
                    : simplified(next_remaining);
  }
  return chunks;
}

std::vector<Crossing> expand_crossings(const TraceResult& r) {
  std::vector<Crossing> out = r.prefix;
  if (r.block) {
    const PeriodicBlockInfo& b = *r.block;
    assert(b.reps.fits_int64());
    int64_t reps = b.reps.to_int64();
    for (int64_t i = 0; i < reps; ++i)
      out.insert(out.end(), b.crossings.begin(), b.crossings.end());
  }
  out.insert(out.end(), r.residual.begin(), r.residual.end());
  return out;
}

}  // namespace qg

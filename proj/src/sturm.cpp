#include "quasigeo/sturm.hpp"

#include <algorithm>
#include <cassert>
#include <optional>

namespace qg {

namespace {

// Polynomial with expression coefficients, ascending, trimmed so the leading
// coefficient has nonzero sign. Coefficient arithmetic goes through the
// expression kernel with lifted budget limits; point evaluations use interval
// arithmetic first and fall back to exact expression signs only on straddles.
struct Poly {
  std::vector<Expression> c;
  int degree() const { return static_cast<int>(c.size()) - 1; }
};

ExprLimits unlimited() {
  ExprLimits l;
  l.max_ops = UINT32_MAX;
  l.max_root_degree = UINT32_MAX;
  l.max_leaf_bits = UINT32_MAX;
  return l;
}

bool trim(Poly& p) {
  while (!p.c.empty()) {
    Sign s = sign(p.c.back());
    if (s == Sign::Undefined) return false;
    if (s != Sign::Zero) break;
    p.c.pop_back();
  }
  return true;
}

Poly derivative(const Poly& p) {
  Poly d;
  for (size_t i = 1; i < p.c.size(); ++i)
    d.c.push_back(p.c[i] * Expression::integer(static_cast<int64_t>(i)));
  return d;
}

Poly remainder(const Poly& a, const Poly& b) {
  Poly r = a;
  Expression lead_b = b.c.back();
  while (static_cast<int>(r.c.size()) - 1 >= b.degree()) {
    if (!trim(r)) return r;
    if (r.degree() < b.degree()) break;
    Expression factor = r.c.back() / lead_b;
    int shift = r.degree() - b.degree();
    for (int i = 0; i <= b.degree(); ++i)
      r.c[i + shift] = r.c[i + shift] - factor * b.c[i];
    r.c.pop_back();  // leading term cancels by construction
  }
  trim(r);
  return r;
}

// Exact quotient assuming b divides a.
Poly quotient(const Poly& a, const Poly& b) {
  Poly r = a;
  Poly q;
  q.c.assign(a.degree() - b.degree() + 1, Expression::integer(0));
  Expression lead_b = b.c.back();
  while (true) {
    if (!trim(r)) break;
    if (r.degree() < b.degree()) break;
    Expression factor = r.c.back() / lead_b;
    int shift = r.degree() - b.degree();
    q.c[shift] = factor;
    for (int i = 0; i <= b.degree(); ++i)
      r.c[i + shift] = r.c[i + shift] - factor * b.c[i];
    r.c.pop_back();
  }
  return q;
}

std::vector<Poly> sturm_chain(Poly p) {
  if (!trim(p) || p.c.empty()) return {};
  if (p.degree() == 0) return {p};
  std::vector<Poly> chain{p, derivative(p)};
  if (!trim(chain.back())) return {};
  while (chain.back().degree() >= 0 && chain.size() < p.c.size() + 2) {
    const Poly& a = chain[chain.size() - 2];
    const Poly& b = chain.back();
    if (b.degree() < 0) break;
    Poly r = remainder(a, b);
    if (r.c.empty()) break;
    for (Expression& e : r.c) e = Expression::integer(0) - e;
    chain.push_back(std::move(r));
  }
  // Divide the chain by its last element (a gcd of p, p') so the head is
  // squarefree; multiple roots would otherwise break the endpoint logic.
  const Poly& g = chain.back();
  if (g.degree() > 0) {
    std::vector<Poly> reduced;
    for (const Poly& q : chain) reduced.push_back(quotient(q, g));
    return reduced;
  }
  return chain;
}

// Point evaluator: interval Horner with escalation, exact sign as last resort.
struct PolyEvaluator {
  const Poly* p;
  std::vector<Interval> enc;
  uint64_t enc_prec = 0;
  uint64_t escalate_cap = 4096;

  explicit PolyEvaluator(const Poly& poly) : p(&poly) {}

  void ensure(uint64_t prec) {
    if (enc_prec >= prec) return;
    enc.clear();
    for (const Expression& e : p->c) enc.push_back(enclose(e, prec));
    enc_prec = prec;
  }

  int sign_at(const Dyadic& t) {
    if (p->c.empty()) return 0;
    for (uint64_t prec = 128; prec <= escalate_cap; prec *= 4) {
      ensure(prec);
      Interval tx(t);
      Interval acc = enc.back();
      for (size_t i = enc.size() - 1; i-- > 0;)
        acc = Interval::add(Interval::mul(acc, tx, prec), enc[i], prec);
      int s = acc.sign();
      if (s != 2) return s;
    }
    // Straddles at high precision: decide exactly.
    Expression tx = Expression::from_dyadic(t);
    Expression acc = p->c.back();
    for (size_t i = p->c.size() - 1; i-- > 0;) acc = acc * tx + p->c[i];
    Sign s = sign(acc);
    assert(s != Sign::Undefined);
    return static_cast<int>(s);
  }
};

int variations(const std::vector<int>& signs) {
  int v = 0;
  int prev = 0;
  for (int s : signs) {
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++v;
    prev = s;
  }
  return v;
}

struct ChainEvaluator {
  std::vector<PolyEvaluator> evals;

  explicit ChainEvaluator(const std::vector<Poly>& chain) {
    for (const Poly& p : chain) evals.emplace_back(p);
  }

  int variations_at(const Dyadic& t) {
    std::vector<int> signs;
    for (PolyEvaluator& pe : evals) signs.push_back(pe.sign_at(t));
    return variations(signs);
  }
};

int variations_at_inf(const std::vector<Poly>& chain, int dir) {
  std::vector<int> signs;
  for (const Poly& p : chain) {
    if (p.c.empty()) { signs.push_back(0); continue; }
    Sign lead = sign(p.c.back());
    assert(lead != Sign::Undefined);
    int s = static_cast<int>(lead);
    if (dir < 0 && p.degree() % 2 == 1) s = -s;
    signs.push_back(s);
  }
  return variations(signs);
}

// Power-of-two bound beyond all real roots (Cauchy bound on the head).
Dyadic root_bound(const Poly& p) {
  uint64_t prec = 64;
  Interval lead = enclose(p.c.back(), prec);
  while (lead.contains_zero()) {
    prec *= 2;
    lead = enclose(p.c.back(), prec);
  }
  Dyadic lead_lo_abs = lead.lo.sign() > 0 ? lead.lo : -lead.hi;  // min |lead|
  int64_t max_mag = 0;
  for (size_t i = 0; i + 1 < p.c.size(); ++i) {
    Interval ci = enclose(p.c[i], 64);
    Dyadic hi_abs(ci.hi.mant.abs(), ci.hi.exp);
    Dyadic lo_abs(ci.lo.mant.abs(), ci.lo.exp);
    Dyadic big = hi_abs.cmp(lo_abs) >= 0 ? hi_abs : lo_abs;
    if (!big.is_zero()) {
      int64_t mag = big.mag_exponent() - lead_lo_abs.mag_exponent() + 2;
      max_mag = std::max(max_mag, mag);
    }
  }
  return Dyadic(BigInt(1), max_mag + 2);
}

}  // namespace

int count_distinct_real_roots(std::span<const Expression> coeffs) {
  ScopedExprLimits lifted(unlimited());
  for (const Expression& c : coeffs)
    if (!defined(c)) return -1;
  Poly p;
  p.c.assign(coeffs.begin(), coeffs.end());
  if (!trim(p)) return -1;
  if (p.c.empty()) return -1;  // zero polynomial
  if (p.degree() == 0) return 0;
  std::vector<Poly> chain = sturm_chain(p);
  if (chain.empty()) return -1;
  return variations_at_inf(chain, -1) - variations_at_inf(chain, +1);
}

RootEnclosure enclose_real_root(unsigned j, std::span<const Expression> coeffs,
                                uint64_t prec) {
  ScopedExprLimits lifted(unlimited());
  RootEnclosure out;
  for (const Expression& c : coeffs) {
    if (!defined(c)) {
      out.is_undefined = true;
      return out;
    }
  }
  Poly p;
  p.c.assign(coeffs.begin(), coeffs.end());
  if (!trim(p) || p.c.empty() || p.degree() == 0) {
    out.is_undefined = true;
    return out;
  }
  std::vector<Poly> chain = sturm_chain(p);
  if (chain.empty()) {
    out.is_undefined = true;
    return out;
  }
  int total = variations_at_inf(chain, -1) - variations_at_inf(chain, +1);
  if (static_cast<int>(j) >= total) {
    out.is_undefined = true;
    return out;
  }
  ChainEvaluator ce(chain);
  PolyEvaluator head(chain[0]);
  int v_neg_inf = variations_at_inf(chain, -1);
  // roots_before(t) = number of distinct roots in (-inf, t].
  auto roots_before = [&](const Dyadic& t) { return v_neg_inf - ce.variations_at(t); };

  Dyadic bound = root_bound(chain[0]);
  Dyadic lo = -bound, hi = bound;
  int sign_lo = head.sign_at(lo);
  int sign_hi = head.sign_at(hi);
  // Phase 1: isolate via Sturm counts until the bracket holds exactly one
  // root and both endpoint signs are nonzero.
  while (true) {
    if (sign_lo != 0 && sign_hi != 0 &&
        roots_before(hi) - roots_before(lo) == 1)
      break;
    Dyadic mid = (lo + hi).mul_pow2(-1).round_to_bits(128, 0);
    if (mid.cmp(lo) <= 0 || mid.cmp(hi) >= 0) mid = (lo + hi).mul_pow2(-1);
    int sm = head.sign_at(mid);
    if (sm == 0) {
      int rank = roots_before(mid) - 1;
      if (rank == static_cast<int>(j)) {
        out.box = Interval(mid);
        return out;
      }
      if (rank > static_cast<int>(j)) { hi = mid; sign_hi = 0; }
      else { lo = mid; sign_lo = 0; }
      // Nudge off the root so endpoint signs become usable again.
      continue;
    }
    if (roots_before(mid) > static_cast<int>(j)) { hi = mid; sign_hi = sm; }
    else { lo = mid; sign_lo = sm; }
  }
  // Phase 2: contract the bracket to width 2^-prec. Plain bisection would
  // need O(prec) near-root sign tests, so once the bracket is small a
  // safeguarded Newton step doubles the accuracy per verified round.
  Poly deriv = derivative(chain[0]);
  PolyEvaluator deval(deriv);
  auto eval_iv = [&](PolyEvaluator& pe, const Dyadic& t, uint64_t p) {
    pe.ensure(p);
    Interval tx{t};
    Interval acc = pe.enc.back();
    for (size_t i = pe.enc.size() - 1; i-- > 0;)
      acc = Interval::add(Interval::mul(acc, tx, p), pe.enc[i], p);
    return acc;
  };
  auto width_small_enough = [&] {
    return (hi - lo).abs_less_than_pow2(-static_cast<int64_t>(prec));
  };
  auto bisect_once = [&]() -> std::optional<Dyadic> {
    Dyadic mid = (lo + hi).mul_pow2(-1).round_to_bits(prec + 64, 0);
    if (mid.cmp(lo) <= 0 || mid.cmp(hi) >= 0) mid = (lo + hi).mul_pow2(-1);
    int sm = head.sign_at(mid);
    if (sm == 0) return mid;  // exact root
    if (sm == sign_lo) lo = mid;
    else hi = mid;
    return std::nullopt;
  };
  int bisections = 0;
  while (!width_small_enough()) {
    // A few bisection steps to settle the bracket, then Newton.
    if (bisections < 8) {
      if (auto r = bisect_once()) { out.box = Interval(*r); return out; }
      ++bisections;
      continue;
    }
    uint64_t accuracy = static_cast<uint64_t>(
        std::max<int64_t>(8, -(hi - lo).mag_exponent()));
    // Target below the quadratic gain so the verification bracket still
    // contains the root despite the Newton error constant.
    uint64_t want = std::max<uint64_t>(accuracy + 4,
                                       2 * accuracy > 12 ? 2 * accuracy - 12 : accuracy + 4);
    want = std::min<uint64_t>(prec + 8, want);
    uint64_t p = 2 * want + 96;
    Dyadic x = (lo + hi).mul_pow2(-1).round_to_bits(p, 0);
    Interval fx = eval_iv(head, x, p);
    Interval dfx = eval_iv(deval, x, p);
    bool stepped = false;
    if (!dfx.contains_zero()) {
      Dyadic xn = (x - Interval::div(fx, dfx, p).mid()).round_to_bits(p + 32, 0);
      Dyadic r(BigInt(1), -static_cast<int64_t>(want));
      Dyadic cand_lo = xn - r, cand_hi = xn + r;
      if (cand_lo.cmp(lo) > 0 && cand_hi.cmp(hi) < 0) {
        head.escalate_cap = 4 * want + 512;
        int sl = head.sign_at(cand_lo);
        int sh = head.sign_at(cand_hi);
        if (sl == 0) { out.box = Interval(cand_lo); return out; }
        if (sh == 0) { out.box = Interval(cand_hi); return out; }
        if (sl == sign_lo && sh == sign_hi) {
          lo = cand_lo;
          hi = cand_hi;
          stepped = true;
        } else if (sl == sign_hi) {
          hi = cand_lo;
          stepped = true;
        } else if (sh == sign_lo) {
          lo = cand_hi;
          stepped = true;
        }
      }
    }
    if (!stepped) {
      if (auto r = bisect_once()) { out.box = Interval(*r); return out; }
    }
  }
  out.box = Interval(lo, hi);
  return out;
}

}  // namespace qg

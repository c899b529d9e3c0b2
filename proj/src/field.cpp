#include "quasigeo/field.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace qg {

FieldNum FieldContext::from_rational(const Rational& r) const {
  FieldNum n;
  n.version = version_;
  if (!r.is_zero()) n.terms.emplace(Mono{}, r);
  return n;
}

void FieldContext::add_term(FieldNum& out, Mono m, const Rational& coeff) const {
  if (coeff.is_zero()) return;
  auto it = out.terms.find(m);
  if (it == out.terms.end()) {
    out.terms.emplace(std::move(m), coeff);
  } else {
    it->second = it->second + coeff;
    if (it->second.is_zero()) out.terms.erase(it);
  }
}

void FieldContext::normalize(FieldNum& a) const {
  if (a.version == version_) return;
  FieldNum out;
  out.version = version_;
  for (auto& [mono, coeff] : a.terms) {
    // Expand retired atoms; gen ids are stable.
    Rational c = coeff;
    std::map<int32_t, uint32_t> exps;
    std::vector<int32_t> gens;
    std::vector<std::pair<int32_t, uint32_t>> work;
    for (int32_t id : mono) {
      if (id >= kGenBase) gens.push_back(id);
      else work.emplace_back(id, 1);
    }
    while (!work.empty()) {
      auto [id, e] = work.back();
      work.pop_back();
      const Atom& at = atoms_[id];
      if (!at.retired) {
        exps[id] += e;
        continue;
      }
      // sqrt(a)^e = square_out^e * prod sqrt(part)^(part_exp * e)
      for (unsigned i = 0; i < e; ++i) c = c * at.square_out;
      for (auto& [pid, pe] : at.parts) work.emplace_back(pid, pe * e);
    }
    Mono m = gens;
    for (auto& [id, e] : exps) {
      if (e % 2) m.push_back(id);
      // Even part folds into the coefficient.
      for (uint32_t i = 0; i < e / 2; ++i) c = c * Rational(atoms_[id].value);
    }
    std::sort(m.begin(), m.end());
    add_term(out, std::move(m), c);
  }
  a = std::move(out);
}

FieldNum FieldContext::neg(const FieldNum& a) const {
  FieldNum out = a;
  for (auto& [m, c] : out.terms) c = -c;
  return out;
}

FieldNum FieldContext::add(FieldNum a, FieldNum b) {
  check_poison();
  normalize(a);
  normalize(b);
  FieldNum out = std::move(a);
  for (auto& [m, c] : b.terms) add_term(out, m, c);
  return out;
}

FieldNum FieldContext::sub(FieldNum a, FieldNum b) { return add(std::move(a), neg(b)); }

void FieldContext::mul_term(FieldNum& out, const Mono& ma, const Rational& ca,
                            const Mono& mb, const Rational& cb) const {
  Rational c = ca * cb;
  // Merge the two sorted monomials; duplicated factors square out.
  Mono m;
  std::vector<int32_t> dup_atoms, dup_gens;
  size_t i = 0, j = 0;
  while (i < ma.size() || j < mb.size()) {
    int32_t x;
    if (i < ma.size() && j < mb.size() && ma[i] == mb[j]) {
      x = ma[i];
      ++i; ++j;
      if (x >= kGenBase) dup_gens.push_back(x);
      else dup_atoms.push_back(x);
      continue;
    }
    if (j >= mb.size() || (i < ma.size() && ma[i] < mb[j])) { x = ma[i]; ++i; }
    else { x = mb[j]; ++j; }
    m.push_back(x);
  }
  for (int32_t id : dup_atoms) c = c * Rational(atoms_[id].value);
  if (dup_gens.empty()) {
    add_term(out, std::move(m), c);
    return;
  }
  // Each duplicated generator multiplies in its level-1 value.
  FieldNum acc;
  acc.version = version_;
  acc.terms.emplace(std::move(m), c);
  for (int32_t gid : dup_gens) {
    const FieldNum& gval = gens_[gid - kGenBase].value;
    FieldNum next;
    next.version = version_;
    for (auto& [m1, c1] : acc.terms)
      for (auto& [m2, c2] : gval.terms) mul_term(next, m1, c1, m2, c2);
    acc = std::move(next);
  }
  for (auto& [mm, cc] : acc.terms) add_term(out, mm, cc);
}

FieldNum FieldContext::mul(FieldNum a, FieldNum b) {
  check_poison();
  normalize(a);
  normalize(b);
  FieldNum out;
  out.version = version_;
  for (auto& [ma, ca] : a.terms)
    for (auto& [mb, cb] : b.terms) mul_term(out, ma, ca, mb, cb);
  return out;
}

FieldNum FieldContext::inverse(FieldNum a) {
  check_poison();
  normalize(a);
  if (a.is_zero()) throw std::domain_error("FieldContext: inverse of zero");
  // Find any radical factor present; conjugate it away and recurse.
  int32_t gen_id = -1;
  for (auto& [m, c] : a.terms)
    if (!m.empty()) { gen_id = m.back(); break; }  // prefer gens (sorted last)
  if (gen_id < 0) {
    return from_rational(Rational(1) / a.terms.begin()->second);
  }
  // a = A + sqrt(g) * B with A, B free of sqrt(g).
  FieldNum A, B;
  A.version = B.version = version_;
  for (auto& [m, c] : a.terms) {
    auto it = std::find(m.begin(), m.end(), gen_id);
    if (it == m.end()) {
      A.terms.emplace(m, c);
    } else {
      Mono stripped = m;
      stripped.erase(std::find(stripped.begin(), stripped.end(), gen_id));
      B.terms.emplace(std::move(stripped), c);
    }
  }
  // inverse = (A - sqrt(g) B) / (A^2 - g B^2); the norm is nonzero for a != 0.
  FieldNum gval;
  if (gen_id >= kGenBase) gval = gens_[gen_id - kGenBase].value;
  else gval = from_rational(Rational(atoms_[gen_id].value));
  FieldNum norm = sub(mul(A, A), mul(gval, mul(B, B)));
  FieldNum conj = sub(A, [&] {
    FieldNum sb;
    sb.version = version_;
    for (auto& [m, c] : B.terms) {
      Mono mm = m;
      mm.insert(std::lower_bound(mm.begin(), mm.end(), gen_id), gen_id);
      sb.terms.emplace(std::move(mm), c);
    }
    return sb;
  }());
  return mul(conj, inverse(norm));
}

FieldNum FieldContext::div(FieldNum a, FieldNum b) {
  return mul(std::move(a), inverse(std::move(b)));
}

int32_t FieldContext::new_atom(BigInt v) {
  // Extract maximal perfect power so the stored atom is power-free.
  // sqrt contributions from the extraction are handled by the caller through
  // the returned exponent in decompose().
  atoms_.push_back(Atom{std::move(v), false, {}, Rational(1)});
  return static_cast<int32_t>(atoms_.size() - 1);
}

std::map<int32_t, uint32_t> FieldContext::decompose(BigInt v) {
  assert(v.sign() > 0);
  std::map<int32_t, uint32_t> out;
  if (v.is_one()) return out;
  std::vector<std::pair<BigInt, uint32_t>> work{{std::move(v), 1}};
  while (!work.empty()) {
    auto [val, mult] = work.back();
    work.pop_back();
    if (val.is_one()) continue;
  restart:
    bool matched = false;
    for (size_t i = 0; i < atoms_.size(); ++i) {
      if (atoms_[i].retired) continue;
      BigInt g = BigInt::gcd(val, atoms_[i].value);
      if (g.is_one()) continue;
      if (g == atoms_[i].value) {
        // Atom divides val; divide out all powers.
        uint32_t e = 0;
        BigInt q, r;
        while (true) {
          BigInt::divmod_trunc(val, atoms_[i].value, q, r);
          if (!r.is_zero()) break;
          val = q;
          ++e;
        }
        out[static_cast<int32_t>(i)] += e * mult;
        if (val.is_one()) { matched = true; break; }
        goto restart;
      }
      // Atom shares a proper factor: retire and split it, then retry.
      if (!gens_.empty()) {
        poisoned_ = true;
        throw FieldPoisoned{};
      }
      BigInt rest = atoms_[i].value.floor_div(g);
      Atom& at = atoms_[i];
      at.retired = true;
      ++version_;
      // Record the split; the parts are decomposed recursively (the atom is
      // retired, so decompose() cannot revisit it).
      std::map<int32_t, uint32_t> pg = decompose(g);
      std::map<int32_t, uint32_t> pr = decompose(rest);
      std::map<int32_t, uint32_t> merged = pg;
      for (auto& [id, e] : pr) merged[id] += e;
      for (auto& [id, e] : merged) atoms_[i].parts.emplace_back(id, e);
      goto restart;
    }
    if (matched) continue;
    if (val.is_one()) continue;
    // Coprime to every live atom: extract the maximal perfect power and add.
    // Testing prime exponents and recursing on the base covers composite
    // exponents ((u^2)^3 falls out as two extractions).
    static const unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31,
                                       37, 41, 43, 47, 53, 59, 61};
    uint32_t power = 1;
    BigInt base = val;
    bool changed = true;
    while (changed) {
      changed = false;
      uint64_t bits = base.bit_length();
      for (unsigned j : kPrimes) {
        if (j > bits) break;
        bool exact = false;
        BigInt r = BigInt::iroot(base, j, &exact);
        if (exact && !r.is_one()) {
          base = r;
          power *= j;
          changed = true;
          break;
        }
      }
    }
    if (base.is_one()) continue;
    if (!gens_.empty()) {
      poisoned_ = true;
      throw FieldPoisoned{};
    }
    int32_t id = new_atom(base);
    out[id] += power * mult;
  }
  return out;
}

std::optional<FieldNum> FieldContext::sqrt_nonneg(FieldNum a) {
  check_poison();
  normalize(a);
  if (a.is_zero()) return from_rational(Rational(0));
  Rational rat;
  if (is_rational(a, &rat)) {
    // sqrt(p/q) = sqrt(p*q) / q.
    if (rat.sign() < 0) throw std::domain_error("sqrt_nonneg: negative");
    BigInt radicand = rat.num * rat.den;
    auto exps = decompose(radicand);
    if (atoms_.size() > kMaxAtoms) return std::nullopt;
    // decompose can retire ids it already emitted (a later radicand share
    // splits them); expand until every id is live.
    std::map<int32_t, uint32_t> flat;
    Rational outside(BigInt(1), rat.den);
    {
      std::vector<std::pair<int32_t, uint32_t>> work(exps.begin(), exps.end());
      while (!work.empty()) {
        auto [id, e] = work.back();
        work.pop_back();
        const Atom& at = atoms_[id];
        if (!at.retired) {
          flat[id] += e;
          continue;
        }
        for (uint32_t i = 0; i < e; ++i) outside = outside * at.square_out;
        for (auto& [pid, pe] : at.parts) work.emplace_back(pid, pe * e);
      }
    }
    Mono m;
    for (auto& [id, e] : flat) {
      for (uint32_t i = 0; i < e / 2; ++i) outside = outside * Rational(atoms_[id].value);
      if (e % 2) m.push_back(id);
    }
    std::sort(m.begin(), m.end());
    FieldNum out;
    out.version = version_;
    out.terms.emplace(std::move(m), outside);
    return out;
  }
  // Irrational operand: only level-1 elements may gain a level-2 generator.
  for (auto& [m, c] : a.terms)
    for (int32_t id : m)
      if (id >= kGenBase) return std::nullopt;  // would nest beyond level 2
  // Perfect square in level 1?
  SquareTest st = try_sqrt_level1(a);
  if (st.conclusive && st.is_square) return st.root;
  if (!st.conclusive) return std::nullopt;
  // Try to express through an existing generator: a = (g * s^2) for rational s.
  for (size_t j = 0; j < gens_.size(); ++j) {
    FieldNum q = div(a, gens_[j].value);
    Rational qr;
    if (is_rational(q, &qr) && qr.sign() > 0) {
      // sqrt(a) = sqrt(qr) * sqrt(g). sqrt(qr) must itself be rational to
      // avoid mixing atom factors into the gen monomial basis; accept the
      // general case by multiplying monomials.
      auto sq = sqrt_nonneg(from_rational(qr));
      if (!sq) return std::nullopt;
      FieldNum gmono;
      gmono.version = version_;
      gmono.terms.emplace(Mono{static_cast<int32_t>(kGenBase + j)}, Rational(1));
      return mul(*sq, gmono);
    }
    SquareTest prod = try_sqrt_level1(mul(a, gens_[j].value));
    if (!prod.conclusive) return std::nullopt;
    if (prod.is_square) {
      // a * g = y^2 => sqrt(a) = y * sqrt(g) / g.
      FieldNum gmono;
      gmono.version = version_;
      gmono.terms.emplace(Mono{static_cast<int32_t>(kGenBase + j)}, Rational(1));
      return div(mul(prod.root, gmono), gens_[j].value);
    }
  }
  if (gens_.size() >= kMaxGens) return std::nullopt;
  // Verified new generator: pairwise and subset products checked non-square.
  size_t ng = gens_.size();
  for (uint32_t mask = 1; mask < (1u << ng); ++mask) {
    FieldNum prod = a;
    for (size_t j = 0; j < ng; ++j)
      if (mask & (1u << j)) prod = mul(prod, gens_[j].value);
    SquareTest st2 = try_sqrt_level1(prod);
    if (!st2.conclusive) return std::nullopt;
    if (st2.is_square) return std::nullopt;  // dependent but unexpressible; bail
  }
  gens_.push_back(Gen{a});
  FieldNum out;
  out.version = version_;
  out.terms.emplace(Mono{static_cast<int32_t>(kGenBase + gens_.size() - 1)}, Rational(1));
  return out;
}

FieldContext::SquareTest FieldContext::try_sqrt_level1(const FieldNum& x) {
  SquareTest res;
  // Collect distinct atoms in x.
  std::vector<int32_t> atoms;
  for (auto& [m, c] : x.terms)
    for (int32_t id : m) {
      if (id >= kGenBase) return res;  // not level 1
      if (std::find(atoms.begin(), atoms.end(), id) == atoms.end()) atoms.push_back(id);
    }
  auto rational_sqrt = [&](const Rational& r, Rational* root) {
    if (r.sign() < 0) return false;
    bool en = false, ed = false;
    BigInt sn = BigInt::isqrt(r.num, &en);
    BigInt sd = BigInt::isqrt(r.den, &ed);
    if (!en || !ed) return false;
    *root = Rational(sn, sd);
    return true;
  };
  if (atoms.empty()) {
    Rational r = x.terms.empty() ? Rational(0) : x.terms.begin()->second;
    Rational root;
    res.conclusive = true;
    if (rational_sqrt(r, &root)) {
      res.is_square = true;
      res.root = from_rational(root);
    }
    return res;
  }
  if (atoms.size() > 1) return res;  // inconclusive
  // x = A + B*sqrt(m); candidate root y = c + d*sqrt(m).
  int32_t aid = atoms[0];
  Rational A(0), B(0);
  for (auto& [m, c] : x.terms) {
    if (m.empty()) A = c;
    else B = c;
  }
  Rational mval(atoms_[aid].value);
  res.conclusive = true;
  if (B.is_zero()) {
    // Either y rational (A square) or y = d*sqrt(m) (A/m square).
    Rational root;
    if (rational_sqrt(A, &root)) {
      res.is_square = true;
      res.root = from_rational(root);
      return res;
    }
    if (rational_sqrt(A / mval, &root)) {
      res.is_square = true;
      FieldNum r;
      r.version = version_;
      r.terms.emplace(Mono{aid}, root);
      return res.root = std::move(r), res;
    }
    return res;
  }
  // c^2 + m d^2 = A, 2cd = B  =>  c^2 = (A +- sqrt(A^2 - m B^2)) / 2.
  Rational disc = A * A - mval * B * B;
  Rational sd;
  if (!rational_sqrt(disc, &sd)) return res;  // conclusive: not a square
  for (int pick = 0; pick < 2; ++pick) {
    Rational c2 = (A + (pick ? sd : -sd)) / Rational(2);
    Rational c;
    if (!rational_sqrt(c2, &c) || c.is_zero()) continue;
    for (int sgn = 0; sgn < 2; ++sgn) {
      Rational cc = sgn ? -c : c;
      Rational d = B / (Rational(2) * cc);
      // Verify (cc + d sqrt(m))^2 == x.
      if (cc * cc + mval * d * d == A && Rational(2) * cc * d == B) {
        FieldNum root;
        root.version = version_;
        if (!cc.is_zero()) root.terms.emplace(Mono{}, cc);
        if (!d.is_zero()) root.terms.emplace(Mono{aid}, d);
        // Canonical nonnegative root.
        if (sign(root) < 0) root = neg(root);
        res.is_square = true;
        res.root = std::move(root);
        return res;
      }
    }
  }
  return res;
}

Interval FieldContext::mono_approx(const Mono& m, uint64_t prec) {
  Interval acc{Dyadic(1)};
  for (int32_t id : m) {
    Interval f;
    if (id >= kGenBase) {
      Interval g = approx(gens_[id - kGenBase].value, prec + 8);
      if (g.lo.sign() < 0) g.lo = Dyadic(0);  // generator is positive
      f = Interval::root(g, 2, prec + 4);
    } else {
      Interval v{Dyadic(atoms_[id].value, 0)};
      f = Interval::root(v, 2, prec + 4);
    }
    acc = Interval::mul(acc, f, prec + 4);
  }
  return acc;
}

Interval FieldContext::approx(FieldNum a, uint64_t prec) {
  check_poison();
  normalize(a);
  Interval acc{Dyadic(0)};
  for (auto& [m, c] : a.terms) {
    Interval coeff(c.approx_dir(prec + 8, -1), c.approx_dir(prec + 8, +1));
    acc = Interval::add(acc, Interval::mul(coeff, mono_approx(m, prec + 8), prec + 4), prec + 4);
  }
  return acc;
}

int FieldContext::sign(FieldNum a) {
  check_poison();
  normalize(a);
  if (a.is_zero()) return 0;
  if (a.terms.size() == 1 && a.terms.begin()->first.empty())
    return a.terms.begin()->second.sign();
  // Nonzero by the independence invariant; refine until the sign resolves.
  for (uint64_t prec = 64;; prec *= 2) {
    Interval iv = approx(a, prec);
    int s = iv.sign();
    if (s != 2) return s;
    if (prec > (1u << 24))
      throw std::runtime_error("FieldContext::sign: failed to resolve");
  }
}

bool FieldContext::is_rational(FieldNum a, Rational* out) {
  check_poison();
  normalize(a);
  if (a.is_zero()) {
    if (out) *out = Rational(0);
    return true;
  }
  if (a.terms.size() == 1 && a.terms.begin()->first.empty()) {
    if (out) *out = a.terms.begin()->second;
    return true;
  }
  return false;
}

}  // namespace qg

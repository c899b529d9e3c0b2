#include "quasigeo/dyadic.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace qg {

void Dyadic::normalize() {
  if (mant.is_zero()) { exp = 0; return; }
  uint64_t tz = mant.trailing_zero_bits();
  if (tz) {
    mant = mant >> tz;  // exact: sign-safe since low bits are zero
    exp += static_cast<int64_t>(tz);
  }
}

Dyadic operator+(const Dyadic& a, const Dyadic& b) {
  if (a.mant.is_zero()) return b;
  if (b.mant.is_zero()) return a;
  int64_t e = std::min(a.exp, b.exp);
  BigInt ma = a.mant << static_cast<uint64_t>(a.exp - e);
  BigInt mb = b.mant << static_cast<uint64_t>(b.exp - e);
  return Dyadic(ma + mb, e);
}

Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }

Dyadic operator*(const Dyadic& a, const Dyadic& b) {
  return Dyadic(a.mant * b.mant, a.exp + b.exp);
}

int Dyadic::cmp(const Dyadic& b) const {
  int sa = mant.sign(), sb = b.mant.sign();
  if (sa != sb) return sa < sb ? -1 : 1;
  if (sa == 0) return 0;
  Dyadic d = *this - b;
  return d.mant.sign();
}

BigInt Dyadic::floor_scaled(int64_t k) const {
  int64_t e = exp + k;
  if (e >= 0) return mant << static_cast<uint64_t>(e);
  return mant >> static_cast<uint64_t>(-e);
}

BigInt Dyadic::ceil_scaled(int64_t k) const {
  BigInt f = floor_scaled(k);
  Dyadic back(f, -k);
  if (back.cmp(*this) == 0) return f;
  return f + BigInt(1);
}

Dyadic Dyadic::round_to_bits(uint64_t bits, int dir) const {
  if (mant.is_zero()) return *this;
  uint64_t have = mant.bit_length();
  if (have <= bits) return *this;
  uint64_t drop = have - bits;
  BigInt floored = mant >> drop;  // toward -inf
  Dyadic lo(floored, exp + static_cast<int64_t>(drop));
  if (dir < 0) return lo;
  Dyadic hi(floored + BigInt(1), exp + static_cast<int64_t>(drop));
  bool exact = lo.cmp(*this) == 0;
  if (exact) return lo;
  if (dir > 0) return hi;
  // Round to nearest: compare against midpoint.
  Dyadic midpoint(floored * BigInt(2) + BigInt(1), exp + static_cast<int64_t>(drop) - 1);
  return cmp(midpoint) < 0 ? lo : hi;
}

Dyadic Dyadic::round_at(int64_t frac_bits, int dir) const {
  if (mant.is_zero()) return *this;
  if (exp >= -frac_bits) return *this;  // already on the grid
  BigInt f = floor_scaled(frac_bits);
  Dyadic lo(f, -frac_bits);
  if (dir < 0) return lo;
  bool exact = lo.cmp(*this) == 0;
  if (exact) return lo;
  Dyadic hi(f + BigInt(1), -frac_bits);
  if (dir > 0) return hi;
  Dyadic midpoint(f * BigInt(2) + BigInt(1), -frac_bits - 1);
  return cmp(midpoint) < 0 ? lo : hi;
}

bool Dyadic::abs_less_than_pow2(int64_t k) const {
  if (mant.is_zero()) return true;
  Dyadic a(mant.abs(), exp);
  return a.cmp(Dyadic(BigInt(1), k)) < 0;
}

int64_t Dyadic::mag_exponent() const {
  assert(!mant.is_zero());
  return static_cast<int64_t>(mant.bit_length()) + exp;
}

double Dyadic::to_double() const {
  int64_t e2 = 0;
  double m = mant.to_double_with_exp(e2);
  int64_t e = e2 + exp;
  if (e > 4000) return m < 0 ? -HUGE_VAL : (m > 0 ? HUGE_VAL : 0.0);
  if (e < -4000) return m < 0 ? -0.0 : 0.0;
  return std::ldexp(m, static_cast<int>(e));
}

std::string Dyadic::to_string() const {
  return mant.to_decimal() + "*2^" + std::to_string(exp);
}

Rational::Rational(BigInt n, BigInt d) : num(std::move(n)), den(std::move(d)) {
  if (den.is_zero()) throw std::domain_error("Rational: zero denominator");
  if (den.is_negative()) { num = -num; den = -den; }
  reduce();
}

Rational Rational::from_dyadic(const Dyadic& d) {
  if (d.exp >= 0) return Rational(d.mant << static_cast<uint64_t>(d.exp));
  Rational r;
  r.num = d.mant;
  r.den = BigInt::power_of_two(static_cast<uint64_t>(-d.exp));
  return r;  // already reduced: dyadic mantissa is odd after normalize()
}

void Rational::reduce() {
  if (num.is_zero()) { den = BigInt(1); return; }
  // Power-of-two denominators are pervasive (dyadic-origin values); reduce
  // them by shifting instead of running Euclid on huge operands.
  if (den.bit_length() == den.trailing_zero_bits() + 1) {
    uint64_t k = std::min(num.trailing_zero_bits(), den.trailing_zero_bits());
    if (k) {
      num = num >> k;
      den = den >> k;
    }
    return;
  }
  BigInt g = BigInt::gcd(num, den);
  if (!g.is_one()) {
    num = num.floor_div(g);
    den = den.floor_div(g);
  }
}

Rational Rational::operator-() const {
  Rational r = *this;
  r.num = -r.num;
  return r;
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
}

Rational operator-(const Rational& a, const Rational& b) {
  return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num * b.num, a.den * b.den);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num.is_zero()) throw std::domain_error("Rational: division by zero");
  return Rational(a.num * b.den, a.den * b.num);
}

int Rational::cmp(const Rational& b) const {
  return (num * b.den - b.num * den).sign();
}

BigInt Rational::floor() const { return num.floor_div(den); }

Dyadic Rational::approx(int64_t prec) const {
  // floor(v * 2^prec) or that plus one, whichever is nearer.
  BigInt scaled_num = prec >= 0 ? (num << static_cast<uint64_t>(prec)) : num;
  BigInt scaled_den = prec >= 0 ? den : (den << static_cast<uint64_t>(-prec));
  BigInt q = scaled_num.floor_div(scaled_den);
  BigInt rem = scaled_num - q * scaled_den;
  if ((rem + rem).cmp(scaled_den) >= 0) q = q + BigInt(1);
  return Dyadic(q, -prec);
}

Dyadic Rational::approx_dir(int64_t prec, int dir) const {
  BigInt scaled_num = prec >= 0 ? (num << static_cast<uint64_t>(prec)) : num;
  BigInt scaled_den = prec >= 0 ? den : (den << static_cast<uint64_t>(-prec));
  BigInt q = scaled_num.floor_div(scaled_den);
  if (dir > 0 && (q * scaled_den) != scaled_num) q = q + BigInt(1);
  return Dyadic(q, -prec);
}

double Rational::to_double() const {
  // Scale into int64 range first for accuracy.
  Dyadic d = approx(64);
  return d.to_double();
}

std::string Rational::to_string() const {
  if (den.is_one()) return num.to_decimal();
  return num.to_decimal() + "/" + den.to_decimal();
}

int Interval::sign() const {
  if (lo.sign() > 0) return 1;
  if (hi.sign() < 0) return -1;
  if (lo.sign() == 0 && hi.sign() == 0) return 0;
  return 2;
}

Interval Interval::round(uint64_t prec) const {
  return Interval(lo.round_to_bits(prec, -1), hi.round_to_bits(prec, +1));
}

Interval Interval::add(const Interval& a, const Interval& b, uint64_t prec) {
  return Interval(a.lo + b.lo, a.hi + b.hi).round(prec);
}

Interval Interval::sub(const Interval& a, const Interval& b, uint64_t prec) {
  return Interval(a.lo - b.hi, a.hi - b.lo).round(prec);
}

Interval Interval::mul(const Interval& a, const Interval& b, uint64_t prec) {
  Dyadic c1 = a.lo * b.lo, c2 = a.lo * b.hi, c3 = a.hi * b.lo, c4 = a.hi * b.hi;
  Dyadic lo = c1, hi = c1;
  for (const Dyadic* c : {&c2, &c3, &c4}) {
    if (c->cmp(lo) < 0) lo = *c;
    if (c->cmp(hi) > 0) hi = *c;
  }
  return Interval(lo, hi).round(prec);
}

Interval Interval::inv(const Interval& a, uint64_t prec) {
  if (a.contains_zero()) throw std::domain_error("Interval::inv: contains zero");
  Dyadic one(1);
  return Interval(div_approx(one, a.hi, prec, -1), div_approx(one, a.lo, prec, +1));
}

Interval Interval::div(const Interval& a, const Interval& b, uint64_t prec) {
  return mul(a, inv(b, prec + 4), prec);
}

Interval Interval::root(const Interval& a, unsigned d, uint64_t prec) {
  Dyadic lo = a.lo, hi = a.hi;
  if (d % 2 == 0) {
    if (hi.sign() < 0) throw std::domain_error("Interval::root: negative range");
    if (lo.sign() < 0) lo = Dyadic(0);
    return Interval(root_approx(lo, d, prec, -1), root_approx(hi, d, prec, +1));
  }
  auto signed_root = [&](const Dyadic& v, int dir) {
    if (v.sign() >= 0) return root_approx(v, d, prec, dir);
    return -root_approx(-v, d, prec, -dir);
  };
  return Interval(signed_root(lo, -1), signed_root(hi, +1));
}

Interval Interval::pow(const Interval& a, unsigned k, uint64_t prec) {
  Interval r{Dyadic(1)};
  Interval base = a;
  while (k) {
    if (k & 1) r = mul(r, base, prec);
    k >>= 1;
    if (k) base = mul(base, base, prec);
  }
  return r;
}

std::string Interval::to_string() const {
  return "[" + std::to_string(lo.to_double()) + ", " + std::to_string(hi.to_double()) + "]";
}

Dyadic div_approx(const Dyadic& a, const Dyadic& b, uint64_t prec, int dir) {
  if (b.is_zero()) throw std::domain_error("div_approx: division by zero");
  if (a.is_zero()) return Dyadic(0);
  // a/b = (ma/mb) * 2^(ea-eb); compute ma/mb to prec significant-ish bits.
  uint64_t la = a.mant.bit_length(), lb = b.mant.bit_length();
  int64_t shift = static_cast<int64_t>(prec + lb) - static_cast<int64_t>(la) + 2;
  if (shift < 0) shift = 0;
  BigInt scaled = a.mant << static_cast<uint64_t>(shift);
  BigInt q = scaled.floor_div(b.mant);
  bool exact = (q * b.mant) == scaled;
  // Floor division rounds toward -inf of (ma << shift) / mb. For quotient sign
  // handling, upwards rounding adds one when inexact.
  if (dir > 0 && !exact) q = q + BigInt(1);
  if (dir == 0 && !exact) {
    // floor(2x) - 2*floor(x) is 1 exactly when frac(x) >= 1/2.
    BigInt q2 = (scaled << 1).floor_div(b.mant);
    if (q2 - (q << 1) == BigInt(1)) q = q + BigInt(1);
  }
  return Dyadic(q, a.exp - b.exp - shift);
}

Dyadic root_approx(const Dyadic& v, unsigned d, uint64_t prec, int dir) {
  if (v.sign() < 0) throw std::domain_error("root_approx: negative argument");
  if (v.is_zero()) return Dyadic(0);
  // Scale so that mantissa has >= d*prec bits and exponent divisible by d.
  uint64_t bits = v.mant.bit_length();
  int64_t want = static_cast<int64_t>(d) * static_cast<int64_t>(prec + 2);
  int64_t shift = want - static_cast<int64_t>(bits);
  if (shift < 0) shift = 0;
  int64_t e = v.exp - shift;
  int64_t rem = ((e % d) + d) % d;
  shift += rem;  // make exponent divisible by d (shift mant left, exp down)
  e -= rem;
  BigInt scaled = v.mant << static_cast<uint64_t>(shift);
  bool exact = false;
  BigInt r = BigInt::iroot(scaled, d, &exact);
  if (dir > 0 && !exact) r = r + BigInt(1);
  return Dyadic(r, e / static_cast<int64_t>(d));
}

}  // namespace qg

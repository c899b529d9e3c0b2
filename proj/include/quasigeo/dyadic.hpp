#pragma once

#include <cstdint>
#include <string>

#include "quasigeo/bigint.hpp"

namespace qg {

// Dyadic rational m * 2^e. Addition and multiplication are exact; rounding is
// explicit via round_to_bits / round_at.
struct Dyadic {
  BigInt mant;
  int64_t exp = 0;

  Dyadic() = default;
  Dyadic(BigInt m, int64_t e) : mant(std::move(m)), exp(e) { normalize(); }
  Dyadic(int64_t v) : mant(v) { normalize(); }

  bool is_zero() const { return mant.is_zero(); }
  int sign() const { return mant.sign(); }
  void normalize();  // strips factors of two from mant into exp

  Dyadic operator-() const { return Dyadic(-mant, exp); }
  friend Dyadic operator+(const Dyadic& a, const Dyadic& b);
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b);
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b);
  Dyadic mul_pow2(int64_t k) const { return Dyadic(mant, exp + k); }

  int cmp(const Dyadic& b) const;
  friend bool operator==(const Dyadic& a, const Dyadic& b) { return a.cmp(b) == 0; }
  friend bool operator<(const Dyadic& a, const Dyadic& b) { return a.cmp(b) < 0; }
  friend bool operator<=(const Dyadic& a, const Dyadic& b) { return a.cmp(b) <= 0; }
  friend bool operator>(const Dyadic& a, const Dyadic& b) { return a.cmp(b) > 0; }
  friend bool operator>=(const Dyadic& a, const Dyadic& b) { return a.cmp(b) >= 0; }

  // floor(v * 2^k)
  BigInt floor_scaled(int64_t k = 0) const;
  BigInt ceil_scaled(int64_t k = 0) const;

  // Round so the mantissa has at most `bits` bits. dir < 0 rounds toward
  // -inf, dir > 0 toward +inf, dir == 0 to nearest.
  Dyadic round_to_bits(uint64_t bits, int dir) const;
  // Round onto the grid of multiples of 2^-frac_bits.
  Dyadic round_at(int64_t frac_bits, int dir) const;

  // |v| < 2^k test helpers.
  bool abs_less_than_pow2(int64_t k) const;
  int64_t mag_exponent() const;  // k with 2^(k-1) <= |v| < 2^k; requires nonzero

  double to_double() const;
  std::string to_string() const;  // "m*2^e"
};

// Exact rational with normalized sign (den > 0) and reduced terms.
struct Rational {
  BigInt num;
  BigInt den{1};

  Rational() = default;
  Rational(BigInt n) : num(std::move(n)) {}
  Rational(int64_t n) : num(n) {}
  Rational(BigInt n, BigInt d);  // throws std::domain_error on d == 0
  static Rational from_dyadic(const Dyadic& d);

  bool is_zero() const { return num.is_zero(); }
  bool is_integer() const { return den.is_one(); }
  int sign() const { return num.sign(); }

  Rational operator-() const;
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  int cmp(const Rational& b) const;
  friend bool operator==(const Rational& a, const Rational& b) { return a.cmp(b) == 0; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.cmp(b) < 0; }

  BigInt floor() const;
  // Dyadic q with |q - v| <= 2^-prec (round to nearest at prec fractional bits).
  Dyadic approx(int64_t prec) const;
  Dyadic approx_dir(int64_t prec, int dir) const;

  uint64_t bit_size() const { return num.bit_length() + den.bit_length(); }
  double to_double() const;
  std::string to_string() const;  // "p/q" or "p"

private:
  void reduce();
};

// Closed interval [lo, hi] with dyadic endpoints. Arithmetic is exact followed
// by outward rounding to `prec` mantissa bits.
struct Interval {
  Dyadic lo, hi;

  Interval() = default;
  Interval(Dyadic v) : lo(v), hi(v) {}
  Interval(Dyadic l, Dyadic h) : lo(std::move(l)), hi(std::move(h)) {}
  static Interval exact(const Dyadic& v) { return Interval(v); }

  bool contains_zero() const { return lo.sign() <= 0 && hi.sign() >= 0; }
  bool is_point() const { return lo == hi; }
  int sign() const;  // -1/0/+1 if definite, 2 if straddles zero
  Dyadic width() const { return hi - lo; }
  Dyadic mid() const { return (lo + hi).mul_pow2(-1); }

  Interval round(uint64_t prec) const;
  Interval operator-() const { return Interval(-hi, -lo); }
  static Interval add(const Interval& a, const Interval& b, uint64_t prec);
  static Interval sub(const Interval& a, const Interval& b, uint64_t prec);
  static Interval mul(const Interval& a, const Interval& b, uint64_t prec);
  // Inverse/div require the divisor interval to exclude zero.
  static Interval inv(const Interval& a, uint64_t prec);
  static Interval div(const Interval& a, const Interval& b, uint64_t prec);
  // d-th root; domain is clamped at zero for even d (caller guarantees the
  // true value is nonnegative).
  static Interval root(const Interval& a, unsigned d, uint64_t prec);
  static Interval pow(const Interval& a, unsigned k, uint64_t prec);

  std::string to_string() const;
};

// Directed-rounding d-th root of a dyadic: result r with r <= v^(1/d) if
// dir < 0, r >= v^(1/d) if dir > 0, and |r - v^(1/d)| <= 2^-prec relative-ish.
Dyadic root_approx(const Dyadic& v, unsigned d, uint64_t prec, int dir);
// Directed-rounding quotient with absolute error below 2^(exponent scale - prec).
Dyadic div_approx(const Dyadic& a, const Dyadic& b, uint64_t prec, int dir);

}  // namespace qg

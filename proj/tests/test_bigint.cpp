#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "quasigeo/bigint.hpp"
#include "quasigeo/dyadic.hpp"

using namespace qg;

namespace {

BigInt random_bigint(std::mt19937_64& rng, int max_limbs) {
  std::uniform_int_distribution<int> nl(0, max_limbs);
  int limbs = nl(rng);
  BigInt v;
  for (int i = 0; i < limbs; ++i) v = (v << 64) + BigInt(rng(), 1);
  if (rng() & 1) v = -v;
  return v;
}

std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  if (neg) v = -v;
  std::string s;
  while (v) { s.push_back('0' + static_cast<int>(v % 10)); v /= 10; }
  if (neg) s.push_back('-');
  return std::string(s.rbegin(), s.rend());
}

}  // namespace

TEST_CASE("small arithmetic matches int128") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int64_t> d(-1000000000LL, 1000000000LL);
  for (int i = 0; i < 2000; ++i) {
    int64_t a = d(rng), b = d(rng);
    CHECK((BigInt(a) + BigInt(b)).to_int64() == a + b);
    CHECK((BigInt(a) - BigInt(b)).to_int64() == a - b);
    CHECK((BigInt(a) * BigInt(b)).to_decimal() ==
          int128_to_string(static_cast<__int128>(a) * b));
    if (b != 0) {
      BigInt q, r;
      BigInt::divmod_trunc(BigInt(a), BigInt(b), q, r);
      CHECK(q.to_int64() == a / b);
      CHECK(r.to_int64() == a % b);
    }
  }
}

TEST_CASE("divmod identity on large values") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    BigInt a = random_bigint(rng, 6);
    BigInt b = random_bigint(rng, 3);
    if (b.is_zero()) continue;
    BigInt q, r;
    BigInt::divmod_trunc(a, b, q, r);
    CHECK(q * b + r == a);
    CHECK(r.abs() < b.abs());
    if (!r.is_zero()) CHECK(r.sign() == a.sign());
  }
}

TEST_CASE("floor division rounds toward minus infinity") {
  CHECK(BigInt(7).floor_div(BigInt(2)) == BigInt(3));
  CHECK(BigInt(-7).floor_div(BigInt(2)) == BigInt(-4));
  CHECK(BigInt(7).floor_div(BigInt(-2)) == BigInt(-4));
  CHECK(BigInt(-7).floor_div(BigInt(-2)) == BigInt(3));
}

TEST_CASE("shifts match multiplication by powers of two") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    BigInt a = random_bigint(rng, 4);
    uint64_t k = rng() % 130;
    CHECK((a << k) == a * BigInt::power_of_two(k));
    CHECK((a >> k) == a.floor_div(BigInt::power_of_two(k)));
  }
}

TEST_CASE("decimal round trip") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    BigInt a = random_bigint(rng, 5);
    CHECK(BigInt::from_decimal(a.to_decimal()) == a);
  }
  CHECK(BigInt::from_decimal("-0").is_zero());
  CHECK_THROWS_AS(BigInt::from_decimal("12x"), std::invalid_argument);
}

TEST_CASE("gcd divides both operands") {
  CHECK(BigInt::gcd(BigInt(12), BigInt(18)) == BigInt(6));
  CHECK(BigInt::gcd(BigInt(-12), BigInt(18)) == BigInt(6));
  CHECK(BigInt::gcd(BigInt(0), BigInt(5)) == BigInt(5));
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    BigInt a = random_bigint(rng, 3).abs();
    BigInt b = random_bigint(rng, 3).abs();
    if (a.is_zero() || b.is_zero()) continue;
    BigInt g = BigInt::gcd(a, b);
    BigInt q, r;
    BigInt::divmod_trunc(a, g, q, r);
    CHECK(r.is_zero());
    BigInt::divmod_trunc(b, g, q, r);
    CHECK(r.is_zero());
  }
}

TEST_CASE("integer roots bracket correctly") {
  bool exact = false;
  CHECK(BigInt::isqrt(BigInt(144), &exact) == BigInt(12));
  CHECK(exact);
  CHECK(BigInt::isqrt(BigInt(145), &exact) == BigInt(12));
  CHECK(!exact);
  CHECK(BigInt::iroot(BigInt(27), 3, &exact) == BigInt(3));
  CHECK(exact);
  std::mt19937_64 rng(19);
  for (int i = 0; i < 200; ++i) {
    BigInt a = random_bigint(rng, 3).abs();
    if (a.is_zero()) continue;
    for (unsigned d : {2u, 3u, 5u}) {
      BigInt r = BigInt::iroot(a, d);
      BigInt rp(1), rp1(1);
      for (unsigned j = 0; j < d; ++j) { rp = rp * r; rp1 = rp1 * (r + BigInt(1)); }
      CHECK(rp <= a);
      CHECK(rp1 > a);
    }
  }
}

TEST_CASE("dyadic rounding is directed") {
  Dyadic x(BigInt(1665), -10);  // not on the 2^-4 grid
  Dyadic down = x.round_at(4, -1);
  Dyadic up = x.round_at(4, +1);
  CHECK(down <= x);
  CHECK(x <= up);
  CHECK((up - down) == Dyadic(BigInt(1), -4));

  Rational third(BigInt(1), BigInt(3));
  Dyadic a = third.approx(8);
  Rational diff = Rational::from_dyadic(a) - third;
  Rational bound(BigInt(1), BigInt(256));
  CHECK((diff.sign() >= 0 ? diff : -diff).cmp(bound) <= 0);
}

TEST_CASE("interval root and division enclose the true value") {
  Interval r = Interval::root(Interval(Dyadic(BigInt(3), 0)), 2, 60);
  CHECK(r.lo.to_double() == doctest::Approx(std::sqrt(3.0)));
  CHECK(r.lo <= r.hi);
  Interval q = Interval::div(Interval(Dyadic(1)), Interval(Dyadic(3)), 60);
  CHECK(q.lo.to_double() == doctest::Approx(1.0 / 3.0));
  CHECK(q.lo < q.hi);
  Interval p = Interval::mul(Interval(Dyadic(-2), Dyadic(3)), Interval(Dyadic(-5), Dyadic(1)), 60);
  CHECK(p.lo == Dyadic(-15));
  CHECK(p.hi == Dyadic(10));
}

TEST_CASE("rational arithmetic stays reduced") {
  Rational r(BigInt(6), BigInt(-9));
  CHECK(r.num == BigInt(-2));
  CHECK(r.den == BigInt(3));
  Rational s = r + Rational(BigInt(2), BigInt(3));
  CHECK(s.is_zero());
  CHECK((Rational(1) / Rational(BigInt(2), BigInt(3))).to_string() == "3/2");
  CHECK(Rational(BigInt(-7), BigInt(2)).floor() == BigInt(-4));
}

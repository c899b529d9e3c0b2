#include "quasigeo/bigint.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace qg {

using u64 = uint64_t;
using u128 = unsigned __int128;

BigInt::BigInt(int64_t v) {
  if (v == 0) return;
  sign_ = v < 0 ? -1 : 1;
  u64 mag = v < 0 ? (~static_cast<u64>(v) + 1) : static_cast<u64>(v);
  limbs_.push_back(mag);
}

BigInt::BigInt(uint64_t v, int sign) {
  if (v == 0 || sign == 0) return;
  sign_ = sign < 0 ? -1 : 1;
  limbs_.push_back(v);
}

void BigInt::normalize() {
  while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
  if (limbs_.empty()) sign_ = 0;
}

bool BigInt::is_one() const { return sign_ == 1 && limbs_.size() == 1 && limbs_[0] == 1; }

uint64_t BigInt::bit_length() const {
  if (limbs_.empty()) return 0;
  u64 top = limbs_.back();
  return (limbs_.size() - 1) * 64 + (64 - __builtin_clzll(top));
}

bool BigInt::bit(uint64_t i) const {
  size_t limb = i / 64;
  if (limb >= limbs_.size()) return false;
  return (limbs_[limb] >> (i % 64)) & 1;
}

uint64_t BigInt::trailing_zero_bits() const {
  if (limbs_.empty()) return 0;
  uint64_t n = 0;
  for (u64 limb : limbs_) {
    if (limb == 0) { n += 64; continue; }
    return n + __builtin_ctzll(limb);
  }
  return n;
}

bool BigInt::fits_int64() const {
  if (limbs_.empty()) return true;
  if (limbs_.size() > 1) return false;
  if (sign_ > 0) return limbs_[0] <= static_cast<u64>(INT64_MAX);
  return limbs_[0] <= static_cast<u64>(INT64_MAX) + 1;
}

int64_t BigInt::to_int64() const {
  if (limbs_.empty()) return 0;
  assert(fits_int64());
  if (sign_ > 0) return static_cast<int64_t>(limbs_[0]);
  return -static_cast<int64_t>(limbs_[0] - 1) - 1;
}

double BigInt::to_double() const {
  int64_t e = 0;
  double m = to_double_with_exp(e);
  if (e > 2000) return sign_ < 0 ? -HUGE_VAL : (sign_ > 0 ? HUGE_VAL : 0.0);
  return std::ldexp(m, static_cast<int>(e));
}

double BigInt::to_double_with_exp(int64_t& exp2) const {
  if (limbs_.empty()) {
    exp2 = 0;
    return 0.0;
  }
  size_t n = limbs_.size();
  size_t start = n > 2 ? n - 2 : 0;
  double v = 0.0;
  for (size_t i = n; i-- > start;) v = v * 18446744073709551616.0 + static_cast<double>(limbs_[i]);
  int ve = 0;
  v = std::frexp(v, &ve);
  exp2 = static_cast<int64_t>(start) * 64 + ve;
  return sign_ < 0 ? -v : v;
}

BigInt BigInt::operator-() const {
  BigInt r = *this;
  r.sign_ = -r.sign_;
  return r;
}

BigInt BigInt::abs() const {
  BigInt r = *this;
  if (r.sign_ < 0) r.sign_ = 1;
  return r;
}

int BigInt::cmp_mag(const std::vector<u64>& a, const std::vector<u64>& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (size_t i = a.size(); i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

int BigInt::cmp(const BigInt& b) const {
  if (sign_ != b.sign_) return sign_ < b.sign_ ? -1 : 1;
  int c = cmp_mag(limbs_, b.limbs_);
  return sign_ >= 0 ? c : -c;
}

std::vector<u64> BigInt::add_mag(const std::vector<u64>& a, const std::vector<u64>& b) {
  const std::vector<u64>& x = a.size() >= b.size() ? a : b;
  const std::vector<u64>& y = a.size() >= b.size() ? b : a;
  std::vector<u64> r(x.size() + 1, 0);
  u64 carry = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    u128 s = static_cast<u128>(x[i]) + (i < y.size() ? y[i] : 0) + carry;
    r[i] = static_cast<u64>(s);
    carry = static_cast<u64>(s >> 64);
  }
  r[x.size()] = carry;
  while (!r.empty() && r.back() == 0) r.pop_back();
  return r;
}

// Requires |a| >= |b|.
std::vector<u64> BigInt::sub_mag(const std::vector<u64>& a, const std::vector<u64>& b) {
  std::vector<u64> r(a.size(), 0);
  u64 borrow = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    u64 bi = i < b.size() ? b[i] : 0;
    u64 ai = a[i];
    u64 d = ai - bi;
    u64 borrow2 = ai < bi;
    u64 d2 = d - borrow;
    borrow2 |= d < borrow;
    r[i] = d2;
    borrow = borrow2;
  }
  assert(borrow == 0);
  while (!r.empty() && r.back() == 0) r.pop_back();
  return r;
}

namespace {

std::vector<u64> mul_school(const std::vector<u64>& a, const std::vector<u64>& b) {
  std::vector<u64> r(a.size() + b.size(), 0);
  for (size_t i = 0; i < a.size(); ++i) {
    u64 carry = 0;
    u64 ai = a[i];
    if (ai == 0) continue;
    for (size_t j = 0; j < b.size(); ++j) {
      u128 cur = static_cast<u128>(ai) * b[j] + r[i + j] + carry;
      r[i + j] = static_cast<u64>(cur);
      carry = static_cast<u64>(cur >> 64);
    }
    size_t k = i + b.size();
    while (carry) {
      u128 cur = static_cast<u128>(r[k]) + carry;
      r[k] = static_cast<u64>(cur);
      carry = static_cast<u64>(cur >> 64);
      ++k;
    }
  }
  while (!r.empty() && r.back() == 0) r.pop_back();
  return r;
}

constexpr size_t kKaratsubaThreshold = 40;

std::vector<u64> mul_rec(const std::vector<u64>& a, const std::vector<u64>& b);

std::vector<u64> mul_karatsuba(const std::vector<u64>& a, const std::vector<u64>& b) {
  size_t half = std::max(a.size(), b.size()) / 2;
  auto lo = [&](const std::vector<u64>& v) {
    std::vector<u64> r(v.begin(), v.begin() + std::min(half, v.size()));
    while (!r.empty() && r.back() == 0) r.pop_back();
    return r;
  };
  auto hi = [&](const std::vector<u64>& v) {
    if (v.size() <= half) return std::vector<u64>{};
    std::vector<u64> r(v.begin() + half, v.end());
    return r;
  };
  std::vector<u64> a0 = lo(a), a1 = hi(a), b0 = lo(b), b1 = hi(b);
  std::vector<u64> z0 = mul_rec(a0, b0);
  std::vector<u64> z2 = mul_rec(a1, b1);
  std::vector<u64> sa = BigInt::add_mag(a0, a1);
  std::vector<u64> sb = BigInt::add_mag(b0, b1);
  std::vector<u64> z1 = mul_rec(sa, sb);
  z1 = BigInt::sub_mag(z1, BigInt::add_mag(z0, z2));
  std::vector<u64> r(a.size() + b.size() + 1, 0);
  auto add_at = [&](const std::vector<u64>& v, size_t off) {
    u64 carry = 0;
    size_t i = 0;
    for (; i < v.size(); ++i) {
      u128 s = static_cast<u128>(r[off + i]) + v[i] + carry;
      r[off + i] = static_cast<u64>(s);
      carry = static_cast<u64>(s >> 64);
    }
    while (carry) {
      u128 s = static_cast<u128>(r[off + i]) + carry;
      r[off + i] = static_cast<u64>(s);
      carry = static_cast<u64>(s >> 64);
      ++i;
    }
  };
  add_at(z0, 0);
  add_at(z1, half);
  add_at(z2, 2 * half);
  while (!r.empty() && r.back() == 0) r.pop_back();
  return r;
}

std::vector<u64> mul_rec(const std::vector<u64>& a, const std::vector<u64>& b) {
  if (a.empty() || b.empty()) return {};
  if (std::min(a.size(), b.size()) < kKaratsubaThreshold) return mul_school(a, b);
  return mul_karatsuba(a, b);
}

}  // namespace

std::vector<u64> BigInt::mul_mag(const std::vector<u64>& a, const std::vector<u64>& b) {
  return mul_rec(a, b);
}

BigInt operator+(const BigInt& a, const BigInt& b) {
  if (a.sign_ == 0) return b;
  if (b.sign_ == 0) return a;
  BigInt r;
  if (a.sign_ == b.sign_) {
    r.limbs_ = BigInt::add_mag(a.limbs_, b.limbs_);
    r.sign_ = a.sign_;
  } else {
    int c = BigInt::cmp_mag(a.limbs_, b.limbs_);
    if (c == 0) return BigInt();
    if (c > 0) {
      r.limbs_ = BigInt::sub_mag(a.limbs_, b.limbs_);
      r.sign_ = a.sign_;
    } else {
      r.limbs_ = BigInt::sub_mag(b.limbs_, a.limbs_);
      r.sign_ = b.sign_;
    }
  }
  r.normalize();
  return r;
}

BigInt operator-(const BigInt& a, const BigInt& b) { return a + (-b); }

BigInt operator*(const BigInt& a, const BigInt& b) {
  if (a.sign_ == 0 || b.sign_ == 0) return BigInt();
  BigInt r;
  r.limbs_ = BigInt::mul_mag(a.limbs_, b.limbs_);
  r.sign_ = a.sign_ * b.sign_;
  r.normalize();
  return r;
}

BigInt BigInt::operator<<(uint64_t k) const {
  if (sign_ == 0 || k == 0) return *this;
  size_t limb_shift = k / 64;
  unsigned bit_shift = k % 64;
  BigInt r;
  r.sign_ = sign_;
  r.limbs_.assign(limbs_.size() + limb_shift + 1, 0);
  for (size_t i = 0; i < limbs_.size(); ++i) {
    r.limbs_[i + limb_shift] |= limbs_[i] << bit_shift;
    if (bit_shift) r.limbs_[i + limb_shift + 1] |= limbs_[i] >> (64 - bit_shift);
  }
  r.normalize();
  return r;
}

BigInt BigInt::operator>>(uint64_t k) const {
  if (sign_ == 0) return *this;
  if (k == 0) return *this;
  // Arithmetic shift: floor(v / 2^k).
  size_t limb_shift = k / 64;
  unsigned bit_shift = k % 64;
  BigInt r;
  bool lost = false;
  if (sign_ < 0) {
    for (size_t i = 0; i < std::min(limb_shift, limbs_.size()); ++i)
      if (limbs_[i]) { lost = true; break; }
    if (!lost && bit_shift && limb_shift < limbs_.size())
      lost = (limbs_[limb_shift] & ((u64(1) << bit_shift) - 1)) != 0;
  }
  if (limb_shift >= limbs_.size()) {
    if (sign_ < 0) return BigInt(-1);
    return BigInt();
  }
  r.sign_ = sign_;
  r.limbs_.assign(limbs_.size() - limb_shift, 0);
  for (size_t i = limb_shift; i < limbs_.size(); ++i) {
    size_t j = i - limb_shift;
    r.limbs_[j] = limbs_[i] >> bit_shift;
    if (bit_shift && i + 1 < limbs_.size()) r.limbs_[j] |= limbs_[i + 1] << (64 - bit_shift);
  }
  r.normalize();
  if (sign_ < 0 && lost) r = r - BigInt(1);
  return r;
}

void BigInt::divmod_mag(const std::vector<u64>& a, const std::vector<u64>& b,
                        std::vector<u64>& q, std::vector<u64>& r) {
  assert(!b.empty());
  if (cmp_mag(a, b) < 0) {
    q.clear();
    r = a;
    return;
  }
  if (b.size() == 1) {
    q.assign(a.size(), 0);
    u128 rem = 0;
    for (size_t i = a.size(); i-- > 0;) {
      u128 cur = (rem << 64) | a[i];
      q[i] = static_cast<u64>(cur / b[0]);
      rem = cur % b[0];
    }
    while (!q.empty() && q.back() == 0) q.pop_back();
    r.clear();
    if (rem) r.push_back(static_cast<u64>(rem));
    return;
  }
  // Knuth algorithm D.
  unsigned shift = __builtin_clzll(b.back());
  auto shl = [&](const std::vector<u64>& v) {
    std::vector<u64> out(v.size() + 1, 0);
    for (size_t i = 0; i < v.size(); ++i) {
      out[i] |= v[i] << shift;
      if (shift) out[i + 1] |= v[i] >> (64 - shift);
    }
    return out;
  };
  std::vector<u64> u = shl(a);
  std::vector<u64> v = shl(b);
  while (!v.empty() && v.back() == 0) v.pop_back();
  size_t n = v.size();
  size_t m = u.size() - n;  // u has one extra limb from shl
  q.assign(m, 0);
  for (size_t j = m; j-- > 0;) {
    u128 top = (static_cast<u128>(u[j + n]) << 64) | u[j + n - 1];
    u128 qhat = top / v[n - 1];
    u128 rhat = top % v[n - 1];
    while (qhat >= (static_cast<u128>(1) << 64) ||
           (n >= 2 && qhat * v[n - 2] > ((rhat << 64) | u[j + n - 2]))) {
      --qhat;
      rhat += v[n - 1];
      if (rhat >= (static_cast<u128>(1) << 64)) break;
    }
    // Multiply and subtract.
    u128 borrow = 0, carry = 0;
    for (size_t i = 0; i < n; ++i) {
      u128 p = qhat * v[i] + carry;
      carry = p >> 64;
      u64 plo = static_cast<u64>(p);
      u64 ui = u[j + i];
      u64 d = ui - plo;
      u64 b2 = ui < plo;
      u64 d2 = d - static_cast<u64>(borrow);
      b2 |= d < static_cast<u64>(borrow);
      u[j + i] = d2;
      borrow = b2;
    }
    u128 top_sub = static_cast<u128>(u[j + n]) - carry - borrow;
    u[j + n] = static_cast<u64>(top_sub);
    if (top_sub >> 127) {
      // qhat was one too large; add back.
      --qhat;
      u64 c = 0;
      for (size_t i = 0; i < n; ++i) {
        u128 s = static_cast<u128>(u[j + i]) + v[i] + c;
        u[j + i] = static_cast<u64>(s);
        c = static_cast<u64>(s >> 64);
      }
      u[j + n] += c;
    }
    q[j] = static_cast<u64>(qhat);
  }
  while (!q.empty() && q.back() == 0) q.pop_back();
  // Remainder: shift u[0..n) back.
  r.assign(u.begin(), u.begin() + n);
  if (shift) {
    for (size_t i = 0; i < n; ++i) {
      r[i] >>= shift;
      if (i + 1 < n) r[i] |= u[i + 1] << (64 - shift);
    }
  }
  while (!r.empty() && r.back() == 0) r.pop_back();
}

void BigInt::divmod_trunc(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r) {
  if (b.sign_ == 0) throw std::domain_error("BigInt: division by zero");
  if (a.sign_ == 0) { q = BigInt(); r = BigInt(); return; }
  std::vector<u64> qm, rm;
  divmod_mag(a.limbs_, b.limbs_, qm, rm);
  q = BigInt();
  r = BigInt();
  q.limbs_ = std::move(qm);
  r.limbs_ = std::move(rm);
  q.sign_ = q.limbs_.empty() ? 0 : a.sign_ * b.sign_;
  r.sign_ = r.limbs_.empty() ? 0 : a.sign_;
  q.normalize();
  r.normalize();
}

BigInt BigInt::floor_div(const BigInt& b) const {
  BigInt q, r;
  divmod_trunc(*this, b, q, r);
  if (!r.is_zero() && (sign_ * b.sign_) < 0) q = q - BigInt(1);
  return q;
}

BigInt BigInt::gcd(BigInt a, BigInt b) {
  a.sign_ = a.limbs_.empty() ? 0 : 1;
  b.sign_ = b.limbs_.empty() ? 0 : 1;
  while (!b.is_zero()) {
    BigInt q, r;
    divmod_trunc(a, b, q, r);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

BigInt BigInt::power_of_two(uint64_t k) { return BigInt(1) << k; }

BigInt BigInt::isqrt(const BigInt& a, bool* exact) { return iroot(a, 2, exact); }

BigInt BigInt::iroot(const BigInt& a, unsigned d, bool* exact) {
  if (a.sign_ < 0) throw std::domain_error("BigInt::iroot: negative argument");
  assert(d >= 1);
  if (a.sign_ == 0 || d == 1) {
    if (exact) *exact = true;
    return a;
  }
  uint64_t bits = a.bit_length();
  if (bits <= 63) {
    // Single-word fast path: float seed, exact fixup in unsigned 128.
    uint64_t v = a.limbs_[0];
    uint64_t r = static_cast<uint64_t>(std::pow(static_cast<double>(v), 1.0 / d));
    auto pow_le = [&](uint64_t x) {  // x^d <= v without overflow
      if (x == 0) return true;
      unsigned __int128 p = 1;
      for (unsigned i = 0; i < d; ++i) {
        p *= x;
        if (p > v) return false;
      }
      return p <= v;
    };
    while (r > 0 && !pow_le(r)) --r;
    while (pow_le(r + 1)) ++r;
    if (exact) {
      unsigned __int128 p = 1;
      for (unsigned i = 0; i < d; ++i) p *= r;
      *exact = (p == v);
    }
    return BigInt(r, 1);
  }
  if (bits <= d) {
    // 1 <= a < 2^d so the root is 1 unless a == 1... still 1.
    if (exact) *exact = a.is_one();
    return BigInt(1);
  }
  // Newton iteration on x -> ((d-1)x + a / x^(d-1)) / d, seeded above the root.
  BigInt x = BigInt::power_of_two(bits / d + 1);
  BigInt dnum(static_cast<int64_t>(d));
  BigInt dm1(static_cast<int64_t>(d - 1));
  while (true) {
    BigInt xd = x;
    for (unsigned i = 1; i + 1 < d; ++i) xd = xd * x;  // x^(d-1)
    BigInt t = (dm1 * x + a.floor_div(xd)).floor_div(dnum);
    if (t.cmp(x) >= 0) break;
    x = std::move(t);
  }
  // x is now floor(a^(1/d)) or slightly above; correct downward.
  auto pow_d = [&](const BigInt& v) {
    BigInt p = v;
    for (unsigned i = 1; i < d; ++i) p = p * v;
    return p;
  };
  while (pow_d(x).cmp(a) > 0) x = x - BigInt(1);
  while (pow_d(x + BigInt(1)).cmp(a) <= 0) x = x + BigInt(1);
  if (exact) *exact = pow_d(x) == a;
  return x;
}

BigInt BigInt::from_decimal(std::string_view s) {
  size_t i = 0;
  int sign = 1;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    if (s[i] == '-') sign = -1;
    ++i;
  }
  if (i >= s.size()) throw std::invalid_argument("BigInt: empty decimal string");
  BigInt r;
  BigInt ten(10);
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("BigInt: bad decimal digit");
    r = r * ten + BigInt(s[i] - '0');
  }
  if (sign < 0) r = -r;
  return r;
}

std::string BigInt::to_decimal() const {
  if (sign_ == 0) return "0";
  std::string out;
  BigInt v = abs();
  BigInt chunk(1000000000000000000LL);  // 10^18 fits a limb
  std::vector<u64> parts;
  while (!v.is_zero()) {
    BigInt q, r;
    divmod_trunc(v, chunk, q, r);
    parts.push_back(r.limbs_.empty() ? 0 : r.limbs_[0]);
    v = std::move(q);
  }
  out = std::to_string(parts.back());
  for (size_t i = parts.size() - 1; i-- > 0;) {
    std::string p = std::to_string(parts[i]);
    out += std::string(18 - p.size(), '0') + p;
  }
  if (sign_ < 0) out.insert(out.begin(), '-');
  return out;
}

std::string BigInt::to_hex() const {
  if (sign_ == 0) return "0";
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (size_t i = 0; i < limbs_.size(); ++i) {
    u64 limb = limbs_[i];
    for (int nib = 0; nib < 16; ++nib) {
      out.push_back(digits[limb & 0xf]);
      limb >>= 4;
    }
  }
  while (out.size() > 1 && out.back() == '0') out.pop_back();
  std::reverse(out.begin(), out.end());
  if (sign_ < 0) out.insert(out.begin(), '-');
  return out;
}

}  // namespace qg

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qg {

// Arbitrary-precision signed integer. Magnitude is stored in 64-bit limbs,
// little-endian, with no trailing zero limbs; sign is -1, 0 or +1.
class BigInt {
public:
  BigInt() = default;
  BigInt(int64_t v);
  explicit BigInt(uint64_t v, int sign);

  static BigInt from_decimal(std::string_view s);  // throws std::invalid_argument
  static BigInt power_of_two(uint64_t k);

  bool is_zero() const { return sign_ == 0; }
  bool is_negative() const { return sign_ < 0; }
  bool is_one() const;
  int sign() const { return sign_; }

  // Number of bits in the magnitude; 0 for zero.
  uint64_t bit_length() const;
  bool bit(uint64_t i) const;
  // Largest k such that 2^k divides the magnitude; 0 for zero.
  uint64_t trailing_zero_bits() const;

  bool fits_int64() const;
  int64_t to_int64() const;  // requires fits_int64()
  double to_double() const;  // best-effort, may overflow to +-inf
  // Mantissa in [0.5, 1) (signed) and binary exponent: value = m * 2^e.
  double to_double_with_exp(int64_t& exp2) const;

  BigInt operator-() const;
  BigInt abs() const;

  friend BigInt operator+(const BigInt& a, const BigInt& b);
  friend BigInt operator-(const BigInt& a, const BigInt& b);
  friend BigInt operator*(const BigInt& a, const BigInt& b);
  BigInt& operator+=(const BigInt& b) { *this = *this + b; return *this; }
  BigInt& operator-=(const BigInt& b) { *this = *this - b; return *this; }
  BigInt& operator*=(const BigInt& b) { *this = *this * b; return *this; }

  BigInt operator<<(uint64_t k) const;
  BigInt operator>>(uint64_t k) const;  // arithmetic shift toward -inf

  // Truncated division: quotient rounds toward zero, remainder has sign of a.
  static void divmod_trunc(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r);
  // Floor division: quotient rounds toward -inf.
  BigInt floor_div(const BigInt& b) const;

  static BigInt gcd(BigInt a, BigInt b);

  // Floor of the d-th root of a nonnegative value; *exact set if result^d == a.
  static BigInt iroot(const BigInt& a, unsigned d, bool* exact = nullptr);
  static BigInt isqrt(const BigInt& a, bool* exact = nullptr);

  int cmp(const BigInt& b) const;
  friend bool operator==(const BigInt& a, const BigInt& b) { return a.cmp(b) == 0; }
  friend bool operator!=(const BigInt& a, const BigInt& b) { return a.cmp(b) != 0; }
  friend bool operator<(const BigInt& a, const BigInt& b) { return a.cmp(b) < 0; }
  friend bool operator<=(const BigInt& a, const BigInt& b) { return a.cmp(b) <= 0; }
  friend bool operator>(const BigInt& a, const BigInt& b) { return a.cmp(b) > 0; }
  friend bool operator>=(const BigInt& a, const BigInt& b) { return a.cmp(b) >= 0; }

  std::string to_decimal() const;
  std::string to_hex() const;

  size_t limb_count() const { return limbs_.size(); }

  // Magnitude-level helpers, exposed for internal reuse.
  static int cmp_mag(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);
  static std::vector<uint64_t> add_mag(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);
  static std::vector<uint64_t> sub_mag(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);

private:
  std::vector<uint64_t> limbs_;
  int sign_ = 0;

  void normalize();
  static std::vector<uint64_t> mul_mag(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);
  static void divmod_mag(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b,
                         std::vector<uint64_t>& q, std::vector<uint64_t>& r);
};

}  // namespace qg

#include "quasigeo/trig.hpp"

#include <mutex>
#include <stdexcept>

namespace qg {

namespace {

// atan(1/m) for integer m >= 2, by the alternating series in 1/m.
Interval atan_inv_int(int64_t m, uint64_t prec) {
  uint64_t p = prec + 16;
  Dyadic sum(0);
  BigInt m2(m * m);
  BigInt mpow(m);
  uint64_t k = 0;
  Dyadic term;
  while (true) {
    // term_k = 1 / ((2k+1) * m^(2k+1))
    BigInt den = mpow * BigInt(static_cast<int64_t>(2 * k + 1));
    term = div_approx(Dyadic(1), Dyadic(den, 0), p, 0);
    if (term.abs_less_than_pow2(-static_cast<int64_t>(p))) break;
    sum = sum + (k % 2 ? -term : term);
    sum = sum.round_to_bits(p + 32, 0);
    mpow = mpow * m2;
    ++k;
  }
  // Alternating series: error below the first omitted term plus rounding slop.
  Dyadic err = term + Dyadic(BigInt(1), -static_cast<int64_t>(prec + 8));
  return Interval(sum - err, sum + err);
}

struct PiCache {
  std::mutex mu;
  uint64_t prec = 0;
  Interval value;
};
PiCache& pi_cache() {
  static PiCache c;
  return c;
}

// Pointwise atan for |q| <= 5/8, alternating Taylor series.
Interval atan_small(const Dyadic& q, uint64_t prec) {
  uint64_t p = prec + 16;
  Dyadic q2 = (q * q).round_to_bits(p, 0);
  Dyadic qpow = q;
  Dyadic sum(0);
  uint64_t k = 0;
  Dyadic term;
  while (true) {
    term = div_approx(qpow, Dyadic(BigInt(static_cast<int64_t>(2 * k + 1)), 0), p, 0);
    Dyadic term_abs = term.sign() < 0 ? -term : term;
    if (term_abs.abs_less_than_pow2(-static_cast<int64_t>(p))) break;
    sum = sum + (k % 2 ? -term : term);
    sum = sum.round_to_bits(p + 32, 0);
    qpow = (qpow * q2).round_to_bits(p + 32, 0);
    ++k;
  }
  Dyadic err = (term.sign() < 0 ? -term : term) +
               Dyadic(BigInt(1), -static_cast<int64_t>(prec + 8));
  return Interval(sum - err, sum + err);
}

// Pointwise atan for any dyadic.
Interval atan_point(const Dyadic& q, uint64_t prec) {
  if (q.is_zero()) return Interval(Dyadic(0));
  if (q.sign() < 0) {
    Interval r = atan_point(-q, prec);
    return -r;
  }
  // q > 1: atan(q) = pi/2 - atan(1/q).
  if (Dyadic(q.mant.abs(), q.exp).cmp(Dyadic(1)) > 0) {
    Interval pi = pi_interval(prec + 4);
    Interval half_pi(pi.lo.mul_pow2(-1), pi.hi.mul_pow2(-1));
    Dyadic inv_lo = div_approx(Dyadic(1), q, prec + 8, -1);
    Dyadic inv_hi = div_approx(Dyadic(1), q, prec + 8, +1);
    Interval inner_lo = atan_point(inv_lo, prec + 4);
    Interval inner_hi = atan_point(inv_hi, prec + 4);
    return Interval(half_pi.lo - inner_hi.hi, half_pi.hi - inner_lo.lo);
  }
  // 5/8 < q <= 1: atan(q) = pi/4 + atan((q-1)/(q+1)).
  Dyadic five_eighths(BigInt(5), -3);
  if (q.cmp(five_eighths) > 0) {
    Interval pi = pi_interval(prec + 4);
    Interval quarter_pi(pi.lo.mul_pow2(-2), pi.hi.mul_pow2(-2));
    Dyadic num = q - Dyadic(1);
    Dyadic den = q + Dyadic(1);
    Dyadic t_lo = div_approx(num, den, prec + 8, -1);
    Dyadic t_hi = div_approx(num, den, prec + 8, +1);
    Interval inner_lo = atan_small(t_lo, prec + 4);
    Interval inner_hi = atan_small(t_hi, prec + 4);
    return Interval(quarter_pi.lo + inner_lo.lo, quarter_pi.hi + inner_hi.hi);
  }
  return atan_small(q, prec);
}

// Pointwise sin/cos for |t| <= 1 (post-reduction), alternating series.
Interval sin_point_small(const Dyadic& t, uint64_t prec) {
  uint64_t p = prec + 16;
  Dyadic t2 = (t * t).round_to_bits(p, 0);
  Dyadic term = t;
  Dyadic sum(0);
  uint64_t k = 0;
  while (true) {
    Dyadic term_abs = term.sign() < 0 ? -term : term;
    sum = sum + (k % 2 ? -term : term);
    sum = sum.round_to_bits(p + 32, 0);
    // next term: term * t^2 / ((2k+2)(2k+3))
    BigInt den(static_cast<int64_t>((2 * k + 2) * (2 * k + 3)));
    term = div_approx(term * t2, Dyadic(den, 0), p, 0);
    term_abs = term.sign() < 0 ? -term : term;
    ++k;
    if (term_abs.abs_less_than_pow2(-static_cast<int64_t>(p))) break;
  }
  Dyadic err = (term.sign() < 0 ? -term : term) +
               Dyadic(BigInt(1), -static_cast<int64_t>(prec + 8));
  return Interval(sum - err, sum + err);
}

Interval cos_point_small(const Dyadic& t, uint64_t prec) {
  uint64_t p = prec + 16;
  Dyadic t2 = (t * t).round_to_bits(p, 0);
  Dyadic term(1);
  Dyadic sum(0);
  uint64_t k = 0;
  while (true) {
    sum = sum + (k % 2 ? -term : term);
    sum = sum.round_to_bits(p + 32, 0);
    BigInt den(static_cast<int64_t>((2 * k + 1) * (2 * k + 2)));
    term = div_approx(term * t2, Dyadic(den, 0), p, 0);
    Dyadic term_abs = term.sign() < 0 ? -term : term;
    ++k;
    if (term_abs.abs_less_than_pow2(-static_cast<int64_t>(p))) break;
  }
  Dyadic err = (term.sign() < 0 ? -term : term) +
               Dyadic(BigInt(1), -static_cast<int64_t>(prec + 8));
  return Interval(sum - err, sum + err);
}

// sin/cos at a dyadic point, any magnitude.
void sincos_point(const Dyadic& x, uint64_t prec, Interval* sin_out, Interval* cos_out) {
  Interval pi = pi_interval(prec + 16);
  // k = round(x / (pi/2)); reduced = x - k*pi/2 in about [-0.79, 0.79].
  Dyadic half_pi_mid = pi.mid().mul_pow2(-1);
  Dyadic ratio = div_approx(x, half_pi_mid, 32, 0);
  BigInt k = (ratio + Dyadic(BigInt(1), -1)).floor_scaled(0);
  Interval kpi2 = Interval::mul(Interval(Dyadic(k, -1)), pi, prec + 16);
  Interval red = Interval::sub(Interval(x), kpi2, prec + 16);
  // red within [-pi/4 - eps, pi/4 + eps]; series fine on |t| <= 1.
  BigInt four(4);
  BigInt q, r;
  BigInt::divmod_trunc(k, four, q, r);
  int64_t rm = r.is_zero() ? 0 : r.to_int64();
  if (rm < 0) rm += 4;
  auto series = [&](bool want_sin) {
    // Monotone evaluation over [red.lo, red.hi].
    Interval a = want_sin ? sin_point_small(red.lo, prec) : cos_point_small(red.lo, prec);
    Interval b = want_sin ? sin_point_small(red.hi, prec) : cos_point_small(red.hi, prec);
    Dyadic lo = a.lo.cmp(b.lo) < 0 ? a.lo : b.lo;
    Dyadic hi = a.hi.cmp(b.hi) > 0 ? a.hi : b.hi;
    if (!want_sin && red.lo.sign() < 0 && red.hi.sign() > 0) hi = Dyadic(1);  // cos peak at 0
    return Interval(lo, hi);
  };
  // sin(x) = sin(red + k*pi/2), by quadrant.
  Interval s, c;
  switch (rm) {
    case 0: s = series(true); c = series(false); break;
    case 1: s = series(false); c = -series(true); break;
    case 2: s = -series(true); c = -series(false); break;
    default: s = -series(false); c = series(true); break;
  }
  if (sin_out) *sin_out = s;
  if (cos_out) *cos_out = c;
}

}  // namespace

Interval pi_interval(uint64_t prec) {
  PiCache& c = pi_cache();
  std::lock_guard<std::mutex> lock(c.mu);
  if (c.prec >= prec) return c.value.round(prec + 32);
  // Machin: pi = 16 atan(1/5) - 4 atan(1/239).
  Interval a5 = atan_inv_int(5, prec + 8);
  Interval a239 = atan_inv_int(239, prec + 8);
  Interval pi(a5.lo.mul_pow2(4) - a239.hi.mul_pow2(2),
              a5.hi.mul_pow2(4) - a239.lo.mul_pow2(2));
  c.prec = prec;
  c.value = pi;
  return pi;
}

Interval atan_interval(const Interval& x, uint64_t prec) {
  Interval lo = atan_point(x.lo, prec);
  Interval hi = atan_point(x.hi, prec);
  return Interval(lo.lo, hi.hi);
}

Interval atan2_upper(const Interval& y, const Interval& x, uint64_t prec) {
  Interval pi = pi_interval(prec + 4);
  if (y.lo.sign() > 0) {
    // atan2(y, x) = pi/2 - atan(x / y) for y > 0.
    Interval q = Interval::div(x, y, prec + 8);
    Interval a = atan_interval(q, prec + 4);
    return Interval(pi.lo.mul_pow2(-1) - a.hi, pi.hi.mul_pow2(-1) - a.lo);
  }
  if (x.lo.sign() > 0) {
    Interval q = Interval::div(y, x, prec + 8);
    return atan_interval(q, prec + 4);
  }
  if (x.hi.sign() < 0) {
    // atan2 = pi + atan(y/x), with atan(y/x) in (-pi/2, 0].
    Interval q = Interval::div(y, x, prec + 8);
    Interval a = atan_interval(q, prec + 4);
    return Interval(pi.lo + a.lo, pi.hi + a.hi);
  }
  // Both straddle zero: no information beyond the half-plane.
  return Interval(Dyadic(0), pi.hi);
}

Interval angle_between(const Interval& ux, const Interval& uy,
                       const Interval& vx, const Interval& vy, uint64_t prec) {
  Interval dot = Interval::add(Interval::mul(ux, vx, prec + 8),
                               Interval::mul(uy, vy, prec + 8), prec + 8);
  Interval cross = Interval::sub(Interval::mul(ux, vy, prec + 8),
                                 Interval::mul(uy, vx, prec + 8), prec + 8);
  // |cross| as an interval.
  Dyadic clo = cross.lo, chi = cross.hi;
  Dyadic alo(0), ahi(0);
  Dyadic abs_l = clo.sign() < 0 ? -clo : clo;
  Dyadic abs_h = chi.sign() < 0 ? -chi : chi;
  ahi = abs_l.cmp(abs_h) > 0 ? abs_l : abs_h;
  if (!cross.contains_zero()) alo = cross.lo.sign() > 0 ? cross.lo : -cross.hi;
  return atan2_upper(Interval(alo, ahi), dot, prec);
}

Interval sin_interval(const Interval& x, uint64_t prec) {
  Interval a, b;
  sincos_point(x.lo, prec, &a, nullptr);
  sincos_point(x.hi, prec, &b, nullptr);
  // Derivative bounded by 1: pad by the width to stay certified without
  // chasing interior extrema.
  Dyadic w = x.width();
  Dyadic lo = (a.lo.cmp(b.lo) < 0 ? a.lo : b.lo) - w;
  Dyadic hi = (a.hi.cmp(b.hi) > 0 ? a.hi : b.hi) + w;
  Dyadic one(1);
  if (hi.cmp(one) > 0) hi = one;
  if (lo.cmp(-one) < 0) lo = -one;
  return Interval(lo, hi);
}

Interval cos_interval(const Interval& x, uint64_t prec) {
  Interval a, b;
  sincos_point(x.lo, prec, nullptr, &a);
  sincos_point(x.hi, prec, nullptr, &b);
  Dyadic w = x.width();
  Dyadic lo = (a.lo.cmp(b.lo) < 0 ? a.lo : b.lo) - w;
  Dyadic hi = (a.hi.cmp(b.hi) > 0 ? a.hi : b.hi) + w;
  Dyadic one(1);
  if (hi.cmp(one) > 0) hi = one;
  if (lo.cmp(-one) < 0) lo = -one;
  return Interval(lo, hi);
}

}  // namespace qg

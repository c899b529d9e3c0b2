#pragma once

#include "quasigeo/dyadic.hpp"

namespace qg {

// Certified elementary transcendentals over dyadic intervals: argument
// reduction plus alternating Taylor series with explicit remainder capture.
// Results are outward-rounded enclosures at roughly 2^-prec absolute error
// for point inputs.

Interval pi_interval(uint64_t prec);

// Monotone enclosure of atan over the whole line.
Interval atan_interval(const Interval& x, uint64_t prec);

// atan2(y, x) for y >= 0 (upper half plane), range [0, pi]. The input
// intervals may straddle zero; the result is a valid (possibly wide)
// enclosure, collapsing to [0, pi] only if both straddle.
Interval atan2_upper(const Interval& y, const Interval& x, uint64_t prec);

// Angle in [0, pi] between vectors (ux, uy) and (vx, vy) given certified
// component enclosures.
Interval angle_between(const Interval& ux, const Interval& uy,
                       const Interval& vx, const Interval& vy, uint64_t prec);

Interval sin_interval(const Interval& x, uint64_t prec);
Interval cos_interval(const Interval& x, uint64_t prec);

}  // namespace qg

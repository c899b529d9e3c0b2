#pragma once

#include <span>

#include "quasigeo/expr.hpp"

namespace qg {

// Sturm-sequence support for RootOf evaluation: exact real-root counting and
// j-th smallest root isolation for polynomials whose coefficients are
// expressions. Signs of coefficient combinations are decided exactly through
// the expression kernel.

struct RootEnclosure {
  bool is_undefined = false;  // polynomial has no j-th distinct real root
  Interval box;
};

// Number of distinct real roots; -1 when a coefficient is undefined or the
// polynomial is identically zero.
int count_distinct_real_roots(std::span<const Expression> coeffs_ascending);

// Certified enclosure of the j-th smallest distinct real root with width at
// most 2^-prec (exact point interval when the root is hit exactly).
RootEnclosure enclose_real_root(unsigned j, std::span<const Expression> coeffs_ascending,
                                uint64_t prec);

}  // namespace qg

#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "quasigeo/dyadic.hpp"

namespace qg {

enum class ExprKind : uint8_t { Integer, Add, Sub, Mul, Div, Root, RootOf };

enum class Sign : int8_t { Negative = -1, Zero = 0, Positive = 1, Undefined = 2 };
enum class Ordering : int8_t { Less = -1, Equal = 0, Greater = 1, Undefined = 2 };

// Budget of the (c, c-hat)-expression RAM: operator count, root degree, and
// leaf width. Public construction beyond the budget throws BudgetExceeded,
// which signals the caller to round operands and rebuild.
struct ExprLimits {
  uint32_t max_ops = 64;         // c
  uint32_t max_root_degree = 2;  // c-hat
  uint32_t max_leaf_bits = 64;   // b
};

ExprLimits& expr_limits();

// RAII override of the process-wide limits (construction-time only; existing
// expressions are unaffected).
struct ScopedExprLimits {
  explicit ScopedExprLimits(const ExprLimits& limits) : saved_(expr_limits()) {
    expr_limits() = limits;
  }
  ~ScopedExprLimits() { expr_limits() = saved_; }
  ScopedExprLimits(const ScopedExprLimits&) = delete;

private:
  ExprLimits saved_;
};

class BudgetExceeded : public std::runtime_error {
public:
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

class UndefinedExpr : public std::runtime_error {
public:
  explicit UndefinedExpr(const std::string& what) : std::runtime_error(what) {}
};

// Separation-bound data: for nonzero defined E,
//   2^-(D * logB)  <=  |E|  <=  2^(D * logB).
// D multiplies the degrees of all root operations (as a tree; shared children
// count per occurrence); logB follows the B(E) recursion. Both saturate.
struct ExprBounds {
  uint64_t d = 1;
  uint64_t log_b = 0;
  uint64_t separation_bits() const;  // saturating D * logB
};

struct ExprNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;

// Immutable constant-size algebraic expression over big integers. Value
// semantics over a shared node; cheap to copy. Thread-safe for reads; the
// sign/definedness caches are write-once.
class Expression {
public:
  Expression();  // integer 0

  static Expression integer(BigInt v);
  static Expression integer(int64_t v) { return integer(BigInt(v)); }
  // m * 2^e as a one-operator expression (or a plain leaf when e >= 0).
  static Expression from_dyadic(const Dyadic& d);
  static Expression from_rational(const Rational& r);

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  Expression operator-() const;  // built as 0 - E

  friend Expression sqrt(const Expression& a);
  static Expression nth_root(const Expression& a, unsigned degree);
  // j-th smallest (distinct) real root of sum_i coeffs[i] x^i; degree is
  // coeffs.size() - 1. Throws std::invalid_argument unless 0 <= j < degree.
  static Expression root_of(unsigned j, std::vector<Expression> coeffs_ascending);

  ExprKind kind() const;
  const BigInt& leaf_value() const;           // Integer nodes only
  unsigned root_degree() const;               // Root / RootOf nodes
  unsigned root_index() const;                // RootOf nodes
  std::span<const Expression> children() const;
  uint32_t op_count() const;
  const ExprBounds& bounds() const;

  const ExprNode* node() const { return node_.get(); }
  friend bool same_node(const Expression& a, const Expression& b) {
    return a.node_ == b.node_;
  }

private:
  explicit Expression(ExprNodePtr n) : node_(std::move(n)) {}
  ExprNodePtr node_;
  friend struct ExprBuilder;
};

// Type-3 operations (exact, O(b) big-integer work per the model).
Sign sign(const Expression& e);
Ordering compare(const Expression& a, const Expression& b);
bool defined(const Expression& e);
// Exact floor/ceil; throw UndefinedExpr on undefined input.
BigInt floor(const Expression& e);
BigInt ceil(const Expression& e);
// Dyadic q with |q - E| <= 2^-frac_bits; throws UndefinedExpr.
Dyadic approximate(const Expression& e, uint64_t frac_bits);
// Certified enclosure of a defined expression (width shrinks with prec).
Interval enclose(const Expression& e, uint64_t prec);

// Debug serialization, e.g. (sqrt 2 (int 5)).
std::string to_sexpr(const Expression& e);

// Convenience exact comparisons.
inline bool expr_equal(const Expression& a, const Expression& b) {
  return compare(a, b) == Ordering::Equal;
}
inline bool expr_less(const Expression& a, const Expression& b) {
  return compare(a, b) == Ordering::Less;
}

// Algebraically equal expression with a minimal tree, when the value lies in
// a supported radical tower; otherwise returns e unchanged. Used to keep
// derived geometric quantities inside the operator budget.
Expression simplified(const Expression& e);

}  // namespace qg

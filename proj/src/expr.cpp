#include "quasigeo/expr.hpp"

#include <cassert>
#include <unordered_map>

#include "quasigeo/field.hpp"
#include "quasigeo/sturm.hpp"

namespace qg {

namespace {
constexpr int8_t kSignUnknown = 127;
constexpr uint64_t kSatCap = UINT64_MAX / 4;
constexpr uint64_t kMaxSeparationBits = uint64_t(1) << 26;
constexpr uint64_t kMaxWorkingPrec = uint64_t(1) << 27;

uint64_t sat_add(uint64_t a, uint64_t b) {
  if (a >= kSatCap || b >= kSatCap || a + b >= kSatCap) return kSatCap;
  return a + b;
}
uint64_t sat_mul(uint64_t a, uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a >= kSatCap || b >= kSatCap || a > kSatCap / b) return kSatCap;
  return a * b;
}
}  // namespace

struct ExprNode {
  ExprKind kind = ExprKind::Integer;
  unsigned degree = 0;  // Root / RootOf
  unsigned index = 0;   // RootOf
  BigInt leaf;
  std::vector<Expression> children;
  uint32_t op_count = 0;
  ExprBounds bounds;
  mutable std::atomic<int8_t> sign_cache{kSignUnknown};
};

uint64_t ExprBounds::separation_bits() const {
  return sat_mul(d, log_b == 0 ? 1 : log_b);
}

ExprLimits& expr_limits() {
  static ExprLimits limits;
  return limits;
}

struct ExprBuilder {
  // Unchecked construction used by kernel internals (floor adjustment,
  // simplification); budget checks apply only at the public surface.
  static Expression make_leaf(BigInt v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Integer;
    n->bounds.d = 1;
    n->bounds.log_b = v.bit_length();
    n->leaf = std::move(v);
    return Expression(std::move(n));
  }

  static Expression make_binary(ExprKind kind, Expression a, Expression b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->op_count = 1 + a.op_count() + b.op_count();
    n->bounds.d = sat_mul(a.bounds().d, b.bounds().d);
    n->bounds.log_b = sat_mul(2, sat_add(a.bounds().log_b, b.bounds().log_b));
    n->children = {std::move(a), std::move(b)};
    return Expression(std::move(n));
  }

  static Expression make_root(Expression a, unsigned degree) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Root;
    n->degree = degree;
    n->op_count = 1 + a.op_count();
    n->bounds.d = sat_mul(a.bounds().d, degree);
    n->bounds.log_b = sat_mul(2, a.bounds().log_b);
    n->children = {std::move(a)};
    return Expression(std::move(n));
  }

  static Expression make_root_of(unsigned j, std::vector<Expression> coeffs) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::RootOf;
    n->degree = static_cast<unsigned>(coeffs.size() - 1);
    n->index = j;
    uint32_t ops = 1;
    uint64_t d = n->degree;
    uint64_t lsum = 0;
    for (const Expression& c : coeffs) {
      ops += c.op_count();
      d = sat_mul(d, c.bounds().d);
      lsum = sat_add(lsum, c.bounds().log_b);
    }
    n->op_count = ops;
    n->bounds.d = d;
    n->bounds.log_b = sat_mul(n->degree + 1, lsum);
    n->children = std::move(coeffs);
    return Expression(std::move(n));
  }

  static void check_ops(uint32_t ops) {
    if (ops > expr_limits().max_ops)
      throw BudgetExceeded("expression operator budget exceeded (" + std::to_string(ops) +
                           " > " + std::to_string(expr_limits().max_ops) + ")");
  }
};

Expression::Expression() : node_(ExprBuilder::make_leaf(BigInt()).node_) {}

Expression Expression::integer(BigInt v) {
  if (v.bit_length() > expr_limits().max_leaf_bits)
    throw BudgetExceeded("integer leaf exceeds bit budget");
  return ExprBuilder::make_leaf(std::move(v));
}

Expression Expression::from_dyadic(const Dyadic& d) {
  if (d.exp >= 0) return integer(d.mant << static_cast<uint64_t>(d.exp));
  return integer(d.mant) / integer(BigInt::power_of_two(static_cast<uint64_t>(-d.exp)));
}

Expression Expression::from_rational(const Rational& r) {
  if (r.is_integer()) return integer(r.num);
  return integer(r.num) / integer(r.den);
}

ExprKind Expression::kind() const { return node_->kind; }
const BigInt& Expression::leaf_value() const { return node_->leaf; }
unsigned Expression::root_degree() const { return node_->degree; }
unsigned Expression::root_index() const { return node_->index; }
std::span<const Expression> Expression::children() const { return node_->children; }
uint32_t Expression::op_count() const { return node_->op_count; }
const ExprBounds& Expression::bounds() const { return node_->bounds; }

Expression operator+(const Expression& a, const Expression& b) {
  Expression e = ExprBuilder::make_binary(ExprKind::Add, a, b);
  ExprBuilder::check_ops(e.op_count());
  return e;
}
Expression operator-(const Expression& a, const Expression& b) {
  Expression e = ExprBuilder::make_binary(ExprKind::Sub, a, b);
  ExprBuilder::check_ops(e.op_count());
  return e;
}
Expression operator*(const Expression& a, const Expression& b) {
  Expression e = ExprBuilder::make_binary(ExprKind::Mul, a, b);
  ExprBuilder::check_ops(e.op_count());
  return e;
}
Expression operator/(const Expression& a, const Expression& b) {
  Expression e = ExprBuilder::make_binary(ExprKind::Div, a, b);
  ExprBuilder::check_ops(e.op_count());
  return e;
}
Expression Expression::operator-() const {
  return ExprBuilder::make_leaf(BigInt()) - *this;
}

Expression sqrt(const Expression& a) { return Expression::nth_root(a, 2); }

Expression Expression::nth_root(const Expression& a, unsigned degree) {
  if (degree < 2) throw std::invalid_argument("nth_root: degree must be >= 2");
  if (degree > expr_limits().max_root_degree)
    throw BudgetExceeded("root degree exceeds budget");
  Expression e = ExprBuilder::make_root(a, degree);
  ExprBuilder::check_ops(e.op_count());
  return e;
}

Expression Expression::root_of(unsigned j, std::vector<Expression> coeffs) {
  if (coeffs.size() < 2) throw std::invalid_argument("root_of: need degree >= 1");
  unsigned degree = static_cast<unsigned>(coeffs.size() - 1);
  if (j >= degree) throw std::invalid_argument("root_of: index must satisfy 0 <= j < degree");
  if (degree > expr_limits().max_root_degree)
    throw BudgetExceeded("polynomial root degree exceeds budget");
  Expression e = ExprBuilder::make_root_of(j, std::move(coeffs));
  ExprBuilder::check_ops(e.op_count());
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

// Exact evaluation in the radical tower. Bail means the value is outside the
// supported tower shape and the caller must use interval + separation bounds.
enum class EvalStatus { Value, Undefined, Bail };
struct EvalResult {
  EvalStatus status = EvalStatus::Bail;
  FieldNum value;
};

struct EvalCtx {
  FieldContext field;
  std::unordered_map<const ExprNode*, EvalResult> memo;
};

EvalResult field_eval_inner(const Expression& e, EvalCtx& ctx);

// Field-tower poisoning (base growth after a generator was admitted) aborts
// the exact path; the separation-bound path takes over.
EvalResult field_eval(const Expression& e, EvalCtx& ctx) {
  try {
    return field_eval_inner(e, ctx);
  } catch (const FieldPoisoned&) {
    return {EvalStatus::Bail, {}};
  }
}

EvalResult field_eval_inner(const Expression& e, EvalCtx& ctx) {
  auto it = ctx.memo.find(e.node());
  if (it != ctx.memo.end()) return it->second;
  EvalResult res;
  auto ret = [&](EvalResult r) {
    ctx.memo.emplace(e.node(), r);
    return r;
  };
  switch (e.kind()) {
    case ExprKind::Integer:
      res = {EvalStatus::Value, ctx.field.from_rational(Rational(e.leaf_value()))};
      return ret(res);
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div: {
      EvalResult a = field_eval(e.children()[0], ctx);
      EvalResult b = field_eval(e.children()[1], ctx);
      if (a.status == EvalStatus::Undefined || b.status == EvalStatus::Undefined)
        return ret({EvalStatus::Undefined, {}});
      if (a.status == EvalStatus::Bail || b.status == EvalStatus::Bail)
        return ret({EvalStatus::Bail, {}});
      switch (e.kind()) {
        case ExprKind::Add: res = {EvalStatus::Value, ctx.field.add(a.value, b.value)}; break;
        case ExprKind::Sub: res = {EvalStatus::Value, ctx.field.sub(a.value, b.value)}; break;
        case ExprKind::Mul: res = {EvalStatus::Value, ctx.field.mul(a.value, b.value)}; break;
        default:
          if (ctx.field.sign(b.value) == 0) return ret({EvalStatus::Undefined, {}});
          res = {EvalStatus::Value, ctx.field.div(a.value, b.value)};
      }
      return ret(res);
    }
    case ExprKind::Root: {
      EvalResult a = field_eval(e.children()[0], ctx);
      if (a.status != EvalStatus::Value) return ret(a);
      unsigned d = e.root_degree();
      int s = ctx.field.sign(a.value);
      if (d % 2 == 0 && s < 0) return ret({EvalStatus::Undefined, {}});
      if (s == 0) return ret({EvalStatus::Value, ctx.field.from_int(0)});
      // Odd part of the degree only folds through exact rational roots.
      FieldNum v = a.value;
      bool negate = false;
      if (s < 0) { v = ctx.field.neg(v); negate = true; }
      unsigned odd = d;
      unsigned twos = 0;
      while (odd % 2 == 0) { odd /= 2; ++twos; }
      if (odd > 1) {
        Rational r;
        if (!ctx.field.is_rational(v, &r)) return ret({EvalStatus::Bail, {}});
        bool en = false, ed = false;
        BigInt rn = BigInt::iroot(r.num, odd, &en);
        BigInt rd = BigInt::iroot(r.den, odd, &ed);
        if (!en || !ed) return ret({EvalStatus::Bail, {}});
        v = ctx.field.from_rational(Rational(rn, rd));
      }
      for (unsigned i = 0; i < twos; ++i) {
        auto sq = ctx.field.sqrt_nonneg(v);
        if (!sq) return ret({EvalStatus::Bail, {}});
        v = std::move(*sq);
      }
      if (negate) v = ctx.field.neg(v);
      return ret({EvalStatus::Value, std::move(v)});
    }
    case ExprKind::RootOf: {
      std::vector<FieldNum> coeffs;
      for (const Expression& c : e.children()) {
        EvalResult r = field_eval(c, ctx);
        if (r.status != EvalStatus::Value) return ret(r);
        coeffs.push_back(std::move(r.value));
      }
      size_t deg = coeffs.size() - 1;
      while (deg > 0 && ctx.field.sign(coeffs[deg]) == 0) --deg;
      unsigned j = e.root_index();
      if (deg == 0) return ret({EvalStatus::Undefined, {}});  // constant: no roots
      if (deg == 1) {
        if (j != 0) return ret({EvalStatus::Undefined, {}});
        return ret({EvalStatus::Value,
                    ctx.field.neg(ctx.field.div(coeffs[0], coeffs[1]))});
      }
      if (deg == 2) {
        FieldNum a2 = coeffs[2], a1 = coeffs[1], a0 = coeffs[0];
        FieldNum disc = ctx.field.sub(ctx.field.mul(a1, a1),
                                      ctx.field.mul(ctx.field.from_int(4), ctx.field.mul(a2, a0)));
        int ds = ctx.field.sign(disc);
        if (ds < 0) return ret({EvalStatus::Undefined, {}});
        if (ds == 0) {
          if (j != 0) return ret({EvalStatus::Undefined, {}});
          return ret({EvalStatus::Value,
                      ctx.field.div(ctx.field.neg(a1),
                                    ctx.field.mul(ctx.field.from_int(2), a2))});
        }
        auto sq = ctx.field.sqrt_nonneg(disc);
        if (!sq) return ret({EvalStatus::Bail, {}});
        FieldNum two_a = ctx.field.mul(ctx.field.from_int(2), a2);
        FieldNum rminus = ctx.field.div(ctx.field.sub(ctx.field.neg(a1), *sq), two_a);
        FieldNum rplus = ctx.field.div(ctx.field.add(ctx.field.neg(a1), *sq), two_a);
        bool plus_is_larger = ctx.field.sign(a2) > 0;
        FieldNum smaller = plus_is_larger ? rminus : rplus;
        FieldNum larger = plus_is_larger ? rplus : rminus;
        return ret({EvalStatus::Value, j == 0 ? std::move(smaller) : std::move(larger)});
      }
      return ret({EvalStatus::Bail, {}});
    }
  }
  return ret({EvalStatus::Bail, {}});
}

constexpr int kUndefinedSign = 2;

int sign_int(const Expression& e);  // forward

// Interval evaluation with exact gating of divisions and even roots.
// nullopt means an undefined sub-computation was discovered.
std::optional<Interval> interval_eval(const Expression& e, uint64_t prec,
                                      std::unordered_map<const ExprNode*, Interval>& memo) {
  auto it = memo.find(e.node());
  if (it != memo.end()) return it->second;
  std::optional<Interval> out;
  switch (e.kind()) {
    case ExprKind::Integer:
      out = Interval(Dyadic(e.leaf_value(), 0));
      break;
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul: {
      auto a = interval_eval(e.children()[0], prec, memo);
      auto b = interval_eval(e.children()[1], prec, memo);
      if (!a || !b) return std::nullopt;
      if (e.kind() == ExprKind::Add) out = Interval::add(*a, *b, prec);
      else if (e.kind() == ExprKind::Sub) out = Interval::sub(*a, *b, prec);
      else out = Interval::mul(*a, *b, prec);
      break;
    }
    case ExprKind::Div: {
      auto a = interval_eval(e.children()[0], prec, memo);
      auto b = interval_eval(e.children()[1], prec, memo);
      if (!a || !b) return std::nullopt;
      Interval den = *b;
      if (den.contains_zero()) {
        int s = sign_int(e.children()[1]);
        if (s == 0 || s == kUndefinedSign) return std::nullopt;
        // Denominator is certainly nonzero; refine it until the interval
        // agrees (terminates by the separation bound).
        uint64_t p2 = prec;
        while (den.contains_zero()) {
          p2 = p2 * 2;
          if (p2 > kMaxWorkingPrec)
            throw std::runtime_error("interval_eval: denominator refinement overflow");
          std::unordered_map<const ExprNode*, Interval> sub;
          auto maybe = interval_eval(e.children()[1], p2, sub);
          if (!maybe) return std::nullopt;
          den = *maybe;
        }
      }
      out = Interval::div(*a, den, prec);
      break;
    }
    case ExprKind::Root: {
      auto a = interval_eval(e.children()[0], prec, memo);
      if (!a) return std::nullopt;
      Interval v = *a;
      unsigned d = e.root_degree();
      if (d % 2 == 0 && v.lo.sign() < 0) {
        int s = sign_int(e.children()[0]);
        if (s == kUndefinedSign || s < 0) return std::nullopt;
        if (s == 0) { out = Interval(Dyadic(0)); break; }
        v.lo = Dyadic(0);
      }
      out = Interval::root(v, d, prec);
      break;
    }
    case ExprKind::RootOf: {
      RootEnclosure enc = enclose_real_root(e.root_index(), e.children(), prec);
      if (enc.is_undefined) return std::nullopt;
      out = enc.box;
      break;
    }
  }
  if (out) memo.emplace(e.node(), *out);
  return out;
}

int sign_via_intervals(const Expression& e) {
  uint64_t sep = e.bounds().separation_bits();
  bool sep_usable = sep <= kMaxSeparationBits;
  for (uint64_t prec = 64;; prec *= 2) {
    std::unordered_map<const ExprNode*, Interval> memo;
    auto iv = interval_eval(e, prec, memo);
    if (!iv) return kUndefinedSign;
    int s = iv->sign();
    if (s != 2) return s;
    if (sep_usable && prec >= sep + 8) {
      // Interval straddles zero; certify E == 0 when it sits strictly inside
      // the separation region (|E| < 2^-sep implies E == 0).
      int64_t thresh = -static_cast<int64_t>(sep);
      if (iv->lo.abs_less_than_pow2(thresh) && iv->hi.abs_less_than_pow2(thresh)) return 0;
    }
    if (prec > kMaxWorkingPrec)
      throw std::runtime_error(
          "sign: separation bound beyond supported precision; expression too deep");
  }
}

int sign_int(const Expression& e) {
  int8_t cached = e.node()->sign_cache.load(std::memory_order_acquire);
  if (cached != kSignUnknown) return cached;
  int s;
  EvalCtx ctx;
  EvalResult r = field_eval(e, ctx);
  if (r.status == EvalStatus::Value) s = ctx.field.sign(r.value);
  else if (r.status == EvalStatus::Undefined) s = kUndefinedSign;
  else s = sign_via_intervals(e);
  e.node()->sign_cache.store(static_cast<int8_t>(s), std::memory_order_release);
  return s;
}

}  // namespace

Sign sign(const Expression& e) {
  switch (sign_int(e)) {
    case -1: return Sign::Negative;
    case 0: return Sign::Zero;
    case 1: return Sign::Positive;
    default: return Sign::Undefined;
  }
}

Ordering compare(const Expression& a, const Expression& b) {
  switch (sign_int(ExprBuilder::make_binary(ExprKind::Sub, a, b))) {
    case -1: return Ordering::Less;
    case 0: return Ordering::Equal;
    case 1: return Ordering::Greater;
    default: return Ordering::Undefined;
  }
}

bool defined(const Expression& e) { return sign_int(e) != kUndefinedSign; }

Interval enclose(const Expression& e, uint64_t prec) {
  std::unordered_map<const ExprNode*, Interval> memo;
  auto iv = interval_eval(e, prec, memo);
  if (!iv) throw UndefinedExpr("enclose: undefined expression");
  return *iv;
}

Dyadic approximate(const Expression& e, uint64_t frac_bits) {
  if (!defined(e)) throw UndefinedExpr("approximate: undefined expression");
  for (uint64_t prec = std::max<uint64_t>(frac_bits + 8, 64);; prec *= 2) {
    Interval iv = enclose(e, prec);
    Dyadic w = iv.width();
    if (w.abs_less_than_pow2(-static_cast<int64_t>(frac_bits + 1))) {
      // Grid rounding plus half the enclosure width stays within 2^-frac_bits.
      return iv.mid().round_at(static_cast<int64_t>(frac_bits), 0);
    }
    if (prec > kMaxWorkingPrec)
      throw std::runtime_error("approximate: failed to converge");
  }
}

BigInt floor(const Expression& e) {
  if (!defined(e)) throw UndefinedExpr("floor: undefined expression");
  Dyadic q = approximate(e, 4);
  BigInt k = q.floor_scaled(0);
  auto diff_sign = [&](const BigInt& v) {
    return sign_int(ExprBuilder::make_binary(ExprKind::Sub, e,
                                             ExprBuilder::make_leaf(v)));
  };
  while (diff_sign(k) < 0) k = k - BigInt(1);
  while (diff_sign(k + BigInt(1)) >= 0) k = k + BigInt(1);
  return k;
}

BigInt ceil(const Expression& e) {
  BigInt k = floor(e);
  Expression diff = ExprBuilder::make_binary(ExprKind::Sub, e, ExprBuilder::make_leaf(k));
  return sign_int(diff) == 0 ? k : k + BigInt(1);
}

// ---------------------------------------------------------------------------

std::string to_sexpr(const Expression& e) {
  switch (e.kind()) {
    case ExprKind::Integer:
      return "(int " + e.leaf_value().to_decimal() + ")";
    case ExprKind::Add:
      return "(add " + to_sexpr(e.children()[0]) + " " + to_sexpr(e.children()[1]) + ")";
    case ExprKind::Sub:
      return "(sub " + to_sexpr(e.children()[0]) + " " + to_sexpr(e.children()[1]) + ")";
    case ExprKind::Mul:
      return "(mul " + to_sexpr(e.children()[0]) + " " + to_sexpr(e.children()[1]) + ")";
    case ExprKind::Div:
      return "(div " + to_sexpr(e.children()[0]) + " " + to_sexpr(e.children()[1]) + ")";
    case ExprKind::Root:
      return "(sqrt " + std::to_string(e.root_degree()) + " " + to_sexpr(e.children()[0]) + ")";
    case ExprKind::RootOf: {
      std::string s = "(root " + std::to_string(e.root_index());
      for (const Expression& c : e.children()) s += " " + to_sexpr(c);
      return s + ")";
    }
  }
  return "?";
}

namespace {

Expression rebuild_field_num(const FieldContext& field, const FieldNum& v);

Expression rebuild_mono(const FieldContext& field, const Mono& m) {
  Expression acc = ExprBuilder::make_leaf(BigInt(1));
  bool first = true;
  for (int32_t id : m) {
    Expression f = id >= kGenBase
        ? ExprBuilder::make_root(rebuild_field_num(field, field.gen_value(id - kGenBase)), 2)
        : ExprBuilder::make_root(ExprBuilder::make_leaf(field.atom_value(id)), 2);
    acc = first ? f : ExprBuilder::make_binary(ExprKind::Mul, acc, f);
    first = false;
  }
  return acc;
}

Expression rebuild_field_num(const FieldContext& field, const FieldNum& v) {
  Expression acc = ExprBuilder::make_leaf(BigInt(0));
  bool first = true;
  for (auto& [m, c] : v.terms) {
    Expression term = ExprBuilder::make_leaf(BigInt(0));
    if (m.empty()) {
      term = c.is_integer()
          ? ExprBuilder::make_leaf(c.num)
          : ExprBuilder::make_binary(ExprKind::Div, ExprBuilder::make_leaf(c.num),
                                     ExprBuilder::make_leaf(c.den));
    } else {
      Expression mono = rebuild_mono(field, m);
      if (c.is_integer()) {
        term = c.num.is_one()
            ? mono
            : ExprBuilder::make_binary(ExprKind::Mul, ExprBuilder::make_leaf(c.num), mono);
      } else {
        Expression num_mono = c.num.is_one()
            ? mono
            : ExprBuilder::make_binary(ExprKind::Mul, ExprBuilder::make_leaf(c.num), mono);
        term = ExprBuilder::make_binary(ExprKind::Div, num_mono, ExprBuilder::make_leaf(c.den));
      }
    }
    acc = first ? term : ExprBuilder::make_binary(ExprKind::Add, acc, term);
    first = false;
  }
  return acc;
}

}  // namespace

Expression simplified(const Expression& e) {
  EvalCtx ctx;
  EvalResult r = field_eval(e, ctx);
  if (r.status != EvalStatus::Value) return e;
  // The field numbers carry normalized monomials; make sure the rebuild sees
  // the final registry state.
  FieldNum v = ctx.field.add(r.value, ctx.field.from_int(0));
  Expression rebuilt = rebuild_field_num(ctx.field, v);
  return rebuilt.op_count() < e.op_count() ? rebuilt : e;
}

}  // namespace qg

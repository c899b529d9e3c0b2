#pragma once

#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <vector>

#include "quasigeo/dyadic.hpp"

namespace qg {

// Exact arithmetic in a real radical tower:
//   level 0: rationals
//   level 1: Q(sqrt(a_1), ..., sqrt(a_k)) for pairwise coprime integer atoms,
//            none of which is a perfect power
//   level 2: adjoined sqrt(g) for generators g in the level-1 field, with
//            subset products verified non-square in level 1
// A number is a rational linear combination of monomials; a monomial is a
// squarefree product of sqrt(atom) and sqrt(gen) factors. With the invariants
// above the monomials are linearly independent over Q, so the zero test is
// exact: all coordinates zero.
//
// The tower grows on demand. sqrt() returns nullopt when a request would leave
// the supported shape (nested radicals beyond level 2, unverifiable
// independence); callers fall back to separation-bound evaluation.
//
// Generators are verified against the level-1 base that exists when they are
// admitted. If the base later grows (a new atom appears or an atom splits)
// the verification is stale, so the context poisons itself and every further
// operation throws FieldPoisoned; evaluation must restart on the fallback
// path.

struct FieldPoisoned : std::exception {
  const char* what() const noexcept override {
    return "field tower invalidated by base growth after generator admission";
  }
};

// Monomial: sorted atom ids then gen ids (gen ids offset by kGenBase).
using Mono = std::vector<int32_t>;
constexpr int32_t kGenBase = 1 << 20;

struct FieldNum {
  uint64_t version = 0;  // registry version this was normalized against
  std::map<Mono, Rational> terms;

  bool is_zero() const { return terms.empty(); }
};

class FieldContext {
public:
  FieldNum from_rational(const Rational& r) const;
  FieldNum from_int(int64_t v) const { return from_rational(Rational(v)); }

  FieldNum neg(const FieldNum& a) const;
  FieldNum add(FieldNum a, FieldNum b);
  FieldNum sub(FieldNum a, FieldNum b);
  FieldNum mul(FieldNum a, FieldNum b);
  // Throws std::domain_error on division by zero.
  FieldNum div(FieldNum a, FieldNum b);
  FieldNum inverse(FieldNum a);

  // sqrt of a nonnegative value; nullopt if unsupported by the tower shape.
  std::optional<FieldNum> sqrt_nonneg(FieldNum a);

  // Exact sign: -1, 0, +1.
  int sign(FieldNum a);
  bool is_rational(FieldNum a, Rational* out = nullptr);

  // Certified enclosure at the given working precision.
  Interval approx(FieldNum a, uint64_t prec);

  size_t atom_count() const { return atoms_.size(); }
  size_t gen_count() const { return gens_.size(); }
  const BigInt& atom_value(int32_t id) const { return atoms_[id].value; }
  const FieldNum& gen_value(int32_t idx) const { return gens_[idx].value; }

  // Tower size guards; beyond these sqrt_nonneg bails.
  static constexpr size_t kMaxAtoms = 24;
  static constexpr size_t kMaxGens = 3;

private:
  struct Atom {
    BigInt value;       // > 1, not a perfect power while live
    bool retired = false;
    std::vector<std::pair<int32_t, uint32_t>> parts;  // refinement, with exponents
    Rational square_out{1};                           // rational factor extracted on retirement
  };
  struct Gen {
    FieldNum value;  // level-1 element (monomials over atoms only), positive, non-square
  };

  std::vector<Atom> atoms_;
  std::vector<Gen> gens_;
  uint64_t version_ = 0;
  bool poisoned_ = false;

  void check_poison() const {
    if (poisoned_) throw FieldPoisoned{};
  }
  void normalize(FieldNum& a) const;
  void add_term(FieldNum& out, Mono m, const Rational& coeff) const;
  // Multiplies a single term pair into out (handles duplicate generators).
  void mul_term(FieldNum& out, const Mono& ma, const Rational& ca,
                const Mono& mb, const Rational& cb) const;

  // Decomposes v >= 1 over the atom base, refining as needed.
  // Returns atom ids with exponents; may retire atoms (bumps version_).
  std::map<int32_t, uint32_t> decompose(BigInt v);
  int32_t new_atom(BigInt v);  // v > 1, coprime to all live atoms; extracts powers

  // Square test within level 1 restricted to elements over <= 1 atom.
  // Returns the square root if x is a perfect square; nullopt_inconclusive is
  // signalled via the bool: (ok, root).
  struct SquareTest { bool conclusive = false; bool is_square = false; FieldNum root; };
  SquareTest try_sqrt_level1(const FieldNum& x);

  Interval mono_approx(const Mono& m, uint64_t prec);
};

}  // namespace qg

#pragma once

#include <optional>

#include "quasigeo/poly.hpp"

namespace qg {

// Rounded mode re-rounds anchor coordinates to b fractional bits after every
// face transfer (the paper's policy, keeping expressions inside the operator
// budget); exact mode keeps algebraically exact anchors via simplification
// and is used by the oracle-grade tests and the verifier.
enum class TraceMode { Rounded, Exact };

struct TraceOptions {
  TraceMode mode = TraceMode::Rounded;
  bool enable_skip = true;  // periodic-block acceleration
  // Hard cap on explicitly stepped crossings (safety for misuse; the
  // periodicity skip keeps legitimate traces far below it).
  uint64_t max_steps = 1u << 22;
};

// Ray mid-trace: the directed line through anchor points p0 -> p1 in the
// face's chart. p0 is kept on the current entry point.
struct GeodesicState {
  int face = -1;
  int entry_side = -1;  // -1 at a segment start
  Vec2E p0, p1;
  Expression traversed{Expression::integer(0)};  // arc length up to p0
};

struct Crossing {
  int face = -1;
  int entry_side = -1;
  int exit_side = -1;
};

struct VertexHitInfo {
  int vertex = -1;
  int face = -1;
  Expression distance{Expression::integer(0)};  // arc length from the trace start
};

struct PeriodicBlockInfo {
  std::vector<Crossing> crossings;  // one period
  BigInt reps;                      // additional wraps skipped (not in prefix/residual)
  bool is_translation = false;
  Isometry2E phi;  // chart self-map advancing the ray by one period
};

// Face sequence of one traced piece: prefix, then block.crossings repeated
// block.reps more times, then residual.
struct TraceResult {
  std::vector<Crossing> prefix;
  std::optional<PeriodicBlockInfo> block;
  std::vector<Crossing> residual;
  std::optional<GeodesicState> endpoint;
  std::optional<VertexHitInfo> vertex_hit;
  bool hit_vertex() const { return vertex_hit.has_value(); }
  uint64_t explicit_crossings() const {
    return prefix.size() + residual.size();
  }
};

struct StepExit {
  int exit_side;
  Vec2E exit_point;
  GeodesicState next;
};
struct StepVertex {
  int corner;  // corner index in the current face
  int vertex;
  Vec2E corner_point;
  Expression distance_from_p0{Expression::integer(0)};
};
struct StepOutcome {
  std::optional<StepExit> exit;
  std::optional<StepVertex> vertex;
};

class DegenerateRay : public std::runtime_error {
public:
  explicit DegenerateRay(const std::string& what) : std::runtime_error(what) {}
};

class PrecisionExhausted : public std::runtime_error {
public:
  explicit PrecisionExhausted(const std::string& what) : std::runtime_error(what) {}
};

// One face: find the unique exit side (or a forward corner hit) by exact sign
// predicates, transfer the anchors across the gluing, and apply the rounding
// policy.
StepOutcome step_face(const Polyhedron& poly, const GeodesicState& state,
                      const TraceOptions& opt);

// Geodesic segment of length d < min_feature from a point with direction
// anchors. Steps until a (face, entry side) pair repeats, then classifies the
// periodic block and skips wraps in closed form.
TraceResult trace_segment(const Polyhedron& poly, const GeodesicState& start,
                          const Expression& d, const TraceOptions& opt);

// Chained trace over total length via half-feature-size chunks.
std::vector<TraceResult> trace_ray(const Polyhedron& poly, const GeodesicState& start,
                                   const Expression& total, const TraceOptions& opt);

// Periodic-block skip machinery, exposed for direct verification. The block
// is described in the unfolded frame of its first crossing: base copies of
// the exit edges (traversal order) plus the frame advance map taking copy k
// of every edge to copy k+1.
struct BlockGeometry {
  std::vector<std::pair<Vec2E, Vec2E>> edges;
  Isometry2E advance;      // frame map: copy k -> copy k+1
  bool is_translation = false;
};

struct SkipDecision {
  BigInt last_wrap;       // largest wrap index k such that copy k is crossed
  int exit_edge = -1;     // block edge index whose k is minimal (ties: earliest)
  bool unbounded = false; // the ray never leaves the periodic pattern
};

// Translation case: exact floors of the sweep-line intersection parameters.
SkipDecision skip_translation(const BlockGeometry& block, const Vec2E& ray_p0,
                              const Vec2E& ray_p1);
// Rotation case: certified trigonometric floors with exact incidence
// fallback near integer boundaries.
SkipDecision skip_rotation(const BlockGeometry& block, const Vec2E& ray_p0,
                           const Vec2E& ray_p1, uint64_t bits);

// Exact isometry power with per-squaring simplification.
Isometry2E isometry_power(const Isometry2E& m, BigInt k);
// Certified power evaluated numerically and rounded onto dyadic entries.
Isometry2E isometry_power_rounded(const Isometry2E& m, const BigInt& k, uint64_t prec);

// Replays a trace result crossing-by-crossing (expanding skipped wraps) and
// returns every crossing; test support for skip/naive equivalence at small
// repetition counts.
std::vector<Crossing> expand_crossings(const TraceResult& r);

}  // namespace qg

#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "quasigeo/expr.hpp"
#include "quasigeo/trig.hpp"

namespace qg {

struct Vec2E {
  Expression x, y;
};

// Proper planar isometry p -> R p + t with exact entries.
struct Isometry2E {
  Expression r00{Expression::integer(1)}, r01{Expression::integer(0)};
  Expression r10{Expression::integer(0)}, r11{Expression::integer(1)};
  Expression tx{Expression::integer(0)}, ty{Expression::integer(0)};

  Vec2E apply(const Vec2E& p) const;
  Vec2E apply_vector(const Vec2E& v) const;  // rotation only
  Isometry2E then(const Isometry2E& second) const;  // second(this(p))
  Isometry2E inverse() const;
  static Isometry2E identity() { return {}; }
};

struct FaceChart {
  int id = -1;
  std::vector<int> corner_vertices;  // vertex ids, counterclockwise
  std::vector<Vec2E> corners;        // chart coordinates, convex position
  int side_count() const { return static_cast<int>(corner_vertices.size()); }
  // Side i runs corner i -> corner (i+1) mod n.
};

struct SideRef {
  int face = -1;
  int side = -1;
  bool valid() const { return face >= 0; }
  friend bool operator==(const SideRef& a, const SideRef& b) {
    return a.face == b.face && a.side == b.side;
  }
};

struct EdgeGluing {
  SideRef a, b;
  Isometry2E a_to_b, b_to_a;
  Expression length{Expression::integer(0)};
};

struct FanIncidence {
  int face = -1;
  int corner = -1;  // corner index within the face
};

struct VertexFan {
  int vertex = -1;
  std::vector<FanIncidence> incidences;  // counterclockwise seen from outside
  std::vector<Interval> corner_angles;   // certified, one per incidence
  std::vector<Interval> cumulative;      // cumulative[i] = sum of the first i angles
  Interval total_angle;
  Interval curvature;  // 2 pi - total
};

enum class PolyErrorCode {
  NonPlanarFace,
  NonConvexFace,
  NonConvexVertex,
  OpenSurface,
  LengthMismatch,
  InputParse,
};

class PolyError : public std::runtime_error {
public:
  PolyError(PolyErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  PolyErrorCode code() const { return code_; }

private:
  PolyErrorCode code_;
};

// Intrinsic polyhedron model: per-face charts glued by exact isometries, with
// certified vertex fans and the scale parameters the algorithm consumes.
class Polyhedron {
public:
  static Polyhedron from_extrinsic(const std::vector<std::array<Expression, 3>>& vertices,
                                   const std::vector<std::vector<int>>& faces,
                                   uint32_t bits = 64);
  static Polyhedron from_intrinsic(std::vector<FaceChart> charts, uint32_t bits = 64);

  int vertex_count() const { return static_cast<int>(fans_.size()); }
  int face_count() const { return static_cast<int>(faces_.size()); }
  int edge_count() const { return static_cast<int>(gluings_.size()); }

  const FaceChart& face(int f) const { return faces_[f]; }
  const std::vector<FaceChart>& faces() const { return faces_; }
  const VertexFan& fan(int v) const { return fans_[v]; }
  const std::vector<EdgeGluing>& gluings() const { return gluings_; }

  SideRef neighbor(int face, int side) const;
  // Chart-to-chart transfer across a side: chart(face) -> chart(neighbor).
  const Isometry2E& transfer(int face, int side) const;
  const Expression& side_length(int face, int side) const;

  Interval curvature_bounds(int v) const { return fans_[v].curvature; }

  // Scale parameters (Theorem symbols): certified lower bound on the minimum
  // curvature, longest edge L, face feature size ell, largest face diameter.
  const Dyadic& min_curvature_lower() const { return eps_lower_; }
  const Expression& longest_edge() const { return longest_edge_; }
  const Expression& min_feature() const { return min_feature_; }
  const Expression& max_face_diameter() const { return max_face_diameter_; }

  uint32_t bits() const { return bits_; }
  // Expression budget wide enough for predicates over this polyhedron's
  // charts (the model's constants c, b are fixed per input class).
  const ExprLimits& working_limits() const { return limits_; }

  // Angular precision used for fan certification.
  uint64_t angle_precision() const { return bits_ / 2 + 16; }

private:
  std::vector<FaceChart> faces_;
  std::vector<EdgeGluing> gluings_;
  std::vector<VertexFan> fans_;
  // (face, side) -> gluing index and direction.
  std::vector<std::vector<std::pair<int, bool>>> side_gluing_;
  Dyadic eps_lower_;
  Expression longest_edge_{Expression::integer(0)};
  Expression min_feature_{Expression::integer(0)};
  Expression max_face_diameter_{Expression::integer(0)};
  uint32_t bits_ = 64;
  ExprLimits limits_;

  void build(bool validate_side_lengths);
  void build_gluings(bool validate_side_lengths);
  void build_fans();
  void compute_scale_parameters();
  void compute_limits();
};

// Exact 2D helpers over expressions.
Expression dot2(const Vec2E& a, const Vec2E& b);
Expression cross2(const Vec2E& a, const Vec2E& b);
Vec2E sub2(const Vec2E& a, const Vec2E& b);
Vec2E add2(const Vec2E& a, const Vec2E& b);
Expression squared_distance(const Vec2E& a, const Vec2E& b);

// Certified enclosure of a chart point.
struct Vec2I {
  Interval x, y;
};
Vec2I enclose2(const Vec2E& p, uint64_t prec);

}  // namespace qg

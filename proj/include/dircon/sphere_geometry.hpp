#pragma once

#include <array>
#include <optional>
#include <vector>

#include "dircon/linalg3.hpp"
#include "dircon/system_model.hpp"

namespace dircon {

/// Great circle through span_a and span_b. For a real-spectrum sample k,
/// `axis` i names the circle "around" E^k_i, i.e. through the other two
/// eigenvectors. axis 0 marks the invariant circle of a complex sample.
struct GreatCircle {
  int owner = 0;
  int axis = 0;
  UnitVec3 span_a = UnitVec3::UnitX();
  UnitVec3 span_b = UnitVec3::UnitY();
  UnitVec3 normal = UnitVec3::UnitZ();
};

GreatCircle make_circle(int owner, int axis, const UnitVec3& a, const UnitVec3& b);

/// Invariant triangle of a real sample with vertices (s1 E1, s2 E2, s3 E3):
/// source, saddle, sink.
struct OctantTriangle {
  int owner = 0;
  std::array<int, 3> signs{1, 1, 1};
  std::array<UnitVec3, 3> v{};
};

/// One outgoing separatrix arc of sample `owner`: from the saddle
/// saddle_sign*E2 to the sink sink_sign*E3 along `carrier` (through E2, E3).
/// The two arcs leaving one saddle form the semicircle Sep(saddle_sign).
struct SeparatrixArc {
  int owner = 0;
  int saddle_sign = 1;
  int sink_sign = 1;
  UnitVec3 saddle = UnitVec3::UnitY();
  UnitVec3 sink = UnitVec3::UnitZ();
  GreatCircle carrier;
};

/// Which vertex of the triangle the separatrix chord cuts off.
enum class CutCase { kSource = 1, kSaddle = 2, kSink = 3 };

std::string_view to_string(CutCase c);

/// Open region {p : p inside triangle, p on keep_vertex's side of cut}.
struct Region {
  OctantTriangle triangle;
  GreatCircle cut_circle;
  UnitVec3 keep_vertex = UnitVec3::UnitZ();
  int source_owner = 0;  // j: owner of the separatrix doing the cut
  CutCase cut_case = CutCase::kSink;
  int via = -1;          // certificate step that produced it
};

struct RealCells {
  int owner = 0;
  RealDistinct spectrum;
  std::array<GreatCircle, 3> circles;  // circles[i] is C_{i+1}
  std::array<OctantTriangle, 8> triangles;
  std::array<SeparatrixArc, 4> separatrices;

  /// Triangle with the given vertex signs.
  const OctantTriangle& triangle(const std::array<int, 3>& signs) const;
};

struct ComplexCells {
  int owner = 0;
  ComplexPair spectrum;
  DynClass dyn_class = DynClass::kComplexAttractingCycle;
  GreatCircle circle;
  std::array<UnitVec3, 2> poles{};
};

struct CellComplex {
  std::vector<RealCells> real;
  std::vector<ComplexCells> complex;

  const RealCells& real_cells(int owner) const;
};

/// +1 when q and p lie in opposite open half-spheres of c, -1 when they
/// share one. Throws DegenerateIncidence if either point is on c.
int separation_sign(const UnitVec3& q, const GreatCircle& c, const UnitVec3& p,
                    double eps_geom);

/// +1 when q is interior to t, -1 otherwise. Throws DegenerateIncidence if q
/// lies on a side circle of t and is not strictly outside another side.
int triangle_membership(const UnitVec3& q, const OctantTriangle& t, double eps_geom);

/// Same predicate, returning nullopt instead of throwing on the boundary.
std::optional<bool> inside_triangle(const UnitVec3& q, const OctantTriangle& t,
                                    double eps_geom);

CellComplex build_cell_complex(const SubsystemUN& sub, double eps_geom);

/// Region with the keep vertex implied by the cut case.
Region make_region(const OctantTriangle& triangle, const GreatCircle& cut,
                   CutCase cut_case, int source_owner);

/// Open-set membership; points within eps_geom of any boundary are outside.
bool region_membership(const UnitVec3& p, const Region& r, double eps_geom);

/// m deterministic interior points of r. Throws EmptyRegion when the
/// barycentric refinement finds fewer than m.
std::vector<UnitVec3> region_sample_points(const Region& r, int m,
                                           double eps_geom);

struct CircleHit {
  bool intersects = false;
  int evaluations = 0;
  std::optional<UnitVec3> witness;
};

/// Tests m equispaced points of c for membership in r. A hit is a proof of
/// intersection; a miss only means none was seen at this resolution.
CircleHit circle_region_intersect(const GreatCircle& c, const Region& r, int m,
                                  double eps_geom);

/// Point at geodesic distance `angle` from v, moved toward `toward`.
UnitVec3 nudge_toward(const UnitVec3& v, const UnitVec3& toward, double angle);

}  // namespace dircon

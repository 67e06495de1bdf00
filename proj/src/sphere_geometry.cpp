#include "dircon/sphere_geometry.hpp"

#include <cmath>
#include <numbers>

#include "dircon/errors.hpp"

namespace dircon {

namespace {

int triangle_slot(const std::array<int, 3>& signs) {
  return (signs[0] < 0 ? 4 : 0) | (signs[1] < 0 ? 2 : 0) | (signs[2] < 0 ? 1 : 0);
}

std::array<int, 3> slot_signs(int slot) {
  return {slot & 4 ? -1 : 1, slot & 2 ? -1 : 1, slot & 1 ? -1 : 1};
}

// Side of q relative to the plane of (a, b); nullopt within eps of it.
std::optional<int> side(const UnitVec3& q, const UnitVec3& a, const UnitVec3& b,
                        double eps_geom) {
  const double d = mixed_product(q, a, b);
  if (!(std::abs(d) > eps_geom)) return std::nullopt;
  return d > 0 ? 1 : -1;
}

}  // namespace

std::string_view to_string(CutCase c) {
  switch (c) {
    case CutCase::kSource: return "source";
    case CutCase::kSaddle: return "saddle";
    case CutCase::kSink: return "sink";
  }
  return "unknown";
}

GreatCircle make_circle(int owner, int axis, const UnitVec3& a, const UnitVec3& b) {
  GreatCircle c;
  c.owner = owner;
  c.axis = axis;
  c.span_a = a;
  c.span_b = b;
  const Vec3 n = a.cross(b);
  const double len = n.norm();
  if (!(len > 0.0)) {
    throw Error(ErrorKind::kDegenerateGeometry, "circle spanned by parallel vectors");
  }
  c.normal = n / len;
  return c;
}

const OctantTriangle& RealCells::triangle(const std::array<int, 3>& signs) const {
  return triangles[triangle_slot(signs)];
}

const RealCells& CellComplex::real_cells(int owner) const {
  for (const auto& rc : real) {
    if (rc.owner == owner) return rc;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "sample " + std::to_string(owner) + " has no real cell decomposition");
}

int separation_sign(const UnitVec3& q, const GreatCircle& c, const UnitVec3& p,
                    double eps_geom) {
  const auto sq = side(q, c.span_a, c.span_b, eps_geom);
  const auto sp = side(p, c.span_a, c.span_b, eps_geom);
  if (!sq || !sp) {
    throw Error(ErrorKind::kDegenerateIncidence,
                "point lies on circle " + std::to_string(c.axis) + " of sample " +
                    std::to_string(c.owner));
  }
  return *sq * *sp < 0 ? 1 : -1;
}

std::optional<bool> inside_triangle(const UnitVec3& q, const OctantTriangle& t,
                                    double eps_geom) {
  // A point strictly beyond any side is outside even if it touches another.
  bool touches = false;
  for (int i = 0; i < 3; ++i) {
    const UnitVec3& a = t.v[(i + 1) % 3];
    const UnitVec3& b = t.v[(i + 2) % 3];
    const auto sq = side(q, a, b, eps_geom);
    if (!sq) {
      touches = true;
      continue;
    }
    if (*sq * mixed_product(t.v[i], a, b) < 0) return false;
  }
  if (touches) return std::nullopt;
  return true;
}

int triangle_membership(const UnitVec3& q, const OctantTriangle& t, double eps_geom) {
  const auto inside = inside_triangle(q, t, eps_geom);
  if (!inside) {
    throw Error(ErrorKind::kDegenerateIncidence,
                "point lies on a side of a triangle of sample " + std::to_string(t.owner));
  }
  return *inside ? 1 : -1;
}

CellComplex build_cell_complex(const SubsystemUN& sub, double eps_geom) {
  CellComplex cx;
  for (int k : sub.real_idx) {
    const RealDistinct& rd = sub.samples[k].real();
    RealCells rc;
    rc.owner = k;
    rc.spectrum = rd;
    const auto& e = rd.e;
    rc.circles[0] = make_circle(k, 1, e[1], e[2]);
    rc.circles[1] = make_circle(k, 2, e[0], e[2]);
    rc.circles[2] = make_circle(k, 3, e[0], e[1]);
    for (int slot = 0; slot < 8; ++slot) {
      OctantTriangle& t = rc.triangles[slot];
      t.owner = k;
      t.signs = slot_signs(slot);
      for (int i = 0; i < 3; ++i) t.v[i] = t.signs[i] * e[i];
      if (!(std::abs(mixed_product(t.v[0], t.v[1], t.v[2])) > eps_geom)) {
        throw Error(ErrorKind::kDegenerateGeometry,
                    "flat octant triangle for sample " + std::to_string(k));
      }
    }
    int n = 0;
    for (int saddle : {1, -1}) {
      for (int sink : {1, -1}) {
        SeparatrixArc& arc = rc.separatrices[n++];
        arc.owner = k;
        arc.saddle_sign = saddle;
        arc.sink_sign = sink;
        arc.saddle = saddle * e[1];
        arc.sink = sink * e[2];
        arc.carrier = rc.circles[0];
      }
    }
    cx.real.push_back(rc);
  }
  for (int j : sub.complex_idx) {
    const ComplexPair& cp = sub.samples[j].complex();
    ComplexCells cc;
    cc.owner = j;
    cc.spectrum = cp;
    cc.dyn_class = sub.samples[j].dyn_class;
    cc.circle = make_circle(j, 0, cp.p1, cp.p2);
    cc.poles = {cp.e_r, UnitVec3(-cp.e_r)};
    cx.complex.push_back(cc);
  }
  return cx;
}

Region make_region(const OctantTriangle& triangle, const GreatCircle& cut,
                   CutCase cut_case, int source_owner) {
  Region r;
  r.triangle = triangle;
  r.cut_circle = cut;
  r.cut_case = cut_case;
  r.source_owner = source_owner;
  r.keep_vertex = cut_case == CutCase::kSaddle ? triangle.v[1] : triangle.v[2];
  return r;
}

bool region_membership(const UnitVec3& p, const Region& r, double eps_geom) {
  const auto inside = inside_triangle(p, r.triangle, eps_geom);
  if (!inside || !*inside) return false;
  const auto sp = side(p, r.cut_circle.span_a, r.cut_circle.span_b, eps_geom);
  const auto sk = side(r.keep_vertex, r.cut_circle.span_a, r.cut_circle.span_b, eps_geom);
  return sp && sk && *sp == *sk;
}

std::vector<UnitVec3> region_sample_points(const Region& r, int m, double eps_geom) {
  if (m < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one sample point");
  const auto& v = r.triangle.v;
  for (int level = 4; level <= 512; level *= 2) {
    std::vector<UnitVec3> hits;
    for (int i = 1; i < level; ++i) {
      for (int j = 1; i + j < level; ++j) {
        const int k = level - i - j;
        const Vec3 p = (i * v[0] + j * v[1] + k * v[2]).normalized();
        if (region_membership(p, r, eps_geom)) hits.push_back(p);
      }
    }
    if (static_cast<int>(hits.size()) >= m) {
      std::vector<UnitVec3> picked;
      picked.reserve(m);
      const double stride = static_cast<double>(hits.size()) / m;
      for (int h = 0; h < m; ++h) {
        picked.push_back(hits[static_cast<std::size_t>((h + 0.5) * stride)]);
      }
      return picked;
    }
  }
  throw Error(ErrorKind::kEmptyRegion,
              "no interior points found in region over triangle of sample " +
                  std::to_string(r.triangle.owner));
}

CircleHit circle_region_intersect(const GreatCircle& c, const Region& r, int m,
                                  double eps_geom) {
  if (m < 64) throw Error(ErrorKind::kInvalidArgument, "circle resolution must be >= 64");
  const UnitVec3 a = c.span_a.normalized();
  const UnitVec3 b = c.normal.cross(a).normalized();
  CircleHit hit;
  for (int i = 0; i < m; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / m;
    const UnitVec3 p = std::cos(theta) * a + std::sin(theta) * b;
    ++hit.evaluations;
    if (region_membership(p, r, eps_geom) && !hit.intersects) {
      hit.intersects = true;
      hit.witness = p;
    }
  }
  return hit;
}

UnitVec3 nudge_toward(const UnitVec3& v, const UnitVec3& toward, double angle) {
  const Vec3 tangent = toward - toward.dot(v) * v;
  const double len = tangent.norm();
  if (!(len > 0.0)) {
    throw Error(ErrorKind::kDegenerateGeometry, "nudge direction parallel to vertex");
  }
  return (std::cos(angle) * v + std::sin(angle) * tangent / len).normalized();
}

}  // namespace dircon

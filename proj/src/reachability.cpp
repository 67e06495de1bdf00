#include "dircon/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "dircon/dynamics.hpp"
#include "dircon/errors.hpp"

namespace dircon {

namespace {

double side_product(const UnitVec3& q, const UnitVec3& p, const UnitVec3& a,
                    const UnitVec3& b) {
  return mixed_product(q, a, b) * mixed_product(p, a, b);
}

std::string tag(const char* what, int owner) {
  return std::string(what) + "[" + std::to_string(owner) + "]";
}

// Logs the three same-side products that certify q is inside t.
void log_inside(std::vector<PredicateLog>& log, const std::string& name,
                const UnitVec3& q, const OctantTriangle& t) {
  for (int i = 0; i < 3; ++i) {
    const UnitVec3& a = t.v[(i + 1) % 3];
    const UnitVec3& b = t.v[(i + 2) % 3];
    log.push_back({name + " inside triangle " + tag("sample", t.owner) + " side " +
                       std::to_string(i + 1),
                   side_product(q, t.v[i], a, b), true});
  }
}

// Logs one opposite-side product that certifies q is outside t.
void log_outside(std::vector<PredicateLog>& log, const std::string& name,
                 const UnitVec3& q, const OctantTriangle& t) {
  for (int i = 0; i < 3; ++i) {
    const UnitVec3& a = t.v[(i + 1) % 3];
    const UnitVec3& b = t.v[(i + 2) % 3];
    const double v = side_product(q, t.v[i], a, b);
    if (v < 0.0) {
      log.push_back({name + " outside triangle " + tag("sample", t.owner) + " side " +
                         std::to_string(i + 1),
                     v, false});
      return;
    }
  }
}

struct Crossing {
  UnitVec3 point;
  double time = 0.0;
};

// First sign change of det(q(t), a, b) along the closed-form flow from q0.
std::optional<Crossing> find_crossing(const ExactFlow& flow, const UnitVec3& q0,
                                      const UnitVec3& a, const UnitVec3& b,
                                      double dt, double t_max) {
  const bool s0 = mixed_product(q0, a, b) > 0.0;
  double lo = 0.0;
  for (double t = dt; t <= t_max; t += dt) {
    const UnitVec3 q = flow.on_sphere(q0, t);
    if ((mixed_product(q, a, b) > 0.0) != s0) {
      double hi = t;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((mixed_product(flow.on_sphere(q0, mid), a, b) > 0.0) == s0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return Crossing{flow.on_sphere(q0, hi), hi};
    }
    lo = t;
  }
  return std::nullopt;
}

bool has_saddle(const ReachClosure& c, int owner, int sign) {
  return std::any_of(c.co1.begin(), c.co1.end(), [&](const CO1Entry& e) {
    return e.owner == owner && e.sign == sign;
  });
}

bool has_region(const ReachClosure& c, const Region& r) {
  return std::any_of(c.co2.begin(), c.co2.end(), [&](const Region& x) {
    return x.source_owner == r.source_owner && x.triangle.owner == r.triangle.owner &&
           x.triangle.signs == r.triangle.signs && x.cut_case == r.cut_case;
  });
}

const OctantTriangle& containing_triangle(const UnitVec3& q, const RealCells& cells,
                                          double eps_geom) {
  for (const auto& t : cells.triangles) {
    if (triangle_membership(q, t, eps_geom) == 1) return t;
  }
  throw Error(ErrorKind::kDegenerateGeometry,
              "octant triangles of sample " + std::to_string(cells.owner) +
                  " do not cover the point");
}

UnitVec3 centroid(const OctantTriangle& t) {
  return (t.v[0] + t.v[1] + t.v[2]).normalized();
}

}  // namespace

std::vector<CO1Entry> first_type_step(const UnitVec3& from, const CellComplex& complex,
                                      ReachClosure& closure, const Settings& settings) {
  const double eps = settings.eps_geom;
  std::vector<CO1Entry> fresh;
  for (const RealCells& ck : complex.real) {
    const OctantTriangle& tri = containing_triangle(from, ck, eps);
    const UnitVec3& sink = tri.v[2];
    const ExactFlow flow(ck.spectrum);
    const auto& lk = ck.spectrum.lambda;
    const double dt = 0.02 / (lk[2] - lk[0]);
    const double t_max = 60.0 / flow.min_rate_gap();
    for (const RealCells& cj : complex.real) {
      if (cj.owner == ck.owner) continue;
      const GreatCircle& incoming = cj.circles[2];
      if (separation_sign(from, incoming, sink, eps) != 1) continue;
      const auto& e = cj.spectrum.e;
      const auto crossing = find_crossing(flow, from, e[0], e[1], dt, t_max);
      if (!crossing) {
        throw Error(ErrorKind::kDegenerateIncidence,
                    "trajectory never crossed the separating circle");
      }
      const double arc = mixed_product(crossing->point, e[2], e[0]);
      if (!(std::abs(arc) > eps)) {
        throw Error(ErrorKind::kDegenerateIncidence, "crossing hit a source vertex");
      }
      const int sign = arc * mixed_product(e[1], e[2], e[0]) > 0.0 ? 1 : -1;
      if (has_saddle(closure, cj.owner, sign)) continue;

      CO1Entry entry;
      entry.saddle = sign * e[1];
      entry.owner = cj.owner;
      entry.sign = sign;
      entry.side_ref = mixed_product(from, e[0], e[1]) > 0.0 ? 1 : -1;
      entry.via = static_cast<int>(closure.certificate.size());

      FirstTypeStep step;
      step.from = from;
      step.k = ck.owner;
      step.j = cj.owner;
      step.triangle = tri;
      step.entry = entry;
      step.crossing = crossing->point;
      step.crossing_time = crossing->time;
      log_inside(step.predicates, "from", from, tri);
      step.predicates.push_back({"circle C3" + tag("", cj.owner) + " separates from and sink",
                                 side_product(from, sink, e[0], e[1]), false});
      step.predicates.push_back({"crossing on arc of saddle " + std::to_string(sign) + "E2",
                                 side_product(crossing->point, entry.saddle, e[2], e[0]),
                                 true});
      closure.certificate.push_back(step);
      closure.co1.push_back(entry);
      fresh.push_back(entry);
    }
  }
  return fresh;
}

std::vector<std::pair<Region, std::optional<CO1Entry>>> second_type_step(
    const CO1Entry& entry, const CellComplex& complex, ReachClosure& closure,
    const Settings& settings) {
  const double eps = settings.eps_geom;
  const RealCells& cj = complex.real_cells(entry.owner);
  const GreatCircle& carrier = cj.circles[0];
  const UnitVec3& e3 = cj.spectrum.e[2];
  const UnitVec3& saddle = entry.saddle;

  std::vector<std::pair<Region, std::optional<CO1Entry>>> fresh;
  for (const RealCells& cl : complex.real) {
    if (cl.owner == entry.owner) continue;
    for (const OctantTriangle& tri : cl.triangles) {
      if (triangle_membership(saddle, tri, eps) != 1) continue;
      if (triangle_membership(e3, tri, eps) == 1) continue;
      if (triangle_membership(UnitVec3(-e3), tri, eps) == 1) continue;

      const auto& v = tri.v;
      const int s12 = separation_sign(v[0], carrier, v[1], eps);
      const int s13 = separation_sign(v[0], carrier, v[2], eps);
      const int s23 = separation_sign(v[1], carrier, v[2], eps);
      const bool cut_source = s12 == 1 && s13 == 1;
      const bool cut_saddle = s12 == 1 && s23 == 1;
      const bool cut_sink = s13 == 1 && s23 == 1;
      if (cut_source + cut_saddle + cut_sink != 1) {
        throw Error(ErrorKind::kAmbiguousCut,
                    "separatrix of sample " + std::to_string(entry.owner) +
                        " does not cut exactly one vertex of a triangle of sample " +
                        std::to_string(cl.owner));
      }
      const CutCase cut = cut_source ? CutCase::kSource
                          : cut_saddle ? CutCase::kSaddle
                                       : CutCase::kSink;
      Region region = make_region(tri, carrier, cut, entry.owner);
      if (has_region(closure, region)) continue;
      const int step_id = static_cast<int>(closure.certificate.size());
      region.via = step_id;

      SecondTypeStep step;
      step.entry = entry;
      step.l = cl.owner;
      step.cut_case = cut;
      step.region = region;
      log_inside(step.predicates, "saddle", saddle, tri);
      log_outside(step.predicates, "+E3", e3, tri);
      log_outside(step.predicates, "-E3", UnitVec3(-e3), tri);
      const auto& a = carrier.span_a;
      const auto& b = carrier.span_b;
      step.predicates.push_back({"carrier vs v1,v2", side_product(v[0], v[1], a, b), s12 != 1});
      step.predicates.push_back({"carrier vs v1,v3", side_product(v[0], v[2], a, b), s13 != 1});
      step.predicates.push_back({"carrier vs v2,v3", side_product(v[1], v[2], a, b), s23 != 1});

      std::optional<CO1Entry> new_saddle;
      if (cut != CutCase::kSink && !has_saddle(closure, cl.owner, tri.signs[1])) {
        const auto& el = cl.spectrum.e;
        CO1Entry e;
        e.saddle = v[1];
        e.owner = cl.owner;
        e.sign = tri.signs[1];
        e.side_ref = mixed_product(v[2], el[0], el[1]) > 0.0 ? 1 : -1;
        e.via = step_id;
        new_saddle = e;
        closure.co1.push_back(e);
      }
      step.new_saddle = new_saddle;
      closure.certificate.push_back(step);
      closure.co2.push_back(region);
      fresh.emplace_back(region, new_saddle);
    }
  }
  return fresh;
}

ReachClosure compute_closure(const UnitVec3& seed, const CellComplex& complex,
                             const Settings& settings) {
  if (settings.max_iter < 1) {
    throw Error(ErrorKind::kInvalidArgument, "max_iter must be >= 1");
  }
  ReachClosure closure;
  closure.seed = seed;
  std::vector<UnitVec3> pending{seed};
  bool seed_round = true;
  std::size_t next_co1 = 0;
  std::size_t next_co2 = 0;
  bool converged = false;
  for (int sweep = 0; sweep < settings.max_iter; ++sweep) {
    closure.sweeps = sweep + 1;
    for (const UnitVec3& p : pending) {
      if (seed_round) {
        first_type_step(p, complex, closure, settings);
        continue;
      }
      try {
        first_type_step(p, complex, closure, settings);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateIncidence) throw;
        ++closure.skipped_points;
      }
    }
    seed_round = false;
    pending.clear();
    while (next_co1 < closure.co1.size()) {
      const CO1Entry entry = closure.co1[next_co1++];
      second_type_step(entry, complex, closure, settings);
    }
    while (next_co2 < closure.co2.size()) {
      const Region& r = closure.co2[next_co2++];
      try {
        for (const UnitVec3& p :
             region_sample_points(r, settings.samples_per_region, settings.eps_geom)) {
          pending.push_back(p);
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kEmptyRegion) throw;
      }
    }
    if (pending.empty()) {
      converged = true;
      break;
    }
  }
  closure.partial = !converged;
  return closure;
}

bool in_co2(const UnitVec3& p, const std::vector<ReachClosure>& closures,
            double eps_geom) {
  for (const auto& c : closures) {
    for (const auto& r : c.co2) {
      if (region_membership(p, r, eps_geom)) return true;
    }
  }
  return false;
}

bool vertex_covered(const UnitVec3& vertex, const std::vector<UnitVec3>& toward,
                    const std::vector<ReachClosure>& closures, const Settings& settings) {
  if (toward.empty()) return false;
  for (const UnitVec3& t : toward) {
    if (!in_co2(nudge_toward(vertex, t, settings.eps_nudge), closures, settings.eps_geom)) {
      return false;
    }
  }
  return true;
}

std::string_view to_string(Theorem t) {
  switch (t) {
    case Theorem::kA: return "A";
    case Theorem::kB: return "B";
    case Theorem::kC: return "C";
  }
  return "?";
}

std::vector<UnitVec3> sink_seeds(const RealCells& cells, int sign, double eps_nudge) {
  std::vector<UnitVec3> seeds;
  const UnitVec3 vertex = sign * cells.spectrum.e[2];
  for (const auto& t : cells.triangles) {
    if (t.signs[2] == sign) seeds.push_back(nudge_toward(vertex, centroid(t), eps_nudge));
  }
  return seeds;
}

namespace {

std::optional<std::string> gate(const ConditionReport& conditions) {
  if (!conditions.cc34.cc3 || !conditions.cc34.cc4) {
    std::string reason = "genericity conditions fail";
    if (!conditions.cc34.violations.empty()) reason += ": " + conditions.cc34.violations.front();
    return reason;
  }
  if (!conditions.cc1.holds) return std::string("rank condition fails on the sphere grid");
  return std::nullopt;
}

std::vector<ReachClosure> closures_from(const RealCells& cells, int sign,
                                        const CellComplex& complex,
                                        const Settings& settings) {
  std::vector<ReachClosure> out;
  for (const UnitVec3& seed : sink_seeds(cells, sign, settings.eps_nudge)) {
    out.push_back(compute_closure(seed, complex, settings));
  }
  return out;
}

std::vector<UnitVec3> source_directions(const RealCells& cells, int sign) {
  std::vector<UnitVec3> toward;
  for (const auto& t : cells.triangles) {
    if (t.signs[0] == sign) toward.push_back(centroid(t));
  }
  return toward;
}

std::vector<ReachClosure> concat(std::vector<ReachClosure> a,
                                 const std::vector<ReachClosure>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

Verdict decide_theorem_a(const SubsystemUN& sub, const CellComplex& complex,
                         const ConditionReport& conditions, const Settings& settings) {
  if (sub.real_idx.size() < 2 || complex.real.size() < 2) {
    return Inconclusive{"no separating circles: fewer than two real-spectrum samples", {}};
  }
  if (auto reason = gate(conditions)) return Inconclusive{*reason, {}};
  std::vector<ReachClosure> computed;
  try {
    for (const RealCells& cs : complex.real) {
      const auto plus = closures_from(cs, 1, complex, settings);
      const auto minus = closures_from(cs, -1, complex, settings);
      bool ok = true;
      for (int sign : {1, -1}) {
        const UnitVec3 source = sign * cs.spectrum.e[0];
        const auto toward = source_directions(cs, sign);
        ok = ok && vertex_covered(source, toward, plus, settings) &&
             vertex_covered(source, toward, minus, settings);
      }
      if (ok) {
        Controllable c;
        c.theorem = Theorem::kA;
        c.witness = {cs.owner};
        c.detail = "both source vertices of sample " + std::to_string(cs.owner) +
                   " lie in the reach regions seeded at both of its sinks";
        c.closures = concat(plus, minus);
        return c;
      }
      computed = concat(std::move(computed), concat(plus, minus));
    }
  } catch (const Error& e) {
    return Inconclusive{std::string("degenerate geometry during closure: ") + e.what(),
                        computed};
  }
  return Inconclusive{
      "no real sample has both source vertices covered from both of its sinks", computed};
}

Verdict decide_theorem_b(const SubsystemUN& sub, const CellComplex& complex,
                         const ConditionReport& conditions, const Settings& settings) {
  if (sub.complex_idx.empty() || complex.complex.empty()) {
    return Inconclusive{"no complex-spectrum sample", {}};
  }
  if (sub.real_idx.empty() || complex.real.empty()) {
    return Inconclusive{"empty real subsystem", {}};
  }
  if (auto reason = gate(conditions)) return Inconclusive{*reason, {}};
  std::vector<ReachClosure> computed;
  try {
    for (const RealCells& cs : complex.real) {
      const auto plus = closures_from(cs, 1, complex, settings);
      const auto minus = closures_from(cs, -1, complex, settings);
      for (const ComplexCells& cc : complex.complex) {
        bool ok = false;
        std::string detail;
        if (cc.dyn_class == DynClass::kComplexAttractingCycle) {
          const auto& p = cc.spectrum;
          const std::vector<UnitVec3> toward{p.p1, -p.p1, p.p2, -p.p2};
          ok = true;
          for (const UnitVec3& pole : cc.poles) {
            ok = ok && vertex_covered(pole, toward, plus, settings) &&
                 vertex_covered(pole, toward, minus, settings);
          }
          detail = "both poles of attracting-cycle sample " + std::to_string(cc.owner) +
                   " lie in the reach regions seeded at both sinks of sample " +
                   std::to_string(cs.owner);
        } else {
          auto hits = [&](const std::vector<ReachClosure>& closures) {
            for (const auto& c : closures) {
              for (const auto& r : c.co2) {
                if (circle_region_intersect(cc.circle, r, settings.circle_resolution,
                                            settings.eps_geom)
                        .intersects) {
                  return true;
                }
              }
            }
            return false;
          };
          ok = hits(plus) && hits(minus);
          detail = "repulsive cycle of sample " + std::to_string(cc.owner) +
                   " meets the reach regions seeded at both sinks of sample " +
                   std::to_string(cs.owner);
        }
        if (ok) {
          Controllable c;
          c.theorem = Theorem::kB;
          c.witness = {cs.owner, cc.owner};
          c.detail = detail;
          c.closures = concat(plus, minus);
          return c;
        }
      }
      computed = concat(std::move(computed), concat(plus, minus));
    }
  } catch (const Error& e) {
    return Inconclusive{std::string("degenerate geometry during closure: ") + e.what(),
                        computed};
  }
  return Inconclusive{"no complex sample is reached by the real-subsystem closures",
                      computed};
}

Verdict decide_theorem_c(const SubsystemUN& sub, const ConditionReport& conditions) {
  if (sub.complex_idx.empty()) return Inconclusive{"empty complex set", {}};
  std::optional<int> attracting;
  std::optional<int> repulsive;
  for (int j : sub.complex_idx) {
    const DynClass c = sub.samples[j].dyn_class;
    if (c == DynClass::kComplexAttractingCycle && !attracting) attracting = j;
    if (c == DynClass::kComplexRepulsiveCycle && !repulsive) repulsive = j;
  }
  if (!attracting) return Inconclusive{"no attracting-cycle sample", {}};
  if (!repulsive) return Inconclusive{"no repulsive-cycle sample", {}};
  if (auto reason = gate(conditions)) return Inconclusive{*reason, {}};
  Controllable c;
  c.theorem = Theorem::kC;
  c.witness = {*attracting, *repulsive};
  c.detail = "sample " + std::to_string(*attracting) + " has an attracting cycle and sample " +
             std::to_string(*repulsive) + " a repulsive cycle";
  return c;
}

Verdict decide(const SubsystemUN& sub, const CellComplex& complex,
               const ConditionReport& conditions, const Settings& settings) {
  std::string reasons;
  Verdict v = decide_theorem_c(sub, conditions);
  if (is_controllable(v)) return v;
  reasons += "C: " + std::get<Inconclusive>(v).reason;
  v = decide_theorem_b(sub, complex, conditions, settings);
  if (is_controllable(v)) return v;
  reasons += "; B: " + std::get<Inconclusive>(v).reason;
  v = decide_theorem_a(sub, complex, conditions, settings);
  if (is_controllable(v)) return v;
  auto& inc = std::get<Inconclusive>(v);
  inc.reason = reasons + "; A: " + inc.reason;
  return v;
}

}  // namespace dircon

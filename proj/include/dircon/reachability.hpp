#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dircon/settings.hpp"
#include "dircon/sphere_geometry.hpp"
#include "dircon/system_model.hpp"

namespace dircon {

/// A saddle sign*E^owner_2 whose outgoing separatrix semicircle is reachable.
struct CO1Entry {
  UnitVec3 saddle = UnitVec3::UnitY();
  int owner = 0;
  int sign = 1;
  /// Half-sphere (+1/-1) of the approach relative to the owner's circle
  /// through E1, E2, recorded when the entry was discovered.
  int side_ref = 1;
  int via = -1;  // certificate step that produced it
};

/// One logged inequality: `value` is a product of two mixed products and
/// the claim is value > 0 (same side) or value < 0 (opposite sides).
struct PredicateLog {
  std::string name;
  double value = 0.0;
  bool positive = true;

  bool holds() const { return positive ? value > 0.0 : value < 0.0; }
};

/// Crossing from a triangle of sample k over the circle C^j_3 toward the
/// sink of that triangle, reaching the separatrix of the saddle `entry`.
struct FirstTypeStep {
  UnitVec3 from = UnitVec3::UnitZ();
  int k = 0;
  int j = 0;
  OctantTriangle triangle;
  CO1Entry entry;
  UnitVec3 crossing = UnitVec3::UnitZ();  // closed-form crossing point
  double crossing_time = 0.0;
  std::vector<PredicateLog> predicates;
};

/// Flooding of triangle `region.triangle` (sample l) from the separatrix
/// chord of the saddle `entry`.
struct SecondTypeStep {
  CO1Entry entry;
  int l = 0;
  CutCase cut_case = CutCase::kSink;
  Region region;
  std::optional<CO1Entry> new_saddle;
  std::vector<PredicateLog> predicates;
};

using Step = std::variant<FirstTypeStep, SecondTypeStep>;

struct ReachClosure {
  UnitVec3 seed = UnitVec3::UnitZ();
  std::vector<CO1Entry> co1;
  std::vector<Region> co2;
  std::vector<Step> certificate;
  int sweeps = 0;
  bool partial = false;  // iteration budget exhausted before the fixed point
  /// Extension points that sat on a circle and were skipped.
  int skipped_points = 0;
};

/// Applies the crossing step from `from` for every real parameter, appending
/// new saddles to closure.co1 and steps to closure.certificate. Returns the
/// entries that were new.
std::vector<CO1Entry> first_type_step(const UnitVec3& from, const CellComplex& complex,
                                      ReachClosure& closure, const Settings& settings);

/// Applies the flooding step for one co1 entry, appending new regions and
/// saddles. Returns the new (region, saddle) pairs.
std::vector<std::pair<Region, std::optional<CO1Entry>>> second_type_step(
    const CO1Entry& entry, const CellComplex& complex, ReachClosure& closure,
    const Settings& settings);

/// Worklist fixed point of both step types from `seed`, extended by
/// crossing steps from sampled points of every new region.
ReachClosure compute_closure(const UnitVec3& seed, const CellComplex& complex,
                             const Settings& settings);

/// Union membership of p in co2 of any of the closures.
bool in_co2(const UnitVec3& p, const std::vector<ReachClosure>& closures,
            double eps_geom);

/// Whether every probe point (the vertex nudged along each direction) lies
/// in the union of the closures' co2.
bool vertex_covered(const UnitVec3& vertex, const std::vector<UnitVec3>& toward,
                    const std::vector<ReachClosure>& closures, const Settings& settings);

enum class Theorem { kA, kB, kC };

std::string_view to_string(Theorem t);

struct Controllable {
  Theorem theorem = Theorem::kA;
  /// Sample indices: A: {s}; B: {s, j}; C: {j attracting, l repulsive}.
  std::vector<int> witness;
  std::string detail;
  std::vector<ReachClosure> closures;
};

struct Inconclusive {
  std::string reason;
  std::vector<ReachClosure> partial_closures;
};

using Verdict = std::variant<Controllable, Inconclusive>;

inline bool is_controllable(const Verdict& v) {
  return std::holds_alternative<Controllable>(v);
}

/// Seeds next to sign*E^s_3, one per adjacent triangle of s.
std::vector<UnitVec3> sink_seeds(const RealCells& cells, int sign, double eps_nudge);

Verdict decide_theorem_a(const SubsystemUN& sub, const CellComplex& complex,
                         const ConditionReport& conditions, const Settings& settings);
Verdict decide_theorem_b(const SubsystemUN& sub, const CellComplex& complex,
                         const ConditionReport& conditions, const Settings& settings);
Verdict decide_theorem_c(const SubsystemUN& sub, const ConditionReport& conditions);

/// Tries C, then B, then A. Never claims uncontrollability.
Verdict decide(const SubsystemUN& sub, const CellComplex& complex,
               const ConditionReport& conditions, const Settings& settings);

}  // namespace dircon

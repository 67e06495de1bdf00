#pragma once

#include <string>
#include <vector>

#include "dircon/dynamics.hpp"
#include "dircon/reachability.hpp"

namespace dircon {

/// Outcome of re-simulating one certificate step with the RK4 integrator.
/// A miss is a value (success = false), not an error.
struct ReplayReport {
  bool success = false;
  std::string message;
  /// Piecewise schedules that realize the step: one for a crossing step,
  /// one per region sample for a flooding step.
  std::vector<ControlSchedule> schedules;
  std::vector<UnitVec3> starts;
  /// Largest landing distance over all targets (radians).
  double worst_distance = 0.0;
  long rk4_steps = 0;
};

/// Replays one step. Crossing step: integrates the sample k field from
/// `from` until the determinant against C^j_3 changes sign, then the j
/// field until it passes within eps_replay of the saddle. Flooding step:
/// for each region sample p, finds where the backward l flow from p meets
/// the separatrix carrier, the time the j flow needs to carry a point next
/// to the saddle there, and integrates j then l to land near p.
/// Throws DegenerateSpectrum for a step naming a degenerate sample and
/// ReplayBudgetExceeded when the integration would exceed
/// settings.replay_step_budget RK4 steps.
ReplayReport replay_step(const Step& step, const SubsystemUN& sub,
                         const CellComplex& complex, const Settings& settings);

struct StepReplay {
  int closure = 0;
  int step = 0;
  ReplayReport report;
};

struct VerdictReplay {
  Verdict verdict;
  std::vector<StepReplay> steps;
  bool downgraded = false;
};

/// Replays every step of every closure carried by a Controllable verdict.
/// The first failing step downgrades the verdict to Inconclusive, with that
/// step named in the reason. Verdicts without certificates pass through.
VerdictReplay validate_verdict(const Verdict& verdict, const SubsystemUN& sub,
                               const CellComplex& complex, const Settings& settings);

}  // namespace dircon

#pragma once

#include <cstdint>

#include "dircon/linalg3.hpp"

namespace dircon {

/// Numerical knobs shared by the condition checks, the closure construction
/// and the replay/oracle machinery. Defaults match the CLI defaults.
struct Settings {
  double eps_spec = kDefaultEpsSpec;  // relative to ||A(u)||_F
  double eps_geom = 1e-9;             // |mixed product| genericity floor
  double eps_nudge = 1e-4;            // radians, vertex seeds and probes
  double eps_replay = 1e-2;           // radians, replay landing tolerance
  long replay_step_budget = 5'000'000;  // RK4 steps per certificate step
  int cc1_grid = 10000;
  int max_iter = 32;
  int samples_per_region = 5;
  int circle_resolution = 720;
  // Monte Carlo oracle.
  double oracle_tol = 0.05;
  int oracle_budget = 10000;  // segments per pair
  std::uint64_t seed = 42;
};

}  // namespace dircon

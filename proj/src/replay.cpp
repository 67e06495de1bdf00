#include "dircon/replay.hpp"

#include <cmath>
#include <sstream>

#include "dircon/errors.hpp"

namespace dircon {

namespace {

// Nominal replay step. Coarser than default_step: RK4 error at this size is
// far below eps_replay for the time spans a single step needs.
double replay_h(const Mat3& m) { return 2.5 * default_step(m); }

class Integrator {
 public:
  explicit Integrator(long budget) : budget_(budget) {}

  UnitVec3 step(const Mat3& m, const UnitVec3& q, double h) {
    if (++used_ > budget_) {
      throw Error(ErrorKind::kReplayBudgetExceeded,
                  "replay needs more than " + std::to_string(budget_) + " integrator steps");
    }
    return rk4_step(m, q, h);
  }

  /// Integrates exactly t with the uniform step t/ceil(t/h).
  UnitVec3 run(const Mat3& m, UnitVec3 q, double t, double h) {
    const long n = static_cast<long>(std::ceil(t / h));
    for (long i = 0; i < n; ++i) q = step(m, q, t / n);
    return q;
  }

  long used() const { return used_; }

 private:
  long budget_;
  long used_ = 0;
};

const ParameterSample& usable_sample(const SubsystemUN& sub, int index) {
  if (index < 0 || index >= static_cast<int>(sub.samples.size())) {
    throw Error(ErrorKind::kInvalidArgument,
                "step references unknown sample " + std::to_string(index));
  }
  const ParameterSample& s = sub.samples[index];
  if (is_degenerate(s.spectrum)) {
    throw Error(ErrorKind::kDegenerateSpectrum,
                "step references degenerate sample " + std::to_string(index));
  }
  return s;
}

ReplayReport replay_first(const FirstTypeStep& st, const SubsystemUN& sub,
                          const CellComplex& complex, const Settings& settings) {
  const ParameterSample& sk = usable_sample(sub, st.k);
  const ParameterSample& sj = usable_sample(sub, st.j);
  const auto& e = complex.real_cells(st.j).spectrum.e;
  Integrator rk(settings.replay_step_budget);
  ReplayReport rep;
  rep.starts.push_back(st.from);

  // Leg 1: sample k until the sign of det(q, E^j_1, E^j_2) flips.
  const double hk = replay_h(sk.matrix);
  const double tk_max = 60.0 / ExactFlow(sk.spectrum).min_rate_gap();
  const bool s0 = mixed_product(st.from, e[0], e[1]) > 0.0;
  UnitVec3 q = st.from;
  double t = 0.0;
  bool crossed = false;
  while (t < tk_max) {
    const UnitVec3 next = rk.step(sk.matrix, q, hk);
    if ((mixed_product(next, e[0], e[1]) > 0.0) != s0) {
      double lo = 0.0;
      double hi = hk;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((mixed_product(rk.step(sk.matrix, q, mid), e[0], e[1]) > 0.0) == s0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      q = rk.step(sk.matrix, q, hi);
      t += hi;
      crossed = true;
      break;
    }
    q = next;
    t += hk;
  }
  ControlSchedule schedule;
  schedule.segments.push_back({st.k, t});
  if (!crossed) {
    rep.message = "trajectory of sample " + std::to_string(st.k) +
                  " never crossed the separating circle";
    rep.worst_distance = geodesic_distance(q, st.entry.saddle);
    rep.schedules.push_back(schedule);
    rep.rk4_steps = rk.used();
    return rep;
  }

  // Leg 2: sample j along the incoming circle toward the claimed saddle.
  const double hj = replay_h(sj.matrix);
  const double tj_max = 60.0 / ExactFlow(sj.spectrum).min_rate_gap();
  double best = geodesic_distance(q, st.entry.saddle);
  double best_t = 0.0;
  for (double tj = hj; tj <= tj_max && best > settings.eps_replay; tj += hj) {
    q = rk.step(sj.matrix, q, hj);
    const double d = geodesic_distance(q, st.entry.saddle);
    if (d < best) {
      best = d;
      best_t = tj;
    }
  }
  if (best_t > 0.0) schedule.segments.push_back({st.j, best_t});
  rep.schedules.push_back(schedule);
  rep.worst_distance = best;
  rep.success = best <= settings.eps_replay;
  std::ostringstream msg;
  msg << "crossed at t=" << t << ", closest approach " << best << " to saddle";
  rep.message = msg.str();
  rep.rk4_steps = rk.used();
  return rep;
}

ReplayReport replay_second(const SecondTypeStep& st, const SubsystemUN& sub,
                           const CellComplex& complex, const Settings& settings) {
  const int j = st.entry.owner;
  const ParameterSample& sj = usable_sample(sub, j);
  const ParameterSample& sl = usable_sample(sub, st.l);
  const auto& e = complex.real_cells(j).spectrum.e;
  const UnitVec3& saddle = st.entry.saddle;
  const ExactFlow fj(sj.spectrum);
  const ExactFlow fl(sl.spectrum);
  const double hj = replay_h(sj.matrix);
  const double hl = replay_h(sl.matrix);
  Integrator rk(settings.replay_step_budget);
  ReplayReport rep;

  std::vector<UnitVec3> targets;
  try {
    targets = region_sample_points(st.region, settings.samples_per_region, settings.eps_geom);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::kEmptyRegion) throw;
    rep.message = err.what();
    return rep;
  }

  std::ostringstream msg;
  rep.success = true;
  for (const UnitVec3& p : targets) {
    // Backward l flow from p until it meets the carrier through E^j_2, E^j_3.
    const bool sp = mixed_product(p, e[1], e[2]) > 0.0;
    const double dt = 0.02 / (sl.real().lambda[2] - sl.real().lambda[0]);
    const double t_max = 60.0 / fl.min_rate_gap();
    double lo = 0.0;
    double hi = -1.0;
    for (double t = dt; t <= t_max; t += dt) {
      if ((mixed_product(fl.on_sphere(p, -t), e[1], e[2]) > 0.0) != sp) {
        hi = t;
        break;
      }
      lo = t;
    }
    if (hi < 0.0) {
      rep.success = false;
      msg << "[no carrier crossing behind target] ";
      continue;
    }
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((mixed_product(fl.on_sphere(p, -mid), e[1], e[2]) > 0.0) == sp) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double tau = hi;
    const UnitVec3 c = fl.on_sphere(p, -tau);
    if (mixed_product(c, e[0], e[2]) * mixed_product(saddle, e[0], e[2]) <= 0.0) {
      rep.success = false;
      msg << "[target enters through the opposite separatrix] ";
      continue;
    }

    // Time for the j flow to carry a point next to the saddle to c.
    const Vec3 tangent_raw = c - c.dot(saddle) * saddle;
    const UnitVec3 tangent = tangent_raw.normalized();
    const auto angle = [&](const UnitVec3& q) {
      return std::atan2(q.dot(tangent), q.dot(saddle));
    };
    const double phi_c = angle(c);
    const double delta = std::min(1e-3, 0.5 * phi_c);
    const UnitVec3 q0 = std::cos(delta) * saddle + std::sin(delta) * tangent;
    double a = 0.0;
    double b = 1.0 / fj.min_rate_gap();
    const double tj_max = 60.0 / fj.min_rate_gap();
    while (angle(fj.on_sphere(q0, b)) < phi_c && b < tj_max) {
      a = b;
      b *= 2.0;
    }
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (a + b);
      if (angle(fj.on_sphere(q0, mid)) < phi_c) {
        a = mid;
      } else {
        b = mid;
      }
    }
    const double t1 = b;

    UnitVec3 q = rk.run(sj.matrix, q0, t1, hj);
    q = rk.run(sl.matrix, q, tau, hl);
    const double d = geodesic_distance(q, p);
    rep.worst_distance = std::max(rep.worst_distance, d);
    rep.starts.push_back(q0);
    rep.schedules.push_back(ControlSchedule{{{j, t1}, {st.l, tau}}});
    msg << "[t1=" << t1 << " t2=" << tau << " miss=" << d << "] ";
    if (!(d <= settings.eps_replay)) rep.success = false;
  }
  rep.message = msg.str();
  rep.rk4_steps = rk.used();
  return rep;
}

}  // namespace

ReplayReport replay_step(const Step& step, const SubsystemUN& sub,
                         const CellComplex& complex, const Settings& settings) {
  if (const auto* first = std::get_if<FirstTypeStep>(&step)) {
    return replay_first(*first, sub, complex, settings);
  }
  return replay_second(std::get<SecondTypeStep>(step), sub, complex, settings);
}

VerdictReplay validate_verdict(const Verdict& verdict, const SubsystemUN& sub,
                               const CellComplex& complex, const Settings& settings) {
  VerdictReplay out;
  out.verdict = verdict;
  const auto* c = std::get_if<Controllable>(&verdict);
  if (c == nullptr) return out;
  for (std::size_t ci = 0; ci < c->closures.size(); ++ci) {
    const auto& cert = c->closures[ci].certificate;
    for (std::size_t si = 0; si < cert.size(); ++si) {
      StepReplay sr;
      sr.closure = static_cast<int>(ci);
      sr.step = static_cast<int>(si);
      try {
        sr.report = replay_step(cert[si], sub, complex, settings);
      } catch (const Error& err) {
        sr.report.success = false;
        sr.report.message = err.what();
      }
      out.steps.push_back(sr);
      if (!sr.report.success) {
        const char* kind = std::holds_alternative<FirstTypeStep>(cert[si]) ? "crossing"
                                                                           : "flooding";
        out.verdict = Inconclusive{"replay failed at closure " + std::to_string(ci) +
                                       ", step " + std::to_string(si) + " (" + kind +
                                       "): " + sr.report.message,
                                   c->closures};
        out.downgraded = true;
        return out;
      }
    }
  }
  return out;
}

}  // namespace dircon

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "dircon/dynamics.hpp"
#include "dircon/io.hpp"
#include "dircon/linalg3.hpp"
#include "dircon/reachability.hpp"
#include "dircon/replay.hpp"
#include "dircon/sphere_geometry.hpp"
#include "dircon/system_model.hpp"
#include "mutations.hpp"
#include "test_util.hpp"

namespace dircon {
namespace {

using Clock = std::chrono::steady_clock;

const std::vector<std::string> kFixtures = {"single_sample.json", "theorem_a.json",
                                            "theorem_b.json", "theorem_c.json"};

// Collects failures of one criterion; the first few are printed.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (++failures_ <= 5) std::cerr << "    violation: " << what << "\n";
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(3);
  ss << x;
  return ss.str();
}

std::string mat_str(const std::vector<Mat3>& ms) {
  std::ostringstream ss;
  for (const auto& m : ms) ss << "[" << m.format(Eigen::IOFormat(17, Eigen::DontAlignCols, ",", ";")) << "]";
  return ss.str();
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(DIRCON_CLI) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Residuals of the eigen-relations, checked directly against the matrix.
double relation_residual(const Mat3& m, const Spectrum& s) {
  if (const auto* rd = std::get_if<RealDistinct>(&s)) {
    double r = 0.0;
    for (int i = 0; i < 3; ++i) {
      r = std::max(r, (m * rd->e[i] - rd->lambda[i] * rd->e[i]).norm());
      r = std::max(r, std::abs(rd->e[i].norm() - 1.0));
    }
    return r;
  }
  const auto& cp = std::get<ComplexPair>(s);
  const double a = cp.re_c, b = cp.im_c;
  return std::max({(m * cp.e_r - cp.lambda_r * cp.e_r).norm(),
                   (m * cp.jordan_re - (a * cp.jordan_re - b * cp.jordan_im)).norm(),
                   (m * cp.jordan_im - (b * cp.jordan_re + a * cp.jordan_im)).norm(),
                   std::abs(cp.e_r.norm() - 1.0)});
}

Outcome eigen_correctness() {
  std::mt19937_64 rng(1001);
  Check check;
  int degenerate = 0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 m = test::random_matrix(rng);
    const Spectrum s = eigen_decompose(m);
    if (is_degenerate(s)) {
      ++degenerate;
      continue;
    }
    const double r = relation_residual(m, s);
    check.expect(r <= 1e-9 * m.norm(), "residual " + fmt(r) + " for " + mat_str({m}));
    // The spectrum must also agree with a general-purpose eigensolver.
    const Eigen::Vector3cd ref = Eigen::EigenSolver<Mat3>(m).eigenvalues();
    std::vector<std::complex<double>> got;
    if (const auto* rd = std::get_if<RealDistinct>(&s)) {
      for (double l : rd->lambda) got.emplace_back(l, 0.0);
    } else {
      const auto& cp = std::get<ComplexPair>(s);
      got = {{cp.lambda_r, 0.0}, {cp.re_c, cp.im_c}, {cp.re_c, -cp.im_c}};
    }
    for (const auto& g : got) {
      double best = 1e300;
      for (int k = 0; k < 3; ++k) best = std::min(best, std::abs(g - ref(k)));
      check.expect(best <= 1e-8 * std::max(1.0, m.norm()), "eigenvalue mismatch " + mat_str({m}));
    }
  }
  return {check.failures() == 0,
          "1000 matrices, " + std::to_string(degenerate) + " degenerate, " +
              std::to_string(check.failures()) + " violations"};
}

Outcome flow_commutation() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> ut(0.0, 5.0);
  Check check;
  double worst = 0.0;
  int done = 0;
  while (done < 200) {
    const Mat3 m = test::random_matrix(rng);
    const Spectrum s = eigen_decompose(m);
    if (is_degenerate(s)) continue;
    const Vec3 q0 = random_unit(rng);
    const double t = ut(rng);
    const Trajectory tr = integrate_projected(m, q0, t, default_step(m), 1000000);
    const double gap = geodesic_distance(tr.points.back(), flow_on_sphere(s, q0, t));
    worst = std::max(worst, gap);
    check.expect(gap < 1e-6, "gap " + fmt(gap) + " for " + mat_str({m}));
    ++done;
  }
  return {check.failures() == 0, "200 samples, worst gap " + fmt(worst) + " rad"};
}

Mat3 cycle_block(double lambda_r, double re, double im) {
  Mat3 m;
  // clang-format off
  m << lambda_r, 0,   0,
       0,        re,  im,
       0,       -im,  re;
  // clang-format on
  return m;
}

Outcome dynamics_suites() {
  Check check;
  std::mt19937_64 rng(1003);
  // Real spectrum: trajectories stay in their triangle and reach the sink.
  std::uniform_real_distribution<double> ul(-2.0, 2.0);
  for (int trial = 0; trial < 100;) {
    std::array<double, 3> l{ul(rng), ul(rng), ul(rng)};
    std::sort(l.begin(), l.end());
    if (l[1] - l[0] < 0.2 || l[2] - l[1] < 0.2) continue;
    const Mat3 m = test::rotated_diagonal(rng, Vec3(l[0], l[1], l[2]));
    const auto sub = subsystem_from_matrices({m});
    const auto cx = build_cell_complex(sub, 1e-9);
    const OctantTriangle& t = cx.real[0].triangles[trial % 8];
    std::uniform_real_distribution<double> w(0.05, 1.0);
    const Vec3 q0 = (w(rng) * t.v[0] + w(rng) * t.v[1] + w(rng) * t.v[2]).normalized();
    const ExactFlow flow(sub.samples[0].spectrum);
    const double tmax = 50.0 / flow.min_rate_gap();
    const Trajectory tr = integrate_projected(m, q0, std::min(tmax, 20.0), default_step(m), 100);
    for (const auto& p : tr.points) {
      const auto inside = inside_triangle(p, t, 1e-9);
      check.expect(!inside.has_value() || *inside, "integrated trajectory left its triangle");
    }
    for (int i = 0; i <= 200; ++i) {
      const auto inside = inside_triangle(flow.on_sphere(q0, tmax * i / 200.0), t, 1e-9);
      check.expect(!inside.has_value() || *inside, "trajectory left its triangle");
    }
    const double d = geodesic_distance(flow.on_sphere(q0, tmax), t.v[2]);
    check.expect(d < 1e-3, "sink distance " + fmt(d));
    ++trial;
  }
  // Complex spectrum: the circle attracts when the pair dominates and
  // repels towards a pole otherwise.
  std::uniform_real_distribution<double> u(0.3, 1.5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const bool attracting = trial % 2 == 0;
    const double gap = u(rng), re = u(rng) - 0.7;
    const Mat3 r = test::random_rotation(rng);
    const Mat3 m = r * cycle_block(attracting ? re - gap : re + gap, re, u(rng)) * r.transpose();
    const auto sub = subsystem_from_matrices({m});
    const auto& cp = sub.samples[0].complex();
    check.expect(sub.samples[0].dyn_class == (attracting ? DynClass::kComplexAttractingCycle
                                                         : DynClass::kComplexRepulsiveCycle),
                 "cycle class");
    const ExactFlow flow(sub.samples[0].spectrum);
    const double tmax = 50.0 / flow.min_rate_gap();
    if (attracting) {
      Vec3 q0 = random_unit(rng);
      if (std::abs(q0.dot(cp.e_r)) < 1e-3) q0 = (q0 + 0.1 * cp.e_r).normalized();
      double prev = 10.0;
      for (int i = 0; i <= 100; ++i) {
        const double d =
            std::asin(std::min(1.0, std::abs(flow.on_sphere(q0, tmax * i / 100.0).dot(cp.e_r))));
        check.expect(d <= prev + 1e-12, "distance to the cycle increased");
        prev = d;
      }
      check.expect(prev < 1e-3, "cycle distance " + fmt(prev));
    } else {
      const double a = std::atan2(n(rng), n(rng));
      const double side = trial % 4 == 1 ? 1e-3 : -1e-3;
      const Vec3 q0 = (std::cos(a) * cp.p1 + std::sin(a) * cp.p2 + side * cp.e_r).normalized();
      const Vec3 pole = side > 0 ? cp.e_r : Vec3(-cp.e_r);
      const double d = geodesic_distance(flow.on_sphere(q0, tmax), pole);
      check.expect(d < 1e-3, "pole distance " + fmt(d));
    }
    // The invariant circle stays invariant under the integrator as well.
    const Vec3 on = std::cos(1.0) * cp.p1 + std::sin(1.0) * cp.p2;
    const Vec3 c0 = (on - on.dot(cp.e_r) * cp.e_r).normalized();
    for (const auto& p : integrate_projected(m, c0, 3.0, default_step(m), 50).points) {
      check.expect(std::abs(p.dot(cp.e_r)) <= 1e-8, "left the invariant circle");
    }
  }
  return {check.failures() == 0,
          "100 real, 100 attracting and 100 repulsive samples, " + std::to_string(check.failures()) + " violations"};
}

Outcome predicate_algebra() {
  constexpr double kEps = 1e-9;
  std::mt19937_64 rng(1004);
  std::uniform_real_distribution<double> ul(-3.0, 3.0);
  Check check;
  int configs = 0;
  long checks = 0;
  while (configs < 1000) {
    std::array<double, 3> l{ul(rng), ul(rng), ul(rng)};
    std::sort(l.begin(), l.end());
    if (l[1] - l[0] < 0.05 || l[2] - l[1] < 0.05) continue;
    // Eigenvectors in general position: not orthogonal in general.
    const Mat3 p = test::random_matrix(rng);
    if (std::abs(p.determinant()) < 0.05) continue;
    const Mat3 m = p * Vec3(l[0], l[1], l[2]).asDiagonal() * p.inverse();
    const auto sub = subsystem_from_matrices({m});
    if (sub.samples[0].dyn_class != DynClass::kRealStable) continue;
    const CellComplex cx = build_cell_complex(sub, kEps);
    const RealCells& rc = cx.real.at(0);
    for (int k = 0; k < 5; ++k) {
      const Vec3 q = random_unit(rng), o = random_unit(rng);
      bool generic = true;
      for (const auto& c : rc.circles) {
        generic = generic && std::abs(q.dot(c.normal)) > 1e-6 && std::abs(o.dot(c.normal)) > 1e-6;
      }
      if (!generic) continue;
      // Tiling: exactly one triangle holds q, and antipodes map across.
      int inside = 0;
      for (const auto& t : rc.triangles) {
        const int mq = triangle_membership(q, t, kEps);
        if (mq == 1) ++inside;
        const std::array<int, 3> flipped{-t.signs[0], -t.signs[1], -t.signs[2]};
        check.expect(triangle_membership(-q, rc.triangle(flipped), kEps) == mq, "antipodal membership");
        ++checks;
      }
      check.expect(inside == 1, "tiling count " + std::to_string(inside));
      // Separation: symmetric in its points, independent of span order and
      // odd under flipping one point.
      for (const auto& c : rc.circles) {
        const int s = separation_sign(q, c, o, kEps);
        const GreatCircle swapped = make_circle(c.owner, c.axis, c.span_b, c.span_a);
        check.expect(s == separation_sign(o, c, q, kEps), "separation symmetry");
        check.expect(s == separation_sign(q, swapped, o, kEps), "span swap");
        check.expect(s == -separation_sign(-q, c, o, kEps), "antipodal separation");
        check.expect(s == (q.dot(c.normal) * o.dot(c.normal) < 0 ? 1 : -1), "plane side oracle");
        checks += 4;
      }
    }
    ++configs;
  }
  return {check.failures() == 0, "1000 configurations, " + std::to_string(checks) + " checks, " +
                                     std::to_string(check.failures()) + " violations"};
}

struct Certified {
  io::LoadedSystem sys;
  Settings settings;
  CellComplex complex;
  Verdict verdict;
};

Certified certify(const std::string& fixture) {
  Certified c{test::load_fixture(fixture), Settings{}, {}, {}};
  c.complex = build_cell_complex(c.sys.sub, c.settings.eps_geom);
  c.verdict = decide(c.sys.sub, c.complex, check_conditions(c.sys.system, c.sys.sub, c.settings),
                     c.settings);
  return c;
}

// Connects 20 random ordered pairs with the Monte Carlo oracle and verifies
// every schedule by independent replay.
int oracle_pairs(const SubsystemUN& sub, Check& check) {
  std::mt19937_64 rng(42);
  int connected = 0;
  for (int i = 0; i < 20; ++i) {
    const Vec3 from = random_unit(rng), to = random_unit(rng);
    const auto schedule = monte_carlo_connect(sub, from, to, 0.05, 10000, 42 + i);
    check.expect(schedule.has_value(), "oracle pair " + std::to_string(i) + " not connected");
    if (!schedule) continue;
    const double d = geodesic_distance(apply_schedule(sub, from, *schedule), to);
    check.expect(d <= 0.05, "oracle schedule misses by " + fmt(d));
    if (d <= 0.05) ++connected;
  }
  return connected;
}

Outcome theorem_c_end_to_end() {
  Check check;
  const Certified c = certify("theorem_c.json");
  const auto* ok = std::get_if<Controllable>(&c.verdict);
  check.expect(ok != nullptr && ok->theorem == Theorem::kC, "verdict is not Controllable{C}");
  const auto& s = c.sys.sub.samples;
  check.expect(s.size() == 2 && s[0].dyn_class != s[1].dyn_class, "samples are not an opposite pair");
  const int connected = oracle_pairs(c.sys.sub, check);
  return {check.failures() == 0, "Controllable{C}, " + std::to_string(connected) + "/20 oracle pairs"};
}

Outcome theorem_a_end_to_end() {
  Check check;
  const Certified c = certify("theorem_a.json");
  const auto* ok = std::get_if<Controllable>(&c.verdict);
  check.expect(ok != nullptr && ok->theorem == Theorem::kA, "verdict is not Controllable{A}");
  Settings replay = c.settings;
  replay.eps_replay = 1e-2;
  const VerdictReplay r = validate_verdict(c.verdict, c.sys.sub, c.complex, replay);
  int passed = 0;
  for (const auto& s : r.steps) {
    check.expect(s.report.success, "step " + std::to_string(s.step) + " of closure " +
                                       std::to_string(s.closure) + ": " + s.report.message);
    if (s.report.success) ++passed;
  }
  check.expect(!r.downgraded && !r.steps.empty(), "replay downgraded the verdict");
  const int connected = oracle_pairs(c.sys.sub, check);
  return {check.failures() == 0, "Controllable{A}, " + std::to_string(passed) + "/" +
                                     std::to_string(r.steps.size()) + " steps replayed, " +
                                     std::to_string(connected) + "/20 oracle pairs"};
}

Outcome soundness_guard() {
  Check check;
  int mutants = 0, verdicts = 0;
  for (const std::string fixture : {"theorem_a.json", "theorem_b.json"}) {
    const Certified c = certify(fixture);
    const auto* ok = std::get_if<Controllable>(&c.verdict);
    check.expect(ok != nullptr, fixture + " is not Controllable");
    if (ok == nullptr) continue;
    for (int ci = 0; ci < static_cast<int>(ok->closures.size()); ++ci) {
      const auto& cert = ok->closures[ci].certificate;
      for (int si = 0; si < static_cast<int>(cert.size()); ++si) {
        const int variants = std::holds_alternative<FirstTypeStep>(cert[si]) ? 1 : 2;
        for (int variant = 0; variant < variants; ++variant) {
          Step step = cert[si];
          const std::string what = test::corrupt_step(step, variant);
          const ReplayReport r = replay_step(step, c.sys.sub, c.complex, c.settings);
          check.expect(!r.success, fixture + " closure " + std::to_string(ci) + " step " +
                                       std::to_string(si) + ": " + what + " replayed");
          ++mutants;
          // Full verdict validation on the first closure, where it is cheap.
          if (ci != 0) continue;
          const VerdictReplay vr = validate_verdict(test::corrupt_verdict(c.verdict, ci, si, variant),
                                                    c.sys.sub, c.complex, c.settings);
          check.expect(vr.downgraded && !is_controllable(vr.verdict),
                       fixture + " step " + std::to_string(si) + ": corrupted verdict kept");
          ++verdicts;
        }
      }
    }
  }
  // The CLI never prints Controllable next to a failed replay step.
  for (const auto& fixture : kFixtures) {
    const CliResult r = run_cli("certify --replay -i " + test::fixture_path(fixture));
    const io::Json j = io::Json::parse(r.out, nullptr, false);
    check.expect(!j.is_discarded(), fixture + ": unparsable report");
    if (j.is_discarded()) continue;
    const bool controllable = j["verdict"]["status"] == "controllable";
    check.expect(controllable == (r.code == 0), fixture + ": exit code disagrees with verdict");
    for (const auto& s : j["replay"]["steps"]) {
      check.expect(!controllable || s["success"].get<bool>(), fixture + ": failed step under Controllable");
    }
  }
  return {check.failures() == 0, std::to_string(mutants) + " corrupted steps rejected, " +
                                     std::to_string(verdicts) + " corrupted verdicts downgraded"};
}

Outcome determinism() {
  Check check;
  int commands = 0;
  for (const auto& fixture : kFixtures) {
    const std::string in = " -i " + test::fixture_path(fixture);
    const bool single = fixture == "single_sample.json";
    const std::vector<std::string> cmds = {
        "classify" + in,
        "certify" + in,
        "certify --replay" + in,
        "export" + in,
        "simulate" + in + (single ? " --schedule 0:2" : " --schedule 0:0.7,1:0.4,0:0.3") +
            " --start 0.3,-0.4,0.866",
        "oracle" + in + " --pairs 5",
    };
    for (const auto& cmd : cmds) {
      const CliResult a = run_cli(cmd);
      const CliResult b = run_cli(cmd);
      check.expect(a.code == b.code && a.code != 1, cmd + ": exit codes " + std::to_string(a.code) +
                                                        ", " + std::to_string(b.code));
      check.expect(!a.out.empty() && a.out == b.out, cmd + ": outputs differ");
      ++commands;
    }
  }
  return {check.failures() == 0, std::to_string(commands) + " commands on " +
                                     std::to_string(kFixtures.size()) + " fixtures"};
}

struct Criterion {
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace dircon

int main() {
  using namespace dircon;
  const std::vector<Criterion> criteria = {
      {"eigen correctness", 5, eigen_correctness},
      {"flow commutation", 30, flow_commutation},
      {"sink and cycle dynamics", 120, dynamics_suites},
      {"predicate algebra", 600, predicate_algebra},
      {"cycle pair end to end", 120, theorem_c_end_to_end},
      {"real-spectrum system end to end", 300, theorem_a_end_to_end},
      {"soundness guard", 600, soundness_guard},
      {"determinism", 600, determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o{false, ""};
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = dt < criteria[i].limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS " : "FAIL ") << i + 1 << ": " << criteria[i].name << " (" << o.detail
              << "; " << fmt(dt) << " s" << (in_time ? "" : ", over the time limit") << ")"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

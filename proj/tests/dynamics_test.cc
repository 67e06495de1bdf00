#include "dircon/dynamics.hpp"

#include <random>

#include <gtest/gtest.h>

#include "dircon/errors.hpp"
#include "dircon/sphere_geometry.hpp"
#include "test_util.hpp"

namespace dircon {
namespace {

Mat3 cycle_block(double lambda_r, double re, double im) {
  Mat3 m;
  // clang-format off
  m << lambda_r, 0,   0,
       0,        re,  im,
       0,       -im,  re;
  // clang-format on
  return m;
}

// Random complex-spectrum matrix with a prescribed gap sign between the real
// eigenvalue and the real part of the pair, in a random orthonormal frame.
template <typename Rng>
Mat3 random_cycle(Rng& rng, bool pair_dominates) {
  std::uniform_real_distribution<double> u(0.3, 1.5);
  const double gap = u(rng);
  const double re = u(rng) - 0.7;
  const double lambda_r = pair_dominates ? re - gap : re + gap;
  const Mat3 r = test::random_rotation(rng);
  return r * cycle_block(lambda_r, re, u(rng)) * r.transpose();
}

GTEST_TEST(ProjectedField, Examples) {
  const Vec3 q = Vec3(0.3, -0.4, 0.5).normalized();
  EXPECT_LT(projected_field(Mat3::Identity(), q).norm(), 1e-15);
  EXPECT_LT((projected_field(skew(Vec3::UnitZ()), Vec3::UnitX()) - Vec3::UnitY()).norm(), 1e-15);
  const Mat3 d = Vec3(1, 2, 3).asDiagonal();
  EXPECT_LT((projected_field(d, Vec3(1, 1, 1).normalized()) - Vec3(-1, 0, 1) / std::sqrt(3.0)).norm(),
            1e-15);
}

GTEST_TEST(ProjectedField, Tangency) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 10000; ++i) {
    const Mat3 m = test::random_matrix(rng);
    const Vec3 q = random_unit(rng);
    EXPECT_LE(std::abs(projected_field(m, q).dot(q)), 1e-12);
  }
}

GTEST_TEST(ExactFlow, Examples) {
  const Mat3 d = Vec3(1, 2, 3).asDiagonal();
  const Vec3 x = exact_flow(eigen_decompose(d), Vec3(1, 1, 1), 1.0);
  const Vec3 expected(std::exp(1.0), std::exp(2.0), std::exp(3.0));
  EXPECT_LT((x - expected).norm(), 1e-12 * expected.norm());

  const Mat3 rot = cycle_block(0.0, 0.0, M_PI / 2);
  const Vec3 y = exact_flow(eigen_decompose(rot), Vec3::UnitY(), 1.0);
  EXPECT_LT((y - Vec3(0, 0, -1)).norm(), 1e-12);

  EXPECT_THROW(ExactFlow(eigen_decompose(Mat3::Identity())), Error);
}

GTEST_TEST(ExactFlow, MatchesMatrixExponential) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> ut(-2.0, 2.0);
  int checked = 0;
  while (checked < 300) {
    const Mat3 m = test::random_matrix(rng);
    const Spectrum s = eigen_decompose(m);
    if (is_degenerate(s)) continue;
    const double t = ut(rng);
    const Vec3 x0 = random_unit(rng);
    const Vec3 ref = test::expm_series(m * t) * x0;
    EXPECT_LT((exact_flow(s, x0, t) - ref).norm(), 1e-8 * std::max(1.0, ref.norm()));
    ++checked;
  }
}

GTEST_TEST(ExactFlow, GroupLaw) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> ut(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const Spectrum s = eigen_decompose(test::random_matrix(rng));
    if (is_degenerate(s)) continue;
    const Vec3 x = random_unit(rng);
    const double t1 = ut(rng), t2 = ut(rng);
    const Vec3 a = exact_flow(s, exact_flow(s, x, t1), t2);
    const Vec3 b = exact_flow(s, x, t1 + t2);
    EXPECT_LT((a - b).norm(), 1e-9 * std::max(1.0, b.norm()));
  }
}

GTEST_TEST(FlowOnSphere, IdentityLargeTimesAndUnderflow) {
  const Spectrum s = eigen_decompose(Vec3(1, 2, 3).asDiagonal());
  const Vec3 q = Vec3(0.6, 0.0, 0.8);
  EXPECT_LT((flow_on_sphere(s, q, 0.0) - q).norm(), 1e-15);
  // Far beyond the range of exp(): log-scale projection stays finite.
  EXPECT_LT((flow_on_sphere(s, Vec3(1, 1, 1).normalized(), 1e4) - Vec3::UnitZ()).norm(), 1e-12);
  EXPECT_LT((flow_on_sphere(s, Vec3(1, 1, 1).normalized(), -1e4) - Vec3::UnitX()).norm(), 1e-12);
  EXPECT_THROW(flow_on_sphere(s, Vec3::Zero(), 1.0), Error);
}

GTEST_TEST(IntegrateProjected, Examples) {
  const Vec3 q = Vec3(0.2, 0.3, 0.9).normalized();
  const Trajectory still = integrate_projected(Mat3::Identity(), q, 2.0, 1e-2);
  for (const auto& p : still.points) EXPECT_LT((p - q).norm(), 1e-15);

  const Trajectory quarter = integrate_projected(skew(Vec3::UnitZ()), Vec3::UnitX(), M_PI / 2, 1e-3);
  EXPECT_LT((quarter.points.back() - Vec3::UnitY()).norm(), 1e-8);
  EXPECT_NEAR(quarter.times.back(), M_PI / 2, 1e-14);
}

GTEST_TEST(IntegrateProjected, MatchesClosedForm) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> ut(0.0, 5.0);
  int checked = 0;
  while (checked < 50) {
    const Mat3 m = test::random_matrix(rng);
    const Spectrum s = eigen_decompose(m);
    if (is_degenerate(s)) continue;
    const Vec3 q = random_unit(rng);
    const double t = ut(rng);
    const Trajectory tr = integrate_projected(m, q, t, default_step(m), 1000);
    EXPECT_LT(geodesic_distance(tr.points.back(), flow_on_sphere(s, q, t)), 1e-6);
    ++checked;
  }
}

GTEST_TEST(SinkConvergence, OctantInvarianceAndConvergence) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> ul(-2.0, 2.0);
  for (int trial = 0; trial < 100;) {
    std::array<double, 3> l{ul(rng), ul(rng), ul(rng)};
    std::sort(l.begin(), l.end());
    if (l[1] - l[0] < 0.2 || l[2] - l[1] < 0.2) continue;
    const Mat3 m = test::rotated_diagonal(rng, Vec3(l[0], l[1], l[2]));
    const auto sub = subsystem_from_matrices({m});
    const auto cx = build_cell_complex(sub, 1e-9);
    const RealCells& rc = cx.real[0];
    const OctantTriangle& t = rc.triangles[trial % 8];
    std::uniform_real_distribution<double> w(0.05, 1.0);
    const Vec3 q0 = (w(rng) * t.v[0] + w(rng) * t.v[1] + w(rng) * t.v[2]).normalized();
    const ExactFlow flow(sub.samples[0].spectrum);
    const double tmax = 50.0 / flow.min_rate_gap();
    for (int i = 0; i <= 200; ++i) {
      const Vec3 q = flow.on_sphere(q0, tmax * i / 200.0);
      const auto inside = inside_triangle(q, t, 1e-9);
      EXPECT_TRUE(!inside.has_value() || *inside);
    }
    EXPECT_LT(geodesic_distance(flow.on_sphere(q0, tmax), t.v[2]), 1e-3);
    // Backward in time the source attracts.
    EXPECT_LT(geodesic_distance(flow.on_sphere(q0, -tmax), t.v[0]), 1e-3);
    ++trial;
  }
}

GTEST_TEST(CycleDichotomy, AttractingCycleDrawsTrajectoriesToTheCircle) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sub = subsystem_from_matrices({random_cycle(rng, true)});
    ASSERT_EQ(sub.samples[0].dyn_class, DynClass::kComplexAttractingCycle);
    const auto& cp = sub.samples[0].complex();
    const Vec3 normal = cp.e_r;
    Vec3 q0 = random_unit(rng);
    if (std::abs(q0.dot(normal)) < 1e-3) q0 = (q0 + 0.1 * normal).normalized();
    const ExactFlow flow(sub.samples[0].spectrum);
    const double tmax = 50.0 / flow.min_rate_gap();
    double prev = 10.0;
    for (int i = 0; i <= 100; ++i) {
      // Angular distance to the invariant circle.
      const double d = std::asin(std::min(1.0, std::abs(flow.on_sphere(q0, tmax * i / 100.0).dot(normal))));
      EXPECT_LE(d, prev + 1e-12);
      prev = d;
    }
    EXPECT_LT(prev, 1e-3);
  }
}

GTEST_TEST(CycleDichotomy, RepulsiveCyclePushesTrajectoriesToAPole) {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto sub = subsystem_from_matrices({random_cycle(rng, false)});
    ASSERT_EQ(sub.samples[0].dyn_class, DynClass::kComplexRepulsiveCycle);
    const auto& cp = sub.samples[0].complex();
    const double a = std::atan2(n(rng), n(rng));
    const double side = trial % 2 ? 1e-3 : -1e-3;
    const Vec3 q0 = (std::cos(a) * cp.p1 + std::sin(a) * cp.p2 + side * cp.e_r).normalized();
    const ExactFlow flow(sub.samples[0].spectrum);
    const Vec3 end = flow.on_sphere(q0, 50.0 / flow.min_rate_gap());
    const Vec3 pole = side > 0 ? cp.e_r : Vec3(-cp.e_r);
    EXPECT_LT(geodesic_distance(end, pole), 1e-3);
  }
}

GTEST_TEST(Invariance, CirclesStayInvariant) {
  std::mt19937_64 rng(38);
  std::uniform_real_distribution<double> ut(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 m = trial % 2 ? test::rotated_diagonal(rng, Vec3(-1, 0.5, 2)) : random_cycle(rng, trial % 4 == 0);
    const auto sub = subsystem_from_matrices({m});
    const auto cx = build_cell_complex(sub, 1e-9);
    std::vector<GreatCircle> circles;
    if (!cx.real.empty()) {
      circles.assign(cx.real[0].circles.begin(), cx.real[0].circles.end());
    } else {
      circles.push_back(cx.complex.at(0).circle);
    }
    const double t = ut(rng);
    for (const auto& c : circles) {
      const double a = ut(rng);
      const Vec3 q0 = std::cos(a) * c.span_a + std::sin(a) * c.normal.cross(c.span_a);
      EXPECT_LE(std::abs(flow_on_sphere(sub.samples[0].spectrum, q0, t).dot(c.normal)), 1e-8);
      const Trajectory tr = integrate_projected(m, q0, t, default_step(m), 100);
      for (const auto& p : tr.points) EXPECT_LE(std::abs(p.dot(c.normal)), 1e-8);
    }
  }
}

GTEST_TEST(Schedules, ApplyMatchesSimulate) {
  const auto sys = test::load_fixture("theorem_a.json");
  std::mt19937_64 rng(39);
  std::uniform_int_distribution<int> k(0, 2);
  std::exponential_distribution<double> dt(2.0);
  for (int trial = 0; trial < 10; ++trial) {
    ControlSchedule s;
    for (int i = 0; i < 5; ++i) s.segments.push_back({k(rng), dt(rng)});
    const Vec3 q0 = random_unit(rng);
    const Trajectory tr = simulate_schedule(sys.sub, q0, s);
    EXPECT_LT(geodesic_distance(tr.points.back(), apply_schedule(sys.sub, q0, s)), 1e-6);
    double total = 0.0;
    for (const auto& seg : s.segments) total += seg.duration;
    EXPECT_NEAR(tr.times.back(), total, 1e-12);
  }
}

GTEST_TEST(MonteCarlo, SameEndpointsGiveEmptySchedule) {
  const auto sys = test::load_fixture("theorem_c.json");
  const Vec3 p = Vec3(0.1, 0.2, 0.9).normalized();
  const auto s = monte_carlo_connect(sys.sub, p, p, 0.05, 100, 1);
  ASSERT_TRUE(s.has_value());
  EXPECT_TRUE(s->segments.empty());
}

GTEST_TEST(MonteCarlo, UnreachableTargetInSingleSampleSystem) {
  const auto sub = subsystem_from_matrices({Vec3(1, 2, 3).asDiagonal()});
  // Octant triangles are invariant: the (-,-,-) octant is out of reach.
  const auto s = monte_carlo_connect(sub, Vec3(1, 0.1, 0.1).normalized(),
                                     Vec3(-0.2, -0.3, -1).normalized(), 0.05, 500, 3);
  EXPECT_FALSE(s.has_value());
}

GTEST_TEST(MonteCarlo, ReproducibleAndVerified) {
  const auto sys = test::load_fixture("theorem_c.json");
  std::mt19937_64 rng(40);
  for (int i = 0; i < 3; ++i) {
    const Vec3 from = random_unit(rng), to = random_unit(rng);
    const auto a = monte_carlo_connect(sys.sub, from, to, 0.05, 10000, 7 + i);
    const auto b = monte_carlo_connect(sys.sub, from, to, 0.05, 10000, 7 + i);
    ASSERT_TRUE(a.has_value());
    ASSERT_TRUE(b.has_value());
    ASSERT_EQ(a->segments.size(), b->segments.size());
    for (std::size_t s = 0; s < a->segments.size(); ++s) {
      EXPECT_EQ(a->segments[s].sample, b->segments[s].sample);
      EXPECT_EQ(a->segments[s].duration, b->segments[s].duration);
    }
    EXPECT_LE(geodesic_distance(apply_schedule(sys.sub, from, *a), to), 0.05);
  }
}

}  // namespace
}  // namespace dircon

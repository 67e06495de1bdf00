#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "dircon/linalg3.hpp"
#include "dircon/system_model.hpp"

namespace dircon {

/// Tangential part of m q: V(q) = m q - (m q . q) q.
template <typename Derived>
Vector3<typename Derived::Scalar> projected_field(
    const Matrix3<typename Derived::Scalar>& m,
    const Eigen::MatrixBase<Derived>& q) {
  const Vector3<typename Derived::Scalar> mq = m * q;
  return mq - mq.dot(q) * q;
}

/// Closed-form flow of x' = m x in the eigenbasis (real spectrum) or the
/// real Jordan frame (complex pair), built once per spectrum.
class ExactFlow {
 public:
  /// Throws DegenerateSpectrum for a Degenerate spectrum.
  explicit ExactFlow(const Spectrum& spectrum);

  /// x(t) in R^3.
  Vec3 apply(const Vec3& x0, double t) const;

  /// x(t)/|x(t)|, computed in log scale so large |t| neither overflows nor
  /// underflows. Throws Underflow for x0 = 0.
  UnitVec3 on_sphere(const UnitVec3& q0, double t) const;

  /// Smallest nonzero eigenvalue-real-part gap; sets the time scale.
  double min_rate_gap() const { return min_gap_; }
  /// Largest |eigenvalue|.
  double spectral_radius() const { return radius_; }

 private:
  bool complex_ = false;
  Mat3 frame_ = Mat3::Identity();
  Mat3 frame_inv_ = Mat3::Identity();
  std::array<double, 3> rates_{};  // real parts per frame coordinate
  double omega_ = 0.0;             // imaginary part (complex case)
  double min_gap_ = 1.0;
  double radius_ = 1.0;
};

Vec3 exact_flow(const Spectrum& spectrum, const Vec3& x0, double t);
UnitVec3 flow_on_sphere(const Spectrum& spectrum, const UnitVec3& q0, double t);

struct Segment {
  int sample = 0;
  double duration = 0.0;
};

struct ControlSchedule {
  std::vector<Segment> segments;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<UnitVec3> points;
  ControlSchedule schedule;
};

/// Default integrator step 1e-3 / ||m||_F.
double default_step(const Mat3& m);

/// One classic RK4 step of the projected field followed by renormalization.
UnitVec3 rk4_step(const Mat3& m, const UnitVec3& q, double h);

/// Integrates the projected field of m from q0 over [0, t] with the uniform
/// step t/ceil(t/h) <= h, so the last point lands on t. Every `record_every`-th point is
/// kept, plus the endpoint.
Trajectory integrate_projected(const Mat3& m, const UnitVec3& q0, double t, double h,
                               int record_every = 1);

/// Piecewise RK4 simulation of a switching schedule over the subsystem's
/// sample operators.
Trajectory simulate_schedule(const SubsystemUN& sub, const UnitVec3& q0,
                             const ControlSchedule& schedule, double h = 0.0,
                             int record_every = 1);

/// Endpoint of a schedule under the closed-form flows.
UnitVec3 apply_schedule(const SubsystemUN& sub, const UnitVec3& q0,
                        const ControlSchedule& schedule);

/// Randomized switching search from `from` toward `to`. Sample indices are
/// uniform and segment durations exponential with mean 1/spectral radius.
/// A quarter of the budget grows reversed-time walks from `to`; the rest
/// runs forward walks from `from`, each abandoned (restart) after 50
/// segments without getting closer to `to`. Points along forward segments
/// and along a line search of every flow are joined to nearby backward
/// points. Returns a schedule whose closed-form replay ends within tol of
/// `to`, or nullopt once `budget` random segments are spent. Deterministic
/// in rng_seed.
std::optional<ControlSchedule> monte_carlo_connect(const SubsystemUN& sub,
                                                   const UnitVec3& from,
                                                   const UnitVec3& to, double tol,
                                                   int budget, std::uint64_t rng_seed);

/// Uniform random unit vector.
template <typename Rng>
UnitVec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  while (true) {
    const Vec3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-6) return v / len;
  }
}

}  // namespace dircon

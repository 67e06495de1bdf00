#include "dircon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dircon/errors.hpp"

namespace dircon {

ExactFlow::ExactFlow(const Spectrum& spectrum) {
  if (const auto* rd = std::get_if<RealDistinct>(&spectrum)) {
    for (int i = 0; i < 3; ++i) frame_.col(i) = rd->e[i];
    rates_ = rd->lambda;
    min_gap_ = std::min(rd->lambda[1] - rd->lambda[0], rd->lambda[2] - rd->lambda[1]);
    radius_ = std::max(std::abs(rd->lambda[0]), std::abs(rd->lambda[2]));
  } else if (const auto* cp = std::get_if<ComplexPair>(&spectrum)) {
    complex_ = true;
    frame_.col(0) = cp->e_r;
    frame_.col(1) = cp->jordan_re;
    frame_.col(2) = cp->jordan_im;
    rates_ = {cp->lambda_r, cp->re_c, cp->re_c};
    omega_ = cp->im_c;
    min_gap_ = std::abs(cp->lambda_r - cp->re_c);
    radius_ = std::max(std::abs(cp->lambda_r), std::hypot(cp->re_c, cp->im_c));
  } else {
    throw Error(ErrorKind::kDegenerateSpectrum,
                "no closed-form flow for a degenerate spectrum: " +
                    std::get<Degenerate>(spectrum).reason);
  }
  frame_inv_ = frame_.inverse();
  if (!(min_gap_ > 0.0)) min_gap_ = std::numeric_limits<double>::min();
}

Vec3 ExactFlow::apply(const Vec3& x0, double t) const {
  Vec3 c = frame_inv_ * x0;
  if (!complex_) {
    for (int i = 0; i < 3; ++i) c(i) *= std::exp(rates_[i] * t);
  } else {
    // Coordinates along (e_r, jordan_re, jordan_im):
    //   x1(t) = x1 e^{lambda_r t}
    //   x2(t) = (x2 cos(w t) + x3 sin(w t)) e^{a t}
    //   x3(t) = (-x2 sin(w t) + x3 cos(w t)) e^{a t}
    const double cs = std::cos(omega_ * t);
    const double sn = std::sin(omega_ * t);
    const double g = std::exp(rates_[1] * t);
    const double x2 = c(1);
    const double x3 = c(2);
    c(0) *= std::exp(rates_[0] * t);
    c(1) = (x2 * cs + x3 * sn) * g;
    c(2) = (-x2 * sn + x3 * cs) * g;
  }
  return frame_ * c;
}

UnitVec3 ExactFlow::on_sphere(const UnitVec3& q0, double t) const {
  const Vec3 c = frame_inv_ * q0;
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  Vec3 y = Vec3::Zero();
  if (!complex_) {
    std::array<double, 3> logs{kNone, kNone, kNone};
    double shift = kNone;
    for (int i = 0; i < 3; ++i) {
      if (c(i) != 0.0) {
        logs[i] = rates_[i] * t + std::log(std::abs(c(i)));
        shift = std::max(shift, logs[i]);
      }
    }
    if (shift == kNone) throw Error(ErrorKind::kUnderflow, "zero initial vector");
    for (int i = 0; i < 3; ++i) {
      if (c(i) != 0.0) y(i) = std::copysign(std::exp(logs[i] - shift), c(i));
    }
  } else {
    const double r = std::hypot(c(1), c(2));
    const double log0 = c(0) != 0.0 ? rates_[0] * t + std::log(std::abs(c(0))) : kNone;
    const double log1 = r != 0.0 ? rates_[1] * t + std::log(r) : kNone;
    const double shift = std::max(log0, log1);
    if (shift == kNone) throw Error(ErrorKind::kUnderflow, "zero initial vector");
    if (c(0) != 0.0) y(0) = std::copysign(std::exp(log0 - shift), c(0));
    if (r != 0.0) {
      const double cs = std::cos(omega_ * t);
      const double sn = std::sin(omega_ * t);
      const double g = std::exp(log1 - shift) / r;
      y(1) = (c(1) * cs + c(2) * sn) * g;
      y(2) = (-c(1) * sn + c(2) * cs) * g;
    }
  }
  const Vec3 x = frame_ * y;
  const double len = x.norm();
  if (!(len > 1e-300)) throw Error(ErrorKind::kUnderflow, "flow collapsed to zero");
  return x / len;
}

Vec3 exact_flow(const Spectrum& spectrum, const Vec3& x0, double t) {
  return ExactFlow(spectrum).apply(x0, t);
}

UnitVec3 flow_on_sphere(const Spectrum& spectrum, const UnitVec3& q0, double t) {
  return ExactFlow(spectrum).on_sphere(q0, t);
}

double default_step(const Mat3& m) {
  const double n = m.norm();
  return n > 0.0 ? 1e-3 / n : 1e-3;
}

UnitVec3 rk4_step(const Mat3& m, const UnitVec3& q, double h) {
  const Vec3 k1 = projected_field(m, q);
  const Vec3 k2 = projected_field(m, Vec3(q + 0.5 * h * k1));
  const Vec3 k3 = projected_field(m, Vec3(q + 0.5 * h * k2));
  const Vec3 k4 = projected_field(m, Vec3(q + h * k3));
  return (q + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0).normalized();
}

Trajectory integrate_projected(const Mat3& m, const UnitVec3& q0, double t, double h,
                               int record_every) {
  if (!(h > 0.0)) throw Error(ErrorKind::kInvalidArgument, "integrator step must be > 0");
  if (!(t >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "integration time must be >= 0");
  record_every = std::max(record_every, 1);
  const long n = static_cast<long>(std::ceil(t / h));
  const double step = n > 0 ? t / n : 0.0;
  Trajectory traj;
  traj.schedule.segments.push_back({0, t});
  traj.times.push_back(0.0);
  traj.points.push_back(q0);
  UnitVec3 q = q0;
  for (long i = 1; i <= n; ++i) {
    q = rk4_step(m, q, step);
    if (i % record_every == 0 || i == n) {
      traj.times.push_back(i == n ? t : i * step);
      traj.points.push_back(q);
    }
  }
  return traj;
}

Trajectory simulate_schedule(const SubsystemUN& sub, const UnitVec3& q0,
                             const ControlSchedule& schedule, double h,
                             int record_every) {
  Trajectory traj;
  traj.schedule = schedule;
  traj.times.push_back(0.0);
  traj.points.push_back(q0);
  double t0 = 0.0;
  UnitVec3 q = q0;
  for (const Segment& seg : schedule.segments) {
    if (seg.sample < 0 || seg.sample >= static_cast<int>(sub.samples.size())) {
      throw Error(ErrorKind::kInvalidArgument,
                  "schedule references unknown sample " + std::to_string(seg.sample));
    }
    if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
      throw Error(ErrorKind::kInvalidArgument, "segment durations must be positive and finite");
    }
    const Mat3& m = sub.samples[seg.sample].matrix;
    const Trajectory part =
        integrate_projected(m, q, seg.duration, h > 0.0 ? h : default_step(m), record_every);
    for (std::size_t i = 1; i < part.points.size(); ++i) {
      traj.times.push_back(t0 + part.times[i]);
      traj.points.push_back(part.points[i]);
    }
    t0 += seg.duration;
    q = part.points.back();
  }
  return traj;
}

UnitVec3 apply_schedule(const SubsystemUN& sub, const UnitVec3& q0,
                        const ControlSchedule& schedule) {
  UnitVec3 q = q0;
  for (const Segment& seg : schedule.segments) {
    q = flow_on_sphere(sub.samples.at(seg.sample).spectrum, q, seg.duration);
  }
  return q;
}

namespace {

// Endpoints of backward random walks from the target, bucketed on a grid of
// cell size `cell` for neighbor queries.
class BackwardTree {
 public:
  struct Node {
    UnitVec3 point;
    int walk = 0;
    int depth = 0;        // segments of the walk fully used
    int sample = 0;       // sample of the partial segment
    double partial = 0.0;
  };

  explicit BackwardTree(double cell) : cell_(cell) {}

  void add(const Node& n) {
    nodes_.push_back(n);
    buckets_[key(n.point)].push_back(static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<std::vector<Segment>>& walks() { return walks_; }
  const std::vector<std::vector<Segment>>& walks() const { return walks_; }

  /// Nodes within `radius` of p, nearest first.
  std::vector<int> near(const UnitVec3& p, double radius) const {
    std::vector<std::pair<double, int>> found;
    const auto c = cell(p);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = buckets_.find(pack(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == buckets_.end()) continue;
          for (int idx : it->second) {
            const double d = (nodes_[idx].point - p).norm();
            if (d <= radius) found.emplace_back(d, idx);
          }
        }
      }
    }
    std::sort(found.begin(), found.end());
    std::vector<int> out;
    for (const auto& f : found) out.push_back(f.second);
    return out;
  }

  /// Forward schedule from the node back to the target.
  ControlSchedule forward_from(int idx) const {
    const Node& n = nodes_[idx];
    ControlSchedule s;
    s.segments.push_back({n.sample, n.partial});
    const auto& w = walks_[n.walk];
    for (int i = n.depth - 1; i >= 0; --i) s.segments.push_back(w[i]);
    return s;
  }

  bool empty() const { return nodes_.empty(); }

 private:
  std::array<long, 3> cell(const UnitVec3& p) const {
    return {static_cast<long>(std::floor((p(0) + 1.0) / cell_)),
            static_cast<long>(std::floor((p(1) + 1.0) / cell_)),
            static_cast<long>(std::floor((p(2) + 1.0) / cell_))};
  }
  static long pack(long x, long y, long z) { return (x * 4096 + y) * 4096 + z; }
  long key(const UnitVec3& p) const {
    const auto c = cell(p);
    return pack(c[0], c[1], c[2]);
  }

  double cell_;
  std::vector<Node> nodes_;
  std::vector<std::vector<Segment>> walks_;
  std::unordered_map<long, std::vector<int>> buckets_;
};

}  // namespace

std::optional<ControlSchedule> monte_carlo_connect(const SubsystemUN& sub,
                                                   const UnitVec3& from,
                                                   const UnitVec3& to, double tol,
                                                   int budget, std::uint64_t rng_seed) {
  if (!(tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "tolerance must be > 0");
  if (budget < 1) throw Error(ErrorKind::kInvalidArgument, "budget must be >= 1");
  if (geodesic_distance(from, to) <= tol) return ControlSchedule{};

  std::vector<int> usable;
  std::vector<ExactFlow> flows;
  double radius = 0.0;
  for (const auto& s : sub.samples) {
    if (is_degenerate(s.spectrum)) continue;
    usable.push_back(s.index);
    flows.emplace_back(s.spectrum);
    radius = std::max(radius, flows.back().spectral_radius());
  }
  if (usable.empty() || !(radius > 0.0)) return std::nullopt;

  constexpr int kPatience = 50;
  constexpr int kFractions = 16;
  constexpr int kProbe = 256;
  constexpr int kBackwardDepth = 6;
  double min_gap = flows.front().min_rate_gap();
  for (const auto& f : flows) min_gap = std::min(min_gap, f.min_rate_gap());
  const double probe_horizon = 8.0 / min_gap;
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(usable.size()) - 1);
  std::exponential_distribution<double> duration(radius);
  int spent = 0;

  // Backward phase: a quarter of the budget spent on reversed-time walks
  // from the target. Their points can reach `to` in forward time.
  BackwardTree tree(tol);
  const int backward_budget = budget / 4;
  while (spent < backward_budget) {
    auto& walks = tree.walks();
    walks.emplace_back();
    const int w = static_cast<int>(walks.size()) - 1;
    UnitVec3 q = to;
    for (int depth = 0; depth < kBackwardDepth && spent < backward_budget; ++depth) {
      const int slot = pick(rng);
      const double dt = duration(rng);
      ++spent;
      for (int f = 1; f <= kFractions; ++f) {
        const double t = dt * f / kFractions;
        tree.add({flows[slot].on_sphere(q, -t), w, depth, usable[slot], t});
      }
      walks[w].push_back({usable[slot], dt});
      q = flows[slot].on_sphere(q, -dt);
    }
  }

  // A forward point p joins the backward tree if replaying the node's
  // schedule from p lands within tol.
  const auto try_join = [&](const UnitVec3& p, ControlSchedule& prefix) -> bool {
    if (geodesic_distance(p, to) <= tol) return true;
    int tried = 0;
    for (int idx : tree.near(p, tol)) {
      if (++tried > 4) break;
      const ControlSchedule tail = tree.forward_from(idx);
      UnitVec3 end = p;
      for (const Segment& seg : tail.segments) {
        const auto k = std::find(usable.begin(), usable.end(), seg.sample) - usable.begin();
        end = flows[k].on_sphere(end, seg.duration);
      }
      if (geodesic_distance(end, to) <= tol) {
        prefix.segments.insert(prefix.segments.end(), tail.segments.begin(), tail.segments.end());
        return true;
      }
    }
    return false;
  };

  // Forward phase: random walks from `from`. Every segment is applied in
  // full; a walk is abandoned once kPatience segments in a row fail to bring
  // any of its points closer to `to` than its best so far. Points along each
  // segment and along a long line search of every flow are offered to the
  // backward tree.
  while (spent < budget) {
    ControlSchedule schedule;
    UnitVec3 q = from;
    double best = geodesic_distance(q, to);
    int stagnant = 0;
    while (stagnant < kPatience && spent < budget) {
      const int slot = pick(rng);
      const double dt = duration(rng);
      ++spent;
      ++stagnant;
      for (int f = 1; f <= kFractions; ++f) {
        const double t = dt * f / kFractions;
        const UnitVec3 p = flows[slot].on_sphere(q, t);
        ControlSchedule candidate = schedule;
        candidate.segments.push_back({usable[slot], t});
        if (try_join(p, candidate)) return candidate;
        const double d = geodesic_distance(p, to);
        if (d < best) {
          best = d;
          stagnant = 0;
        }
      }
      schedule.segments.push_back({usable[slot], dt});
      q = flows[slot].on_sphere(q, dt);
      for (std::size_t k = 0; k < flows.size(); ++k) {
        for (int f = 1; f <= kProbe; ++f) {
          const double t = probe_horizon * f / kProbe;
          const UnitVec3 p = flows[k].on_sphere(q, t);
          if (geodesic_distance(p, to) <= tol || !tree.near(p, tol).empty()) {
            ControlSchedule candidate = schedule;
            candidate.segments.push_back({usable[k], t});
            if (try_join(p, candidate)) return candidate;
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace dircon

#include "dircon/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dircon/errors.hpp"

namespace dircon {

namespace {

void require_finite(const Mat3& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::kValidationError, std::string(what) + " has non-finite entries");
  }
}

std::string describe_vector(const UnitVec3& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(" << v(0) << ", " << v(1) << ", " << v(2) << ")";
  return os.str();
}

Mat3 combine(const Mat3& drift, const std::vector<Mat3>& inputs,
             const ControlVector& u) {
  Mat3 m = drift;
  for (std::size_t k = 0; k < inputs.size(); ++k) m += u(k) * inputs[k];
  return m;
}

// Eigen-directions and invariant planes one sample contributes to CC4.
struct SampleGeometry {
  int sample = 0;
  std::vector<std::pair<std::string, UnitVec3>> directions;
  std::vector<std::pair<std::string, std::pair<UnitVec3, UnitVec3>>> planes;
};

SampleGeometry sample_geometry(const ParameterSample& s) {
  SampleGeometry g;
  g.sample = s.index;
  const std::string tag = "sample " + std::to_string(s.index);
  if (const auto* rd = std::get_if<RealDistinct>(&s.spectrum)) {
    for (int i = 0; i < 3; ++i) {
      g.directions.push_back({tag + " E" + std::to_string(i + 1), rd->e[i]});
    }
    for (int i = 0; i < 3; ++i) {
      const int a = (i + 1) % 3;
      const int b = (i + 2) % 3;
      g.planes.push_back({tag + " plane(E" + std::to_string(std::min(a, b) + 1) +
                              ",E" + std::to_string(std::max(a, b) + 1) + ")",
                          {rd->e[std::min(a, b)], rd->e[std::max(a, b)]}});
    }
  } else if (const auto* cp = std::get_if<ComplexPair>(&s.spectrum)) {
    g.directions.push_back({tag + " E_R", cp->e_r});
    g.planes.push_back({tag + " invariant plane", {cp->p1, cp->p2}});
  }
  return g;
}

}  // namespace

BilinearSystem::BilinearSystem(Mat3 drift, std::vector<Mat3> inputs,
                               ControlSet control_set)
    : drift_(std::move(drift)),
      inputs_(std::move(inputs)),
      control_set_(std::move(control_set)) {
  if (inputs_.empty()) {
    throw Error(ErrorKind::kValidationError, "at least one input matrix B_k is required");
  }
  require_finite(drift_, "A");
  for (const Mat3& b : inputs_) require_finite(b, "B_k");
  const auto d = static_cast<Eigen::Index>(inputs_.size());
  if (const auto* box = std::get_if<BoxControl>(&control_set_)) {
    if (box->lower.size() != d || box->upper.size() != d) {
      throw Error(ErrorKind::kDimensionMismatch, "box bounds must have length d");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!std::isfinite(box->lower(i)) || !std::isfinite(box->upper(i)) ||
          !(box->lower(i) < box->upper(i))) {
        throw Error(ErrorKind::kValidationError,
                    "box requires finite lower < upper in every coordinate");
      }
    }
  } else {
    const auto& finite = std::get<FiniteControl>(control_set_);
    if (finite.points.empty()) {
      throw Error(ErrorKind::kValidationError, "finite control set is empty");
    }
    for (const ControlVector& p : finite.points) {
      if (p.size() != d) {
        throw Error(ErrorKind::kDimensionMismatch, "control point must have length d");
      }
    }
  }
}

bool BilinearSystem::admits(const ControlVector& u) const {
  if (u.size() != control_dim()) return false;
  if (const auto* box = std::get_if<BoxControl>(&control_set_)) {
    return ((box->lower.array() < u.array()) && (u.array() < box->upper.array())).all();
  }
  const auto& finite = std::get<FiniteControl>(control_set_);
  return std::any_of(finite.points.begin(), finite.points.end(),
                     [&](const ControlVector& p) { return p == u; });
}

Mat3 evaluate_operator(const BilinearSystem& sys, const ControlVector& u) {
  if (u.size() != sys.control_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "control has length " + std::to_string(u.size()) + ", expected " +
                    std::to_string(sys.control_dim()));
  }
  return combine(sys.drift(), sys.inputs(), u);
}

std::string_view to_string(DynClass c) {
  switch (c) {
    case DynClass::kRealStable: return "RealStable";
    case DynClass::kComplexAttractingCycle: return "ComplexAttractingCycle";
    case DynClass::kComplexRepulsiveCycle: return "ComplexRepulsiveCycle";
    case DynClass::kComplexNeutral: return "ComplexNeutral";
    case DynClass::kDegenerate: return "Degenerate";
  }
  return "Unknown";
}

DynClass classify(const Spectrum& spectrum, double neutral_tol) {
  if (std::holds_alternative<RealDistinct>(spectrum)) return DynClass::kRealStable;
  if (const auto* cp = std::get_if<ComplexPair>(&spectrum)) {
    // The plane of the pair dominates when re_c > lambda_r: the circle then
    // attracts and the poles +-e_r are sources.
    const double diff = cp->re_c - cp->lambda_r;
    if (std::abs(diff) <= neutral_tol) return DynClass::kComplexNeutral;
    return diff > 0 ? DynClass::kComplexAttractingCycle
                    : DynClass::kComplexRepulsiveCycle;
  }
  return DynClass::kDegenerate;
}

namespace {

SubsystemUN assemble(std::vector<ParameterSample> samples, double eps_spec) {
  SubsystemUN sub;
  sub.samples = std::move(samples);
  for (auto& s : sub.samples) {
    s.spectrum = eigen_decompose(s.matrix, eps_spec);
    s.dyn_class = classify(s.spectrum, eps_spec * s.matrix.norm());
    switch (s.dyn_class) {
      case DynClass::kRealStable: sub.real_idx.push_back(s.index); break;
      case DynClass::kComplexAttractingCycle:
      case DynClass::kComplexRepulsiveCycle: sub.complex_idx.push_back(s.index); break;
      default: sub.excluded_idx.push_back(s.index); break;
    }
  }
  return sub;
}

}  // namespace

SubsystemUN build_subsystem(const BilinearSystem& sys,
                            const std::vector<ControlVector>& us,
                            double eps_spec) {
  if (us.empty()) {
    throw Error(ErrorKind::kValidationError, "subsystem needs at least one sample");
  }
  std::vector<ParameterSample> samples;
  for (std::size_t k = 0; k < us.size(); ++k) {
    ParameterSample s;
    s.index = static_cast<int>(k);
    s.u = us[k];
    s.matrix = evaluate_operator(sys, us[k]);
    if (!sys.admits(us[k])) {
      throw Error(ErrorKind::kSampleOutsideControlSet,
                  "sample " + std::to_string(k) + " lies outside the control set");
    }
    samples.push_back(std::move(s));
  }
  return assemble(std::move(samples), eps_spec);
}

SubsystemUN subsystem_from_matrices(const std::vector<Mat3>& matrices,
                                    double eps_spec) {
  std::vector<ParameterSample> samples;
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    ParameterSample s;
    s.index = static_cast<int>(k);
    s.matrix = matrices[k];
    samples.push_back(std::move(s));
  }
  return assemble(std::move(samples), eps_spec);
}

Cc34Report check_cc3_cc4(const SubsystemUN& sub, double eps_geom) {
  Cc34Report report;
  for (const auto& s : sub.samples) {
    if (s.dyn_class == DynClass::kDegenerate) {
      report.cc3 = false;
      report.violations.push_back("CC3: sample " + std::to_string(s.index) + " is degenerate (" +
                                  std::get<Degenerate>(s.spectrum).reason + ")");
    }
  }

  std::vector<SampleGeometry> geoms;
  for (const auto& s : sub.samples) {
    if (s.dyn_class == DynClass::kRealStable ||
        s.dyn_class == DynClass::kComplexAttractingCycle ||
        s.dyn_class == DynClass::kComplexRepulsiveCycle) {
      geoms.push_back(sample_geometry(s));
    }
  }

  std::vector<std::pair<std::string, UnitVec3>> all_dirs;
  for (const auto& g : geoms) {
    for (const auto& d : g.directions) all_dirs.push_back(d);
  }
  for (std::size_t a = 0; a < all_dirs.size(); ++a) {
    for (std::size_t b = a + 1; b < all_dirs.size(); ++b) {
      // Angular separation modulo +-: |sin angle|.
      const double sep = all_dirs[a].second.cross(all_dirs[b].second).norm();
      if (!(sep > eps_geom)) {
        report.cc4 = false;
        report.violations.push_back("CC4: eigenvectors " + all_dirs[a].first + " " +
                                    describe_vector(all_dirs[a].second) + " and " +
                                    all_dirs[b].first + " coincide");
      }
    }
  }
  for (const auto& gk : geoms) {
    for (const auto& gj : geoms) {
      if (gk.sample == gj.sample) continue;
      for (const auto& [dname, dir] : gk.directions) {
        for (const auto& [pname, plane] : gj.planes) {
          const double m = mixed_product(dir, plane.first, plane.second);
          if (!(std::abs(m) > eps_geom)) {
            report.cc4 = false;
            report.violations.push_back("CC4: " + dname + " lies in " + pname);
          }
        }
      }
    }
  }
  return report;
}

std::vector<UnitVec3> sphere_lattice(int n) {
  std::vector<UnitVec3> pts;
  pts.reserve(static_cast<std::size_t>(std::max(n, 0)));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

Cc1Report check_cc1(const BilinearSystem& sys, const SubsystemUN& sub,
                    int grid_n, double eps_geom) {
  if (grid_n < 12) {
    throw Error(ErrorKind::kInvalidArgument, "CC1 grid needs at least 12 points");
  }
  std::vector<Mat3> candidates;
  for (const auto& s : sub.samples) candidates.push_back(s.matrix);
  if (const auto* box = std::get_if<BoxControl>(&sys.control_set())) {
    const int d = sys.control_dim();
    if (d <= 16) {
      for (long mask = 0; mask < (1L << d); ++mask) {
        ControlVector u(d);
        for (int i = 0; i < d; ++i) u(i) = (mask >> i) & 1 ? box->upper(i) : box->lower(i);
        candidates.push_back(combine(sys.drift(), sys.inputs(), u));
      }
    }
  }

  Cc1Report report;
  report.worst_measure = std::numeric_limits<double>::infinity();
  for (const UnitVec3& q : sphere_lattice(grid_n)) {
    std::vector<Vec3> fields;
    fields.reserve(candidates.size());
    for (const Mat3& m : candidates) {
      const Vec3 mq = m * q;
      fields.push_back(mq - mq.dot(q) * q);
    }
    double best = 0.0;
    for (std::size_t a = 0; a < fields.size(); ++a) {
      for (std::size_t b = a + 1; b < fields.size(); ++b) {
        best = std::max(best, fields[a].cross(fields[b]).norm());
      }
    }
    ++report.evaluations;
    if (best < report.worst_measure) {
      report.worst_measure = best;
      report.worst_point = q;
    }
  }
  report.holds = report.worst_measure > eps_geom;
  return report;
}

Ck1Report check_ck1(const SubsystemUN& sub) {
  Ck1Report report;
  for (const auto& s : sub.samples) {
    const Mat3& m = s.matrix;
    const double c1 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) +
                      m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                      m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    const auto roots = solve_cubic(-m.trace(), c1, -m.determinant());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : roots.as_complex()) {
      lo = std::min(lo, r.real());
      hi = std::max(hi, r.real());
    }
    if (hi < 0.0) report.has_contracting = true;
    if (lo > 0.0) report.has_expanding = true;
  }
  return report;
}

ConditionReport check_conditions(const BilinearSystem& sys,
                                 const SubsystemUN& sub,
                                 const Settings& settings) {
  ConditionReport report;
  report.cc1 = check_cc1(sys, sub, settings.cc1_grid, settings.eps_geom);
  if (std::holds_alternative<BoxControl>(sys.control_set())) {
    report.cc2 = true;
    report.cc2_note = "open box control set: CC2 follows from CC1";
  } else {
    report.cc2 = false;
    report.cc2_note =
        "finite control set is not open: CC2 unsatisfiable, verdicts are conditional";
  }
  report.cc34 = check_cc3_cc4(sub, settings.eps_geom);
  report.ck1 = check_ck1(sub);
  return report;
}

}  // namespace dircon

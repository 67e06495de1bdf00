#pragma once

#include <string>
#include <variant>
#include <vector>

#include "dircon/linalg3.hpp"
#include "dircon/settings.hpp"

namespace dircon {

using ControlVector = Eigen::VectorXd;

/// Open box lower < u < upper.
struct BoxControl {
  ControlVector lower;
  ControlVector upper;
};

struct FiniteControl {
  std::vector<ControlVector> points;
};

using ControlSet = std::variant<BoxControl, FiniteControl>;

/// x' = (A + sum_k u^k B_k) x with u in the control set.
class BilinearSystem {
 public:
  BilinearSystem(Mat3 drift, std::vector<Mat3> inputs, ControlSet control_set);

  const Mat3& drift() const { return drift_; }
  const std::vector<Mat3>& inputs() const { return inputs_; }
  const ControlSet& control_set() const { return control_set_; }
  int control_dim() const { return static_cast<int>(inputs_.size()); }

  /// Box: strict interior. Finite: equal to one of the points.
  bool admits(const ControlVector& u) const;

 private:
  Mat3 drift_;
  std::vector<Mat3> inputs_;
  ControlSet control_set_;
};

/// A(u) = A + u^1 B_1 + ... + u^d B_d.
Mat3 evaluate_operator(const BilinearSystem& sys, const ControlVector& u);

enum class DynClass {
  kRealStable,
  kComplexAttractingCycle,
  kComplexRepulsiveCycle,
  kComplexNeutral,
  kDegenerate,
};

std::string_view to_string(DynClass c);

/// Class of the projected flow of one spectrum. A complex pair has an
/// attracting invariant circle when re_c > lambda_r and a repulsive one when
/// re_c < lambda_r. neutral_tol is absolute.
DynClass classify(const Spectrum& spectrum, double neutral_tol);

struct ParameterSample {
  int index = 0;
  ControlVector u;
  Mat3 matrix = Mat3::Zero();  // A(u)
  Spectrum spectrum;
  DynClass dyn_class = DynClass::kDegenerate;

  const RealDistinct& real() const { return std::get<RealDistinct>(spectrum); }
  const ComplexPair& complex() const { return std::get<ComplexPair>(spectrum); }
};

/// The finite subsystem U^N. Indices refer to positions in `samples`.
struct SubsystemUN {
  std::vector<ParameterSample> samples;
  std::vector<int> real_idx;      // kRealStable
  std::vector<int> complex_idx;   // attracting or repulsive cycle
  std::vector<int> excluded_idx;  // neutral or degenerate
};

SubsystemUN build_subsystem(const BilinearSystem& sys,
                            const std::vector<ControlVector>& us,
                            double eps_spec = kDefaultEpsSpec);

/// Subsystem from bare matrices, one per sample (u is left empty).
SubsystemUN subsystem_from_matrices(const std::vector<Mat3>& matrices,
                                    double eps_spec = kDefaultEpsSpec);

struct Cc34Report {
  bool cc3 = true;
  bool cc4 = true;
  std::vector<std::string> violations;
};

Cc34Report check_cc3_cc4(const SubsystemUN& sub, double eps_geom);

struct Cc1Report {
  bool holds = false;
  UnitVec3 worst_point = UnitVec3::UnitZ();
  double worst_measure = 0.0;
  int evaluations = 0;
};

/// Deterministic quasi-uniform spiral lattice on the sphere.
std::vector<UnitVec3> sphere_lattice(int n);

/// Pointwise rank-2 test of the projected fields on a lattice of grid_n
/// points, using the sample operators plus the vertices of a box control set.
Cc1Report check_cc1(const BilinearSystem& sys, const SubsystemUN& sub,
                    int grid_n, double eps_geom);

/// Eigenvalue-sign form of the lift condition: some A(u_k) with every real
/// part negative and some with every real part positive.
struct Ck1Report {
  bool has_contracting = false;
  bool has_expanding = false;
  bool licenses_lift() const { return has_contracting && has_expanding; }
};

Ck1Report check_ck1(const SubsystemUN& sub);

struct ConditionReport {
  Cc1Report cc1;
  bool cc2 = false;
  std::string cc2_note;
  Cc34Report cc34;
  Ck1Report ck1;

  bool generic() const { return cc1.holds && cc34.cc3 && cc34.cc4; }
};

ConditionReport check_conditions(const BilinearSystem& sys,
                                 const SubsystemUN& sub,
                                 const Settings& settings);

}  // namespace dircon

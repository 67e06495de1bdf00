#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dircon/dynamics.hpp"
#include "dircon/reachability.hpp"
#include "dircon/replay.hpp"
#include "dircon/sphere_geometry.hpp"
#include "dircon/system_model.hpp"

namespace dircon::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Input document: x' = (A + sum_k u^k B_k) x on a control set, with the
/// parameter samples used by the decision procedures.
struct SystemDocument {
  Mat3 a = Mat3::Zero();
  std::vector<Mat3> b;
  ControlSet control_set;
  std::vector<ControlVector> samples;
};

/// Strict parse: unknown keys, wrong shapes and dim != 3 are rejected.
/// Syntax errors throw ParseError with line and column; schema errors
/// throw ValidationError naming the offending field.
SystemDocument parse_system_document(std::string_view text);
std::string serialize_system_document(const SystemDocument& doc);
bool operator==(const SystemDocument& x, const SystemDocument& y);

/// Sample list document {"format_version": 1, "samples": [[...], ...]}.
std::vector<ControlVector> parse_samples(std::string_view text);

struct LoadedSystem {
  BilinearSystem system;
  SubsystemUN sub;
};

/// Builds the system and its sample subsystem. Samples outside the control
/// set are reported as ValidationError naming the sample index.
LoadedSystem load_system(const SystemDocument& doc, double eps_spec);

Json to_json(const Vec3& v);
Json to_json(const Mat3& m);
Json to_json(const Spectrum& s);
Json to_json(const ConditionReport& c);
Json to_json(const GreatCircle& c);
Json to_json(const OctantTriangle& t);
Json to_json(const Region& r);
Json to_json(const CO1Entry& e);
Json to_json(const Step& s);
Json to_json(const ReachClosure& c);
Json to_json(const Verdict& v);
Json to_json(const ControlSchedule& s);
Json to_json(const ReplayReport& r);

/// Per-sample u, matrix, spectrum and class.
Json samples_json(const SubsystemUN& sub);

/// Report for classify/certify. `replay` may be null.
Json report_json(const std::string& command, const SubsystemUN& sub,
                 const ConditionReport& conditions, const Verdict* verdict,
                 const VerdictReplay* replay);

/// Circles, triangles and poles of every sample plus the regions of the
/// given closures.
Json geometry_json(const CellComplex& complex, const std::vector<ReachClosure>& closures);

/// "t x y z" per line.
std::string trajectory_table(const Trajectory& traj);

/// Stable text form: two-space indent, insertion-ordered keys, trailing
/// newline.
std::string dump(const Json& j);

}  // namespace dircon::io

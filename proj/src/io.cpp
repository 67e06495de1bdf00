#include "dircon/io.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "dircon/errors.hpp"

namespace dircon::io {

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::kValidationError, path + ": " + what);
}

void check_keys(const Json& obj, const std::string& path,
                const std::set<std::string>& required, const std::set<std::string>& optional) {
  if (!obj.is_object()) invalid(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!required.count(key) && !optional.count(key)) invalid(path, "unknown key \"" + key + "\"");
  }
  for (const auto& key : required) {
    if (!obj.contains(key)) invalid(path, "missing key \"" + key + "\"");
  }
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) invalid(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(path, "number is not finite");
  return v;
}

const Json& array(const Json& j, const std::string& path, int size = -1) {
  if (!j.is_array()) invalid(path, "expected an array");
  if (size >= 0 && static_cast<int>(j.size()) != size) {
    invalid(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
  }
  return j;
}

Mat3 matrix(const Json& j, const std::string& path) {
  array(j, path, 3);
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const std::string row = path + "[" + std::to_string(r) + "]";
    array(j[r], row, 3);
    for (int c = 0; c < 3; ++c) m(r, c) = number(j[r][c], row + "[" + std::to_string(c) + "]");
  }
  return m;
}

ControlVector vector(const Json& j, const std::string& path, int size) {
  array(j, path, size);
  ControlVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

std::vector<ControlVector> vector_list(const Json& j, const std::string& path, int size) {
  array(j, path);
  std::vector<ControlVector> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(vector(j[i], path + "[" + std::to_string(i) + "]", size));
  }
  return out;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParseError, e.what());
  }
}

void check_version(const Json& doc) {
  const Json& v = doc.at("format_version");
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion) {
    invalid("format_version", "unsupported version, expected " + std::to_string(kFormatVersion));
  }
}

Json to_json(const ControlVector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json predicates_json(const std::vector<PredicateLog>& preds) {
  Json j = Json::array();
  for (const auto& p : preds) {
    j.push_back({{"name", p.name},
                 {"value", p.value},
                 {"claim", p.positive ? "> 0" : "< 0"},
                 {"holds", p.holds()}});
  }
  return j;
}

}  // namespace

SystemDocument parse_system_document(std::string_view text) {
  const Json doc = parse_json(text);
  check_keys(doc, "document", {"format_version", "dim", "A", "B", "control_set", "samples"}, {});
  check_version(doc);
  if (!doc["dim"].is_number_integer() || doc["dim"].get<long>() != 3) {
    invalid("dim", "only dim = 3 is supported");
  }
  SystemDocument out;
  out.a = matrix(doc["A"], "A");
  array(doc["B"], "B");
  if (doc["B"].empty()) invalid("B", "at least one input matrix is required");
  for (std::size_t k = 0; k < doc["B"].size(); ++k) {
    out.b.push_back(matrix(doc["B"][k], "B[" + std::to_string(k) + "]"));
  }
  const int d = static_cast<int>(out.b.size());

  const Json& cs = doc["control_set"];
  if (!cs.is_object() || !cs.contains("type") || !cs["type"].is_string()) {
    invalid("control_set", "expected an object with a string \"type\"");
  }
  const std::string type = cs["type"].get<std::string>();
  if (type == "box") {
    check_keys(cs, "control_set", {"type", "lower", "upper"}, {});
    out.control_set = BoxControl{vector(cs["lower"], "control_set.lower", d),
                                 vector(cs["upper"], "control_set.upper", d)};
  } else if (type == "finite") {
    check_keys(cs, "control_set", {"type", "points"}, {});
    out.control_set = FiniteControl{vector_list(cs["points"], "control_set.points", d)};
  } else {
    invalid("control_set.type", "expected \"box\" or \"finite\"");
  }

  out.samples = vector_list(doc["samples"], "samples", d);
  if (out.samples.empty()) invalid("samples", "at least one sample is required");
  return out;
}

std::string serialize_system_document(const SystemDocument& doc) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["dim"] = 3;
  j["A"] = to_json(doc.a);
  j["B"] = Json::array();
  for (const auto& b : doc.b) j["B"].push_back(to_json(b));
  if (const auto* box = std::get_if<BoxControl>(&doc.control_set)) {
    j["control_set"] = {{"type", "box"}, {"lower", to_json(box->lower)}, {"upper", to_json(box->upper)}};
  } else {
    Json pts = Json::array();
    for (const auto& p : std::get<FiniteControl>(doc.control_set).points) pts.push_back(to_json(p));
    j["control_set"] = {{"type", "finite"}, {"points", pts}};
  }
  j["samples"] = Json::array();
  for (const auto& u : doc.samples) j["samples"].push_back(to_json(u));
  return dump(j);
}

bool operator==(const SystemDocument& x, const SystemDocument& y) {
  if (x.a != y.a || x.b != y.b || x.samples != y.samples) return false;
  if (x.control_set.index() != y.control_set.index()) return false;
  if (const auto* bx = std::get_if<BoxControl>(&x.control_set)) {
    const auto& by = std::get<BoxControl>(y.control_set);
    return bx->lower == by.lower && bx->upper == by.upper;
  }
  return std::get<FiniteControl>(x.control_set).points ==
         std::get<FiniteControl>(y.control_set).points;
}

std::vector<ControlVector> parse_samples(std::string_view text) {
  const Json doc = parse_json(text);
  check_keys(doc, "document", {"format_version", "samples"}, {});
  check_version(doc);
  auto samples = vector_list(doc["samples"], "samples", -1);
  if (samples.empty()) invalid("samples", "at least one sample is required");
  return samples;
}

LoadedSystem load_system(const SystemDocument& doc, double eps_spec) {
  BilinearSystem sys(doc.a, doc.b, doc.control_set);
  try {
    SubsystemUN sub = build_subsystem(sys, doc.samples, eps_spec);
    return {std::move(sys), std::move(sub)};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kSampleOutsideControlSet ||
        e.kind() == ErrorKind::kDimensionMismatch) {
      throw Error(ErrorKind::kValidationError, e.what());
    }
    throw;
  }
}

Json to_json(const Vec3& v) { return Json::array({v(0), v(1), v(2)}); }

Json to_json(const Mat3& m) {
  Json j = Json::array();
  for (int r = 0; r < 3; ++r) j.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return j;
}

Json to_json(const Spectrum& s) {
  if (const auto* rd = std::get_if<RealDistinct>(&s)) {
    return {{"kind", "real"},
            {"lambda", rd->lambda},
            {"eigenvectors", Json::array({to_json(rd->e[0]), to_json(rd->e[1]), to_json(rd->e[2])})}};
  }
  if (const auto* cp = std::get_if<ComplexPair>(&s)) {
    return {{"kind", "complex"},
            {"lambda_r", cp->lambda_r},
            {"re", cp->re_c},
            {"im", cp->im_c},
            {"e_r", to_json(cp->e_r)},
            {"p1", to_json(cp->p1)},
            {"p2", to_json(cp->p2)}};
  }
  return {{"kind", "degenerate"}, {"reason", std::get<Degenerate>(s).reason}};
}

Json to_json(const ConditionReport& c) {
  return {{"cc1",
           {{"holds", c.cc1.holds},
            {"worst_measure", c.cc1.worst_measure},
            {"worst_point", to_json(c.cc1.worst_point)},
            {"evaluations", c.cc1.evaluations}}},
          {"cc2", {{"holds", c.cc2}, {"note", c.cc2_note}}},
          {"cc3", c.cc34.cc3},
          {"cc4", c.cc34.cc4},
          {"violations", c.cc34.violations},
          {"ck1",
           {{"has_contracting", c.ck1.has_contracting},
            {"has_expanding", c.ck1.has_expanding},
            {"licenses_lift", c.ck1.licenses_lift()}}}};
}

Json to_json(const GreatCircle& c) {
  return {{"owner", c.owner},
          {"axis", c.axis},
          {"normal", to_json(c.normal)},
          {"span", Json::array({to_json(c.span_a), to_json(c.span_b)})}};
}

Json to_json(const OctantTriangle& t) {
  return {{"owner", t.owner},
          {"signs", t.signs},
          {"vertices", Json::array({to_json(t.v[0]), to_json(t.v[1]), to_json(t.v[2])})}};
}

Json to_json(const Region& r) {
  return {{"triangle", to_json(r.triangle)},
          {"cut_circle", to_json(r.cut_circle)},
          {"keep_vertex", to_json(r.keep_vertex)},
          {"membership", "inside triangle and on the keep_vertex side of cut_circle"},
          {"source_owner", r.source_owner},
          {"cut_case", std::string(to_string(r.cut_case))},
          {"via", r.via}};
}

Json to_json(const CO1Entry& e) {
  return {{"saddle", to_json(e.saddle)},
          {"owner", e.owner},
          {"sign", e.sign},
          {"side_ref", e.side_ref},
          {"via", e.via}};
}

Json to_json(const Step& s) {
  if (const auto* f = std::get_if<FirstTypeStep>(&s)) {
    return {{"type", "crossing"},
            {"from", to_json(f->from)},
            {"k", f->k},
            {"j", f->j},
            {"triangle_signs", f->triangle.signs},
            {"entry", to_json(f->entry)},
            {"crossing", to_json(f->crossing)},
            {"crossing_time", f->crossing_time},
            {"predicates", predicates_json(f->predicates)}};
  }
  const auto& st = std::get<SecondTypeStep>(s);
  return {{"type", "flooding"},
          {"entry", to_json(st.entry)},
          {"l", st.l},
          {"cut_case", std::string(to_string(st.cut_case))},
          {"region", to_json(st.region)},
          {"new_saddle", st.new_saddle ? to_json(*st.new_saddle) : Json()},
          {"predicates", predicates_json(st.predicates)}};
}

Json to_json(const ReachClosure& c) {
  Json co1 = Json::array();
  for (const auto& e : c.co1) co1.push_back(to_json(e));
  Json co2 = Json::array();
  for (const auto& r : c.co2) co2.push_back(to_json(r));
  Json cert = Json::array();
  for (const auto& s : c.certificate) cert.push_back(to_json(s));
  return {{"seed", to_json(c.seed)},
          {"sweeps", c.sweeps},
          {"partial", c.partial},
          {"skipped_points", c.skipped_points},
          {"co1", co1},
          {"co2", co2},
          {"certificate", cert}};
}

Json to_json(const Verdict& v) {
  if (const auto* c = std::get_if<Controllable>(&v)) {
    Json closures = Json::array();
    for (const auto& cl : c->closures) closures.push_back(to_json(cl));
    return {{"status", "controllable"},
            {"theorem", std::string(to_string(c->theorem))},
            {"witness", c->witness},
            {"detail", c->detail},
            {"closures", closures}};
  }
  const auto& inc = std::get<Inconclusive>(v);
  Json closures = Json::array();
  for (const auto& cl : inc.partial_closures) closures.push_back(to_json(cl));
  return {{"status", "inconclusive"}, {"reason", inc.reason}, {"partial_closures", closures}};
}

Json to_json(const ControlSchedule& s) {
  Json j = Json::array();
  for (const auto& seg : s.segments) j.push_back({{"sample", seg.sample}, {"duration", seg.duration}});
  return j;
}

Json to_json(const ReplayReport& r) {
  Json schedules = Json::array();
  for (std::size_t i = 0; i < r.schedules.size(); ++i) {
    Json s = {{"segments", to_json(r.schedules[i])}};
    if (i < r.starts.size()) s["start"] = to_json(r.starts[i]);
    schedules.push_back(s);
  }
  return {{"success", r.success},
          {"message", r.message},
          {"worst_distance", r.worst_distance},
          {"rk4_steps", r.rk4_steps},
          {"schedules", schedules}};
}

Json samples_json(const SubsystemUN& sub) {
  Json out = Json::array();
  for (const auto& s : sub.samples) {
    out.push_back({{"index", s.index},
                   {"u", to_json(s.u)},
                   {"matrix", to_json(s.matrix)},
                   {"class", std::string(to_string(s.dyn_class))},
                   {"spectrum", to_json(s.spectrum)}});
  }
  return out;
}

Json report_json(const std::string& command, const SubsystemUN& sub,
                 const ConditionReport& conditions, const Verdict* verdict,
                 const VerdictReplay* replay) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "report";
  j["command"] = command;
  j["samples"] = samples_json(sub);
  j["conditions"] = to_json(conditions);
  if (replay != nullptr) {
    Json steps = Json::array();
    for (const auto& s : replay->steps) {
      Json r = to_json(s.report);
      r["closure"] = s.closure;
      r["step"] = s.step;
      steps.push_back(r);
    }
    j["verdict"] = to_json(replay->verdict);
    j["replay"] = {{"downgraded", replay->downgraded}, {"steps", steps}};
  } else if (verdict != nullptr) {
    j["verdict"] = to_json(*verdict);
  }
  return j;
}

Json geometry_json(const CellComplex& complex, const std::vector<ReachClosure>& closures) {
  Json real = Json::array();
  for (const auto& rc : complex.real) {
    Json circles = Json::array();
    for (const auto& c : rc.circles) circles.push_back(to_json(c));
    Json triangles = Json::array();
    for (const auto& t : rc.triangles) triangles.push_back(to_json(t));
    Json seps = Json::array();
    for (const auto& s : rc.separatrices) {
      seps.push_back({{"saddle", to_json(s.saddle)},
                      {"sink", to_json(s.sink)},
                      {"carrier_normal", to_json(s.carrier.normal)}});
    }
    real.push_back({{"owner", rc.owner},
                    {"lambda", rc.spectrum.lambda},
                    {"circles", circles},
                    {"triangles", triangles},
                    {"separatrices", seps}});
  }
  Json cplx = Json::array();
  for (const auto& cc : complex.complex) {
    cplx.push_back({{"owner", cc.owner},
                    {"class", std::string(to_string(cc.dyn_class))},
                    {"circle", to_json(cc.circle)},
                    {"poles", Json::array({to_json(cc.poles[0]), to_json(cc.poles[1])})}});
  }
  Json cls = Json::array();
  for (const auto& c : closures) {
    Json regions = Json::array();
    for (const auto& r : c.co2) regions.push_back(to_json(r));
    Json saddles = Json::array();
    for (const auto& e : c.co1) saddles.push_back(to_json(e));
    cls.push_back({{"seed", to_json(c.seed)}, {"co1", saddles}, {"regions", regions}});
  }
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "geometry";
  j["real"] = real;
  j["complex"] = cplx;
  j["closures"] = cls;
  return j;
}

std::string trajectory_table(const Trajectory& traj) {
  std::string out = "# t x y z\n";
  char line[128];
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const auto& p = traj.points[i];
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g\n", traj.times[i], p(0), p(1), p(2));
    out += line;
  }
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace dircon::io

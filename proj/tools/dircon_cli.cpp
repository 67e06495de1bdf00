// Command-line front end: classify, certify, simulate, oracle, export.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "dircon/dynamics.hpp"
#include "dircon/errors.hpp"
#include "dircon/io.hpp"
#include "dircon/reachability.hpp"
#include "dircon/replay.hpp"

namespace {

using dircon::Error;
using dircon::ErrorKind;
namespace io = dircon::io;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInconclusive = 2;

struct Options {
  std::string input;
  std::string samples;
  std::string output;
  dircon::Settings settings;
  bool replay = false;
  bool timing = false;
  int pairs = 20;
  std::string schedule;
  std::string start = "1,0,0";
  double step = 0.0;
  int record_every = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInvalidArgument, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const Options& opt, const std::string& text) {
  if (opt.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(opt.output, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot write " + opt.output);
  out << text;
}

io::LoadedSystem load(const Options& opt) {
  io::SystemDocument doc = io::parse_system_document(read_file(opt.input));
  if (!opt.samples.empty()) doc.samples = io::parse_samples(read_file(opt.samples));
  return io::load_system(doc, opt.settings.eps_spec);
}

std::vector<double> parse_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidArgument, "not a number: \"" + item + "\"");
    }
  }
  return out;
}

dircon::ControlSchedule parse_schedule(const std::string& text) {
  dircon::ControlSchedule schedule;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "schedule segments are sample:duration");
    }
    const auto k = parse_numbers(item.substr(0, colon), ',');
    const auto dt = parse_numbers(item.substr(colon + 1), ',');
    if (k.size() != 1 || dt.size() != 1 || k[0] != static_cast<int>(k[0])) {
      throw Error(ErrorKind::kInvalidArgument, "bad schedule segment \"" + item + "\"");
    }
    schedule.segments.push_back({static_cast<int>(k[0]), dt[0]});
  }
  if (schedule.segments.empty()) throw Error(ErrorKind::kInvalidArgument, "empty schedule");
  return schedule;
}

int cmd_classify(const Options& opt) {
  const auto loaded = load(opt);
  const auto conditions = dircon::check_conditions(loaded.system, loaded.sub, opt.settings);
  write_output(opt, io::dump(io::report_json("classify", loaded.sub, conditions, nullptr, nullptr)));
  return kExitOk;
}

int cmd_certify(const Options& opt) {
  const auto loaded = load(opt);
  const auto conditions = dircon::check_conditions(loaded.system, loaded.sub, opt.settings);
  const auto complex = dircon::build_cell_complex(loaded.sub, opt.settings.eps_geom);
  const auto verdict = dircon::decide(loaded.sub, complex, conditions, opt.settings);
  if (opt.replay) {
    const auto checked = dircon::validate_verdict(verdict, loaded.sub, complex, opt.settings);
    write_output(opt, io::dump(io::report_json("certify", loaded.sub, conditions, nullptr, &checked)));
    return dircon::is_controllable(checked.verdict) ? kExitOk : kExitInconclusive;
  }
  write_output(opt, io::dump(io::report_json("certify", loaded.sub, conditions, &verdict, nullptr)));
  return dircon::is_controllable(verdict) ? kExitOk : kExitInconclusive;
}

int cmd_simulate(const Options& opt) {
  const auto loaded = load(opt);
  const auto start = parse_numbers(opt.start, ',');
  if (start.size() != 3) throw Error(ErrorKind::kInvalidArgument, "--start needs x,y,z");
  const dircon::Vec3 q0(start[0], start[1], start[2]);
  if (!(q0.norm() > 0.0)) throw Error(ErrorKind::kInvalidArgument, "--start must be nonzero");
  const auto traj = dircon::simulate_schedule(loaded.sub, q0.normalized(),
                                              parse_schedule(opt.schedule), opt.step,
                                              opt.record_every);
  write_output(opt, io::trajectory_table(traj));
  return kExitOk;
}

int cmd_oracle(const Options& opt) {
  const auto loaded = load(opt);
  const auto& s = opt.settings;
  std::mt19937_64 rng(s.seed);
  io::Json pairs = io::Json::array();
  int connected = 0;
  for (int i = 0; i < opt.pairs; ++i) {
    const dircon::UnitVec3 from = dircon::random_unit(rng);
    const dircon::UnitVec3 to = dircon::random_unit(rng);
    const auto schedule = dircon::monte_carlo_connect(loaded.sub, from, to, s.oracle_tol,
                                                      s.oracle_budget, s.seed + i);
    io::Json entry = {{"from", io::to_json(from)}, {"to", io::to_json(to)},
                      {"connected", schedule.has_value()}};
    if (schedule) {
      ++connected;
      const auto end = dircon::apply_schedule(loaded.sub, from, *schedule);
      entry["final_distance"] = dircon::geodesic_distance(end, to);
      entry["schedule"] = io::to_json(*schedule);
    }
    pairs.push_back(entry);
  }
  io::Json j;
  j["format_version"] = io::kFormatVersion;
  j["kind"] = "oracle";
  j["seed"] = s.seed;
  j["tol"] = s.oracle_tol;
  j["budget"] = s.oracle_budget;
  j["connected"] = connected;
  j["pairs"] = pairs;
  write_output(opt, io::dump(j));
  return connected == opt.pairs ? kExitOk : kExitInconclusive;
}

int cmd_export(const Options& opt) {
  const auto loaded = load(opt);
  const auto complex = dircon::build_cell_complex(loaded.sub, opt.settings.eps_geom);
  std::vector<dircon::ReachClosure> closures;
  if (complex.real.size() >= 2) {
    for (const auto& cells : complex.real) {
      for (int sign : {1, -1}) {
        for (const auto& seed : dircon::sink_seeds(cells, sign, opt.settings.eps_nudge)) {
          try {
            closures.push_back(dircon::compute_closure(seed, complex, opt.settings));
          } catch (const Error& e) {
            std::cerr << "closure skipped: " << e.what() << "\n";
          }
        }
      }
    }
  }
  write_output(opt, io::dump(io::geometry_json(complex, closures)));
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& opt) {
  auto& s = opt.settings;
  cmd->add_option("-i,--input", opt.input, "System document (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--samples", opt.samples, "Replace the document's samples")->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", opt.output, "Write the result here instead of stdout");
  cmd->add_option("--eps-spec", s.eps_spec, "Relative spectral gap tolerance")->capture_default_str();
  cmd->add_option("--eps-geom", s.eps_geom, "Genericity floor for mixed products")->capture_default_str();
  cmd->add_option("--eps-nudge", s.eps_nudge, "Vertex seed and probe offset (rad)")->capture_default_str();
  cmd->add_option("--grid", s.cc1_grid, "Sphere lattice size for the rank check")->capture_default_str();
  cmd->add_option("--max-iter", s.max_iter, "Closure sweep budget")->capture_default_str();
  cmd->add_flag("--timing", opt.timing, "Print elapsed time to stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sufficient controllability checks for 3D bilinear systems on the sphere"};
  app.require_subcommand(1);
  Options opt;
  auto& s = opt.settings;

  auto* classify = app.add_subcommand("classify", "Spectra, classes and condition reports");
  add_common(classify, opt);

  auto* certify = app.add_subcommand("certify", "Decide controllability with a certificate");
  add_common(certify, opt);
  certify->add_flag("--replay", opt.replay, "Re-simulate every certificate step");
  certify->add_option("--eps-replay", s.eps_replay, "Replay landing tolerance (rad)")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Integrate a switching schedule");
  add_common(simulate, opt);
  simulate->add_option("--schedule", opt.schedule, "Segments sample:duration,...")->required();
  simulate->add_option("--start", opt.start, "Initial direction x,y,z")->capture_default_str();
  simulate->add_option("--step", opt.step, "Integrator step (0 = 1e-3/|A(u)|)");
  simulate->add_option("--record-every", opt.record_every, "Keep every n-th point")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Monte Carlo connection of random point pairs");
  add_common(oracle, opt);
  oracle->add_option("--pairs", opt.pairs, "Number of ordered pairs")->capture_default_str();
  oracle->add_option("--tol", s.oracle_tol, "Landing tolerance (rad)")->capture_default_str();
  oracle->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  oracle->add_option("--budget", s.oracle_budget, "Trial segments per pair")->capture_default_str();

  auto* exporter = app.add_subcommand("export", "Cell complex and closure geometry");
  add_common(exporter, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitError;
  try {
    if (classify->parsed()) code = cmd_classify(opt);
    if (certify->parsed()) code = cmd_certify(opt);
    if (simulate->parsed()) code = cmd_simulate(opt);
    if (oracle->parsed()) code = cmd_oracle(opt);
    if (exporter->parsed()) code = cmd_export(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  if (opt.timing) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    std::cerr << "elapsed: " << dt.count() << " s\n";
  }
  return code;
}

// qpol: polarization-qubit simulation, state tomography, and process
// tomography from the command line.
//
// Subcommands:
//   simulate   prepare a state through an optical pipeline, write simulated
//              (or exact) coincidence counts and the true state document
//   tomo       reconstruct a state from a count file
//   plane      emit tangle vs linear-entropy scatter and frontier CSVs
//   qpt        characterize a single-qubit process (chi matrix, Poincare
//              table, sphere mesh)
//
// Conventions: every angle on the command line is in degrees; every output
// document embeds a provenance block (tool version, command line, seed,
// input digests); a fixed seed reproduces outputs byte for byte. Files are
// written atomically (temp + rename). Relative output prefixes are placed
// under $QPOL_OUT_DIR when that variable is set.
//
// Exit codes: 0 success, 2 usage or parse error, 3 I/O error, 4 fit did
// not converge (result file still written).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qpol/counts.hpp"
#include "qpol/errors.hpp"
#include "qpol/optics.hpp"
#include "qpol/ptomo.hpp"
#include "qpol/qmat.hpp"
#include "qpol/rng.hpp"
#include "qpol/states.hpp"
#include "qpol/tomo.hpp"
#include "qpol/version.hpp"

using namespace qpol;

namespace {

// ---------------------------------------------------------------------------
// Provenance and file plumbing

struct Provenance {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // path -> content digest
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json provenance_json(const Provenance& p) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [path, digest] : p.inputs) inputs[path] = digest;
  return {{"tool", "qpol"},
          {"version", kVersion},
          {"command", p.command},
          {"seed", p.seed},
          {"inputs", std::move(inputs)}};
}

std::string provenance_comments(const Provenance& p) {
  std::string out;
  out += "# tool: qpol " + std::string(kVersion) + "\n";
  out += "# command: " + p.command + "\n";
  out += "# seed: " + std::to_string(p.seed) + "\n";
  for (const auto& [path, digest] : p.inputs)
    out += "# input: " + path + " " + digest + "\n";
  return out;
}

std::string join_command(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

std::string read_file(const std::string& path, Provenance& prov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  std::string text = buf.str();
  prov.inputs[path] = hex64(fnv1a64(text));
  return text;
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(what + ": " + e.what());
  }
}

void check_writable(const std::string& path) {
  const std::filesystem::path dir =
      std::filesystem::path(path).parent_path();
  const std::string d = dir.empty() ? "." : dir.string();
  if (!std::filesystem::is_directory(d))
    throw IoError("output directory does not exist: " + d);
  if (access(d.c_str(), W_OK) != 0)
    throw IoError("output directory is not writable: " + d);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw IoError("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path);
}

/// Relative output prefixes land in $QPOL_OUT_DIR when set.
std::string resolve_prefix(const std::string& prefix) {
  const char* dir = std::getenv("QPOL_OUT_DIR");
  if (dir == nullptr || *dir == '\0' ||
      std::filesystem::path(prefix).is_absolute())
    return prefix;
  return (std::filesystem::path(dir) / prefix).string();
}

std::string json_document(nlohmann::json j, const Provenance& prov) {
  j["provenance"] = provenance_json(prov);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Small parsers

double parse_double(const std::string& tok, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size() || !std::isfinite(v))
    throw ParseError("bad " + what + " '" + tok + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

/// "theta_p=45,phi=0" (degrees) -> pair-source configuration.
SourceConfig parse_source(const std::string& text) {
  SourceConfig cfg;
  for (const std::string& item : split(text, ',')) {
    if (item.empty()) continue;
    const auto kv = split(item, '=');
    if (kv.size() != 2)
      throw ParseError("source parameters must be key=value, got '" + item +
                       "'");
    if (kv[0] == "theta_p")
      cfg.pump_angle = deg_to_rad(parse_double(kv[1], "theta_p"));
    else if (kv[0] == "phi")
      cfg.phase = deg_to_rad(parse_double(kv[1], "phi"));
    else
      throw ParseError("unknown source parameter '" + kv[0] + "'");
  }
  return cfg;
}

/// One element flag value. Heralded (single-qubit) pipelines take bare
/// parameters ("22.5"); pair pipelines prefix the target ("2:22.5" or
/// "both:0:0.9" for a collective decoherer).
OpticalElement parse_element(const std::string& flag, std::string value,
                             bool herald) {
  ElementTarget target = ElementTarget::Qubit1;
  if (!herald) {
    const auto colon = value.find(':');
    const std::string head = value.substr(0, colon);
    if (colon == std::string::npos)
      throw ParseError("--" + flag + " on a pair source needs a target, e.g. "
                       "--" + flag + " 1:" + value);
    if (head == "1")
      target = ElementTarget::Qubit1;
    else if (head == "2")
      target = ElementTarget::Qubit2;
    else if (head == "both" && flag == "decohere")
      target = ElementTarget::Collective;
    else
      throw ParseError("bad target '" + head + "' for --" + flag);
    value = value.substr(colon + 1);
  }
  if (flag == "decohere") {
    const auto f = split(value, ':');
    if (f.size() != 2)
      throw ParseError("--decohere needs AXIS_DEG:STRENGTH, got '" + value +
                       "'");
    return decoherer(deg_to_rad(parse_double(f[0], "decoherer axis")),
                     parse_double(f[1], "decoherer strength"), target);
  }
  const double deg = parse_double(value, flag + " angle");
  if (flag == "hwp") return hwp(deg_to_rad(deg), target);
  if (flag == "qwp") return qwp(deg_to_rad(deg), target);
  return phase_plate(deg_to_rad(deg), target);
}

/// Element flags are order-sensitive (they form an optical train), so they
/// are re-read from the raw command line rather than from the flag parser.
std::vector<OpticalElement> elements_from_argv(int argc, char** argv,
                                               bool herald) {
  static const std::vector<std::string> kFlags{"hwp", "qwp", "phase",
                                               "decohere"};
  std::vector<OpticalElement> out;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    for (const std::string& flag : kFlags) {
      const std::string plain = "--" + flag;
      if (arg == plain) {
        if (i + 1 >= argc) throw ParseError(plain + " needs a value");
        out.push_back(parse_element(flag, argv[++i], herald));
      } else if (arg.rfind(plain + "=", 0) == 0) {
        out.push_back(
            parse_element(flag, arg.substr(plain.size() + 1), herald));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config file: a JSON object whose keys mirror long flag names; explicit
// flags win over config values.

template <typename T>
void merge_config(const nlohmann::json& cfg, const CLI::App* cmd,
                  const std::string& name, T& var) {
  if (!cfg.contains(name)) return;
  if (cmd->count("--" + name) > 0) return;
  try {
    var = cfg.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("config: bad value for '" + name + "'");
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string source;
  bool herald = false;
  std::string pipeline_file;
  double flux = 1e4;
  std::uint64_t seed = 0;
  bool noiseless = false;
  std::string out = "qpol_sim";
};

int cmd_simulate(SimulateArgs a, const CLI::App* cmd,
                 const nlohmann::json& cfg, int argc, char** argv,
                 Provenance prov) {
  merge_config(cfg, cmd, "source", a.source);
  merge_config(cfg, cmd, "herald", a.herald);
  merge_config(cfg, cmd, "pipeline", a.pipeline_file);
  merge_config(cfg, cmd, "flux", a.flux);
  merge_config(cfg, cmd, "seed", a.seed);
  merge_config(cfg, cmd, "noiseless", a.noiseless);
  merge_config(cfg, cmd, "out", a.out);
  prov.seed = a.seed;

  PrepPipeline pipe;
  if (!a.pipeline_file.empty()) {
    pipe = pipeline_from_json(
        parse_json(read_file(a.pipeline_file, prov), "pipeline document"));
  } else if (a.herald) {
    pipe.elements = elements_from_argv(argc, argv, true);
  } else if (!a.source.empty()) {
    pipe.source = parse_source(a.source);
    pipe.elements = elements_from_argv(argc, argv, false);
  } else {
    throw ParseError("simulate needs --source, --herald, or --pipeline");
  }
  if (!(a.flux > 0.0)) throw OutOfRange("simulate: flux must be positive");

  const std::string prefix = resolve_prefix(a.out);
  const std::string counts_path = prefix + ".counts.csv";
  const std::string state_path = prefix + ".state.json";
  check_writable(counts_path);
  check_writable(state_path);

  const DensityMatrix rho = run_pipeline(pipe);
  const auto settings = standard_set(rho.qubits());
  std::vector<CountRecord> records;
  if (a.noiseless) {
    for (const auto& s : settings)
      records.push_back(
          {s.label, std::llround(expected_rate(rho, s, a.flux)), a.flux});
  } else {
    records = simulate_counts(rho, settings, a.flux, a.seed);
  }

  write_file_atomic(counts_path,
                    provenance_comments(prov) + write_counts(records));
  nlohmann::json state_doc = density_to_json(rho);
  state_doc["pipeline"] = pipeline_to_json(pipe);
  write_file_atomic(state_path, json_document(std::move(state_doc), prov));

  std::printf("true state: purity=%.9f linear_entropy=%.9f", purity(rho),
              linear_entropy(rho));
  if (rho.qubits() == 2) std::printf(" tangle=%.9f", tangle(rho));
  std::printf("\nwrote %s (%zu settings)\nwrote %s\n", counts_path.c_str(),
              records.size(), state_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// tomo

struct TomoArgs {
  std::string counts_file;
  std::string method = "mle";
  std::string target_file;
  std::uint64_t seed = 0;
  int max_iterations = 5000;
  int restarts = 3;
  std::string out = "qpol_tomo";
};

int cmd_tomo(TomoArgs a, const CLI::App* cmd, const nlohmann::json& cfg,
             Provenance prov) {
  merge_config(cfg, cmd, "counts", a.counts_file);
  merge_config(cfg, cmd, "method", a.method);
  merge_config(cfg, cmd, "target", a.target_file);
  merge_config(cfg, cmd, "seed", a.seed);
  merge_config(cfg, cmd, "max-iter", a.max_iterations);
  merge_config(cfg, cmd, "restarts", a.restarts);
  merge_config(cfg, cmd, "out", a.out);
  prov.seed = a.seed;

  if (a.counts_file.empty()) throw ParseError("tomo needs --counts FILE");
  if (a.method != "mle" && a.method != "inversion")
    throw ParseError("tomo: method must be 'mle' or 'inversion'");

  const std::string prefix = resolve_prefix(a.out);
  const std::string result_path = prefix + ".result.json";
  check_writable(result_path);

  const std::vector<CountRecord> records =
      read_counts(read_file(a.counts_file, prov));
  std::vector<std::string> labels;
  for (const CountRecord& r : records)
    if (std::find(labels.begin(), labels.end(), r.setting_label) ==
        labels.end())
      labels.push_back(r.setting_label);
  const auto settings = settings_for_labels(labels);

  TomographyResult result;
  if (a.method == "mle") {
    MleOptions opts;
    opts.seed = a.seed;
    opts.max_iterations = a.max_iterations;
    opts.restarts = a.restarts;
    result = mle(records, settings, opts);
  } else {
    result = linear_inversion(records, settings);
  }

  if (!a.target_file.empty()) {
    const DensityMatrix target = density_from_json(
        parse_json(read_file(a.target_file, prov), "target state document"));
    result.fidelity_to_target = fidelity(result.estimate, target);
  }

  write_file_atomic(result_path,
                    json_document(result_to_json(result), prov));

  const DensityMatrix& est = result.estimate;
  std::printf("method: %s\n", method_name(result.method));
  if (result.fidelity_to_target)
    std::printf("fidelity to target: %.9f\n", *result.fidelity_to_target);
  std::printf("estimate: purity=%.9f linear_entropy=%.9f",
              purity(est), linear_entropy(est));
  if (est.qubits() == 2) std::printf(" tangle=%.9f", tangle(est));
  std::printf("\nwrote %s\n", result_path.c_str());

  if (a.method == "mle" && !result.converged) {
    std::fprintf(stderr,
                 "warning: fit stopped before reaching the gradient "
                 "tolerance; result written anyway\n");
    return 4;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// plane

struct PlaneArgs {
  int samples = 1000;
  std::uint64_t seed = 0;
  std::string out = "qpol_plane";
};

int cmd_plane(PlaneArgs a, const CLI::App* cmd, const nlohmann::json& cfg,
              Provenance prov) {
  merge_config(cfg, cmd, "samples", a.samples);
  merge_config(cfg, cmd, "seed", a.seed);
  merge_config(cfg, cmd, "out", a.out);
  prov.seed = a.seed;
  if (a.samples < 0) throw OutOfRange("plane: samples must be >= 0");

  const std::string prefix = resolve_prefix(a.out);
  const std::string frontier_path = prefix + ".frontier.csv";
  const std::string points_path = prefix + ".points.csv";
  check_writable(frontier_path);
  if (a.samples > 0) check_writable(points_path);

  char line[80];
  std::string frontier =
      provenance_comments(prov) + "linear_entropy,tangle\n";
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(i) / (n - 1);
    const DensityMatrix rho = mems(r);
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", linear_entropy(rho),
                  tangle(rho));
    frontier += line;
  }
  write_file_atomic(frontier_path, frontier);
  std::printf("wrote %s (%zu rows)\n", frontier_path.c_str(), n);

  if (a.samples == 0) {
    std::fprintf(stderr,
                 "warning: no samples requested; frontier file only\n");
    return 0;
  }

  Rng rng(a.seed);
  std::string points = provenance_comments(prov) + "linear_entropy,tangle\n";
  for (int i = 0; i < a.samples; ++i) {
    const PlanePoint p = plane_point(ginibre_state(2, rng));
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", p.linear_entropy,
                  p.tangle);
    points += line;
  }
  write_file_atomic(points_path, points);
  std::printf("wrote %s (%d samples)\n", points_path.c_str(), a.samples);
  return 0;
}

// ---------------------------------------------------------------------------
// qpt

struct QptArgs {
  std::string process;
  std::string mode = "standard";
  double flux = 1e5;
  std::uint64_t seed = 0;
  bool noiseless = false;
  int mesh_n = 20;
  std::string out = "qpol_qpt";
};

int cmd_qpt(QptArgs a, const CLI::App* cmd, const nlohmann::json& cfg,
            Provenance prov) {
  merge_config(cfg, cmd, "process", a.process);
  merge_config(cfg, cmd, "mode", a.mode);
  merge_config(cfg, cmd, "flux", a.flux);
  merge_config(cfg, cmd, "seed", a.seed);
  merge_config(cfg, cmd, "noiseless", a.noiseless);
  merge_config(cfg, cmd, "mesh-n", a.mesh_n);
  merge_config(cfg, cmd, "out", a.out);
  prov.seed = a.seed;

  if (a.process.empty()) throw ParseError("qpt needs --process SPEC");
  if (a.mode != "standard" && a.mode != "ancilla" && a.mode != "both")
    throw ParseError("qpt: mode must be 'standard', 'ancilla', or 'both'");
  if (!a.noiseless && !(a.flux > 0.0))
    throw OutOfRange("qpt: flux must be positive");
  if (a.mesh_n < 2) throw OutOfRange("qpt: --mesh-n must be at least 2");

  const QuantumProcess process = parse_process(a.process);

  const std::string prefix = resolve_prefix(a.out);
  const std::string std_path = prefix + ".chi_standard.json";
  const std::string anc_path = prefix + ".chi_ancilla.json";
  const std::string table_path = prefix + ".poincare.json";
  const std::string mesh_path = prefix + ".mesh.csv";
  const bool want_std = (a.mode == "standard" || a.mode == "both");
  const bool want_anc = (a.mode == "ancilla" || a.mode == "both");
  if (want_std) check_writable(std_path);
  if (want_anc) check_writable(anc_path);
  check_writable(table_path);
  check_writable(mesh_path);

  std::optional<ProcessMatrix> chi_std, chi_anc;
  if (want_std) {
    chi_std = a.noiseless ? standard_qpt_exact(process)
                          : standard_qpt(process, a.flux, a.seed);
    write_file_atomic(std_path, json_document(chi_to_json(*chi_std), prov));
    std::printf("wrote %s\n", std_path.c_str());
  }
  if (want_anc) {
    chi_anc = a.noiseless ? ancilla_qpt_exact(process)
                          : ancilla_qpt(process, a.flux, a.seed);
    write_file_atomic(anc_path, json_document(chi_to_json(*chi_anc), prov));
    std::printf("wrote %s\n", anc_path.c_str());
  }
  if (chi_std && chi_anc)
    std::printf("chi distance (frobenius): %.9g\n",
                frobenius_distance(chi_std->chi, chi_anc->chi));

  write_file_atomic(
      table_path, json_document(poincare_to_json(poincare_table(process)),
                                prov));
  std::printf("wrote %s\n", table_path.c_str());

  const auto mesh = sphere_mesh(process, static_cast<std::size_t>(a.mesh_n));
  write_file_atomic(mesh_path, provenance_comments(prov) + mesh_to_csv(mesh));
  std::printf("wrote %s (%zu points)\n", mesh_path.c_str(), mesh.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polarization-qubit simulation and tomography toolkit"};
  app.set_version_flag("--version", std::string("qpol ") + kVersion);
  app.require_subcommand(0, 1);

  std::string config_file;
  app.add_option("--config", config_file,
                 "JSON file whose keys mirror long flag names; explicit "
                 "flags override it");

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "simulate counts for a prepared state");
  sim_cmd->add_option("--source", sim.source,
                      "pair source parameters, e.g. 'theta_p=45,phi=0' "
                      "(degrees)");
  sim_cmd->add_flag("--herald", sim.herald,
                    "single-qubit pipeline starting from |H>");
  sim_cmd->add_option("--pipeline", sim.pipeline_file,
                      "JSON pipeline document (overrides --source/--herald)");
  // Element order matters (optical train), so values are re-read from the
  // raw command line; these bindings exist for validation and help.
  std::vector<std::string> hwp_values, qwp_values, phase_values,
      decohere_values;
  sim_cmd->add_option("--hwp", hwp_values,
                      "half-wave plate at ANGLE_DEG (pair: TARGET:ANGLE)");
  sim_cmd->add_option("--qwp", qwp_values,
                      "quarter-wave plate at ANGLE_DEG (pair: TARGET:ANGLE)");
  sim_cmd->add_option("--phase", phase_values,
                      "phase plate of PHASE_DEG (pair: TARGET:PHASE)");
  sim_cmd->add_option("--decohere", decohere_values,
                      "decoherer AXIS_DEG:STRENGTH (pair: TARGET:AXIS:STRENGTH,"
                      " TARGET may be 'both')");
  sim_cmd->add_option("--flux", sim.flux, "photon pairs per setting");
  sim_cmd->add_option("--seed", sim.seed, "random seed");
  sim_cmd->add_flag("--noiseless", sim.noiseless,
                    "write rounded exact rates instead of Poisson draws");
  sim_cmd->add_option("--out", sim.out, "output path prefix");

  TomoArgs tomo_args;
  CLI::App* tomo_cmd =
      app.add_subcommand("tomo", "reconstruct a state from a count file");
  tomo_cmd->add_option("--counts", tomo_args.counts_file, "count file (CSV)");
  tomo_cmd->add_option("--method", tomo_args.method,
                       "'mle' (default) or 'inversion'");
  tomo_cmd->add_option("--target", tomo_args.target_file,
                       "state document to report fidelity against");
  tomo_cmd->add_option("--seed", tomo_args.seed, "random seed for restarts");
  tomo_cmd->add_option("--max-iter", tomo_args.max_iterations,
                       "iteration cap for the fit");
  tomo_cmd->add_option("--restarts", tomo_args.restarts,
                       "number of perturbed restarts");
  tomo_cmd->add_option("--out", tomo_args.out, "output path prefix");

  PlaneArgs plane;
  CLI::App* plane_cmd = app.add_subcommand(
      "plane", "emit tangle vs linear-entropy data");
  plane_cmd->add_option("--samples", plane.samples,
                        "number of random two-qubit states");
  plane_cmd->add_option("--seed", plane.seed, "random seed");
  plane_cmd->add_option("--out", plane.out, "output path prefix");

  QptArgs qpt;
  CLI::App* qpt_cmd = app.add_subcommand(
      "qpt", "single-qubit process tomography");
  qpt_cmd->add_option("--process", qpt.process,
                      "process description, e.g. 'unitary:hwp:45', "
                      "'dephase:0:0.5', 'loss:1:0.6', joined with '+'");
  qpt_cmd->add_option("--mode", qpt.mode, "'standard', 'ancilla', or 'both'");
  qpt_cmd->add_option("--flux", qpt.flux, "photons per setting");
  qpt_cmd->add_option("--seed", qpt.seed, "random seed");
  qpt_cmd->add_flag("--noiseless", qpt.noiseless,
                    "reconstruct from exact probabilities");
  qpt_cmd->add_option("--mesh-n", qpt.mesh_n,
                      "sphere mesh latitudes (n^2 points)");
  qpt_cmd->add_option("--out", qpt.out, "output path prefix");

  for (CLI::App* cmd : {sim_cmd, tomo_cmd, plane_cmd, qpt_cmd})
    cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  Provenance prov;
  prov.command = join_command(argc, argv);

  try {
    nlohmann::json cfg = nlohmann::json::object();
    if (!config_file.empty()) {
      cfg = parse_json(read_file(config_file, prov), "config file");
      if (!cfg.is_object())
        throw ParseError("config file must hold a JSON object");
    }
    if (sim_cmd->parsed())
      return cmd_simulate(sim, sim_cmd, cfg, argc, argv, std::move(prov));
    if (tomo_cmd->parsed())
      return cmd_tomo(tomo_args, tomo_cmd, cfg, std::move(prov));
    if (plane_cmd->parsed())
      return cmd_plane(plane, plane_cmd, cfg, std::move(prov));
    if (qpt_cmd->parsed())
      return cmd_qpt(qpt, qpt_cmd, cfg, std::move(prov));
    std::fprintf(stderr, "%s\n", app.help().c_str());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

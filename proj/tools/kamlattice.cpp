// kamlattice: command-line front end.
//
//   kamlattice <command> [--config run.json] [flags]
//
// Config files are flat JSON objects whose keys are flag names without the
// leading dashes ("R-min": 2.0, "V1": [10, 100]); the key "system" may hold a
// system descriptor inline. Flags given on the command line win.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kamlattice/actionangle.hpp"
#include "kamlattice/analysis.hpp"
#include "kamlattice/certificate.hpp"
#include "kamlattice/descriptor.hpp"
#include "kamlattice/dynamics.hpp"
#include "kamlattice/output.hpp"
#include "kamlattice/parallel.hpp"
#include "kamlattice/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kamlattice;

namespace {

struct Position {
  int line = 0;
  int column = 0;
};

Position position_of(const std::string& text, std::size_t offset) {
  Position p{1, 1};
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

// First occurrence of "key" followed by a colon.
Position locate_key(const std::string& text, const std::string& key) {
  const std::string needle = "\"" + key + "\"";
  std::size_t at = 0;
  while ((at = text.find(needle, at)) != std::string::npos) {
    std::size_t k = at + needle.size();
    while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
    if (k < text.size() && text[k] == ':') return position_of(text, at);
    at += needle.size();
  }
  return {};
}

struct ConfigFile {
  std::string path;
  std::string text;
  json data = json::object();

  ConfigError error(const std::string& key, const std::string& what) const {
    const Position p = locate_key(text, key);
    return ConfigError(path + ": key \"" + key + "\": " + what, p.line, p.column);
  }
};

ConfigFile load_config(const std::string& path) {
  ConfigFile c;
  c.path = path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  c.text = ss.str();
  try {
    c.data = json::parse(c.text);
  } catch (const json::parse_error& e) {
    const Position p = position_of(c.text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(path + ": invalid JSON", p.line, p.column);
  }
  if (!c.data.is_object()) throw ConfigError(path + ": top level must be an object", 1, 1);
  return c;
}

std::string scalar_token(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return format_double(v.get<double>());
  throw std::invalid_argument("not a scalar");
}

// ---------------------------------------------------------------------------
// Options shared by the dynamics-facing commands.

struct SystemOptions {
  std::string system_file;
  std::optional<double> alpha1, alpha3, kappa, V1;
  json inline_system;  // from the config file
};

void add_system_options(CLI::App* sub, SystemOptions& o) {
  sub->add_option("--system", o.system_file, "System descriptor JSON file (raw or physical form)");
  sub->add_option("--alpha1", o.alpha1, "Figure family: linear coefficient (default -1)");
  sub->add_option("--alpha3", o.alpha3, "Figure family: cubic coefficient, negative (default -1)");
  sub->add_option("--kappa", o.kappa, "Figure family: lattice wavenumber (default 1)");
  sub->add_option("--V1", o.V1, "Figure family: lattice amplitude");
}

SystemDescriptor resolve_system(const SystemOptions& o) {
  const bool flags = o.alpha1 || o.alpha3 || o.kappa || o.V1;
  if (!o.system_file.empty()) {
    if (flags) throw ConfigError("--system cannot be combined with --alpha1/--alpha3/--kappa/--V1");
    const ConfigFile f = load_config(o.system_file);
    return descriptor_from_json(f.data);
  }
  if (flags) {
    if (!o.V1) throw ConfigError("figure-family system needs --V1");
    SystemDescriptor d;
    d.lattice = figure_system(o.alpha1.value_or(-1.0), o.alpha3.value_or(-1.0), o.kappa.value_or(1.0),
                              *o.V1);
    return d;
  }
  if (!o.inline_system.is_null()) return descriptor_from_json(o.inline_system);
  throw ConfigError("no system given: use --system, the figure-family flags or a \"system\" config key");
}

struct Common {
  std::string config_path;
  std::string out = ".";
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file; command-line flags win");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Seed for randomized sampling (recorded in the manifest)")
      ->capture_default_str();
}

fs::path prepare_out(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("output directory " + dir + " is not writable");
  const fs::path probe = p / ".kamlattice_write_test";
  {
    std::ofstream t(probe);
    if (!t) throw ConfigError("output directory " + dir + " is not writable");
  }
  fs::remove(probe, ec);
  return p;
}

json system_json(const SystemDescriptor& d) {
  json j = to_json(d);
  const NormalizedSystem n = d.normalized();
  json modes = json::array();
  for (const auto& m : n.z2_modes) modes.push_back({{"amplitude", m.amplitude}, {"harmonic", m.harmonic}});
  j["normalized"] = {{"z4", n.z4}, {"z2_mean", n.z2_mean}, {"z2_modes", modes}, {"T", n.T}};
  return j;
}

enum class Units { lattice, normalized };

Units units_from(const std::string& s) {
  if (s == "lattice") return Units::lattice;
  if (s == "normalized") return Units::normalized;
  throw ConfigError("--units must be lattice or normalized");
}

// Seeds and outputs are expressed in `units`; S is dR/dx (lattice) or dR/dxi.
PhaseState seed_state(const NormalizedSystem& sys, double R, double S, Units u) {
  return u == Units::lattice ? PhaseState{R, S * sys.T, 0.0} : PhaseState{R, S, 0.0};
}

double out_S(const NormalizedSystem& sys, double S, Units u) {
  return u == Units::lattice ? S / sys.T : S;
}

void summary_cells(const OrbitSummary& s, const ClassifyConfig& c, std::vector<std::string>& row) {
  row.push_back(s.rotation_number ? format_double(*s.rotation_number) : "undefined");
  row.push_back(s.rotation_converged ? "1" : "0");
  row.push_back(format_double(s.chaos_indicator));
  row.push_back(s.bounded ? "1" : "0");
  row.push_back(format_double(s.max_abs_R));
  row.push_back(std::to_string(s.iterates_used));
  row.push_back(s.regular(c) ? "regular" : (s.chaos_indicator > 0.05 ? "chaotic" : "irregular"));
}

const std::vector<std::string> kSummaryColumns = {"rotation_number", "converged", "chaos_indicator",
                                                  "bounded",         "max_abs_R", "iterates",
                                                  "label"};

// ---------------------------------------------------------------------------
// Commands. Each returns the manifest status; NumericalError propagates.

// The output directory is created on first use, after option validation.
struct Run {
  Common common;
  Manifest* manifest = nullptr;
  bool ready = false;

  fs::path file(const std::string& name) {
    if (!ready) {
      prepare_out(common.out);
      ready = true;
    }
    return fs::path(common.out) / name;
  }
};

struct SimulateOptions {
  SystemOptions sys;
  double R0 = 0.0;
  double S0 = 0.0;
  long n = 1000;
  int steps = 512;
  std::string scheme = "symplectic6";
  double rk_tol = 1e-12;
  std::string units = "lattice";
};

void cmd_simulate(const SimulateOptions& o, Run& run) {
  const SystemDescriptor d = resolve_system(o.sys);
  const NormalizedSystem sys = d.normalized();
  const Units u = units_from(o.units);
  IntegratorConfig cfg;
  cfg.steps_per_period = o.steps;
  cfg.scheme = scheme_from_string(o.scheme);
  cfg.rk_tolerance = o.rk_tol;
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (o.n < 0) throw ConfigError("--n must be non-negative");
  PhaseState s = seed_state(sys, o.R0, o.S0, u);
  const fs::path path = run.file("orbit.csv");
  CsvWriter csv(path, {"n", "R", "S"});
  csv.row(std::vector<double>{0.0, s.R, out_S(sys, s.S, u)});
  try {
    if (cfg.scheme == Scheme::rk_adaptive) {
      for (long k = 1; k <= o.n; ++k) {
        s = integrate(sys, s, 1.0, cfg);
        s.xi = 0.0;
        csv.row(std::vector<double>{static_cast<double>(k), s.R, out_S(sys, s.S, u)});
      }
    } else {
      Ensemble ens(sys, cfg.steps_per_period, std::span<const PhaseState>(&s, 1), 0);
      for (long k = 1; k <= o.n; ++k) {
        ens.step();
        if (ens.escaped(0)) throw EscapeError(ens.escape_state(0), ens.escape_period(0));
        csv.row(std::vector<double>{static_cast<double>(k), ens.R(0), out_S(sys, ens.S(0), u)});
      }
    }
  } catch (...) {
    csv.close();
    run.manifest->add_output(path, "csv:orbit");
    throw;
  }
  csv.close();
  run.manifest->add_output(path, "csv:orbit");
}

struct PortraitOptions {
  SystemOptions sys;
  double R_min = 0.1;
  double R_max = 0.0;  // 0: 4 sqrt(1 + |V1|) in lattice units
  int seeds = 24;
  long n = 1000;
  int steps = 0;
  std::string units = "lattice";
};

void cmd_portrait(const PortraitOptions& o, Run& run) {
  const SystemDescriptor d = resolve_system(o.sys);
  const NormalizedSystem sys = d.normalized();
  const Units u = units_from(o.units);
  if (o.seeds < 1 || o.n < 1) throw ConfigError("--seeds and --n must be positive");
  double R_max = o.R_max;
  if (R_max <= 0.0) {
    double amp = 0.0;
    for (const auto& m : d.lattice.modes) amp += std::abs(m.V);
    R_max = 4.0 * std::sqrt(std::abs(d.lattice.alpha1) + amp);
    if (d.physical) R_max = 4.0 * std::sqrt(std::abs(sys.z2_mean) + sys.z2_sup()) / std::sqrt(sys.z4);
  }
  if (!(o.R_min > 0.0) || !(R_max > o.R_min)) throw ConfigError("need 0 < --R-min < --R-max");
  std::vector<PhaseState> seeds;
  for (int i = 0; i < o.seeds; ++i) {
    const double t = o.seeds == 1 ? 0.0 : static_cast<double>(i) / (o.seeds - 1);
    seeds.push_back({o.R_min + t * (R_max - o.R_min), 0.0, 0.0});
  }
  const int N = o.steps > 0 ? o.steps : steps_for_radius(sys, R_max);
  const auto orbits = phase_portrait(sys, seeds, o.n, N);

  const fs::path csv_path = run.file("portrait.csv");
  CsvWriter csv(csv_path, {"seed", "n", "R", "S"});
  ClassifyConfig cls;
  cls.iterates = o.n;
  const fs::path sum_path = run.file("portrait_summary.csv");
  std::vector<std::string> header{"seed", "R0", "S0"};
  header.insert(header.end(), kSummaryColumns.begin(), kSummaryColumns.end());
  CsvWriter sum(sum_path, header);
  SvgPlot plot;
  plot.title = "Poincare section";
  plot.x_label = "R";
  plot.y_label = u == Units::lattice ? "S = dR/dx" : "S = dR/dxi";
  double smax = 0.0;
  for (std::size_t j = 0; j < orbits.size(); ++j) {
    SvgSeries ser;
    ser.color = orbits[j].summary.regular(cls) ? "#1f4e9c" : "#b22222";
    ser.radius = 0.5;
    for (std::size_t k = 0; k < orbits[j].iterates.size(); ++k) {
      const auto& p = orbits[j].iterates[k];
      const double S = out_S(sys, p.S, u);
      csv.row(std::vector<double>{static_cast<double>(j), static_cast<double>(k + 1), p.R, S});
      ser.points.push_back({p.R, S});
      ser.points.push_back({-p.R, S});  // R -> -R symmetry of the section
      smax = std::max(smax, std::abs(S));
    }
    std::vector<std::string> row{std::to_string(j), format_double(seeds[j].R), "0"};
    summary_cells(orbits[j].summary, cls, row);
    sum.row(row);
    plot.series.push_back(std::move(ser));
  }
  csv.close();
  sum.close();
  plot.x_min = -1.1 * R_max;
  plot.x_max = 1.1 * R_max;
  plot.y_min = -1.05 * std::max(smax, 1e-12);
  plot.y_max = -plot.y_min;
  const fs::path svg = run.file("portrait.svg");
  write_text(svg, render_svg(plot));
  run.manifest->add_output(csv_path, "csv:portrait");
  run.manifest->add_output(sum_path, "csv:portrait_summary");
  run.manifest->add_output(svg, "svg:portrait");
}

struct CertifyOptions {
  std::optional<double> M, b2, gamma, d, nu;
  std::optional<double> z2_norm, omega, z4;
  SystemOptions sys;
  std::vector<std::int64_t> surd;  // P D Q
  std::int64_t Q = 1000000;
};

void cmd_certify(const CertifyOptions& o, Run& run) {
  CertificateInput in;
  in.M = *o.M;
  in.b2 = *o.b2;
  in.gamma = *o.gamma;
  in.d = *o.d;
  in.nu = *o.nu;
  in.z2_strip_norm = o.z2_norm;
  in.omega = o.omega;
  in.z4 = o.z4;
  const bool has_system = !o.sys.system_file.empty() || o.sys.V1 || !o.sys.inline_system.is_null();
  if (has_system) {
    const NormalizedSystem sys = resolve_system(o.sys).normalized();
    if (!in.z2_strip_norm) in.z2_strip_norm = strip_norm(sys, in.d);
    if (!in.z4) in.z4 = sys.z4;
  }
  try {
    validate(in);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  json out = to_json(evaluate(in));
  if (!o.surd.empty()) {
    if (o.surd.size() != 3) throw ConfigError("--surd takes three integers P D Q");
    const auto r = constant_type({o.surd[0], o.surd[1], o.surd[2]}, o.Q);
    out["constant_type"] = to_json(r);
  }
  const fs::path path = run.file("certificate.json");
  write_text(path, out.dump(2) + "\n");
  run.manifest->add_output(path, "json:certificate");
}

struct SweepOptions {
  std::string grid = "desk";
  std::optional<int> M_count, b2_count, gamma_count, d_count, nu_count;
  std::optional<double> M_min, M_max;
  double refine_M = 0.0;  // 0: no refinement
  double zoom = 4.0;
  bool svg = true;
};

void cmd_sweep(const SweepOptions& o, Run& run) {
  GridSpec g;
  if (o.grid == "desk") {
    g = GridSpec::desk();
  } else if (o.grid == "full") {
    g = GridSpec::full();
  } else {
    throw ConfigError("--grid must be desk or full");
  }
  if (o.M_count) g.M.count = *o.M_count;
  if (o.b2_count) g.b2.count = *o.b2_count;
  if (o.gamma_count) g.gamma.count = *o.gamma_count;
  if (o.d_count) g.d.count = *o.d_count;
  if (o.nu_count) g.nu.count = *o.nu_count;
  if (o.M_min) g.M.min = *o.M_min;
  if (o.M_max) g.M.max = *o.M_max;
  g.validate();
  SweepStats stats;
  auto frontier = kamlattice::run(g, &stats);
  json diag = {{"evaluations", stats.evaluations},
               {"skipped_gamma_above_49_72", stats.skipped},
               {"threads", thread_count()}};
  if (o.refine_M > 0.0) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      if (std::abs(std::log(frontier[i].M / o.refine_M)) <
          std::abs(std::log(frontier[best].M / o.refine_M))) {
        best = i;
      }
    }
    if (o.zoom < 1.0) throw ConfigError("--zoom must be at least 1");
    const auto r = refine(g, frontier, best, o.zoom);
    diag["refine"] = {{"M", frontier[best].M},
                      {"delta_before", frontier[best].delta_max},
                      {"delta_after", r.point.delta_max},
                      {"gain", r.gain},
                      {"zoom", o.zoom}};
    frontier[best] = r.point;
  }
  const fs::path path = run.file("frontier.csv");
  CsvWriter csv(path, {"M", "delta_max", "b2", "gamma", "d", "nu", "pass_count"});
  SvgSeries pts;
  pts.radius = 3.0;
  for (const auto& p : frontier) {
    csv.row(std::vector<double>{p.M, p.delta_max, p.b2, p.gamma, p.d, p.nu,
                                static_cast<double>(p.pass_count)});
    if (p.delta_max > 0.0) pts.points.push_back({std::log10(p.M), std::log10(p.delta_max)});
  }
  csv.close();
  run.manifest->add_output(path, "csv:frontier");
  const fs::path dpath = run.file("sweep_diagnostics.json");
  write_text(dpath, diag.dump(2) + "\n");
  run.manifest->add_output(dpath, "json:sweep_diagnostics");
  if (o.svg && !pts.points.empty()) {
    SvgPlot plot;
    plot.title = "Largest admissible delta";
    plot.x_label = "log10 M";
    plot.y_label = "log10 delta";
    plot.x_min = std::log10(g.M.min);
    plot.x_max = std::log10(g.M.max);
    double lo = 1e300, hi = -1e300;
    for (const auto& [x, y] : pts.points) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    plot.y_min = std::floor(lo) - 1.0;
    plot.y_max = std::ceil(hi) + 1.0;
    SvgSeries line = pts;
    line.line = true;
    plot.series.push_back(line);
    plot.series.push_back(pts);
    const fs::path svg = run.file("frontier.svg");
    write_text(svg, render_svg(plot));
    run.manifest->add_output(svg, "svg:frontier");
  }
}

struct ScanOptions {
  double R_min = 0.0;
  double R_max = 0.0;
  int seeds = 24;
  std::uint64_t rng_seed = 0;
  double rel_tol = 1e-2;
  long iterates = 10000;
  long max_iterates = 40000;
  double rotation_tol = 1e-7;
  double chaos_threshold = 1e-3;
  int steps = 0;

  RadialScan scan() const {
    RadialScan s;
    s.R_min = R_min;
    s.R_max = R_max;
    s.seeds = seeds;
    s.rng_seed = rng_seed;
    s.rel_tol = rel_tol;
    s.classify.iterates = iterates;
    s.classify.max_iterates = std::max(iterates, max_iterates);
    s.classify.rotation_tol = rotation_tol;
    s.classify.chaos_threshold = chaos_threshold;
    s.classify.steps_per_period = steps;
    return s;
  }
};

void add_scan_options(CLI::App* sub, ScanOptions& o) {
  sub->add_option("--seeds", o.seeds, "Radial seeds on S = 0")->capture_default_str();
  sub->add_option("--rng-seed", o.rng_seed, "Jitter seed for the radial grid (0: exact log spacing)")
      ->capture_default_str();
  sub->add_option("--rel-tol", o.rel_tol, "Relative bracket width of the threshold")->capture_default_str();
  sub->add_option("--iterates", o.iterates, "Iterates per orbit")->capture_default_str();
  sub->add_option("--max-iterates", o.max_iterates,
                  "Continuation bound for regular-looking orbits whose rotation test is undecided")
      ->capture_default_str();
  sub->add_option("--rotation-tol", o.rotation_tol, "Rotation-number convergence tolerance")
      ->capture_default_str();
  sub->add_option("--chaos-threshold", o.chaos_threshold, "Indicator bound for regular orbits")
      ->capture_default_str();
  sub->add_option("--steps", o.steps, "Steps per period (0: chosen from the largest radius)")
      ->capture_default_str();
}

struct AnalyzeOptions {
  SystemOptions sys;
  ScanOptions scan;
};

void write_scan(const InnermostResult& r, const ClassifyConfig& c, const fs::path& path, Run& run) {
  std::vector<std::size_t> order(r.radii.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.radii[a] < r.radii[b]; });
  std::vector<std::string> header{"R0"};
  header.insert(header.end(), kSummaryColumns.begin(), kSummaryColumns.end());
  CsvWriter csv(path, header);
  for (std::size_t i : order) {
    std::vector<std::string> row{format_double(r.radii[i])};
    summary_cells(r.summaries[i], c, row);
    csv.row(row);
  }
  csv.close();
  run.manifest->add_output(path, "csv:scan");
}

void cmd_analyze(const AnalyzeOptions& o, Run& run) {
  const SystemDescriptor d = resolve_system(o.sys);
  const NormalizedSystem sys = d.normalized();
  RadialScan scan = o.scan.scan();
  if (scan.R_min <= 0.0 || scan.R_max <= 0.0) throw ConfigError("--R-min and --R-max are required");
  if (scan.R_max <= scan.R_min) throw ConfigError("--R-max must exceed --R-min");
  const auto r = innermost_invariant_radius(sys, scan);
  write_scan(r, scan.classify, run.file("scan.csv"), run);
  json j = {{"R_star", r.R_star},
            {"bracket_low", r.bracket_low},
            {"found_irregular", r.found_irregular},
            {"steps_per_period", r.steps_per_period},
            {"orbits", r.radii.size()}};
  const fs::path path = run.file("innermost.json");
  write_text(path, j.dump(2) + "\n");
  run.manifest->add_output(path, "json:innermost");
}

struct ScalingOptions {
  std::vector<double> V1{10.0, 100.0, 1000.0, 10000.0};
  double alpha1 = -1.0;
  double alpha3 = -1.0;
  double kappa = 1.0;
  double lo = 0.5;
  double hi = 8.0;
  ScanOptions scan;
};

void cmd_scaling(const ScalingOptions& o, Run& run) {
  ScalingStudyConfig cfg;
  cfg.alpha1 = o.alpha1;
  cfg.alpha3 = o.alpha3;
  cfg.kappa = o.kappa;
  cfg.lo = o.lo;
  cfg.hi = o.hi;
  cfg.scan = o.scan.scan();
  if (o.V1.size() < 2) throw ConfigError("--V1 needs at least two values");
  for (std::size_t i = 0; i < o.V1.size(); ++i) {
    if (!(o.V1[i] > 0.0) || (i > 0 && !(o.V1[i] > o.V1[i - 1]))) {
      throw ConfigError("--V1 values must be positive and strictly increasing");
    }
  }
  if (!(o.lo > 0.0) || !(o.hi > o.lo)) throw ConfigError("need 0 < --lo < --hi");
  const fs::path path = run.file("scaling.csv");
  CsvWriter csv(path, {"V1", "R_star", "found_irregular"});
  std::vector<ScalingPoint> pts;
  try {
    for (double V1 : o.V1) {
      pts.push_back(scaling_point(V1, cfg));
      csv.row(std::vector<std::string>{format_double(V1), format_double(pts.back().R_star),
                                       pts.back().found_irregular ? "1" : "0"});
    }
  } catch (...) {
    csv.close();
    run.manifest->add_output(path, "csv:scaling");
    throw;
  }
  csv.close();
  run.manifest->add_output(path, "csv:scaling");
  const auto fit = fit_loglog(pts);
  json j = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"residual", fit.residual}};
  const fs::path jpath = run.file("scaling_fit.json");
  write_text(jpath, j.dump(2) + "\n");
  run.manifest->add_output(jpath, "json:scaling_fit");
  SvgPlot plot;
  plot.title = "Innermost invariant radius";
  plot.x_label = "log10 V1";
  plot.y_label = "log10 R_star";
  SvgSeries dots, line;
  dots.radius = 3.0;
  line.line = true;
  line.color = "#888888";
  double ylo = 1e300, yhi = -1e300;
  for (const auto& p : pts) {
    dots.points.push_back({std::log10(p.V1), std::log10(p.R_star)});
    line.points.push_back({std::log10(p.V1), fit.intercept + fit.slope * std::log10(p.V1)});
    ylo = std::min(ylo, std::log10(p.R_star));
    yhi = std::max(yhi, std::log10(p.R_star));
  }
  plot.x_min = std::floor(std::log10(pts.front().V1)) - 0.5;
  plot.x_max = std::ceil(std::log10(pts.back().V1)) + 0.5;
  plot.y_min = std::floor(ylo) - 0.5;
  plot.y_max = std::ceil(yhi) + 0.5;
  plot.series = {line, dots};
  const fs::path svg = run.file("scaling.svg");
  write_text(svg, render_svg(plot));
  run.manifest->add_output(svg, "svg:scaling");
}

struct TransformOptions {
  SystemOptions sys;
  int samples = 1000;
  double R_max = 3.0;
  double S_max = 10.0;
};

void cmd_transform(const TransformOptions& o, Run& run) {
  const SystemDescriptor d = resolve_system(o.sys);
  const NormalizedSystem sys = d.normalized();
  if (o.samples < 1) throw ConfigError("--samples must be positive");
  std::mt19937_64 rng(run.common.seed);
  std::uniform_real_distribution<double> uR(-o.R_max, o.R_max), uS(-o.S_max, o.S_max);
  const fs::path path = run.file("transform.csv");
  CsvWriter csv(path, {"i", "R", "S", "phi", "I", "R_back", "S_back", "error", "jacobian_det"});
  double worst = 0.0, worst_det = 0.0;
  std::vector<PhaseState> states;
  for (int i = 0; i < o.samples; ++i) {
    const double R = uR(rng), S = uS(rng);
    states.push_back({R, S, 0.0});
    const auto a = to_action_angle(sys.z4, R, S);
    const auto [Rb, Sb] = from_action_angle(sys.z4, a);
    const double err = std::hypot(Rb - R, Sb - S) / std::max(1.0, std::hypot(R, S));
    // d(phi, I)/d(R, S) by central differences, phi unwrapped.
    const double e = 1e-6 * std::max(1.0, std::hypot(R, S));
    auto wrap = [](double x) { return x - std::round(x); };
    const auto pr = to_action_angle(sys.z4, R + e, S), mr = to_action_angle(sys.z4, R - e, S);
    const auto ps = to_action_angle(sys.z4, R, S + e), ms = to_action_angle(sys.z4, R, S - e);
    const double det = (wrap(pr.phi - mr.phi) * (ps.I - ms.I) - wrap(ps.phi - ms.phi) * (pr.I - mr.I)) /
                       (4.0 * e * e);
    worst = std::max(worst, err);
    worst_det = std::max(worst_det, std::abs(std::abs(det) - 1.0));
    csv.row(std::vector<double>{static_cast<double>(i), R, S, a.phi, a.I, Rb, Sb, err, det});
  }
  csv.close();
  run.manifest->add_output(path, "csv:transform");
  std::vector<PhaseState> sample(states.begin(), states.begin() + std::min<std::size_t>(100, states.size()));
  const double rev = check_reversibility(sys, sample, {});
  json j = {{"samples", o.samples},
            {"max_round_trip_error", worst},
            {"max_abs_jacobian_deviation", worst_det},
            {"reversibility_defect", rev},
            {"z4", sys.z4}};
  const fs::path jpath = run.file("transform_summary.json");
  write_text(jpath, j.dump(2) + "\n");
  run.manifest->add_output(jpath, "json:transform_summary");
}

// ---------------------------------------------------------------------------

// Rebuilds argv with config-file values inserted right after the subcommand,
// skipping keys that also appear on the command line.
struct Expanded {
  std::vector<std::string> args;
  std::map<std::string, std::string> from_config;  // option name -> key
};

Expanded expand_config(const std::vector<std::string>& argv, const std::set<std::string>& commands,
                       ConfigFile* cfg_out, json* inline_system) {
  Expanded ex;
  ex.args = argv;
  std::size_t sub = argv.size();
  for (std::size_t i = 1; i < argv.size(); ++i) {
    if (commands.count(argv[i])) {
      sub = i;
      break;
    }
  }
  std::string path;
  for (std::size_t i = 1; i < argv.size(); ++i) {
    if (argv[i] == "--config" && i + 1 < argv.size()) path = argv[i + 1];
    if (argv[i].rfind("--config=", 0) == 0) path = argv[i].substr(9);
  }
  if (path.empty() || sub == argv.size()) return ex;
  *cfg_out = load_config(path);
  std::set<std::string> given;
  for (std::size_t i = sub + 1; i < argv.size(); ++i) {
    if (argv[i].rfind("--", 0) != 0) continue;
    given.insert(argv[i].substr(2, argv[i].find('=') == std::string::npos ? std::string::npos
                                                                           : argv[i].find('=') - 2));
  }
  std::vector<std::string> inject;
  for (const auto& [key, value] : cfg_out->data.items()) {
    if (key == "system") {
      if (!value.is_object()) throw cfg_out->error(key, "must be a descriptor object");
      *inline_system = value;
      continue;
    }
    if (key == "config") throw cfg_out->error(key, "nested config files are not supported");
    if (given.count(key)) continue;
    const std::string flag = "--" + key;
    ex.from_config[flag] = key;
    try {
      if (value.is_array()) {
        if (value.empty()) throw cfg_out->error(key, "empty list");
        inject.push_back(flag);
        for (const auto& v : value) inject.push_back(scalar_token(v));
      } else if (value.is_boolean()) {
        inject.push_back(flag + "=" + scalar_token(value));
      } else if (value.is_null() || value.is_object()) {
        throw cfg_out->error(key, "expected a number, string, boolean or list");
      } else {
        inject.push_back(flag);
        inject.push_back(scalar_token(value));
      }
    } catch (const std::invalid_argument&) {
      throw cfg_out->error(key, "list entries must be scalars");
    }
  }
  ex.args.insert(ex.args.begin() + static_cast<long>(sub) + 1, inject.begin(), inject.end());
  return ex;
}

// Manifest values: numbers where the token is one, text otherwise.
json typed(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (!token.empty() && end == token.c_str() + token.size() && std::isfinite(v)) return v;
  if (token == "true" || token == "false") return token == "true";
  return token;
}

int fail(int code, const std::string& kind, const std::string& msg) {
  std::fprintf(stderr, "kamlattice: %s: %s\n", kind.c_str(), msg.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice-forced Duffing laboratory: Poincare dynamics, action-angle charts and the "
               "KAM torus certificate.\n\nEnvironment: KAMLATTICE_THREADS sets the worker count "
               "(default: hardware concurrency); KAMLATTICE_KERNEL=scalar disables the AVX2 kernel.\n"
               "Exit codes: 0 success, 1 numerical failure (partial outputs kept), 2 configuration error.",
               "kamlattice"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  SimulateOptions sim;
  PortraitOptions por;
  CertifyOptions cer;
  SweepOptions swe;
  AnalyzeOptions ana;
  ScalingOptions sca;
  TransformOptions tra;

  auto* s_sim = app.add_subcommand("simulate", "Poincare orbit of one seed; writes orbit.csv (n,R,S)");
  add_common(s_sim, common);
  add_system_options(s_sim, sim.sys);
  s_sim->add_option("--R0", sim.R0, "Seed amplitude")->required();
  s_sim->add_option("--S0", sim.S0, "Seed slope")->capture_default_str();
  s_sim->add_option("--n", sim.n, "Returns to the section")->capture_default_str();
  s_sim->add_option("--steps", sim.steps, "Steps per period")->capture_default_str();
  s_sim->add_option("--scheme", sim.scheme, "symplectic6 or rk_adaptive")->capture_default_str();
  s_sim->add_option("--rk-tol", sim.rk_tol, "Adaptive Runge-Kutta tolerance")->capture_default_str();
  s_sim->add_option("--units", sim.units, "lattice (S = dR/dx) or normalized (S = dR/dxi)")
      ->capture_default_str();

  auto* s_por = app.add_subcommand("portrait", "Phase portrait from seeds on S = 0; CSV, summary and SVG");
  add_common(s_por, common);
  add_system_options(s_por, por.sys);
  s_por->add_option("--R-min", por.R_min, "Smallest seed amplitude")->capture_default_str();
  s_por->add_option("--R-max", por.R_max, "Largest seed amplitude (0: 4 sqrt(|alpha1| + sum |V|))")
      ->capture_default_str();
  s_por->add_option("--seeds", por.seeds, "Number of seeds")->capture_default_str();
  s_por->add_option("--n", por.n, "Iterates per seed")->capture_default_str();
  s_por->add_option("--steps", por.steps, "Steps per period (0: automatic)")->capture_default_str();
  s_por->add_option("--units", por.units, "lattice or normalized")->capture_default_str();

  auto* s_cer = app.add_subcommand("certify", "Evaluate the torus certificate; writes certificate.json");
  add_common(s_cer, common);
  s_cer->add_option("--M", cer.M, "Localization parameter M")->required();
  s_cer->add_option("--b2", cer.b2, "Localization width b2")->required();
  s_cer->add_option("--gamma", cer.gamma, "Diophantine constant gamma, at most 49/72")->required();
  s_cer->add_option("--d", cer.d, "Strip half-width d")->required();
  s_cer->add_option("--nu", cer.nu, "Smallness split nu in [0, 2^(-7/3)/9]")->required();
  s_cer->add_option("--z2-norm", cer.z2_norm, "Strip norm of z2 (default: from --system, else saturated)");
  s_cer->add_option("--omega", cer.omega, "Target frequency, checked against M");
  s_cer->add_option("--z4", cer.z4, "Quartic coefficient for the band in original action units");
  add_system_options(s_cer, cer.sys);
  s_cer->add_option("--surd", cer.surd, "Also test (P + sqrt D) / Q for constant type")->expected(3);
  s_cer->add_option("--Q", cer.Q, "Denominator bound for the constant-type test")->capture_default_str();

  auto* s_swe = app.add_subcommand("sweep", "Grid search of the certificate; writes frontier.csv and SVG");
  add_common(s_swe, common);
  s_swe->add_option("--grid", swe.grid, "desk (36x18x12x12x10) or full (360x180x120x120x20)")
      ->capture_default_str();
  s_swe->add_option("--M-count", swe.M_count, "Override the M axis count");
  s_swe->add_option("--b2-count", swe.b2_count, "Override the b2 axis count");
  s_swe->add_option("--gamma-count", swe.gamma_count, "Override the gamma axis count");
  s_swe->add_option("--d-count", swe.d_count, "Override the d axis count");
  s_swe->add_option("--nu-count", swe.nu_count, "Override the nu axis count");
  s_swe->add_option("--M-min", swe.M_min, "Override the smallest M");
  s_swe->add_option("--M-max", swe.M_max, "Override the largest M");
  s_swe->add_option("--refine-M", swe.refine_M, "Refine around the frontier point nearest this M");
  s_swe->add_option("--zoom", swe.zoom, "Refinement zoom factor")->capture_default_str();
  s_swe->add_option("--svg", swe.svg, "Write frontier.svg")->capture_default_str();

  auto* s_ana = app.add_subcommand("analyze", "Innermost invariant curve scan; writes scan.csv and innermost.json");
  add_common(s_ana, common);
  add_system_options(s_ana, ana.sys);
  s_ana->add_option("--R-min", ana.scan.R_min, "Smallest seed amplitude")->required();
  s_ana->add_option("--R-max", ana.scan.R_max, "Largest seed amplitude")->required();
  add_scan_options(s_ana, ana.scan);

  auto* s_sca = app.add_subcommand("scaling", "Threshold scaling over V1; writes scaling.csv, fit and SVG");
  add_common(s_sca, common);
  s_sca->add_option("--V1", sca.V1, "Lattice amplitudes, increasing")->capture_default_str();
  s_sca->add_option("--alpha1", sca.alpha1, "Linear coefficient")->capture_default_str();
  s_sca->add_option("--alpha3", sca.alpha3, "Cubic coefficient")->capture_default_str();
  s_sca->add_option("--kappa", sca.kappa, "Lattice wavenumber")->capture_default_str();
  s_sca->add_option("--lo", sca.lo, "Scan start in units of sqrt(1 + V1)")->capture_default_str();
  s_sca->add_option("--hi", sca.hi, "Scan end in units of sqrt(1 + V1)")->capture_default_str();
  add_scan_options(s_sca, sca.scan);

  auto* s_tra = app.add_subcommand("transform-check", "Action-angle round trip, Jacobian and reversibility diagnostics");
  add_common(s_tra, common);
  add_system_options(s_tra, tra.sys);
  s_tra->add_option("--samples", tra.samples, "Random phase states")->capture_default_str();
  s_tra->add_option("--R-max", tra.R_max, "Sample box half-width in R")->capture_default_str();
  s_tra->add_option("--S-max", tra.S_max, "Sample box half-width in S (normalized)")->capture_default_str();

  const std::set<std::string> commands{"simulate", "portrait", "certify", "sweep",
                                       "analyze",  "scaling",  "transform-check"};
  std::vector<std::string> raw(argv, argv + argc);
  ConfigFile cfg;
  json inline_system;
  Expanded ex;
  try {
    ex = expand_config(raw, commands, &cfg, &inline_system);
  } catch (const ConfigError& e) {
    std::string where;
    if (e.line() > 0) where = " (line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) + ")";
    return fail(2, "config error", e.what() + where);
  } catch (const std::exception& e) {
    return fail(2, "config error", e.what());
  }

  for (const auto& [flag, key] : ex.from_config) {
    const auto sub = std::find_if(raw.begin() + 1, raw.end(), [&](const std::string& a) { return commands.count(a) > 0; });
    if (sub == raw.end()) break;
    if (app.get_subcommand(*sub)->get_option_no_throw(flag) == nullptr) {
      const Position p = locate_key(cfg.text, key);
      return fail(2, "config error", cfg.path + ": unknown key \"" + key + "\" for " + *sub + " (line " +
                                         std::to_string(p.line) + ", column " + std::to_string(p.column) + ")");
    }
  }

  std::vector<char*> cargs;
  for (auto& s : ex.args) cargs.push_back(s.data());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (const auto& [flag, key] : ex.from_config) {
      if (msg.find(flag) != std::string::npos) {
        const Position p = locate_key(cfg.text, key);
        msg += " [from " + cfg.path + " line " + std::to_string(p.line) + ", column " +
               std::to_string(p.column) + "]";
        break;
      }
    }
    return fail(2, "config error", msg);
  }

  sim.sys.inline_system = por.sys.inline_system = cer.sys.inline_system = ana.sys.inline_system =
      tra.sys.inline_system = inline_system;

  CLI::App* active = app.get_subcommands().front();
  const std::string name = active->get_name();
  json resolved = json::object();
  for (const CLI::Option* opt : active->get_options()) {
    const std::string lname = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
    if (lname.empty() || lname == "help" || lname == "config" || lname == "out") continue;
    const auto res = opt->results();
    if (res.empty()) {
      const std::string def = opt->get_default_str();
      if (!def.empty()) resolved[lname] = typed(def);
    } else if (res.size() == 1) {
      resolved[lname] = typed(res.front());
    } else {
      json list = json::array();
      for (const auto& r : res) list.push_back(typed(r));
      resolved[lname] = list;
    }
  }
  if (!inline_system.is_null()) resolved["system"] = inline_system;
  if (!common.config_path.empty()) resolved["config_file"] = common.config_path;

  Manifest manifest(name, resolved, common.seed);
  Run run;
  run.common = common;
  run.manifest = &manifest;
  try {
    if (name == "simulate" || name == "portrait" || name == "analyze" || name == "transform-check") {
      const SystemOptions& so = name == "simulate" ? sim.sys
                                : name == "portrait" ? por.sys
                                : name == "analyze"  ? ana.sys
                                                     : tra.sys;
      const SystemDescriptor d = resolve_system(so);
      resolved["resolved_system"] = system_json(d);
      manifest = Manifest(name, resolved, common.seed);
    }
    if (name == "simulate") cmd_simulate(sim, run);
    else if (name == "portrait") cmd_portrait(por, run);
    else if (name == "certify") cmd_certify(cer, run);
    else if (name == "sweep") cmd_sweep(swe, run);
    else if (name == "analyze") cmd_analyze(ana, run);
    else if (name == "scaling") cmd_scaling(sca, run);
    else cmd_transform(tra, run);
  } catch (const ConfigError& e) {
    std::string where;
    if (e.line() > 0) where = " (line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) + ")";
    return fail(2, "config error", e.what() + where);
  } catch (const DomainError& e) {
    return fail(2, "config error", e.what());
  } catch (const NumericalError& e) {
    manifest.set_status("failed", e.what());
    try {
      manifest.write(run.file("manifest.json"));
    } catch (const std::exception&) {
    }
    return fail(1, "numerical failure", e.what());
  }
  manifest.write(run.file("manifest.json"));
  return 0;
}

#include "cdt/cli.hpp"

#include "cdt/effective.hpp"
#include "cdt/error.hpp"
#include "cdt/experiments.hpp"
#include "cdt/floquet.hpp"
#include "cdt/format.hpp"
#include "cdt/propagator.hpp"
#include "cdt/specfun.hpp"
#include "cdt/version.hpp"

#include "CLI11.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace cdt::cli {
namespace {

namespace fs = std::filesystem;

// Defaults match the three-site runs: A1 = 22, omega = 10, Omega0 = 1.
SystemSpec default_spec() {
  SystemSpec s;
  s.n_sites = 3;
  s.omega0 = 1.0;
  s.nu0 = 0.0;
  s.a1 = 22.0;
  s.a2 = 0.0;
  s.omega = 10.0;
  return s;
}

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<int> periods;
  std::optional<int> steps_per_period;
  std::optional<int> workers;
  std::string grid;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config (spec object, or an object with a 'spec' key)");
  app->add_option("--out", c.out_dir, "Output directory");
  app->add_option("--set", c.overrides, "Override a spec field, KEY=VALUE (repeatable)");
  app->add_option("--periods", c.periods, "Observation horizon in drive periods");
  app->add_option("--steps-per-period", c.steps_per_period, "Integrator steps per drive period");
  app->add_option("--workers", c.workers, "Worker threads (env FLOQUET_LATTICE_WORKERS)");
  app->add_option("--grid", c.grid, "Scan grid START:STOP:POINTS over A2/omega");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

SystemSpec load_spec(const Common& c) {
  SystemSpec spec = default_spec();
  if (!c.config_path.empty()) {
    const auto j = read_json_file(c.config_path);
    const auto& body = (j.is_object() && j.contains("spec")) ? j.at("spec") : j;
    spec = spec_from_json(body, false, spec);
  }
  for (const auto& o : c.overrides) apply_override(spec, o);
  validate(spec);
  return spec;
}

int workers_of(const Common& c) {
  if (c.workers) {
    if (*c.workers < 1) throw ValidationError("--workers must be >= 1");
    return *c.workers;
  }
  if (const char* env = std::getenv("FLOQUET_LATTICE_WORKERS")) {
    int v = 0;
    const std::string_view sv(env);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc{} || ptr != sv.data() + sv.size() || v < 1)
      throw ValidationError("FLOQUET_LATTICE_WORKERS must be a positive integer");
    return v;
  }
  return 0;
}

int steps_of(const Common& c) {
  return c.steps_per_period.value_or(kDefaultStepsPerPeriod);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << content;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json base_manifest(const std::string& command, const Common& c,
                             const SystemSpec& spec) {
  return nlohmann::json{{"command", command},
                        {"spec", to_json(spec)},
                        {"config", c.config_path},
                        {"overrides", c.overrides},
                        {"steps_per_period", steps_of(c)},
                        {"tool_version", kToolVersion}};
}

void finish_manifest(nlohmann::json& m, const fs::path& dir,
                     const std::vector<std::string>& files,
                     std::chrono::steady_clock::time_point started) {
  m["files"] = files;
  m["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  m["generated_at"] = utc_now();
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

ScanConfig scan_config(const Common& c, const SystemSpec& spec) {
  ScanConfig sc;
  sc.base_spec = spec;
  if (!c.grid.empty()) sc.grid = parse_grid(c.grid);
  sc.horizon_periods = c.periods.value_or(200);
  sc.steps_per_period = steps_of(c);
  sc.workers = workers_of(c);
  validate(sc);
  return sc;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boundary-driven tight-binding chain: propagation, Floquet analysis and scans",
               "cdt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  Common c;
  int site = 1;
  int stride = 1;
  bool effective = false;
  std::string figure;
  int bessel_order = 0;
  std::vector<double> bessel_x;
  int bessel_zeros = 0;

  auto* propagate_cmd = app.add_subcommand("propagate", "Integrate from a localized state and write the trajectory CSV");
  add_common(propagate_cmd, c);
  propagate_cmd->add_option("--site", site, "Initially occupied site (1-based)");
  propagate_cmd->add_option("--stride", stride, "Keep every n-th integrator step");
  propagate_cmd->add_flag("--effective", effective, "Also write the closed-form rotating-frame trajectory (3 sites)");

  auto* floquet_cmd = app.add_subcommand("floquet", "Quasi-energies and Floquet modes of one spec");
  add_common(floquet_cmd, c);

  auto* minp1_cmd = app.add_subcommand("scan-minp1", "Min(P1) over the horizon versus A2/omega");
  add_common(minp1_cmd, c);
  minp1_cmd->add_option("--site", site, "Initially occupied site (1-based)");

  auto* spectrum_cmd = app.add_subcommand("scan-spectrum", "Tracked quasi-energy branches versus A2/omega");
  add_common(spectrum_cmd, c);

  auto* reproduce_cmd = app.add_subcommand("reproduce", "Run a bundled figure configuration");
  add_common(reproduce_cmd, c);
  reproduce_cmd->add_option("figure", figure, "Figure id (fig2 .. fig8)")->required();

  auto* bessel_cmd = app.add_subcommand("bessel", "Bessel J_k values and J_0 zeros");
  bessel_cmd->add_option("-k,--order", bessel_order, "Order k");
  bessel_cmd->add_option("-x,--x", bessel_x, "Argument (repeatable)");
  bessel_cmd->add_option("--zeros", bessel_zeros, "Print the first n zeros of J_0");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    if (*bessel_cmd) {
      if (bessel_x.empty() && bessel_zeros == 0)
        throw ValidationError("bessel needs --x VALUE or --zeros N");
      if (!bessel_x.empty()) {
        out << "k,x,value\n";
        for (double x : bessel_x)
          out << bessel_order << ',' << format_double(x) << ','
              << format_double(specfun::bessel_j(bessel_order, x)) << '\n';
      }
      if (bessel_zeros > 0) {
        out << "n,j0_zero\n";
        for (int n = 1; n <= bessel_zeros; ++n)
          out << n << ',' << format_double(specfun::j0_zero(n)) << '\n';
      }
      return kExitOk;
    }

    const fs::path dir(c.out_dir);

    if (*reproduce_cmd) {
      ReproduceOptions opts;
      opts.workers = workers_of(c);
      opts.overrides = c.overrides;
      opts.horizon_periods = c.periods;
      opts.steps_per_period = c.steps_per_period;
      if (!c.grid.empty()) opts.grid = parse_grid(c.grid);
      if (!c.config_path.empty()) opts.config = read_json_file(c.config_path);
      const auto result = reproduce(figure, dir, opts);
      for (const auto& f : result.files) out << f.string() << '\n';
      return kExitOk;
    }

    const SystemSpec spec = load_spec(c);
    fs::create_directories(dir);

    if (*propagate_cmd) {
      const int periods = c.periods.value_or(200);
      if (periods < 1) throw ValidationError("--periods must be >= 1");
      PropagateOptions opts;
      opts.steps_per_period = steps_of(c);
      opts.stride = stride;
      const auto initial = StateVector::localized(spec.n_sites, site);
      const auto traj = propagate(spec, initial, periods * spec.period(), opts);
      std::ostringstream csv;
      write_trajectory_csv(csv, traj);
      write_text(dir / "trajectory.csv", csv.str());
      std::vector<std::string> files{"trajectory.csv"};
      auto m = base_manifest("propagate", c, spec);
      m["initial_site"] = site;
      m["periods"] = periods;
      m["stride"] = stride;
      m["max_norm_deviation"] = traj.max_norm_deviation;
      m["min_populations"] = traj.min_populations;
      if (effective) {
        const auto params = effective_params(spec, initial);
        const auto eff = effective_propagate(params, traj.times.back(),
                                             static_cast<int>(traj.times.size()));
        std::ostringstream ecsv;
        write_effective_csv(ecsv, eff);
        write_text(dir / "trajectory_effective.csv", ecsv.str());
        files.push_back("trajectory_effective.csv");
        m["effective"] = {{"j01", params.j01}, {"j02", params.j02}, {"k_rate", params.k_rate}};
      }
      finish_manifest(m, dir, files, started);
      out << (dir / "trajectory.csv").string() << '\n';
      return kExitOk;
    }

    if (*floquet_cmd) {
      const auto u = monodromy(spec, steps_of(c));
      const auto modes = floquet_modes(u);
      std::ostringstream csv, ucsv;
      write_modes_csv(csv, spec.a2 / spec.omega, modes);
      write_monodromy_csv(ucsv, u);
      write_text(dir / "modes.csv", csv.str());
      write_text(dir / "monodromy.csv", ucsv.str());
      auto m = base_manifest("floquet", c, spec);
      m["unitarity_residual"] = u.unitarity_residual();
      finish_manifest(m, dir, {"modes.csv", "monodromy.csv"}, started);
      out << (dir / "modes.csv").string() << '\n';
      return kExitOk;
    }

    if (*minp1_cmd) {
      ScanConfig sc = scan_config(c, spec);
      sc.initial_site = site;
      validate(sc);
      auto m = base_manifest("scan-minp1", c, spec);
      m["scan"] = to_json(sc);
      m["horizon_periods"] = sc.horizon_periods;
      try {
        const auto result = scan_min_p1(sc);
        std::ostringstream csv;
        write_min_p1_csv(csv, result);
        write_text(dir / "minp1.csv", csv.str());
        m["landmarks"] = nlohmann::json::array();
        for (const auto& z : result.landmarks)
          m["landmarks"].push_back({{"kind", "j0_zero"}, {"index", z.index}, {"a2_over_omega", z.location}});
        finish_manifest(m, dir, {"minp1.csv"}, started);
      } catch (const ScanError& e) {
        ScanResult partial;
        partial.config = sc;
        partial.points = e.completed();
        std::ostringstream csv;
        write_min_p1_csv(csv, partial);
        write_text(dir / "minp1.partial.csv", csv.str());
        m["error"] = e.what();
        finish_manifest(m, dir, {"minp1.partial.csv"}, started);
        throw;
      }
      out << (dir / "minp1.csv").string() << '\n';
      return kExitOk;
    }

    if (*spectrum_cmd) {
      const ScanConfig sc = scan_config(c, spec);
      const auto result = scan_spectrum(sc);
      std::ostringstream csv;
      write_spectrum_csv(csv, result);
      write_text(dir / "spectrum.csv", csv.str());
      auto m = base_manifest("scan-spectrum", c, spec);
      m["scan"] = to_json(sc);
      m["classifications"] = nlohmann::json::array();
      for (const auto& cl : result.classifications) m["classifications"].push_back(to_json(cl));
      m["warnings"] = result.warnings;
      finish_manifest(m, dir, {"spectrum.csv"}, started);
      out << (dir / "spectrum.csv").string() << '\n';
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace cdt::cli

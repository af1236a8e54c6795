#include "cdt/experiments.hpp"

#include "cdt/effective.hpp"
#include "cdt/format.hpp"
#include "cdt/propagator.hpp"
#include "cdt/specfun.hpp"
#include "cdt/version.hpp"
#include "figure_configs.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace cdt {
namespace {

// Runs task(i) for i in [0, n) on a bounded pool. Results are written by
// index, so the output never depends on scheduling. Errors are collected per
// index rather than thrown.
template <class Task>
std::vector<std::exception_ptr> parallel_for(std::size_t n, int workers,
                                             Task&& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  if (count == 1 || n <= 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  pool.reserve(std::min(count, n));
  for (std::size_t w = 0; w < std::min(count, n); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return errors;
}

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

// Throws ScanError with the completed points if any grid point failed.
void raise_on_failure(const std::vector<std::exception_ptr>& errors,
                      const std::vector<ScanPoint>& points,
                      const std::vector<double>& grid) {
  std::vector<ScanPoint> done;
  std::size_t first_bad = errors.size();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      if (first_bad == errors.size()) first_bad = i;
    } else {
      done.push_back(points[i]);
    }
  }
  if (first_bad == errors.size()) return;
  throw ScanError("scan failed at grid value " + format_double(grid[first_bad]) +
                      ": " + describe(errors[first_bad]),
                  std::move(done));
}

std::vector<double> window_grid(const ScanConfig& config, double center) {
  const double spacing = config.grid.spacing() / config.refine_factor;
  const double lo = std::max(config.grid.start, center - config.refine_halfwidth);
  const double hi = std::min(config.grid.stop, center + config.refine_halfwidth);
  // Offset by half a cell so the landmark itself is never a sample.
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((hi - lo) / spacing + 1e-9));
  for (long i = 0; i < count; ++i) out.push_back(lo + (static_cast<double>(i) + 0.5) * spacing);
  return out;
}

double gap_threshold(const ScanConfig& config) {
  return config.gap_threshold_factor * config.base_spec.omega;
}

}  // namespace

std::vector<double> Grid::values() const {
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    out[static_cast<std::size_t>(i)] =
        i == points - 1 ? stop : start + (stop - start) * i / (points - 1);
  return out;
}

Grid parse_grid(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw ValidationError("grid must look like START:STOP:POINTS, got '" + text + "'");
  auto parse = [&](std::string_view part, auto& out) {
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty())
      throw ValidationError("cannot parse grid component '" + std::string(part) + "'");
  };
  const std::string_view sv(text);
  Grid g;
  parse(sv.substr(0, c1), g.start);
  parse(sv.substr(c1 + 1, c2 - c1 - 1), g.stop);
  parse(sv.substr(c2 + 1), g.points);
  if (g.points < 2) throw ValidationError("grid needs at least 2 points");
  if (!(g.stop >= g.start)) throw ValidationError("grid stop must not be below start");
  return g;
}

void validate(const ScanConfig& config) {
  validate(config.base_spec);
  if (config.grid.points < 2) throw ValidationError("grid needs at least 2 points");
  if (!std::isfinite(config.grid.start) || !std::isfinite(config.grid.stop) ||
      config.grid.stop < config.grid.start)
    throw ValidationError("grid must be finite and monotone");
  if (config.horizon_periods < 1) throw ValidationError("horizon_periods must be >= 1");
  if (config.steps_per_period < 100)
    throw ValidationError("steps_per_period must be >= 100");
  if (config.initial_site < 1 || config.initial_site > config.base_spec.n_sites)
    throw ValidationError("initial_site out of range");
  if (config.refine_factor < 1) throw ValidationError("refine_factor must be >= 1");
  if (!(config.refine_halfwidth > 0.0))
    throw ValidationError("refine_halfwidth must be positive");
}

std::vector<Landmark> j0_zeros_in(double lo, double hi) {
  std::vector<Landmark> out;
  for (int n = 1; n <= specfun::kMaxZeroIndex; ++n) {
    const double z = specfun::j0_zero(n);
    if (z >= lo && z <= hi) out.push_back(Landmark{n, z});
  }
  return out;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

ScanResult scan_min_p1(const ScanConfig& config) {
  validate(config);
  const auto grid = config.grid.values();
  ScanResult result;
  result.config = config;
  result.points.resize(grid.size());
  const auto errors = parallel_for(grid.size(), resolve_workers(config.workers), [&](std::size_t i) {
    const SystemSpec spec =
        with_scan_coordinate(config.base_spec, config.scan_parameter, grid[i]);
    const auto initial = StateVector::localized(spec.n_sites, config.initial_site);
    PropagateOptions opts;
    opts.steps_per_period = config.steps_per_period;
    opts.stride = std::numeric_limits<int>::max();
    const auto traj = propagate(spec, initial, config.horizon_periods * spec.period(), opts);
    result.points[i].a2_over_omega = grid[i];
    result.points[i].min_p1 = min_population(traj, config.initial_site);
  });
  raise_on_failure(errors, result.points, grid);
  if (config.scan_parameter == ScanField::a1 || config.scan_parameter == ScanField::a2)
    result.landmarks = j0_zeros_in(config.grid.start, config.grid.stop);
  return result;
}

Classification classify_near(const ScanConfig& config, const Landmark& center,
                             const TrackedSpectrum* global) {
  const auto params = window_grid(config, center.location);
  if (params.size() < 3)
    throw NumericalError("refinement window around " +
                         format_double(center.location) + " is too small");
  std::vector<std::vector<FloquetMode>> modes(params.size());
  const auto errors = parallel_for(params.size(), resolve_workers(config.workers), [&](std::size_t i) {
    modes[i] = floquet_analysis(
        with_scan_coordinate(config.base_spec, config.scan_parameter, params[i]),
        config.steps_per_period, false);
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  const TrackedSpectrum local = track_branches(params, modes, config.base_spec.omega);

  // Pair with the smallest interior minimum of the gap.
  const double omega = config.base_spec.omega;
  std::size_t best_a = 0, best_b = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  const std::size_t nb = local.branches.size();
  for (std::size_t a = 0; a < nb; ++a) {
    for (std::size_t b = a + 1; b < nb; ++b) {
      const auto& pa = local.branches[a].points;
      const auto& pb = local.branches[b].points;
      for (std::size_t i = 1; i + 1 < pa.size(); ++i) {
        const double g = quasienergy_distance(pa[i].quasienergy, pb[i].quasienergy, omega);
        const double gl = quasienergy_distance(pa[i - 1].quasienergy, pb[i - 1].quasienergy, omega);
        const double gr = quasienergy_distance(pa[i + 1].quasienergy, pb[i + 1].quasienergy, omega);
        if (g <= gl && g <= gr && g < best_gap) {
          best_gap = g;
          best_a = a;
          best_b = b;
        }
      }
    }
  }
  if (!std::isfinite(best_gap))
    throw NumericalError("no interior closest approach near " +
                         format_double(center.location));

  const Branch& a = local.branches[best_a];
  const Branch& b = local.branches[best_b];
  Classification c;
  c.near_zero = center;
  c.threshold = gap_threshold(config);
  c.approach = classify_closest_approach(
      a, b, omega, c.threshold, config.refinement_budget,
      branch_gap_function(config.base_spec, config.scan_parameter, a, b,
                          config.steps_per_period));

  if (global != nullptr && !global->parameters.empty()) {
    // Report global branch ids: best overlap at the nearest global grid point.
    std::size_t gi = 0;
    for (std::size_t i = 1; i < global->parameters.size(); ++i)
      if (std::abs(global->parameters[i] - c.approach.location) <
          std::abs(global->parameters[gi] - c.approach.location))
        gi = i;
    std::size_t li = 0;
    for (std::size_t i = 1; i < params.size(); ++i)
      if (std::abs(params[i] - global->parameters[gi]) < std::abs(params[li] - global->parameters[gi]))
        li = i;
    auto global_id = [&](const Branch& br, int exclude) {
      int id = br.id;
      double best = -1.0;
      for (const auto& g : global->branches) {
        if (g.id == exclude) continue;
        const double o = std::abs(g.points[gi].eigenvector.dot(br.points[li].eigenvector));
        if (o > best) {
          best = o;
          id = g.id;
        }
      }
      return id;
    };
    c.approach.branch_a = global_id(a, -1);
    c.approach.branch_b = global_id(b, c.approach.branch_a);
    if (c.approach.branch_a > c.approach.branch_b)
      std::swap(c.approach.branch_a, c.approach.branch_b);
  }
  return c;
}

ScanResult scan_spectrum(const ScanConfig& config) {
  validate(config);
  const auto grid = config.grid.values();
  ScanResult result;
  result.config = config;
  result.points.resize(grid.size());
  std::vector<std::vector<FloquetMode>> modes(grid.size());
  const auto errors = parallel_for(grid.size(), resolve_workers(config.workers), [&](std::size_t i) {
    modes[i] = floquet_analysis(
        with_scan_coordinate(config.base_spec, config.scan_parameter, grid[i]),
        config.steps_per_period, true);
    result.points[i].a2_over_omega = grid[i];
  });
  raise_on_failure(errors, result.points, grid);

  TrackedSpectrum spectrum = track_branches(grid, modes, config.base_spec.omega);
  const std::size_t nb = spectrum.branches.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto& p = result.points[i];
    p.quasienergies.resize(nb);
    p.avg_populations.resize(nb);
    p.branch_ids.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& bp = spectrum.branches[b].points[i];
      p.quasienergies[b] = bp.quasienergy;
      p.avg_populations[b] = bp.avg_populations;
      p.branch_ids[b] = spectrum.branches[b].id;
    }
  }
  result.warnings = spectrum.warnings;

  if (config.scan_parameter == ScanField::a1 || config.scan_parameter == ScanField::a2) {
    result.landmarks = j0_zeros_in(config.grid.start, config.grid.stop);
    for (const auto& z : result.landmarks) {
      try {
        result.classifications.push_back(classify_near(config, z, &spectrum));
      } catch (const NumericalError& e) {
        result.warnings.push_back(std::string("classification skipped: ") + e.what());
      }
    }
  }
  result.spectrum = std::move(spectrum);
  return result;
}

std::optional<int> zero_energy_branch(const TrackedSpectrum& spectrum,
                                      double tolerance) {
  std::optional<int> best;
  double best_max = tolerance;
  for (const auto& br : spectrum.branches) {
    double worst = 0.0;
    for (const auto& p : br.points) worst = std::max(worst, std::abs(p.quasienergy));
    if (worst < best_max) {
      best_max = worst;
      best = br.id;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

void write_min_p1_csv(std::ostream& os, const ScanResult& result) {
  os << "a2_over_omega,min_p1\n";
  for (const auto& p : result.points)
    os << format_double(p.a2_over_omega) << ','
       << format_double(p.min_p1.value_or(std::nan(""))) << '\n';
}

void write_spectrum_csv(std::ostream& os, const ScanResult& result) {
  const int n = result.config.base_spec.n_sites;
  os << "a2_over_omega,branch_id,quasienergy";
  for (int j = 1; j <= n; ++j) os << ",avg_p" << j;
  os << '\n';
  for (const auto& p : result.points) {
    for (std::size_t b = 0; b < p.quasienergies.size(); ++b) {
      os << format_double(p.a2_over_omega) << ',' << p.branch_ids[b] << ','
         << format_double(p.quasienergies[b]);
      for (double v : p.avg_populations[b]) os << ',' << format_double(v);
      os << '\n';
    }
  }
}

void write_modes_csv(std::ostream& os, double param,
                     const std::vector<FloquetMode>& modes) {
  const std::size_t n = modes.empty() ? 0 : static_cast<std::size_t>(modes.front().eigenvector.size());
  os << "param,branch_id,quasienergy";
  for (std::size_t j = 1; j <= n; ++j) os << ",avg_p" << j;
  os << ",residual\n";
  for (std::size_t m = 0; m < modes.size(); ++m) {
    os << format_double(param) << ',' << m + 1 << ',' << format_double(modes[m].quasienergy);
    for (double v : modes[m].avg_populations) os << ',' << format_double(v);
    os << ',' << format_double(modes[m].eigen_residual) << '\n';
  }
}

void write_monodromy_csv(std::ostream& os, const MonodromyOperator& u) {
  const Eigen::Index n = u.dimension();
  for (Eigen::Index c = 0; c < n; ++c) {
    if (c) os << ',';
    os << "re_c" << c + 1 << ",im_c" << c + 1;
  }
  os << '\n';
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (c) os << ',';
      os << format_double(u.matrix(r, c).real()) << ',' << format_double(u.matrix(r, c).imag());
    }
    os << '\n';
  }
}

nlohmann::json to_json(const ScanConfig& config) {
  return nlohmann::json{
      {"spec", to_json(config.base_spec)},
      {"scan_parameter", to_string(config.scan_parameter)},
      {"grid", {{"start", config.grid.start}, {"stop", config.grid.stop}, {"points", config.grid.points}}},
      {"horizon_periods", config.horizon_periods},
      {"steps_per_period", config.steps_per_period},
      {"initial_site", config.initial_site},
      {"gap_threshold", gap_threshold(config)},
      {"refinement_budget", config.refinement_budget},
      {"refine_halfwidth", config.refine_halfwidth},
      {"refine_factor", config.refine_factor}};
}

nlohmann::json to_json(const Classification& c) {
  return nlohmann::json{{"kind", to_string(c.approach.kind)},
                        {"location", c.approach.location},
                        {"gap", c.approach.gap},
                        {"threshold", c.threshold},
                        {"branch_a", c.approach.branch_a},
                        {"branch_b", c.approach.branch_b},
                        {"near_j0_zero", c.near_zero.index},
                        {"j0_zero", c.near_zero.location}};
}

// ---------------------------------------------------------------------------

std::vector<std::string> figure_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, text] : kBundledFigureConfigs) ids.emplace_back(id);
  return ids;
}

nlohmann::json figure_config(const std::string& figure_id) {
  for (const auto& [id, text] : kBundledFigureConfigs)
    if (id == figure_id) return nlohmann::json::parse(text);
  std::string valid;
  for (const auto& id : figure_ids()) valid += (valid.empty() ? "" : ", ") + id;
  throw ValidationError("unknown figure '" + figure_id + "'; valid ids: " + valid);
}

namespace {

Grid grid_from_json(const nlohmann::json& j) {
  Grid g;
  g.start = j.at("start").get<double>();
  g.stop = j.at("stop").get<double>();
  g.points = j.at("points").get<int>();
  return g;
}

std::filesystem::path write_file(const std::filesystem::path& dir,
                                 const std::string& name,
                                 const std::string& content) {
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw ValidationError("failed writing " + path.string());
  return path;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

ReproduceResult reproduce(const std::string& figure_id,
                          const std::filesystem::path& output_dir,
                          const ReproduceOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const nlohmann::json cfg = options.config ? *options.config : figure_config(figure_id);

  ScanConfig sc;
  try {
    sc.base_spec = spec_from_json(cfg.at("spec"));
    for (const auto& o : options.overrides) apply_override(sc.base_spec, o);
    validate(sc.base_spec);
    sc.grid = options.grid ? *options.grid : grid_from_json(cfg.at("grid"));
    sc.horizon_periods = options.horizon_periods.value_or(cfg.value("horizon_periods", 200));
    sc.steps_per_period =
        options.steps_per_period.value_or(cfg.value("steps_per_period", kDefaultStepsPerPeriod));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad figure config: ") + e.what());
  }
  sc.workers = options.workers;
  validate(sc);
  const nlohmann::json panels = cfg.value("panels", nlohmann::json::object());
  const std::string id = cfg.value("figure", figure_id);

  std::filesystem::create_directories(output_dir);
  ReproduceResult out;
  nlohmann::json& manifest = out.manifest;
  manifest["figure"] = id;
  manifest["title"] = cfg.value("title", "");
  manifest["spec"] = to_json(sc.base_spec);
  manifest["grid"] = {{"start", sc.grid.start}, {"stop", sc.grid.stop}, {"points", sc.grid.points}};
  manifest["horizon_periods"] = sc.horizon_periods;
  manifest["steps_per_period"] = sc.steps_per_period;
  manifest["scan"] = to_json(sc);
  manifest["overrides"] = options.overrides;
  manifest["tool_version"] = options.tool_version;
  manifest["landmarks"] = nlohmann::json::array();
  for (const auto& z : j0_zeros_in(sc.grid.start, sc.grid.stop))
    manifest["landmarks"].push_back({{"kind", "j0_zero"}, {"index", z.index}, {"a2_over_omega", z.location}});
  manifest["classifications"] = nlohmann::json::array();
  manifest["warnings"] = nlohmann::json::array();
  nlohmann::json files = nlohmann::json::array();
  auto emit = [&](const std::string& name, const std::string& content) {
    out.files.push_back(write_file(output_dir, name, content));
    files.push_back(name);
  };
  const int workers = resolve_workers(options.workers);

  if (panels.contains("time_series")) {
    const auto& ts = panels["time_series"];
    const auto values = ts.at("a2_over_omega").get<std::vector<double>>();
    const int periods = ts.value("periods", sc.horizon_periods);
    const int stride = ts.value("stride", 20);
    std::vector<std::string> chunks(values.size());
    std::vector<double> minima(values.size());
    const auto errors = parallel_for(values.size(), workers, [&](std::size_t i) {
      const SystemSpec spec = with_scan_coordinate(sc.base_spec, ScanField::a2, values[i]);
      PropagateOptions opts;
      opts.steps_per_period = sc.steps_per_period;
      opts.stride = stride;
      const auto traj = propagate(spec, StateVector::localized(spec.n_sites, 1),
                                  periods * spec.period(), opts);
      std::ostringstream os;
      for (const auto& [t, p] : site_population_series(traj, 1))
        os << format_double(values[i]) << ',' << format_double(t) << ',' << format_double(p) << '\n';
      chunks[i] = os.str();
      minima[i] = min_population(traj, 1);
    });
    raise_on_failure(errors, std::vector<ScanPoint>(values.size()), values);
    std::string content = "a2_over_omega,t,p1\n";
    for (const auto& c : chunks) content += c;
    emit(id + "_p1_vs_t.csv", content);
    nlohmann::json summary = nlohmann::json::array();
    for (std::size_t i = 0; i < values.size(); ++i)
      summary.push_back({{"a2_over_omega", values[i]}, {"min_p1", minima[i]}, {"periods", periods}});
    manifest["time_series"] = summary;
  }

  std::optional<ScanResult> minp1;
  if (panels.value("min_p1", false)) {
    minp1 = scan_min_p1(sc);
    std::ostringstream os;
    write_min_p1_csv(os, *minp1);
    emit(id + "_minp1.csv", os.str());
  }

  if (panels.contains("heatmap")) {
    const auto& hm = panels["heatmap"];
    const int periods = hm.value("periods", 10);
    const int stride = hm.value("stride", 100);
    const auto grid = sc.grid.values();
    std::vector<std::string> numeric(grid.size()), analytic(grid.size());
    std::vector<double> deviation(grid.size(), 0.0);
    const bool with_analytic = sc.base_spec.n_sites == 3 && sc.base_spec.nu0 == 0.0;
    const auto errors = parallel_for(grid.size(), workers, [&](std::size_t i) {
      const SystemSpec spec = with_scan_coordinate(sc.base_spec, ScanField::a2, grid[i]);
      PropagateOptions opts;
      opts.steps_per_period = sc.steps_per_period;
      opts.stride = stride;
      const auto initial = StateVector::localized(spec.n_sites, 1);
      const auto traj = propagate(spec, initial, periods * spec.period(), opts);
      std::ostringstream num, ana;
      std::optional<EffectiveParams> eff;
      if (with_analytic) {
        try {
          eff = effective_params(spec, initial);
        } catch (const ValidationError&) {
        }
      }
      for (const auto& [t, p] : site_population_series(traj, 1)) {
        num << format_double(t) << ',' << format_double(grid[i]) << ',' << format_double(p) << '\n';
        if (eff) {
          const double q = analytic_p1(*eff, t);
          ana << format_double(t) << ',' << format_double(grid[i]) << ',' << format_double(q) << '\n';
          deviation[i] = std::max(deviation[i], std::abs(p - q));
        }
      }
      numeric[i] = num.str();
      analytic[i] = ana.str();
    });
    raise_on_failure(errors, std::vector<ScanPoint>(grid.size()), grid);
    std::string content = "t,a2_over_omega,p1\n";
    for (const auto& c : numeric) content += c;
    emit(id + "_heatmap_numeric.csv", content);
    if (with_analytic) {
      content = "t,a2_over_omega,p1\n";
      for (const auto& c : analytic) content += c;
      emit(id + "_heatmap_analytic.csv", content);
      const double worst = *std::max_element(deviation.begin(), deviation.end());
      manifest["cross_oracle"]["heatmap"] = {{"periods", periods},
                                             {"max_abs_deviation", worst},
                                             {"tolerance", 0.08},
                                             {"pass", worst <= 0.08}};
    }
  }

  if (minp1 && sc.base_spec.n_sites == 3 && sc.base_spec.nu0 == 0.0) {
    double worst = 0.0;
    for (const auto& p : minp1->points) {
      const SystemSpec spec = with_scan_coordinate(sc.base_spec, ScanField::a2, p.a2_over_omega);
      try {
        const auto eff = effective_params(spec, StateVector::localized(3, 1));
        worst = std::max(worst, std::abs(*p.min_p1 - analytic_min_p1(eff)));
      } catch (const ValidationError&) {
      }
    }
    manifest["cross_oracle"]["min_p1"] = {{"max_abs_deviation", worst},
                                          {"tolerance", 0.08},
                                          {"pass", worst <= 0.08}};
  }

  if (panels.value("spectrum", false)) {
    const ScanResult spectrum = scan_spectrum(sc);
    std::ostringstream os;
    write_spectrum_csv(os, spectrum);
    emit(id + "_spectrum.csv", os.str());
    for (const auto& c : spectrum.classifications)
      manifest["classifications"].push_back(to_json(c));
    for (const auto& w : spectrum.warnings) manifest["warnings"].push_back(w);
    if (const auto dark = zero_energy_branch(*spectrum.spectrum)) {
      const auto& br = spectrum.spectrum->branches[static_cast<std::size_t>(*dark - 1)];
      std::ostringstream ds;
      ds << "a2_over_omega,quasienergy";
      for (int j = 1; j <= sc.base_spec.n_sites; ++j) ds << ",avg_p" << j;
      ds << '\n';
      for (const auto& p : br.points) {
        ds << format_double(p.parameter) << ',' << format_double(p.quasienergy);
        for (double v : p.avg_populations) ds << ',' << format_double(v);
        ds << '\n';
      }
      emit(id + "_dark_branch.csv", ds.str());
      manifest["dark_branch"] = *dark;
    }
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest["files"] = files;
  manifest["workers"] = workers;
  manifest["wall_time_seconds"] = wall;
  manifest["generated_at"] = utc_timestamp();
  out.files.push_back(write_file(output_dir, "manifest.json", manifest.dump(2) + "\n"));
  return out;
}

}  // namespace cdt

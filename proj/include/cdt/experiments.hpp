#pragma once

#include "cdt/error.hpp"
#include "cdt/floquet.hpp"
#include "cdt/model.hpp"
#include "cdt/version.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cdt {

struct Grid {
  double start = 0.0;
  double stop = 6.0;
  int points = 241;

  std::vector<double> values() const;
  double spacing() const { return (stop - start) / (points - 1); }
};

/// "START:STOP:POINTS"
Grid parse_grid(const std::string& text);

struct ScanConfig {
  SystemSpec base_spec;
  ScanField scan_parameter = ScanField::a2;
  Grid grid;
  int horizon_periods = 200;
  int steps_per_period = kDefaultStepsPerPeriod;
  int initial_site = 1;
  int workers = 0;  // 0: hardware concurrency
  // Crossing classification near J0 zeros.
  double gap_threshold_factor = 1e-4;  // threshold = factor * omega
  int refinement_budget = 40;
  double refine_halfwidth = 0.25;
  int refine_factor = 10;
};

void validate(const ScanConfig& config);

struct ScanPoint {
  double a2_over_omega = 0.0;  // the scan coordinate
  std::optional<double> min_p1;
  // Indexed by branch id - 1 when branches were tracked.
  std::vector<double> quasienergies;
  std::vector<std::vector<double>> avg_populations;
  std::vector<int> branch_ids;
};

struct Landmark {
  int index = 0;  // n-th zero of J0
  double location = 0.0;
};

struct Classification {
  ClosestApproach approach;
  Landmark near_zero;
  double threshold = 0.0;
};

struct ScanResult {
  ScanConfig config;
  std::vector<ScanPoint> points;
  std::vector<Landmark> landmarks;
  std::vector<Classification> classifications;
  std::optional<TrackedSpectrum> spectrum;
  std::vector<std::string> warnings;
};

/// Thrown when a grid point fails; carries every point that did complete.
class ScanError : public NumericalError {
 public:
  ScanError(const std::string& what, std::vector<ScanPoint> completed)
      : NumericalError(what), completed_(std::move(completed)) {}
  const std::vector<ScanPoint>& completed() const { return completed_; }

 private:
  std::vector<ScanPoint> completed_;
};

/// Zeros of J0 inside [lo, hi] (at most the first five).
std::vector<Landmark> j0_zeros_in(double lo, double hi);

int resolve_workers(int requested);

/// Min over the horizon of the initial site's population, per grid point.
ScanResult scan_min_p1(const ScanConfig& config);

/// Floquet spectrum, populations and tracked branches per grid point, plus a
/// closest-approach classification on a refined window around every J0 zero
/// in range (drive-amplitude scans only).
ScanResult scan_spectrum(const ScanConfig& config);

/// Classifies the closest approach among all branch pairs on a refined
/// window around `center`.
Classification classify_near(const ScanConfig& config, const Landmark& center,
                             const TrackedSpectrum* global = nullptr);

/// Branch whose |quasi-energy| stays below `tolerance` on the whole grid.
std::optional<int> zero_energy_branch(const TrackedSpectrum& spectrum,
                                      double tolerance = 1e-6);

// ---------------------------------------------------------------------------
// CSV writers (shortest round-trip decimals, fixed column order).

void write_min_p1_csv(std::ostream& os, const ScanResult& result);
void write_spectrum_csv(std::ostream& os, const ScanResult& result);
/// `param,branch_id,quasienergy,avg_p1,...,avg_pN,residual`
void write_modes_csv(std::ostream& os, double param,
                     const std::vector<FloquetMode>& modes);
void write_monodromy_csv(std::ostream& os, const MonodromyOperator& u);

nlohmann::json to_json(const ScanConfig& config);
nlohmann::json to_json(const Classification& c);

// ---------------------------------------------------------------------------
// Figure reproduction.

std::vector<std::string> figure_ids();

/// The bundled canonical config for a figure; ValidationError listing the
/// valid ids otherwise.
nlohmann::json figure_config(const std::string& figure_id);

struct ReproduceOptions {
  int workers = 0;
  std::vector<std::string> overrides;  // KEY=VALUE on the spec
  std::optional<int> horizon_periods;
  std::optional<int> steps_per_period;
  std::optional<Grid> grid;
  std::optional<nlohmann::json> config;  // replaces the bundled config
  std::string tool_version = kToolVersion;
};

struct ReproduceResult {
  std::vector<std::filesystem::path> files;
  nlohmann::json manifest;
};

ReproduceResult reproduce(const std::string& figure_id,
                          const std::filesystem::path& output_dir,
                          const ReproduceOptions& options = {});

}  // namespace cdt

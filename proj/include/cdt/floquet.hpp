#pragma once

#include "cdt/model.hpp"
#include "cdt/propagator.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cdt {

inline constexpr double kUnitarityLimit = 1e-6;
inline constexpr double kEigenResidualLimit = 1e-7;

/// One-period propagator U(T, 0).
struct MonodromyOperator {
  CMatrix matrix;
  SystemSpec spec;
  int steps_per_period = kDefaultStepsPerPeriod;

  Eigen::Index dimension() const { return matrix.rows(); }
  /// max_ij |(U^dagger U - I)_ij|
  double unitarity_residual() const;
};

struct FloquetMode {
  double quasienergy = 0.0;  // folded into (-omega/2, omega/2]
  CVector eigenvector;
  double eigen_residual = 0.0;  // |U v - exp(-i eps T) v|
  std::vector<double> avg_populations;
};

/// Assembles U column by column: every basis state is carried over [0, T].
/// Throws NumericalError if unitarity is violated beyond 1e-6.
MonodromyOperator monodromy(const SystemSpec& spec,
                            int steps_per_period = kDefaultStepsPerPeriod,
                            Method method = Method::magnus4);

/// Same, driven by an existing stepper (reset to its t0 first). The stepper
/// must start at t = 0.
MonodromyOperator monodromy(Stepper& stepper);

/// Maps a quasi-energy into (-omega/2, omega/2].
double fold_quasienergy(double eps, double omega);

/// Distance between two quasi-energies on the circle of circumference omega.
double quasienergy_distance(double a, double b, double omega);

/// Full eigendecomposition of U, sorted by ascending quasi-energy. The
/// eigenvectors are orthonormal (Schur vectors of a normal matrix).
std::vector<FloquetMode> floquet_modes(const MonodromyOperator& u,
                                       bool with_populations = true);

/// Period average of |a_j(t)|^2 for the mode started at t = 0, trapezoidal
/// over every integrator step.
std::vector<double> averaged_populations(
    const SystemSpec& spec, const FloquetMode& mode,
    int steps_per_period = kDefaultStepsPerPeriod);

/// Batched form: fills avg_populations of every mode with one stepper.
void fill_averaged_populations(const SystemSpec& spec,
                               std::vector<FloquetMode>& modes,
                               int steps_per_period = kDefaultStepsPerPeriod);

void fill_averaged_populations(Stepper& stepper, std::vector<FloquetMode>& modes);

/// monodromy + floquet_modes + populations with one shared set of step maps.
std::vector<FloquetMode> floquet_analysis(
    const SystemSpec& spec, int steps_per_period = kDefaultStepsPerPeriod,
    bool with_populations = true);

// ---------------------------------------------------------------------------
// Branch tracking across a one-parameter family of specs.

enum class ScanField { a1, a2, nu0, omega0 };

ScanField scan_field_from_string(const std::string& name);
std::string to_string(ScanField field);

/// The scan coordinate: A/omega for drive amplitudes, the raw value otherwise.
double scan_coordinate(const SystemSpec& spec, ScanField field);
SystemSpec with_scan_coordinate(SystemSpec spec, ScanField field, double value);

struct BranchPoint {
  double parameter = 0.0;
  double quasienergy = 0.0;
  CVector eigenvector;
  std::vector<double> avg_populations;
  double residual = 0.0;
};

struct Branch {
  int id = 0;  // 1-based, ids follow ascending quasi-energy at the first point
  std::vector<BranchPoint> points;
};

struct TrackedSpectrum {
  std::vector<double> parameters;
  std::vector<Branch> branches;
  std::vector<std::string> warnings;
  double omega = 0.0;
};

/// Two overlaps (or permutation scores) closer than this are ambiguous.
inline constexpr double kAmbiguousOverlap = 1e-3;

/// Links modes at consecutive grid points by maximal total eigenvector
/// overlap. Ties are broken by quasi-energy proximity and logged in warnings.
TrackedSpectrum track_branches(const std::vector<double>& parameters,
                               const std::vector<std::vector<FloquetMode>>& modes,
                               double omega);

/// Computes modes for every spec, then tracks. Specs must differ only in
/// `field` and be monotone in it.
TrackedSpectrum track_branches(const std::vector<SystemSpec>& specs,
                               int steps_per_period = kDefaultStepsPerPeriod,
                               ScanField field = ScanField::a2);

enum class ApproachKind { crossing, avoided };

std::string to_string(ApproachKind kind);

struct ClosestApproach {
  ApproachKind kind = ApproachKind::avoided;
  double location = 0.0;
  double gap = 0.0;
  int branch_a = 0;
  int branch_b = 0;
};

using GapFunction = std::function<double(double)>;

/// Golden-section refinement of |eps_a - eps_b| inside the grid cells around
/// the discrete minimum. Without `gap_at` the discrete minimum is reported.
/// Throws NumericalError when the minimum sits on a grid edge with the gap
/// still falling outward.
ClosestApproach classify_closest_approach(const Branch& a, const Branch& b,
                                          double omega, double gap_threshold,
                                          int refinement_budget,
                                          const GapFunction& gap_at = {});

/// Gap between the modes that best overlap branches a and b near `value`,
/// recomputed from scratch for the spec at that scan coordinate.
GapFunction branch_gap_function(const SystemSpec& base, ScanField field,
                                const Branch& a, const Branch& b,
                                int steps_per_period = kDefaultStepsPerPeriod);

}  // namespace cdt

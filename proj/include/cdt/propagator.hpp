#pragma once

#include "cdt/model.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace cdt {

enum class Method {
  magnus4,  // two-point Gauss-Legendre Magnus; unitary per step
  rk4,      // classical Runge-Kutta
};

struct StateVector {
  CVector amplitudes;
  double time = 0.0;

  /// Wannier state |site>, 1-based.
  static StateVector localized(int n_sites, int site, double time = 0.0);
  double norm_squared() const { return amplitudes.squaredNorm(); }
};

inline constexpr double kInitialNormTolerance = 1e-9;
inline constexpr double kNormDriftLimit = 1e-6;
inline constexpr int kDefaultStepsPerPeriod = 2000;

struct PropagateOptions {
  int steps_per_period = kDefaultStepsPerPeriod;
  // Keep every stride-th step; the final state is always kept.
  int stride = 1;
  Method method = Method::magnus4;
};

struct Trajectory {
  SystemSpec spec;
  std::vector<double> times;
  std::vector<CVector> states;
  double step_size = 0.0;
  int stride = 1;
  // Per-site minimum of |a_j|^2 over every integrator step, before decimation.
  std::vector<double> min_populations;
  double max_norm_deviation = 0.0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// One-period-periodic step maps. The step starting at t0 + k*h depends only
/// on k mod steps_per_period, so each distinct step map is built once.
class Stepper {
 public:
  Stepper(const SystemSpec& spec, int steps_per_period, Method method,
          double t0 = 0.0, bool backward = false);

  double step_size() const { return h_; }
  long steps_taken() const { return k_; }
  double time() const { return t0_ + static_cast<double>(k_) * h_; }
  const CMatrix& step_map(long k);
  const SystemSpec& spec() const { return spec_; }
  int steps_per_period() const { return steps_per_period_; }
  /// Back to t0; cached step maps are kept.
  void reset() { k_ = 0; }

  void advance(CVector& state);
  void advance(CMatrix& states);

 private:
  CMatrix build_step(double t_start) const;

  SystemSpec spec_;
  int steps_per_period_;
  Method method_;
  double t0_;
  double h_;
  long k_ = 0;
  std::vector<CMatrix> cache_;
  std::vector<bool> cached_;
  CVector scratch_v_;
  CMatrix scratch_m_;
};

/// Number of uniform steps of size h needed to reach `span` (ceil, with a
/// small tolerance so exact multiples are not overshot).
long steps_to_cover(double span, double h);

/// Integrates i da/dt = H(t) a from initial.time to the first step boundary at
/// or after t_final.
Trajectory propagate(const SystemSpec& spec, const StateVector& initial,
                     double t_final, const PropagateOptions& options = {});

/// Bare state evolution between two times, either direction. No sampling.
CVector evolve(const SystemSpec& spec, CVector state, double t_start,
               double t_end, int steps_per_period = kDefaultStepsPerPeriod,
               Method method = Method::magnus4);

/// Minimum over every integrator step of |a_site|^2 (1-based site).
double min_population(const Trajectory& traj, int site);

std::vector<std::pair<double, double>> site_population_series(
    const Trajectory& traj, int site);

/// `t,re_a1,im_a1,...,re_aN,im_aN`, shortest round-trip decimals.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace cdt

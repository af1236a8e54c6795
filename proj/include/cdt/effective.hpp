#pragma once

#include "cdt/model.hpp"
#include "cdt/propagator.hpp"

#include <complex>
#include <iosfwd>
#include <vector>

namespace cdt {

/// Three-site high-frequency model: only the k = 0 Bessel harmonic survives,
/// so the boundary bonds are renormalized to omega0*J0(A1/omega) and
/// omega0*J0(A2/omega). Next-nearest couplings are dropped.
///
/// Closed form, with S = J01^2 + J02^2 and K = omega0*sqrt(S):
///   b1 = -(J02/J01) c1 - i (J01/sqrt S) [c2 sin Kt - c3 cos Kt]
///   b2 =  c2 cos Kt + c3 sin Kt
///   b3 =  c1          - i (J02/sqrt S) [c2 sin Kt - c3 cos Kt]
/// The dark component is carried as `dark` = (J02 b1 - J01 b3)/sqrt S, which
/// stays finite when J01 = 0 (there c1 = -J01 dark / sqrt S vanishes).
struct EffectiveParams {
  double j01 = 0.0;
  double j02 = 0.0;
  double k_rate = 0.0;
  std::complex<double> c1;
  std::complex<double> c2;
  std::complex<double> c3;
  std::complex<double> dark;
  double omega0 = 1.0;
};

/// Constants for an arbitrary normalized three-site initial state (the
/// (1,0,0) state gives c1 = -J01 J02/S, c2 = 0, c3 = -i J01/sqrt S).
/// Throws ValidationError for N != 3 and when J01 = J02 = 0.
EffectiveParams effective_params(const SystemSpec& spec,
                                 const StateVector& initial);

/// Rotating-frame amplitudes (b1, b2, b3) at time t.
CVector effective_state(const EffectiveParams& params, double t);

/// |b1(t)|^2 = |J02^2/S + (J01^2/S) cos Kt|^2 for the (1,0,0) start.
double analytic_p1(const EffectiveParams& params, double t);

/// Closed-form minimum over t of analytic_p1.
double analytic_min_p1(const EffectiveParams& params);

struct EffectiveTrajectory {
  std::vector<double> times;
  std::vector<CVector> states;
};

/// Samples the closed form at `samples` equally spaced times in [0, t_final].
EffectiveTrajectory effective_propagate(const EffectiveParams& params,
                                        double t_final, int samples);

/// Trajectory CSV schema, preceded by a `# frame=rotating` comment line.
void write_effective_csv(std::ostream& os, const EffectiveTrajectory& traj);

}  // namespace cdt

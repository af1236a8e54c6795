#include "cdt/effective.hpp"

#include "cdt/error.hpp"
#include "cdt/format.hpp"
#include "cdt/specfun.hpp"

#include <cmath>
#include <ostream>

namespace cdt {
namespace {
constexpr std::complex<double> kI{0.0, 1.0};
}

EffectiveParams effective_params(const SystemSpec& spec,
                                 const StateVector& initial) {
  validate(spec);
  if (spec.n_sites != 3)
    throw ValidationError("the effective model is defined for n_sites = 3 only");
  if (initial.amplitudes.size() != 3)
    throw ValidationError("initial state must have 3 amplitudes");
  if (std::abs(initial.norm_squared() - 1.0) > kInitialNormTolerance)
    throw ValidationError("initial state must be normalized");

  EffectiveParams p;
  p.omega0 = spec.omega0;
  const auto e1 = specfun::bessel_eval(0, spec.a1 / spec.omega);
  const auto e2 = specfun::bessel_eval(0, spec.a2 / spec.omega);
  p.j01 = e1.value;
  p.j02 = e2.value;
  const double s = p.j01 * p.j01 + p.j02 * p.j02;
  // Both couplings indistinguishable from zero at evaluation accuracy.
  if (std::abs(p.j01) <= e1.abs_error_bound && std::abs(p.j02) <= e2.abs_error_bound)
    throw ValidationError(
        "degenerate effective model: J0(a1/omega) = J0(a2/omega) = 0");
  const double root = std::sqrt(s);
  p.k_rate = std::abs(spec.omega0) * root;

  const auto& b0 = initial.amplitudes;
  p.dark = (p.j02 * b0(0) - p.j01 * b0(2)) / root;
  p.c1 = -p.j01 * p.dark / root;
  p.c2 = b0(1);
  p.c3 = -kI * (p.j01 * b0(0) + p.j02 * b0(2)) / root;
  return p;
}

CVector effective_state(const EffectiveParams& p, double t) {
  const double root = std::sqrt(p.j01 * p.j01 + p.j02 * p.j02);
  // A negative omega0 flips the sign of the bright-mode frequency.
  const double kt = (p.omega0 < 0.0 ? -1.0 : 1.0) * p.k_rate * t;
  const double c = std::cos(kt);
  const double s = std::sin(kt);
  const std::complex<double> bright = p.c2 * s - p.c3 * c;
  CVector b(3);
  b(0) = (p.j02 / root) * p.dark - kI * (p.j01 / root) * bright;
  b(1) = p.c2 * c + p.c3 * s;
  b(2) = -(p.j01 / root) * p.dark - kI * (p.j02 / root) * bright;
  return b;
}

double analytic_p1(const EffectiveParams& p, double t) {
  const double s = p.j01 * p.j01 + p.j02 * p.j02;
  const double amp = p.j02 * p.j02 / s + p.j01 * p.j01 / s * std::cos(p.k_rate * t);
  return amp * amp;
}

double analytic_min_p1(const EffectiveParams& p) {
  const double a = p.j01 * p.j01;
  const double b = p.j02 * p.j02;
  if (b <= a) return 0.0;
  const double r = (b - a) / (a + b);
  return r * r;
}

EffectiveTrajectory effective_propagate(const EffectiveParams& params,
                                        double t_final, int samples) {
  if (samples < 2) throw ValidationError("need at least two samples");
  if (!(t_final > 0.0)) throw ValidationError("t_final must be positive");
  EffectiveTrajectory traj;
  traj.times.reserve(static_cast<std::size_t>(samples));
  traj.states.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double t = t_final * i / (samples - 1);
    traj.times.push_back(t);
    traj.states.push_back(effective_state(params, t));
  }
  return traj;
}

void write_effective_csv(std::ostream& os, const EffectiveTrajectory& traj) {
  os << "# frame=rotating\n";
  os << "t,re_a1,im_a1,re_a2,im_a2,re_a3,im_a3\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << format_double(traj.times[i]);
    for (int j = 0; j < 3; ++j)
      os << ',' << format_double(traj.states[i](j).real()) << ','
         << format_double(traj.states[i](j).imag());
    os << '\n';
  }
}

}  // namespace cdt

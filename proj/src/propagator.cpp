#include "cdt/propagator.hpp"

#include "cdt/error.hpp"
#include "cdt/format.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <ostream>
#include <string>

namespace cdt {
namespace {

constexpr std::complex<double> kI{0.0, 1.0};

void check_site(int n_sites, int site) {
  if (site < 1 || site > n_sites)
    throw ValidationError("site must lie in [1, " + std::to_string(n_sites) +
                          "], got " + std::to_string(site));
}

}  // namespace

StateVector StateVector::localized(int n_sites, int site, double time) {
  if (n_sites < 1) throw ValidationError("n_sites must be >= 2");
  check_site(n_sites, site);
  StateVector s;
  s.amplitudes = CVector::Zero(n_sites);
  s.amplitudes(site - 1) = 1.0;
  s.time = time;
  return s;
}

Stepper::Stepper(const SystemSpec& spec, int steps_per_period, Method method,
                 double t0, bool backward)
    : spec_(spec),
      steps_per_period_(steps_per_period),
      method_(method),
      t0_(t0) {
  validate(spec);
  if (steps_per_period < 1)
    throw ValidationError("steps_per_period must be positive");
  h_ = spec.period() / steps_per_period;
  if (backward) h_ = -h_;
  cache_.resize(static_cast<std::size_t>(steps_per_period));
  cached_.assign(static_cast<std::size_t>(steps_per_period), false);
}

CMatrix Stepper::build_step(double t) const {
  const int n = spec_.n_sites;
  const double h = h_;
  if (method_ == Method::magnus4) {
    const double offset = std::sqrt(3.0) / 6.0;
    CMatrix h1, h2;
    fill_hamiltonian(spec_, t + (0.5 - offset) * h, h1);
    fill_hamiltonian(spec_, t + (0.5 + offset) * h, h2);
    // exp(Omega) with Omega = -i h (H1+H2)/2 - (sqrt3/12) h^2 [H2,H1],
    // written as exp(-i G) for the Hermitian G below.
    const CMatrix comm = h2 * h1 - h1 * h2;
    const CMatrix g = 0.5 * h * (h1 + h2) -
                      kI * (std::sqrt(3.0) / 12.0 * h * h) * comm;
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
    const CVector phases =
        (-kI * eig.eigenvalues().cast<std::complex<double>>()).array().exp();
    return eig.eigenvectors() * phases.asDiagonal() *
           eig.eigenvectors().adjoint();
  }
  // The RK4 step of a linear ODE is itself a linear map; build it on I.
  CMatrix ha, hb, hc;
  fill_hamiltonian(spec_, t, ha);
  fill_hamiltonian(spec_, t + 0.5 * h, hb);
  fill_hamiltonian(spec_, t + h, hc);
  const CMatrix id = CMatrix::Identity(n, n);
  const CMatrix k1 = -kI * ha;
  const CMatrix k2 = -kI * hb * (id + 0.5 * h * k1);
  const CMatrix k3 = -kI * hb * (id + 0.5 * h * k2);
  const CMatrix k4 = -kI * hc * (id + h * k3);
  return id + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

const CMatrix& Stepper::step_map(long k) {
  long phase = k % steps_per_period_;
  if (phase < 0) phase += steps_per_period_;
  const auto idx = static_cast<std::size_t>(phase);
  if (!cached_[idx]) {
    cache_[idx] = build_step(t0_ + static_cast<double>(k) * h_);
    cached_[idx] = true;
  }
  return cache_[idx];
}

void Stepper::advance(CVector& state) {
  scratch_v_.noalias() = step_map(k_) * state;
  state.swap(scratch_v_);
  ++k_;
}

void Stepper::advance(CMatrix& states) {
  scratch_m_.noalias() = step_map(k_) * states;
  states.swap(scratch_m_);
  ++k_;
}

long steps_to_cover(double span, double h) {
  const double ratio = span / std::abs(h);
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
    return static_cast<long>(nearest);
  return static_cast<long>(std::ceil(ratio));
}

Trajectory propagate(const SystemSpec& spec, const StateVector& initial,
                     double t_final, const PropagateOptions& options) {
  validate(spec);
  const int n = spec.n_sites;
  if (initial.amplitudes.size() != n)
    throw ValidationError("initial state has " +
                          std::to_string(initial.amplitudes.size()) +
                          " amplitudes, expected " + std::to_string(n));
  if (std::abs(initial.norm_squared() - 1.0) > kInitialNormTolerance)
    throw ValidationError("initial state must be normalized");
  if (!(t_final > initial.time))
    throw ValidationError("t_final must exceed the initial time");
  if (options.steps_per_period < 100)
    throw ValidationError("steps_per_period must be >= 100");
  if (options.stride < 1) throw ValidationError("stride must be >= 1");

  Stepper stepper(spec, options.steps_per_period, options.method, initial.time);
  const double h = stepper.step_size();
  const long total = steps_to_cover(t_final - initial.time, h);

  Trajectory traj;
  traj.spec = spec;
  traj.step_size = h;
  traj.stride = options.stride;
  const auto expected = static_cast<std::size_t>(total / options.stride + 2);
  traj.times.reserve(expected);
  traj.states.reserve(expected);

  CVector state = initial.amplitudes;
  traj.times.push_back(initial.time);
  traj.states.push_back(state);
  traj.min_populations.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    traj.min_populations[static_cast<std::size_t>(j)] = std::norm(state(j));
  traj.max_norm_deviation = std::abs(state.squaredNorm() - 1.0);

  for (long k = 1; k <= total; ++k) {
    stepper.advance(state);
    const double t = initial.time + static_cast<double>(k) * h;
    double norm2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p = std::norm(state(j));
      norm2 += p;
      auto& m = traj.min_populations[static_cast<std::size_t>(j)];
      m = std::min(m, p);
    }
    const double drift = std::abs(norm2 - 1.0);
    traj.max_norm_deviation = std::max(traj.max_norm_deviation, drift);
    if (!(drift <= kNormDriftLimit))
      throw IntegrationError(
          "norm drift " + format_double(drift) + " at t = " + format_double(t) +
              " exceeds 1e-6; step size too coarse",
          t);
    if (k % options.stride == 0 || k == total) {
      traj.times.push_back(t);
      traj.states.push_back(state);
    }
  }
  return traj;
}

CVector evolve(const SystemSpec& spec, CVector state, double t_start,
               double t_end, int steps_per_period, Method method) {
  if (state.size() != spec.n_sites)
    throw ValidationError("state dimension does not match n_sites");
  if (t_end == t_start) return state;
  const bool backward = t_end < t_start;
  Stepper stepper(spec, steps_per_period, method, t_start, backward);
  const long total = steps_to_cover(std::abs(t_end - t_start), stepper.step_size());
  for (long k = 0; k < total; ++k) stepper.advance(state);
  return state;
}

double min_population(const Trajectory& traj, int site) {
  if (traj.empty()) throw ValidationError("trajectory is empty");
  check_site(traj.spec.n_sites, site);
  return traj.min_populations[static_cast<std::size_t>(site - 1)];
}

std::vector<std::pair<double, double>> site_population_series(
    const Trajectory& traj, int site) {
  check_site(traj.spec.n_sites, site);
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i)
    out.emplace_back(traj.times[i], std::norm(traj.states[i](site - 1)));
  return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.spec.n_sites;
  os << "t";
  for (int j = 1; j <= n; ++j) os << ",re_a" << j << ",im_a" << j;
  os << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << format_double(traj.times[i]);
    for (int j = 0; j < n; ++j)
      os << ',' << format_double(traj.states[i](j).real()) << ','
         << format_double(traj.states[i](j).imag());
    os << '\n';
  }
}

}  // namespace cdt

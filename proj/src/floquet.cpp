#include "cdt/floquet.hpp"

#include "cdt/error.hpp"
#include "cdt/format.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace cdt {
namespace {

constexpr std::complex<double> kI{0.0, 1.0};

std::vector<std::size_t> identity_permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

}  // namespace

double MonodromyOperator::unitarity_residual() const {
  const CMatrix defect =
      matrix.adjoint() * matrix - CMatrix::Identity(matrix.rows(), matrix.cols());
  return defect.cwiseAbs().maxCoeff();
}

MonodromyOperator monodromy(const SystemSpec& spec, int steps_per_period,
                            Method method) {
  validate(spec);
  if (steps_per_period < 100)
    throw ValidationError("steps_per_period must be >= 100");
  Stepper stepper(spec, steps_per_period, method);
  return monodromy(stepper);
}

MonodromyOperator monodromy(Stepper& stepper) {
  const SystemSpec& spec = stepper.spec();
  const int steps_per_period = stepper.steps_per_period();
  stepper.reset();
  if (stepper.time() != 0.0 || stepper.step_size() <= 0.0)
    throw ValidationError("monodromy needs a forward stepper starting at t = 0");
  CMatrix columns = CMatrix::Identity(spec.n_sites, spec.n_sites);
  for (int k = 0; k < steps_per_period; ++k) stepper.advance(columns);

  MonodromyOperator u{std::move(columns), spec, steps_per_period};
  const double residual = u.unitarity_residual();
  if (!(residual <= kUnitarityLimit))
    throw NumericalError("monodromy unitarity residual " +
                         format_double(residual) +
                         " exceeds 1e-6; increase steps_per_period");
  return u;
}

double fold_quasienergy(double eps, double omega) {
  const double half = 0.5 * omega;
  double folded = std::remainder(eps, omega);  // [-omega/2, omega/2]
  if (folded <= -half) folded += omega;
  if (folded > half) folded -= omega;
  return folded;
}

double quasienergy_distance(double a, double b, double omega) {
  return std::abs(fold_quasienergy(a - b, omega));
}

std::vector<FloquetMode> floquet_modes(const MonodromyOperator& u,
                                       bool with_populations) {
  const double period = u.spec.period();
  const Eigen::Index n = u.dimension();
  // U is normal, so its Schur form is diagonal up to rounding and the Schur
  // vectors are an orthonormal eigenbasis, degenerate clusters included.
  Eigen::ComplexSchur<CMatrix> schur(u.matrix);
  if (schur.info() != Eigen::Success)
    throw NumericalError("Schur decomposition of the monodromy did not converge");
  const CMatrix& t = schur.matrixT();
  const CMatrix& q = schur.matrixU();

  std::vector<FloquetMode> modes(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& mode = modes[static_cast<std::size_t>(i)];
    mode.quasienergy = fold_quasienergy(-std::arg(t(i, i)) / period, u.spec.omega);
    mode.eigenvector = q.col(i);
    const std::complex<double> phase = std::exp(-kI * mode.quasienergy * period);
    mode.eigen_residual =
        (u.matrix * mode.eigenvector - phase * mode.eigenvector).norm();
    if (!(mode.eigen_residual <= kEigenResidualLimit))
      throw NumericalError("Floquet eigen-residual " +
                           format_double(mode.eigen_residual) +
                           " exceeds 1e-7");
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const FloquetMode& a, const FloquetMode& b) {
                     return a.quasienergy < b.quasienergy;
                   });
  if (with_populations)
    fill_averaged_populations(u.spec, modes, u.steps_per_period);
  return modes;
}

void fill_averaged_populations(const SystemSpec& spec,
                               std::vector<FloquetMode>& modes,
                               int steps_per_period) {
  Stepper stepper(spec, steps_per_period, Method::magnus4);
  fill_averaged_populations(stepper, modes);
}

void fill_averaged_populations(Stepper& stepper, std::vector<FloquetMode>& modes) {
  if (modes.empty()) return;
  const SystemSpec& spec = stepper.spec();
  const int steps_per_period = stepper.steps_per_period();
  stepper.reset();
  const int n = spec.n_sites;
  const auto m = static_cast<Eigen::Index>(modes.size());
  CMatrix states(n, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& v = modes[static_cast<std::size_t>(c)].eigenvector;
    if (v.size() != n)
      throw ValidationError("mode dimension does not match n_sites");
    states.col(c) = v;
  }
  Eigen::MatrixXd sum = 0.5 * states.cwiseAbs2();
  for (int k = 1; k <= steps_per_period; ++k) {
    stepper.advance(states);
    if (k == steps_per_period)
      sum += 0.5 * states.cwiseAbs2();
    else
      sum += states.cwiseAbs2();
  }
  sum /= static_cast<double>(steps_per_period);
  for (Eigen::Index c = 0; c < m; ++c) {
    auto& pops = modes[static_cast<std::size_t>(c)].avg_populations;
    pops.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) pops[static_cast<std::size_t>(j)] = sum(j, c);
  }
}

std::vector<FloquetMode> floquet_analysis(const SystemSpec& spec,
                                          int steps_per_period,
                                          bool with_populations) {
  validate(spec);
  if (steps_per_period < 100)
    throw ValidationError("steps_per_period must be >= 100");
  Stepper stepper(spec, steps_per_period, Method::magnus4);
  auto modes = floquet_modes(monodromy(stepper), false);
  if (with_populations) fill_averaged_populations(stepper, modes);
  return modes;
}

std::vector<double> averaged_populations(const SystemSpec& spec,
                                         const FloquetMode& mode,
                                         int steps_per_period) {
  if (!(mode.eigen_residual <= kEigenResidualLimit))
    throw NumericalError("mode eigen-residual above tolerance");
  std::vector<FloquetMode> one{mode};
  fill_averaged_populations(spec, one, steps_per_period);
  return one.front().avg_populations;
}

// ---------------------------------------------------------------------------

ScanField scan_field_from_string(const std::string& name) {
  if (name == "a1") return ScanField::a1;
  if (name == "a2") return ScanField::a2;
  if (name == "nu0") return ScanField::nu0;
  if (name == "omega0") return ScanField::omega0;
  throw ValidationError("unknown scan parameter '" + name +
                        "' (expected a1, a2, nu0 or omega0)");
}

std::string to_string(ScanField field) {
  switch (field) {
    case ScanField::a1: return "a1";
    case ScanField::a2: return "a2";
    case ScanField::nu0: return "nu0";
    case ScanField::omega0: return "omega0";
  }
  return "?";
}

double scan_coordinate(const SystemSpec& spec, ScanField field) {
  switch (field) {
    case ScanField::a1: return spec.a1 / spec.omega;
    case ScanField::a2: return spec.a2 / spec.omega;
    case ScanField::nu0: return spec.nu0;
    case ScanField::omega0: return spec.omega0;
  }
  return 0.0;
}

SystemSpec with_scan_coordinate(SystemSpec spec, ScanField field, double value) {
  switch (field) {
    case ScanField::a1: spec.a1 = value * spec.omega; break;
    case ScanField::a2: spec.a2 = value * spec.omega; break;
    case ScanField::nu0: spec.nu0 = value; break;
    case ScanField::omega0: spec.omega0 = value; break;
  }
  return spec;
}

namespace {

struct Matching {
  std::vector<std::size_t> perm;  // branch b -> mode perm[b] at the next point
  bool ambiguous = false;
};

Matching match_modes(const std::vector<CVector>& previous,
                     const std::vector<double>& previous_eps,
                     const std::vector<FloquetMode>& next, double omega) {
  const std::size_t n = previous.size();
  Eigen::MatrixXd overlap(n, n);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t m = 0; m < n; ++m)
      overlap(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m)) =
          std::abs(previous[b].dot(next[m].eigenvector));

  auto score = [&](const std::vector<std::size_t>& p) {
    double s = 0.0;
    for (std::size_t b = 0; b < n; ++b)
      s += overlap(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(p[b]));
    return s;
  };
  auto energy_cost = [&](const std::vector<std::size_t>& p) {
    double s = 0.0;
    for (std::size_t b = 0; b < n; ++b)
      s += quasienergy_distance(previous_eps[b], next[p[b]].quasienergy, omega);
    return s;
  };

  Matching result;
  if (n <= 8) {
    // Exhaustive over permutations; keep every candidate near the best score.
    std::vector<std::size_t> p = identity_permutation(n);
    std::vector<std::pair<double, std::vector<std::size_t>>> scored;
    double best = -1.0;
    do {
      const double s = score(p);
      if (s > best) best = s;
      if (s >= best - kAmbiguousOverlap) scored.emplace_back(s, p);
    } while (std::next_permutation(p.begin(), p.end()));
    std::vector<const std::vector<std::size_t>*> candidates;
    for (const auto& [s, perm] : scored)
      if (s >= best - kAmbiguousOverlap) candidates.push_back(&perm);
    result.ambiguous = candidates.size() > 1;
    const std::vector<std::size_t>* chosen = candidates.front();
    if (result.ambiguous) {
      double best_cost = energy_cost(*chosen);
      for (const auto* c : candidates) {
        const double cost = energy_cost(*c);
        if (cost < best_cost) {
          best_cost = cost;
          chosen = c;
        }
      }
    }
    result.perm = *chosen;
    return result;
  }

  // Greedy for large N: repeatedly take the globally largest free overlap.
  result.perm.assign(n, n);
  std::vector<bool> used_b(n, false), used_m(n, false);
  for (std::size_t round = 0; round < n; ++round) {
    double best = -1.0, second = -1.0;
    std::size_t bb = 0, bm = 0;
    for (std::size_t b = 0; b < n; ++b) {
      if (used_b[b]) continue;
      for (std::size_t m = 0; m < n; ++m) {
        if (used_m[m]) continue;
        const double o = overlap(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m));
        if (o > best) {
          second = best;
          best = o;
          bb = b;
          bm = m;
        } else if (o > second) {
          second = o;
        }
      }
    }
    if (best - second < kAmbiguousOverlap) result.ambiguous = true;
    result.perm[bb] = bm;
    used_b[bb] = used_m[bm] = true;
  }
  return result;
}

}  // namespace

TrackedSpectrum track_branches(const std::vector<double>& parameters,
                               const std::vector<std::vector<FloquetMode>>& modes,
                               double omega) {
  if (parameters.empty()) throw ValidationError("branch tracking needs at least one grid point");
  if (parameters.size() != modes.size())
    throw ValidationError("one mode list per grid point is required");
  const std::size_t n = modes.front().size();
  for (const auto& list : modes)
    if (list.size() != n) throw ValidationError("mode count differs between grid points");

  TrackedSpectrum out;
  out.parameters = parameters;
  out.omega = omega;
  out.branches.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    out.branches[b].id = static_cast<int>(b) + 1;
    out.branches[b].points.reserve(parameters.size());
  }
  auto push = [&](std::size_t b, std::size_t i, const FloquetMode& m) {
    out.branches[b].points.push_back(BranchPoint{parameters[i], m.quasienergy,
                                                 m.eigenvector, m.avg_populations,
                                                 m.eigen_residual});
  };
  for (std::size_t b = 0; b < n; ++b) push(b, 0, modes[0][b]);

  std::vector<CVector> previous(n);
  std::vector<double> previous_eps(n);
  for (std::size_t i = 1; i < parameters.size(); ++i) {
    for (std::size_t b = 0; b < n; ++b) {
      previous[b] = out.branches[b].points.back().eigenvector;
      previous_eps[b] = out.branches[b].points.back().quasienergy;
    }
    const Matching match = match_modes(previous, previous_eps, modes[i], omega);
    if (match.ambiguous)
      out.warnings.push_back("ambiguous overlap matching at parameter " +
                             format_double(parameters[i]) +
                             "; resolved by quasi-energy proximity");
    for (std::size_t b = 0; b < n; ++b) push(b, i, modes[i][match.perm[b]]);
  }
  return out;
}

TrackedSpectrum track_branches(const std::vector<SystemSpec>& specs,
                               int steps_per_period, ScanField field) {
  if (specs.empty()) throw ValidationError("branch tracking needs at least one spec");
  std::vector<double> params;
  std::vector<std::vector<FloquetMode>> modes;
  const SystemSpec& first = specs.front();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SystemSpec& s = specs[i];
    validate(s);
    if (with_scan_coordinate(s, field, scan_coordinate(first, field)) != first)
      throw ValidationError("specs may differ only in the scanned field '" +
                            to_string(field) + "'");
    params.push_back(scan_coordinate(s, field));
    if (i > 0 && !(params[i] > params[i - 1]))
      throw ValidationError("scan grid must be strictly increasing");
    modes.push_back(floquet_analysis(s, steps_per_period));
  }
  return track_branches(params, modes, first.omega);
}

std::string to_string(ApproachKind kind) {
  return kind == ApproachKind::crossing ? "crossing" : "avoided";
}

ClosestApproach classify_closest_approach(const Branch& a, const Branch& b,
                                          double omega, double gap_threshold,
                                          int refinement_budget,
                                          const GapFunction& gap_at) {
  const std::size_t n = a.points.size();
  if (n == 0 || n != b.points.size())
    throw ValidationError("branches must share a non-empty grid");

  std::vector<double> gaps(n);
  for (std::size_t i = 0; i < n; ++i)
    gaps[i] = quasienergy_distance(a.points[i].quasienergy,
                                   b.points[i].quasienergy, omega);
  const auto it = std::min_element(gaps.begin(), gaps.end());
  const auto imin = static_cast<std::size_t>(it - gaps.begin());
  const double flat_tol = 1e-12 * std::max(1.0, omega);

  ClosestApproach result;
  result.branch_a = a.id;
  result.branch_b = b.id;
  result.location = a.points[imin].parameter;
  result.gap = gaps[imin];

  if (n > 1) {
    const bool at_left = imin == 0 && gaps[1] > gaps[0] + flat_tol;
    const bool at_right = imin == n - 1 && gaps[n - 2] > gaps[n - 1] + flat_tol;
    if (at_left || at_right)
      throw NumericalError("no local minimum of the branch gap inside the grid");
  }

  if (gap_at && n > 1 && refinement_budget > 0) {
    double lo = a.points[imin == 0 ? 0 : imin - 1].parameter;
    double hi = a.points[imin + 1 == n ? n - 1 : imin + 1].parameter;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = gap_at(x1);
    double f2 = gap_at(x2);
    int used = 2;
    auto consider = [&](double x, double f) {
      if (f < result.gap) {
        result.gap = f;
        result.location = x;
      }
    };
    consider(x1, f1);
    consider(x2, f2);
    while (used < refinement_budget) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = gap_at(x1);
        consider(x1, f1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = gap_at(x2);
        consider(x2, f2);
      }
      ++used;
    }
  }
  result.kind = result.gap < gap_threshold ? ApproachKind::crossing
                                           : ApproachKind::avoided;
  return result;
}

GapFunction branch_gap_function(const SystemSpec& base, ScanField field,
                                const Branch& a, const Branch& b,
                                int steps_per_period) {
  return [=](double value) {
    auto nearest = [value](const Branch& br) -> const CVector& {
      std::size_t best = 0;
      for (std::size_t i = 1; i < br.points.size(); ++i)
        if (std::abs(br.points[i].parameter - value) <
            std::abs(br.points[best].parameter - value))
          best = i;
      return br.points[best].eigenvector;
    };
    const SystemSpec spec = with_scan_coordinate(base, field, value);
    const auto modes = floquet_analysis(spec, steps_per_period, false);
    const CVector& va = nearest(a);
    const CVector& vb = nearest(b);
    std::size_t ia = 0;
    double best = -1.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double o = std::abs(va.dot(modes[m].eigenvector));
      if (o > best) {
        best = o;
        ia = m;
      }
    }
    std::size_t ib = ia == 0 ? 1 : 0;
    best = -1.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (m == ia) continue;
      const double o = std::abs(vb.dot(modes[m].eigenvector));
      if (o > best) {
        best = o;
        ib = m;
      }
    }
    return quasienergy_distance(modes[ia].quasienergy, modes[ib].quasienergy,
                                base.omega);
  };
}

}  // namespace cdt

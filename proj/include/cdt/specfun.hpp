#pragma once

namespace cdt::specfun {

inline constexpr int kMaxBesselOrder = 10;
inline constexpr double kMaxBesselArgument = 60.0;
inline constexpr int kMaxZeroIndex = 5;

struct BesselEval {
  int order = 0;
  double argument = 0.0;
  double value = 0.0;
  double abs_error_bound = 0.0;
};

/// Bessel function of the first kind J_k(x), 0 <= k <= 10, |x| <= 60.
/// Throws std::domain_error outside that range.
double bessel_j(int k, double x);

/// Same as bessel_j, packaged with the guaranteed absolute error bound.
BesselEval bessel_eval(int k, double x);

/// n-th positive zero of J_0 (1 <= n <= 5) to 1e-8 absolute or better.
double j0_zero(int n);

}  // namespace cdt::specfun

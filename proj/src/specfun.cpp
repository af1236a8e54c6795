#include "cdt/specfun.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cdt::specfun {
namespace {

// Miller's backward recurrence, normalized with J_0 + 2 sum_{m>=1} J_{2m} = 1.
// Valid for x > 0; the start order is far enough above max(k, x) that the
// truncation error is below double precision.
double bessel_j_positive(int k, double x) {
  const double big = 1e150;
  const double scale = std::max<double>(k, x);
  int start = static_cast<int>(scale + 40.0 + 10.0 * std::sqrt(scale));
  if (start % 2) ++start;

  double above = 0.0;  // J_{m+1}
  double here = 1e-300;  // J_m, arbitrary seed
  double wanted = 0.0;
  double norm = 0.0;
  for (int m = start; m >= 1; --m) {
    const double below = 2.0 * m / x * here - above;  // J_{m-1}
    above = here;
    here = below;
    if (std::abs(here) > big) {
      here /= big;
      above /= big;
      wanted /= big;
      norm /= big;
    }
    const int order = m - 1;
    if (order == k) wanted = here;
    if (order > 0 && order % 2 == 0) norm += 2.0 * here;
  }
  norm += here;  // J_0 term
  return wanted / norm;
}

}  // namespace

double bessel_j(int k, double x) {
  if (k < 0 || k > kMaxBesselOrder)
    throw std::domain_error("bessel_j: order must lie in [0, " +
                            std::to_string(kMaxBesselOrder) + "], got " +
                            std::to_string(k));
  if (!std::isfinite(x) || std::abs(x) > kMaxBesselArgument)
    throw std::domain_error("bessel_j: |x| must be <= 60, got " +
                            std::to_string(x));
  if (x == 0.0) return k == 0 ? 1.0 : 0.0;
  const double value = bessel_j_positive(k, std::abs(x));
  return (x < 0.0 && k % 2 == 1) ? -value : value;
}

BesselEval bessel_eval(int k, double x) {
  return BesselEval{k, x, bessel_j(k, x), 1e-10};
}

double j0_zero(int n) {
  if (n < 1 || n > kMaxZeroIndex)
    throw std::domain_error("j0_zero: index must lie in [1, " +
                            std::to_string(kMaxZeroIndex) + "], got " +
                            std::to_string(n));
  constexpr double pi = std::numbers::pi;
  double lo = (n - 0.75) * pi;
  double hi = (n + 0.25) * pi;
  double f_lo = bessel_j(0, lo);
  // Bisection to the last representable bit of the bracket.
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = bessel_j(0, mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace cdt::specfun

#pragma once

#include <cmath>
#include <stdexcept>

// Special functions needed by the azimuthal distribution: the cylindrical
// Bessel function J0 (angular average of cos(A + B cos psi)) and the kernel
// j1(x)/x of a uniform-ball Fourier transform. Both are implemented from
// scratch so results do not depend on libm quality; long double accumulation
// keeps the absolute error of J0 below 1e-12 over |x| <= 1e4.

namespace udw {

namespace specfun_detail {

// Ascending series J0(x) = sum_k (-1)^k (x^2/4)^k / (k!)^2. Used for
// |x| < 16; the largest intermediate term there is ~2e5, so long double
// (64-bit mantissa) keeps cancellation error near 1e-14.
inline long double j0_series(long double x) {
  const long double q = 0.25L * x * x;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k <= 120; ++k) {
    term *= -q / (static_cast<long double>(k) * k);
    sum += term;
    if (std::fabs(term) < 1e-24L * std::fabs(sum) + 1e-30L) break;
  }
  return sum;
}

// Hankel amplitude/phase expansion,
//   J0(x) = sqrt(2/(pi x)) [P(x) cos(x - pi/4) + Q(x) sin(x - pi/4)],
//   P(x) = 1 - a2/x^2 + a4/x^4 - ...,  Q(x) = a1/x - a3/x^3 + ...,
// with a_k = prod_{j<=k} (2j-1)^2 / (k! 8^k). The expansion is asymptotic:
// terms are summed while they decrease, which leaves a truncation floor well
// below 1e-13 for x >= 16.
inline long double j0_asymptotic(long double x) {
  long double p = 0.0L;
  long double q = 0.0L;
  long double a = 1.0L;        // a_k / x^k
  long double prev = 1e300L;
  for (int k = 0; k < 40; ++k) {
    const long double mag = std::fabs(a);
    if (mag > prev) break;     // asymptotic tail started to grow
    prev = mag;
    const int s = (k / 2) % 2 ? -1 : 1;  // sign (-1)^floor(k/2)
    if (k % 2 == 0) {
      p += s * a;
    } else {
      q += s * a;
    }
    if (mag < 1e-26L) break;
    const long double odd = 2.0L * k + 1.0L;
    a *= odd * odd / (8.0L * (k + 1.0L) * x);
  }
  const long double omega = x - 0.78539816339744830961L;  // x - pi/4
  const long double amp = std::sqrt(2.0L / (3.14159265358979323846L * x));
  return amp * (p * std::cos(omega) + q * std::sin(omega));
}

// Taylor series of j1(x)/x = sum_k (-1)^k (x^2/2)^k / (k! (2k+3)!!),
// converging from the leading value 1/3.
inline long double j1_over_x_series(long double x) {
  const long double h = 0.5L * x * x;
  long double term = 1.0L / 3.0L;
  long double sum = term;
  for (int k = 1; k <= 12; ++k) {
    term *= -h / (static_cast<long double>(k) * (2.0L * k + 3.0L));
    sum += term;
    if (std::fabs(term) < 1e-24L * std::fabs(sum)) break;
  }
  return sum;
}

}  // namespace specfun_detail

/// Cylindrical Bessel function of the first kind, order zero.
/// Absolute error <= 1e-12 for |x| <= 1e4. Throws std::domain_error on
/// non-finite input.
inline double bessel_j0(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("bessel_j0: non-finite argument");
  }
  const long double ax = std::fabs(static_cast<long double>(x));
  if (ax < 16.0L) {
    return static_cast<double>(specfun_detail::j0_series(ax));
  }
  return static_cast<double>(specfun_detail::j0_asymptotic(ax));
}

/// Spherical Bessel kernel j1(x)/x, extended by its limit 1/3 at x = 0.
/// Even in x; the Taylor series takes over below |x| = 1e-2 where the closed
/// form (sin x - x cos x)/x^3 loses digits to cancellation.
inline double spherical_j1_over_x(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("spherical_j1_over_x: non-finite argument");
  }
  const long double ax = std::fabs(static_cast<long double>(x));
  if (ax < 1e-2L) {
    return static_cast<double>(specfun_detail::j1_over_x_series(ax));
  }
  const long double s = std::sin(ax);
  const long double c = std::cos(ax);
  return static_cast<double>((s - ax * c) / (ax * ax * ax));
}

}  // namespace udw

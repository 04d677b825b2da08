#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

// Quadrature over one azimuthal period. For smooth 2pi-periodic integrands
// the equal-weight trapezoid rule converges spectrally (aliasing of Fourier
// modes at multiples of n), so doubling the node count until two successive
// estimates agree is both cheap and sharp.

namespace udw {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Thrown when node doubling hits its cap without meeting the tolerance.
/// Carries the last estimate so callers can report how far they got.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double last_estimate, std::size_t last_n)
      : std::runtime_error(what), last_estimate_(last_estimate), last_n_(last_n) {}

  double last_estimate() const { return last_estimate_; }
  std::size_t last_n() const { return last_n_; }

 private:
  double last_estimate_;
  std::size_t last_n_;
};

/// Equal-weight trapezoid rule on [0, 2pi) with n nodes (periodicity merges
/// the endpoint half-weights).
template <class F>
double periodic_trapezoid(F&& f, std::size_t n) {
  if (n == 0) throw std::invalid_argument("periodic_trapezoid: n must be positive");
  const double h = two_pi / static_cast<double>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += f(h * static_cast<double>(i));
  }
  return h * sum;
}

struct QuadResult {
  double value = 0.0;
  std::size_t nodes = 0;
};

/// Node-doubling refinement of periodic_trapezoid. Reuses previous samples
/// (I_2n = I_n/2 + h' * sum over the new midpoints) and stops once two
/// consecutive doublings each change the estimate by no more than
/// max(rel_tol*|I|, abs_tol); requiring two quiet steps guards against the
/// accidental near-cancellation of aliasing errors in oscillatory integrands.
template <class F>
QuadResult refine_periodic(F&& f, std::size_t n0, double rel_tol, double abs_tol,
                           std::size_t max_nodes = (std::size_t{1} << 21)) {
  if (n0 < 4) n0 = 4;
  std::size_t n = n0;
  double estimate = periodic_trapezoid(f, n);
  int quiet = 0;
  while (2 * n <= max_nodes) {
    const double h2 = two_pi / static_cast<double>(2 * n);
    double mid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mid += f(h2 * static_cast<double>(2 * i + 1));
    }
    const double next = 0.5 * estimate + h2 * mid;
    const double diff = std::fabs(next - estimate);
    estimate = next;
    n *= 2;
    quiet = (diff <= std::max(rel_tol * std::fabs(next), abs_tol)) ? quiet + 1 : 0;
    if (quiet >= 2) return {estimate, n};
  }
  throw QuadratureError("refine_periodic: node cap reached before convergence", estimate, n);
}

}  // namespace udw

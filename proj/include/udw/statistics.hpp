#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "udw/distribution.hpp"

// Figures of merit over the azimuthal density: differential entropy, the
// best-guess window probability, the large-separation decay rate of the
// interference signal, and the total-variation metric used by the oracle.

namespace udw {

/// Shannon differential entropy h = -int p ln p dpsi in nats, with the
/// 0 ln 0 := 0 guard; auto-refined to 1e-8 absolute. The uniform density
/// maximizes it at ln(2 pi). The node cap is raised beyond the quadrature
/// default because -p ln p has a log-singular curvature at every zero of p,
/// which slows trapezoid convergence at large separations.
inline double shannon_entropy(const DistributionContext& ctx) {
  const QuadResult res = refine_periodic(
      [&ctx](double psi) {
        const double p = density(psi, ctx);
        return p > 0.0 ? -p * std::log(p) : 0.0;
      },
      64, 0.0, 1e-8, std::size_t{1} << 25);
  return res.value;
}

struct BestGuess {
  double psi0 = 0.0;
  double prob = 0.0;
};

/// Maximizes the window mass int_{psi0-eps}^{psi0+eps} p dpsi over window
/// centers psi0 in [0, 2pi) with periodic wraparound, on an n_grid-cell
/// cumulative table. Ties (within 1e-12 of the running maximum, which makes
/// the exactly-uniform case deterministic despite rounding noise) go to the
/// smallest psi0.
inline BestGuess best_guess(const DistributionContext& ctx, double epsilon,
                            std::size_t n_grid = 16384) {
  if (!(epsilon > 0.0 && epsilon < std::numbers::pi)) {
    throw std::invalid_argument("best_guess: epsilon must lie in (0, pi)");
  }
  if (n_grid < 1024) n_grid = 1024;

  const double h = two_pi / static_cast<double>(n_grid);
  std::vector<double> p(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) {
    p[i] = density(h * static_cast<double>(i), ctx);
  }
  // cumulative trapezoid over the periodic cells; cum[n_grid] is the total
  std::vector<double> cum(n_grid + 1);
  cum[0] = 0.0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    cum[i + 1] = cum[i] + 0.5 * (p[i] + p[(i + 1) % n_grid]) * h;
  }
  const double total = cum[n_grid];
  if (!(total > 0.0)) throw std::runtime_error("best_guess: degenerate density table");

  // integral of p from 0 to x for x in [-2pi, 4pi), linear within cells
  auto cum_at = [&](double x) {
    double shift = 0.0;
    if (x < 0.0) {
      x += two_pi;
      shift = -total;
    } else if (x >= two_pi) {
      x -= two_pi;
      shift = total;
    }
    const double s = x / h;
    std::size_t i = static_cast<std::size_t>(s);
    if (i >= n_grid) i = n_grid - 1;
    const double t = s - static_cast<double>(i);
    return shift + cum[i] + t * (cum[i + 1] - cum[i]);
  };

  const double tie_tol = 1e-12 * total;
  double best_w = -1.0;
  double best_psi = 0.0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    const double psi0 = h * static_cast<double>(i);
    const double w = cum_at(psi0 + epsilon) - cum_at(psi0 - epsilon);
    if (w > best_w + tie_tol) {
      best_w = w;
      best_psi = psi0;
    }
  }
  return {best_psi, std::clamp(best_w / total, 0.0, 1.0)};
}

/// Total variation distance (1/2) int |a - b| dpsi by trapezoid. The two
/// tabulations must share their grid.
inline double tv_distance(const TabulatedDensity& a, const TabulatedDensity& b) {
  if (a.grid.size() != b.grid.size()) {
    throw std::invalid_argument("tv_distance: grid size mismatch");
  }
  for (std::size_t i = 0; i < a.grid.size(); ++i) {
    if (std::fabs(a.grid[i] - b.grid[i]) > 1e-12) {
      throw std::invalid_argument("tv_distance: grids differ");
    }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < a.grid.size(); ++i) {
    const double f0 = std::fabs(a.values[i] - b.values[i]);
    const double f1 = std::fabs(a.values[i + 1] - b.values[i + 1]);
    acc += 0.5 * (f0 + f1) * (a.grid[i + 1] - a.grid[i]);
  }
  return 0.5 * acc;
}

/// Which decaying signal decay_exponent fits.
enum class DecaySignal {
  normalization,  // d(r) = |N(r) - N_inf|, N_inf = 2 pi * (open branch count)
  moment,         // d(r) = |int cos(harmonic * psi) p_r(psi) dpsi|
};

/// Integral of cos(n psi) against the normalized density.
inline double cosine_moment(const DistributionContext& ctx, int n) {
  if (n < 1) throw std::invalid_argument("cosine_moment: harmonic must be >= 1");
  const QuadResult res = refine_periodic(
      [&ctx, n](double psi) { return std::cos(n * psi) * density(psi, ctx); }, 64, 1e-9, 1e-13);
  return res.value;
}

/// Fits the large-r decay rate of the chosen interference signal on a grid
/// of separations spanning at least two decades (>= 40 points, all sharing
/// det_template's geometry). The raw signal oscillates through zeros, so the
/// log-r axis is split into 10 equal windows, the per-window maximum forms
/// the envelope, and the returned value is the least-squares slope of
/// log(envelope) vs log r. Throws:
///   - std::domain_error when B vanishes identically (alpha in {0, pi}: the
///     density is psi-independent at every r, nothing decays), or when the
///     signal sits at the quadrature noise floor (e.g. the first cosine
///     moment, which cancels identically between the two branches);
///   - InfeasibleError when the template parameters are infeasible.
inline double decay_exponent(const ProcessParams& proc, const DetectorPair& det_template,
                             std::span<const double> r_values,
                             DecaySignal signal = DecaySignal::normalization, int harmonic = 2) {
  if (r_values.size() < 40) {
    throw std::invalid_argument("decay_exponent: need at least 40 separations");
  }
  std::vector<double> rs(r_values.begin(), r_values.end());
  std::sort(rs.begin(), rs.end());
  if (!(rs.front() > 0.0)) {
    throw std::invalid_argument("decay_exponent: separations must be positive");
  }
  if (rs.back() < 100.0 * rs.front() * (1.0 - 1e-9)) {
    throw std::invalid_argument("decay_exponent: separations must span at least two decades");
  }
  {
    ValidationReport rep = validate_params(proc, det_template);
    if (!rep.feasible) {
      std::string msg = "decay_exponent: infeasible template (failed: " + rep.failed_names() + ")";
      throw InfeasibleError(msg, std::move(rep));
    }
  }

  auto det_at = [&det_template](double r) {
    return DetectorPair(det_template.delta1, det_template.delta2, r, det_template.alpha,
                        det_template.eps1, det_template.eps2, det_template.radius_a);
  };

  // Degenerate geometry: B scales linearly with r, so checking it at the
  // largest separation decides for all of them.
  const PhaseCoefficients probe = phase_coefficients(proc, det_at(rs.back()), Branch::one_two);
  if (std::fabs(probe.B) <= 1e-12) {
    throw std::domain_error(
        "decay_exponent: B vanishes, the density is uniform in psi at every r (no decay to fit)");
  }

  int open_count = 0;
  std::vector<double> d(rs.size());
  double signal_scale = 1.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const DistributionContext ctx = make_context(proc, det_at(rs[i]));
    if (i == 0) {
      for (const BranchTerm& bt : ctx.branches) open_count += bt.kin.open ? 1 : 0;
    }
    if (signal == DecaySignal::normalization) {
      const double n_inf = two_pi * static_cast<double>(open_count);
      signal_scale = n_inf;
      d[i] = std::fabs(normalization_numeric(ctx) - n_inf);
    } else {
      d[i] = std::fabs(cosine_moment(ctx, harmonic));
    }
  }

  const double dmax = *std::max_element(d.begin(), d.end());
  if (dmax <= 1e-10 * signal_scale) {
    throw std::domain_error("decay_exponent: signal sits at the quadrature noise floor (no decay to fit)");
  }

  // Envelope: per-window maximum of d over 10 equal log-r windows.
  constexpr int n_windows = 10;
  const double lo = std::log(rs.front());
  const double width = (std::log(rs.back()) - lo) / n_windows;
  std::vector<double> env_d(n_windows, 0.0), env_r(n_windows, 0.0);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    int w = static_cast<int>((std::log(rs[i]) - lo) / width);
    w = std::clamp(w, 0, n_windows - 1);
    if (d[i] > env_d[w]) {
      env_d[w] = d[i];
      env_r[w] = rs[i];
    }
  }

  // Least-squares slope of log(envelope) vs log r.
  double sx = 0.0, sy = 0.0;
  int n_used = 0;
  for (int w = 0; w < n_windows; ++w) {
    if (env_d[w] <= 0.0) {
      throw std::invalid_argument("decay_exponent: a log-r window received no usable points");
    }
    sx += std::log(env_r[w]);
    sy += std::log(env_d[w]);
    ++n_used;
  }
  const double mx = sx / n_used, my = sy / n_used;
  double sxx = 0.0, sxy = 0.0;
  for (int w = 0; w < n_windows; ++w) {
    const double dx = std::log(env_r[w]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(env_d[w]) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("decay_exponent: degenerate abscissa");
  return sxy / sxx;
}

/// One row of a geometry sweep as emitted by the stats command.
struct StatRow {
  double r = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
  double best_guess_prob = 0.0;
  double best_guess_center = 0.0;
  double normalization = 0.0;
};

inline StatRow compute_stat_row(const ProcessParams& proc, const DetectorPair& det,
                                double epsilon, const ContextOptions& options = {}) {
  const DistributionContext ctx = make_context(proc, det, options);
  const BestGuess bg = best_guess(ctx, epsilon);
  return {det.r, det.alpha, shannon_entropy(ctx), bg.prob, bg.psi0, ctx.normalization};
}

}  // namespace udw

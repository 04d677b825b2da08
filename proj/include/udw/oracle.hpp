#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "udw/distribution.hpp"
#include "udw/parallel.hpp"
#include "udw/statistics.hpp"

// Independent cross-check of the analytic density: the underlying rate
// integral over k = |k1| and c = cos(polar angle) is evaluated numerically
// with the energy deltas replaced by finite-width Gaussians, without any of
// the analytic reductions. Agreement (total variation after normalization)
// validates the whole analytic pipeline end to end.

namespace udw {

struct OracleSettings {
  double eta = 0.01;          // delta regularization width (energy units)
  std::size_t n_k = 128;      // radial grid floor (auto-raised to resolve eta)
  std::size_t n_cos = 256;    // polar grid floor (auto-raised likewise)
  std::size_t n_psi = 512;    // output grid size
  std::optional<std::size_t> mc_samples{};  // set: stratified Monte Carlo integrator
  std::uint64_t seed = 1;     // Monte Carlo stream seed
  unsigned threads = 0;       // 0 = UDW_THREADS env, then hardware
  double refine_tol = 1e-3;   // max tv disagreement between successive grid doublings
  int max_refinements = 4;
};

/// Thrown when grid doubling still disagrees by more than refine_tol.
class ResolutionError : public std::runtime_error {
 public:
  ResolutionError(const std::string& what, double disagreement)
      : std::runtime_error(what), disagreement_(disagreement) {}

  double disagreement() const { return disagreement_; }

 private:
  double disagreement_;
};

/// Gaussian nascent delta exp(-x^2/(2 eta^2)) / (eta sqrt(2 pi)). Gaussian
/// rather than Lorentzian so integration windows can be truncated at +-8 eta;
/// bias for smooth test functions is O(eta^2).
inline double nascent_delta(double x, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("nascent_delta: eta must be positive");
  const double t = x / eta;
  return std::exp(-0.5 * t * t) / (eta * std::sqrt(2.0 * std::numbers::pi));
}

/// Raw (unnormalized) psi-profile of the brute-force integral, plus its
/// total mass. Exposed separately from brute_force_density so that
/// infeasible parameter sets, whose mass must collapse to ~0, can be probed
/// without tripping the feasibility gate.
struct OracleProfile {
  std::vector<double> grid;
  std::vector<double> values;
  double mass = 0.0;
  std::size_t n_k = 0;    // grid actually used after auto-scaling
  std::size_t n_cos = 0;
};

namespace oracle_detail {

inline void check_settings(const OracleSettings& s) {
  if (!(s.eta > 0.0) || !std::isfinite(s.eta)) {
    throw std::invalid_argument("OracleSettings: eta must be positive and finite");
  }
  if (s.n_k < 64 || s.n_cos < 64) {
    throw std::invalid_argument("OracleSettings: integration grids must be at least 64");
  }
  if (s.n_psi < 256) {
    throw std::invalid_argument("OracleSettings: n_psi must be at least 256");
  }
  if (s.max_refinements < 0) {
    throw std::invalid_argument("OracleSettings: max_refinements must be nonnegative");
  }
}

// One quadrature node of the (k, c) integration that survived thresholding.
// Its contribution to the psi-profile is w * (2 + 2 cos(u + v * cos psi)):
// the interference phase (2 k1 - p).(x1 - x2) depends only on the
// integration variables, the branch sum only weights w.
struct Entry {
  double w;
  double u;
  double v;
};

}  // namespace oracle_detail

inline OracleProfile brute_force_profile(const ProcessParams& proc, const DetectorPair& det,
                                         const OracleSettings& settings) {
  oracle_detail::check_settings(settings);
  const double m = proc.m;
  const double P = proc.P;
  const double eta = settings.eta;

  // k-window: union of the on-shell peaks of delta(E_k - delta_i), each
  // widened by +-8 eta mapped to momentum through dE/dk = k/E (eta' = eta E/k).
  double klo = std::numeric_limits<double>::infinity();
  double khi = 0.0;
  double etap_min = std::numeric_limits<double>::infinity();
  for (double delta : {det.delta1, det.delta2}) {
    if (!(delta > m)) continue;  // closed channel contributes no peak
    const double k_star = kappa(delta, m);
    const double etap = eta * delta / k_star;
    klo = std::min(klo, k_star - 8.0 * etap);
    khi = std::max(khi, k_star + 8.0 * etap);
    etap_min = std::min(etap_min, etap);
  }
  if (!(khi > 0.0)) {
    // No open channel at all: probe a token window; the profile is ~0.
    klo = 0.0;
    khi = std::max(1.0, P);
    etap_min = eta;
  }
  klo = std::max(0.0, klo);

  // Auto-scale the grids so Gaussian peaks carry >= ~3 nodes per width: the
  // k-direction resolves eta', the c-direction the width of the second
  // delta, eta * E2/(P k) at the peaks (full [-1, 1] range when P = 0).
  double cwidth_min = 2.0;
  if (P > 0.0) {
    for (double di : {det.delta1, det.delta2}) {
      for (double dj : {det.delta1, det.delta2}) {
        if (!(di > m) || !(dj > m) || di == dj) continue;
        cwidth_min = std::min(cwidth_min, eta * dj / (P * kappa(di, m)));
      }
    }
    if (det.delta1 == det.delta2 && det.delta1 > m) {
      cwidth_min = std::min(cwidth_min, eta * det.delta1 / (P * kappa(det.delta1, m)));
    }
  }
  constexpr double nodes_per_width = 3.0;
  constexpr std::size_t grid_cap = std::size_t{1} << 15;
  const auto scaled = [](double span, double width, std::size_t floor_n) {
    const double target = span / (width / nodes_per_width);
    std::size_t n = floor_n;
    if (target > static_cast<double>(n)) n = static_cast<std::size_t>(target) + 1;
    return n < grid_cap ? n : grid_cap;
  };
  const std::size_t n_k = scaled(khi - klo, etap_min, settings.n_k);
  const std::size_t n_cos = scaled(2.0, cwidth_min, settings.n_cos);

  // Threshold on the node weight, relative to a (generous) peak estimate;
  // the +-8 eta Gaussian tails sit at e^-32 ~ 1e-14 relative, so everything
  // inside the windows survives.
  const double h_k = (khi - klo) / static_cast<double>(n_k - 1);
  const double h_c = 2.0 / static_cast<double>(n_cos - 1);
  const double peak_estimate =
      h_k * h_c * khi * khi / (4.0 * m * m) / (two_pi * eta * eta);
  const double threshold = 1e-18 * peak_estimate;

  const double r = det.r;
  const double ca = std::cos(det.alpha);
  const double sa = std::sin(det.alpha);

  std::vector<oracle_detail::Entry> entries;
  auto visit_node = [&](double k, double c, double vol) {
    const double e1 = on_shell_energy(k, m);
    const double e2 = std::sqrt(m * m + P * P + k * k - 2.0 * P * k * c);
    double dd = 0.0;
    for (Branch b : all_branches) {
      const auto [di, dj] = branch_gaps(det, b);
      dd += nascent_delta(e1 - di, eta) * nascent_delta(e2 - dj, eta);
    }
    const double w = vol * k * k / (4.0 * e1 * e2) * dd;
    if (w > threshold) {
      const double s2 = std::sqrt(std::max(0.0, (1.0 - c) * (1.0 + c)));
      entries.push_back({w, (2.0 * k * c - P) * r * ca, 2.0 * k * s2 * r * sa});
    }
  };

  if (!settings.mc_samples) {
    // Tensor-product trapezoid nodes. Rows with both E1-Gaussians negligible
    // are skipped before the inner loop.
    for (std::size_t ik = 0; ik < n_k; ++ik) {
      const double k = klo + h_k * static_cast<double>(ik);
      const double wk = (ik == 0 || ik + 1 == n_k) ? 0.5 * h_k : h_k;
      const double e1 = on_shell_energy(k, m);
      const double g1 = std::max(nascent_delta(e1 - det.delta1, eta),
                                 nascent_delta(e1 - det.delta2, eta));
      // upper bound on any node weight in this row (the 2 covers the branch sum)
      if (2.0 * wk * h_c * khi * khi / (4.0 * m * m) * g1 / (eta * std::sqrt(two_pi)) <=
          threshold) {
        continue;
      }
      for (std::size_t ic = 0; ic < n_cos; ++ic) {
        const double c = -1.0 + h_c * static_cast<double>(ic);
        const double wc = (ic == 0 || ic + 1 == n_cos) ? 0.5 * h_c : h_c;
        visit_node(k, c, wk * wc);
      }
    }
  } else {
    // Stratified Monte Carlo over the same rectangle: one stratum per grid
    // cell, equal sample counts, deterministic cell order and stream.
    const std::size_t cells_k = n_k - 1;
    const std::size_t cells_c = n_cos - 1;
    const std::size_t n_cells = cells_k * cells_c;
    const std::size_t per_cell = std::max<std::size_t>(1, *settings.mc_samples / n_cells);
    std::mt19937_64 gen(settings.seed);
    auto unit = [&gen]() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    const double cell_vol = h_k * h_c / static_cast<double>(per_cell);
    for (std::size_t ik = 0; ik < cells_k; ++ik) {
      const double k0 = klo + h_k * static_cast<double>(ik);
      for (std::size_t ic = 0; ic < cells_c; ++ic) {
        const double c0 = -1.0 + h_c * static_cast<double>(ic);
        for (std::size_t s = 0; s < per_cell; ++s) {
          visit_node(k0 + h_k * unit(), c0 + h_c * unit(), cell_vol);
        }
      }
    }
  }

  // Reduce the surviving nodes onto the psi grid. Parallel over psi only;
  // each inner accumulation runs in fixed entry order, so the result is
  // independent of the worker count.
  OracleProfile prof;
  prof.n_k = n_k;
  prof.n_cos = n_cos;
  prof.grid.resize(settings.n_psi);
  prof.values.assign(settings.n_psi, 0.0);
  const double h_psi = two_pi / static_cast<double>(settings.n_psi - 1);
  for (std::size_t t = 0; t < settings.n_psi; ++t) {
    prof.grid[t] = h_psi * static_cast<double>(t);
  }
  parallel_for(settings.n_psi, settings.threads, [&](std::size_t t) {
    const double cp = std::cos(prof.grid[t]);
    double acc = 0.0;
    for (const oracle_detail::Entry& e : entries) {
      acc += e.w * (2.0 + 2.0 * std::cos(e.u + e.v * cp));
    }
    prof.values[t] = acc;
  });

  for (std::size_t i = 0; i + 1 < prof.grid.size(); ++i) {
    prof.mass += 0.5 * (prof.values[i] + prof.values[i + 1]) * (prof.grid[i + 1] - prof.grid[i]);
  }
  return prof;
}

/// Brute-force normalized density for a feasible parameter set. The (k, c)
/// grids double until two successive profiles agree to refine_tol in total
/// variation; ResolutionError reports the last disagreement if they never do.
inline TabulatedDensity brute_force_density(const ProcessParams& proc, const DetectorPair& det,
                                            const OracleSettings& settings) {
  oracle_detail::check_settings(settings);
  {
    ValidationReport rep = validate_params(proc, det);
    if (!rep.feasible) {
      std::string msg =
          "brute_force_density: infeasible parameters (failed: " + rep.failed_names() + ")";
      throw InfeasibleError(msg, std::move(rep));
    }
  }
  OracleSettings s = settings;
  std::optional<TabulatedDensity> prev;
  double last_gap = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass <= s.max_refinements; ++pass) {
    const OracleProfile prof = brute_force_profile(proc, det, s);
    TabulatedDensity tab = make_tabulated(prof.grid, prof.values);
    if (prev) {
      last_gap = tv_distance(tab, *prev);
      if (last_gap <= s.refine_tol) return tab;
    }
    prev = std::move(tab);
    // Double the resolution actually used, not the requested floor, so the
    // next pass is genuinely finer even after auto-scaling.
    s.n_k = std::min(prof.n_k * 2, std::size_t{1} << 15);
    s.n_cos = std::min(prof.n_cos * 2, std::size_t{1} << 15);
  }
  if (!std::isfinite(last_gap)) {
    throw ResolutionError("brute_force_density: max_refinements = 0 leaves the grid unconfirmed",
                          last_gap);
  }
  throw ResolutionError("brute_force_density: grid refinement stalled at tv disagreement " +
                            std::to_string(last_gap),
                        last_gap);
}

/// Side-by-side result of the analytic and brute-force pipelines on a shared
/// psi grid. For infeasible parameters both pipelines refuse; feasible=false
/// with the report records that consistently and no metrics are produced.
struct OracleComparison {
  bool feasible = false;
  ValidationReport report{};
  double tv = std::numeric_limits<double>::quiet_NaN();
  double sup = std::numeric_limits<double>::quiet_NaN();
  double analytic_seconds = 0.0;
  double oracle_seconds = 0.0;
  std::size_t n_psi = 0;
};

inline OracleComparison oracle_compare(const ProcessParams& proc, const DetectorPair& det,
                                       const OracleSettings& settings) {
  oracle_detail::check_settings(settings);
  OracleComparison out;
  out.report = validate_params(proc, det);
  out.feasible = out.report.feasible;
  out.n_psi = settings.n_psi;
  if (!out.feasible) return out;

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const DistributionContext ctx = make_context(proc, det);
  std::vector<double> grid(settings.n_psi), values(settings.n_psi);
  const double h = two_pi / static_cast<double>(settings.n_psi - 1);
  for (std::size_t i = 0; i < settings.n_psi; ++i) {
    grid[i] = h * static_cast<double>(i);
    values[i] = density(grid[i], ctx);
  }
  const TabulatedDensity analytic = make_tabulated(std::move(grid), std::move(values));
  const auto t1 = clock::now();
  const TabulatedDensity oracle = brute_force_density(proc, det, settings);
  const auto t2 = clock::now();

  out.tv = tv_distance(analytic, oracle);
  double sup = 0.0;
  for (std::size_t i = 0; i < analytic.values.size(); ++i) {
    sup = std::max(sup, std::fabs(analytic.values[i] - oracle.values[i]));
  }
  out.sup = sup;
  out.analytic_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.oracle_seconds = std::chrono::duration<double>(t2 - t1).count();
  return out;
}

}  // namespace udw

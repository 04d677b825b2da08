#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "udw/kinematics.hpp"
#include "udw/quadrature.hpp"
#include "udw/specfun.hpp"

// Conditional density of the azimuthal angle psi of particle 1 about the
// incoming momentum axis, given that both detectors clicked. Per branch the
// which-way-erased click rate contributes 1 + cos(A + B cos psi); constant
// prefactors (couplings, delta normalizations, 1/(2pi)^5, 1/(4 P omega_p))
// are never materialized since they cancel under normalization.

namespace udw {

/// Phase of one branch: (2 k1 - p) . (x1 - x2) = A + B cos psi with
///   A = 2 kappa_i r cos_theta cos_alpha - P r cos_alpha,
///   B = 2 kappa_i r sin_theta sin_alpha  (always >= 0).
struct PhaseCoefficients {
  double A = 0.0;
  double B = 0.0;
};

/// Interference factor K = 2 + 2 cos((k1 - k2) . separation) in [0, 4].
/// This is the exact convention; the branch terms inside the density drop
/// the overall factor 2 (it cancels under normalization).
inline double interference_factor(const Vec3& k1, const Vec3& k2, const Vec3& separation) {
  return 2.0 + 2.0 * std::cos(dot(k1 - k2, separation));
}

namespace distribution_detail {

inline PhaseCoefficients phase_from_kinematics(const ProcessParams& proc,
                                               const DetectorPair& det,
                                               const BranchKinematics& bk) {
  const double ca = std::cos(det.alpha);
  const double sa = std::sin(det.alpha);
  PhaseCoefficients pc;
  pc.A = (2.0 * bk.kappa_i * bk.cos_theta - proc.P) * det.r * ca;
  pc.B = 2.0 * bk.kappa_i * bk.sin_theta * det.r * sa;
  return pc;
}

}  // namespace distribution_detail

/// Phase coefficients of an open branch; throws BranchClosedError otherwise.
inline PhaseCoefficients phase_coefficients(const ProcessParams& proc, const DetectorPair& det,
                                            Branch branch) {
  const BranchKinematics bk = branch_kinematics(proc, det, branch);
  if (!bk.open) {
    throw BranchClosedError(std::string("phase_coefficients: branch ") + branch_name(branch) +
                            " is closed");
  }
  return distribution_detail::phase_from_kinematics(proc, det, bk);
}

/// Squared uniform-ball smearing transform |chi(k)|^2 with
/// chi(k) = 4 pi a^3 * j1(k a)/(k a); the k -> 0 limit is the ball volume.
inline double ball_form_factor_sq(double kmag, double a) {
  const double c = 4.0 * std::numbers::pi * a * a * a;
  const double v = c * spherical_j1_over_x(kmag * a);
  return v * v;
}

/// Optional model ingredients. The matrix element model is |M(psi)|^2 up to
/// a constant; empty means constant. Form factors require DetectorPair::radius_a.
struct ContextOptions {
  std::function<double(double)> matrix_element{};
  std::optional<double> filter_sigma{};
  bool form_factors = false;
};

enum class NormalizationKind { analytic, numeric };

/// One branch of the which-way sum with its psi-independent weight. Form
/// factors evaluate at the on-shell magnitudes kappa_i, kappa_j only (the
/// energy deltas have already been applied), so they are per-branch
/// constants: psi-dependence of the extended-detector density still enters
/// only through the interference phase unless a filter or matrix-element
/// model adds more.
struct BranchTerm {
  Branch branch = Branch::one_two;
  BranchKinematics kin{};
  PhaseCoefficients phase{};
  double form_factor = 1.0;
};

/// Everything needed to evaluate the normalized density. Build through
/// make_context, which validates feasibility and caches the normalization
/// with its provenance.
struct DistributionContext {
  ProcessParams proc;
  DetectorPair det;
  std::array<BranchTerm, 2> branches{};
  ContextOptions options{};
  double normalization = 1.0;
  NormalizationKind normalization_kind = NormalizationKind::analytic;

  const BranchTerm& term(Branch b) const {
    return branches[b == Branch::one_two ? 0 : 1];
  }
};

/// Gaussian angular filter: w = exp(-beta^2 / (2 sigma^2)) where beta is the
/// angle between the branch's reconstructed k1(psi) and the separation
/// direction. Models the semiclassical suppression of momenta not aligned
/// with the detector axis; applied per branch before the branch sum.
inline double mott_filter_weight(double psi, const DistributionContext& ctx, Branch branch,
                                 double sigma_angle) {
  if (!(sigma_angle > 0.0)) {
    throw std::invalid_argument("mott_filter_weight: sigma_angle must be positive");
  }
  const BranchTerm& bt = ctx.term(branch);
  if (!bt.kin.open) {
    throw BranchClosedError(std::string("mott_filter_weight: branch ") + branch_name(branch) +
                            " is closed");
  }
  const double ca = std::cos(ctx.det.alpha);
  const double sa = std::sin(ctx.det.alpha);
  const double c = std::clamp(bt.kin.sin_theta * sa * std::cos(psi) + bt.kin.cos_theta * ca,
                              -1.0, 1.0);
  const double beta = std::acos(c);
  const double t = beta / sigma_angle;
  return std::exp(-0.5 * t * t);
}

/// Unnormalized density: sum over open branches of
///   weight(psi, branch) * [1 + cos(A + B cos psi)]
/// where weight collects the per-branch form factor, the matrix-element
/// model and the optional filter. Nonnegative by construction.
inline double density_unnormalized(double psi, const DistributionContext& ctx) {
  double wm = 1.0;
  if (ctx.options.matrix_element) {
    wm = ctx.options.matrix_element(psi);
    if (!(wm >= 0.0) || !std::isfinite(wm)) {
      throw std::domain_error("density_unnormalized: matrix element model must be finite and nonnegative");
    }
  }
  double sum = 0.0;
  for (const BranchTerm& bt : ctx.branches) {
    if (!bt.kin.open) continue;
    double w = bt.form_factor * wm;
    if (ctx.options.filter_sigma) {
      w *= mott_filter_weight(psi, ctx, bt.branch, *ctx.options.filter_sigma);
    }
    sum += w * (1.0 + std::cos(bt.phase.A + bt.phase.B * std::cos(psi)));
  }
  return sum;
}

/// Closed-form normalization 2 pi * sum_open [1 + cos(A) J0(B)], valid only
/// when nothing psi-dependent beyond the interference phase is in play.
inline double normalization_analytic(const DistributionContext& ctx) {
  if (ctx.options.matrix_element || ctx.options.filter_sigma || ctx.options.form_factors) {
    throw std::logic_error(
        "normalization_analytic: requires a constant matrix element, point-like detectors "
        "and no filter; use normalization_numeric");
  }
  double sum = 0.0;
  for (const BranchTerm& bt : ctx.branches) {
    if (!bt.kin.open) continue;
    sum += 1.0 + std::cos(bt.phase.A) * bessel_j0(bt.phase.B);
  }
  return two_pi * sum;
}

/// Auto-refining quadrature of density_unnormalized over one period.
/// Propagates QuadratureError (carrying the last estimate) on failure.
inline double normalization_numeric(const DistributionContext& ctx, std::size_t n_grid = 64) {
  if (n_grid < 64) {
    throw std::invalid_argument("normalization_numeric: n_grid must be at least 64");
  }
  const QuadResult res = refine_periodic(
      [&ctx](double psi) { return density_unnormalized(psi, ctx); }, n_grid, 1e-11, 0.0);
  if (!(res.value > 0.0) || !std::isfinite(res.value)) {
    throw std::runtime_error("normalization_numeric: degenerate normalization");
  }
  return res.value;
}

/// Builds a context: validates feasibility (throws InfeasibleError with the
/// full report), fills both branch terms and caches the normalization
/// (analytic when permissible, numeric otherwise).
inline DistributionContext make_context(const ProcessParams& proc, const DetectorPair& det,
                                        ContextOptions options = {}) {
  ValidationReport rep = validate_params(proc, det);
  if (!rep.feasible) {
    // build the message before std::move(rep): argument order is unspecified
    std::string msg = "make_context: infeasible parameters (failed: " + rep.failed_names() + ")";
    throw InfeasibleError(msg, std::move(rep));
  }
  if (options.form_factors && !det.radius_a) {
    throw std::invalid_argument("make_context: form_factors requested but radius_a is not set");
  }
  if (options.filter_sigma && !(*options.filter_sigma > 0.0)) {
    throw std::invalid_argument("make_context: filter_sigma must be positive");
  }

  DistributionContext ctx{proc, det, {}, std::move(options), 1.0, NormalizationKind::analytic};
  int open_count = 0;
  for (std::size_t idx = 0; idx < all_branches.size(); ++idx) {
    BranchTerm bt;
    bt.branch = all_branches[idx];
    bt.kin = branch_kinematics(proc, det, bt.branch);
    if (bt.kin.open) {
      ++open_count;
      bt.phase = distribution_detail::phase_from_kinematics(proc, det, bt.kin);
      if (ctx.options.form_factors) {
        const double a = *det.radius_a;
        bt.form_factor =
            ball_form_factor_sq(bt.kin.kappa_i, a) * ball_form_factor_sq(bt.kin.kappa_j, a);
      }
    }
    ctx.branches[idx] = bt;
  }
  if (open_count == 0) {
    // Unreachable for feasible sets (the band gate is branch-symmetric, so
    // the branches open and close together), kept as a hard backstop.
    throw InfeasibleError("make_context: both branches closed", validate_params(proc, det));
  }

  const bool simple = !ctx.options.matrix_element && !ctx.options.filter_sigma &&
                      !ctx.options.form_factors;
  if (simple) {
    ctx.normalization = normalization_analytic(ctx);
    ctx.normalization_kind = NormalizationKind::analytic;
  } else {
    ctx.normalization = normalization_numeric(ctx);
    ctx.normalization_kind = NormalizationKind::numeric;
  }
  if (!(ctx.normalization > 0.0) || !std::isfinite(ctx.normalization)) {
    throw std::runtime_error("make_context: degenerate normalization");
  }
  return ctx;
}

/// Normalized density p(psi); integrates to 1 over [0, 2pi].
inline double density(double psi, const DistributionContext& ctx) {
  return density_unnormalized(psi, ctx) / ctx.normalization;
}

/// Density tabulated on a uniform closed grid over [0, 2pi] with its CDF.
struct TabulatedDensity {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> cdf;
};

/// Normalizes raw nonnegative samples on the given grid into a
/// TabulatedDensity (values rescaled so the trapezoid integral is 1, CDF
/// accumulated per cell with cdf.back() pinned to 1). Shared by tabulate and
/// the brute-force oracle.
inline TabulatedDensity make_tabulated(std::vector<double> grid, std::vector<double> values) {
  if (grid.size() != values.size() || grid.size() < 2) {
    throw std::invalid_argument("make_tabulated: need matching grids with at least 2 nodes");
  }
  double vmax = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("make_tabulated: non-finite value");
    vmax = std::max(vmax, v);
  }
  for (double& v : values) {
    if (v < 0.0) {
      // tolerate rounding-level dips only
      if (v < -1e-12 * vmax) throw std::invalid_argument("make_tabulated: negative density value");
      v = 0.0;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    total += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("make_tabulated: zero or non-finite total mass");
  }

  TabulatedDensity tab;
  tab.grid = std::move(grid);
  tab.values = std::move(values);
  for (double& v : tab.values) v /= total;
  tab.cdf.resize(tab.grid.size());
  tab.cdf[0] = 0.0;
  for (std::size_t i = 0; i + 1 < tab.grid.size(); ++i) {
    tab.cdf[i + 1] = tab.cdf[i] + 0.5 * (tab.values[i] + tab.values[i + 1]) *
                                      (tab.grid[i + 1] - tab.grid[i]);
  }
  const double end = tab.cdf.back();
  for (double& c : tab.cdf) c /= end;  // pin cdf.back() to exactly 1
  return tab;
}

/// Tabulates the context's density on n uniform nodes spanning [0, 2pi]
/// (both endpoints included).
inline TabulatedDensity tabulate(const DistributionContext& ctx, std::size_t n = 4096) {
  if (n < 1024) throw std::invalid_argument("tabulate: n must be at least 1024");
  std::vector<double> grid(n), values(n);
  const double h = two_pi / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = h * static_cast<double>(i);
    values[i] = density(grid[i], ctx);
  }
  return make_tabulated(std::move(grid), std::move(values));
}

/// Inverse-CDF sampling with linear interpolation on the tabulated grid.
/// Uniform deviates are built from the top 53 bits of mt19937_64 so the
/// sequence for a given seed is identical on every platform.
inline std::vector<double> sample(const TabulatedDensity& tab, std::size_t count,
                                  std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sample: count must be at least 1");
  if (tab.grid.size() < 2 || tab.cdf.size() != tab.grid.size()) {
    throw std::invalid_argument("sample: malformed tabulation");
  }
  std::mt19937_64 gen(seed);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    auto it = std::upper_bound(tab.cdf.begin(), tab.cdf.end(), u);
    std::size_t hi = static_cast<std::size_t>(it - tab.cdf.begin());
    if (hi >= tab.cdf.size()) hi = tab.cdf.size() - 1;
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double span = tab.cdf[hi] - tab.cdf[lo];
    const double t = span > 0.0 ? (u - tab.cdf[lo]) / span : 0.0;
    out.push_back(tab.grid[lo] + t * (tab.grid[hi] - tab.grid[lo]));
  }
  return out;
}

}  // namespace udw

// Acceptance gate: nine end-to-end criteria, each printed as one PASS/FAIL
// line with its wall time. Criteria with a stated runtime budget fail when
// they exceed it. The process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "udw/distribution.hpp"
#include "udw/kinematics.hpp"
#include "udw/oracle.hpp"
#include "udw/statistics.hpp"

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2Pi = 1.8378770664093453;

udw::ProcessParams default_proc() { return {1.0, 4.0, 3.0}; }

udw::DetectorPair default_det(double r, double alpha) { return {2.0, 3.0, r, alpha}; }

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int g_failures = 0;

void run_criterion(int index, const std::string& label, double budget_seconds,
                   const std::function<bool(std::string&)>& body) {
  std::string detail;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (ok && budget_seconds > 0.0 && seconds >= budget_seconds) {
    ok = false;
    detail += " [runtime budget " + fmt(budget_seconds) + " s exceeded]";
  }
  std::printf("[%s] criterion %d: %s  (%s; %.2f s)\n", ok ? "PASS" : "FAIL", index,
              label.c_str(), detail.c_str(), seconds);
  if (!ok) ++g_failures;
}

// ---------------------------------------------------------------------------
// 1. validate_params vs an independent re-derivation of the feasibility
//    conditions, plus the longitudinal/transverse balance identities.
bool criterion_constraints(std::string& detail) {
  std::mt19937 rng(20260817);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::size_t feasible_count = 0;

  for (int draw = 0; draw < 1000; ++draw) {
    const double m = 0.2 + 2.8 * uni(rng);
    const double d1 = m * (0.5 + 3.5 * uni(rng));
    const double d2 = m * (0.5 + 3.5 * uni(rng));
    const bool open1 = d1 > m;
    const bool open2 = d2 > m;

    double P;
    if (open1 && open2 && uni(rng) < 0.5) {
      // aim inside the band
      const double k1 = std::sqrt(d1 * d1 - m * m);
      const double k2 = std::sqrt(d2 * d2 - m * m);
      P = std::fabs(k1 - k2) + uni(rng) * (k1 + k2 - std::fabs(k1 - k2));
    } else {
      P = 8.0 * m * uni(rng);
    }
    const double S2 = (d1 + d2) * (d1 + d2);
    double M;
    if (uni(rng) < 0.8 && S2 > P * P) {
      M = std::sqrt(S2 - P * P);  // closure exact by construction
    } else {
      M = 0.1 + 5.9 * uni(rng);
    }
    const udw::ProcessParams proc{m, M, P};
    const udw::DetectorPair det{d1, d2, 10.0 * uni(rng), kPi * uni(rng)};
    const udw::ValidationReport rep = udw::validate_params(proc, det);

    // independent re-derivation
    bool band_lo = false, band_hi = false;
    if (open1 && open2) {
      const double k1 = std::sqrt(d1 * d1 - m * m);
      const double k2 = std::sqrt(d2 * d2 - m * m);
      band_lo = std::fabs(k1 - k2) <= P;
      band_hi = P <= k1 + k2;
    }
    const bool closure = std::fabs(P * P + M * M - S2) <= 1e-9 * S2;
    const bool expect_feasible =
        open1 && open2 && M >= 2.0 * m && closure && P > 0.0 && band_lo && band_hi;

    if (rep.find("band_lower")->pass != band_lo) return false;
    if (rep.find("band_upper")->pass != band_hi) return false;
    if (rep.find("energy_closure")->pass != closure) return false;
    if (rep.feasible != expect_feasible) return false;

    if (!rep.feasible) continue;
    ++feasible_count;

    // balance identities: the longitudinal components add up to P, the
    // transverse magnitudes coincide between the two branches
    const auto b12 = udw::branch_kinematics(proc, det, udw::Branch::one_two);
    const auto b21 = udw::branch_kinematics(proc, det, udw::Branch::two_one);
    if (!b12.open || !b21.open) return false;
    const double longitudinal = b12.kappa_i * b12.cos_theta + b21.kappa_i * b21.cos_theta;
    if (std::fabs(longitudinal - P) > 1e-12 * std::max(P, b12.kappa_i + b21.kappa_i)) {
      return false;
    }
    const double t1 = b12.kappa_i * b12.sin_theta;
    const double t2 = b21.kappa_i * b21.sin_theta;
    if (std::fabs(t1 - t2) > 1e-12 * std::max({t1, t2, 1e-300})) return false;
  }

  detail = "1000 draws, " + std::to_string(feasible_count) + " feasible, identities at 1e-12";
  return feasible_count > 100;
}

// ---------------------------------------------------------------------------
// 2. closed-form normalization vs direct quadrature on random feasible
//    contexts with separations up to 1e3.
bool criterion_normalization(std::string& detail) {
  std::mt19937 rng(20260818);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;

  for (int draw = 0; draw < 200; ++draw) {
    const double m = std::exp(-1.5 + 2.6 * uni(rng));
    const double d1 = m * (1.0 + std::exp(-3.0 + 4.4 * uni(rng)));
    const double d2 = m * (1.0 + std::exp(-3.0 + 4.4 * uni(rng)));
    const double k1 = std::sqrt(d1 * d1 - m * m);
    const double k2 = std::sqrt(d2 * d2 - m * m);
    const double hi = k1 + k2;
    const double lo = std::max(std::fabs(k1 - k2), 0.01 * hi);
    const double P = lo + (0.02 + 0.96 * uni(rng)) * (hi - lo);
    const double S = d1 + d2;
    const udw::ProcessParams proc{m, std::sqrt(S * S - P * P), P};

    const double u = uni(rng);
    const double r = (draw % 40 == 0) ? 0.0 : 1e3 * u * u * u;
    const udw::DetectorPair det{d1, d2, r, kPi * uni(rng)};

    const udw::DistributionContext ctx = udw::make_context(proc, det);
    const double analytic = udw::normalization_analytic(ctx);
    const double numeric = udw::normalization_numeric(ctx);
    worst = std::max(worst, std::fabs(analytic - numeric) / analytic);
    if (worst > 1e-8) {
      detail = "rel err " + fmt(worst) + " at draw " + std::to_string(draw);
      return false;
    }
  }
  detail = "200 contexts, max rel err " + fmt(worst);
  return true;
}

// ---------------------------------------------------------------------------
// 3. aligned detectors: uniform density, uniform entropy, baseline best guess.
bool criterion_uniform_limits(std::string& detail) {
  for (double r : {0.7, 5.0, 123.0}) {
    const udw::DistributionContext ctx = udw::make_context(default_proc(), default_det(r, 0.0));
    for (int i = 0; i < 720; ++i) {
      const double psi = 2.0 * kPi * i / 720.0;
      if (std::fabs(udw::density(psi, ctx) - 1.0 / (2.0 * kPi)) > 1e-12) {
        detail = "density deviates at r = " + fmt(r);
        return false;
      }
    }
    if (std::fabs(udw::shannon_entropy(ctx) - kLn2Pi) > 1e-9) {
      detail = "entropy deviates at r = " + fmt(r);
      return false;
    }
    for (double eps : {0.1, 0.3, 1.0}) {
      if (std::fabs(udw::best_guess(ctx, eps).prob - eps / kPi) > 1e-9) {
        detail = "best guess deviates at r = " + fmt(r) + ", eps = " + fmt(eps);
        return false;
      }
    }
  }
  detail = "density 1e-12, entropy 1e-9, window probability 1e-9";
  return true;
}

// ---------------------------------------------------------------------------
// 4. large-r decay exponent of the normalization signal.
bool criterion_decay(std::string& detail) {
  const std::vector<double> rs = log_grid(1e2, 1e4, 48);
  const double slope = udw::decay_exponent(default_proc(), default_det(1.0, kPi / 2.0),
                                           std::span<const double>(rs),
                                           udw::DecaySignal::normalization);
  detail = "envelope slope " + fmt(slope) + " on [1e2, 1e4]";
  return slope > -0.65 && slope < -0.35;
}

// ---------------------------------------------------------------------------
// 5. brute-force oracle within tv 0.05 across the (r, alpha) matrix, and a
//    monotone eta scan.
bool criterion_oracle(std::string& detail) {
  double worst = 0.0;
  for (double alpha : {kPi / 4.0, kPi / 2.0}) {
    for (double r : {2.0, 5.0, 10.0}) {
      udw::OracleSettings s;  // eta = 0.01
      const udw::OracleComparison cmp =
          udw::oracle_compare(default_proc(), default_det(r, alpha), s);
      if (!cmp.feasible) return false;
      worst = std::max(worst, cmp.tv);
      if (cmp.tv >= 0.05) {
        detail = "tv " + fmt(cmp.tv) + " at r = " + fmt(r) + ", alpha = " + fmt(alpha);
        return false;
      }
    }
  }

  std::string scan;
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {0.04, 0.02, 0.01, 0.005}) {
    udw::OracleSettings s;
    s.eta = eta;
    const double tv = udw::oracle_compare(default_proc(), default_det(5.0, kPi / 2.0), s).tv;
    scan += (scan.empty() ? "" : "/") + fmt(tv);
    if (tv > 1.1 * prev) {
      detail = "eta scan not monotone within 10%: " + scan;
      return false;
    }
    prev = tv;
  }
  detail = "max tv " + fmt(worst) + " over 6 geometries; eta scan " + scan;
  return true;
}

// ---------------------------------------------------------------------------
// 6. entropy has a strict interior minimum in r per alpha, ordered between
//    the two tilts, with the window probability well above baseline there.
bool criterion_entropy_minimum(std::string& detail) {
  const double eps = 0.3;
  const std::vector<double> rs = log_grid(0.3, 30.0, 49);
  double argmin[2] = {0.0, 0.0};
  double ratio[2] = {0.0, 0.0};
  const double alphas[2] = {kPi / 4.0, kPi / 2.0};

  for (int a = 0; a < 2; ++a) {
    std::vector<double> h(rs.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      h[i] = udw::shannon_entropy(udw::make_context(default_proc(), default_det(rs[i], alphas[a])));
      if (h[i] < h[best]) best = i;
    }
    if (best == 0 || best + 1 == rs.size()) {
      detail = "minimum sits on the grid edge";
      return false;
    }
    if (!(h[best] < h.front() - 1e-6) || !(h[best] < h.back() - 1e-6)) {
      detail = "minimum not strictly interior";
      return false;
    }
    argmin[a] = rs[best];
    const double prob =
        udw::best_guess(udw::make_context(default_proc(), default_det(rs[best], alphas[a])), eps)
            .prob;
    ratio[a] = prob / (eps / kPi);
    if (ratio[a] < 1.2) {
      detail = "window probability only " + fmt(ratio[a]) + "x baseline";
      return false;
    }
  }
  detail = "argmin r = " + fmt(argmin[0]) + " (pi/4) vs " + fmt(argmin[1]) +
           " (pi/2); baseline ratios " + fmt(ratio[0]) + "/" + fmt(ratio[1]);
  return argmin[0] > argmin[1];
}

// ---------------------------------------------------------------------------
// 7. inverse-CDF sampling matches its own tabulated CDF and is reproducible.
bool criterion_sampling(std::string& detail) {
  const udw::DistributionContext ctx =
      udw::make_context(default_proc(), default_det(5.0, kPi / 2.0));
  const udw::TabulatedDensity tab = udw::tabulate(ctx, 8192);
  const std::size_t n = 1'000'000;
  std::vector<double> draws = udw::sample(tab, n, 20260817);
  if (udw::sample(tab, n, 20260817) != draws) {
    detail = "fixed seed is not reproducible";
    return false;
  }

  std::sort(draws.begin(), draws.end());
  auto cdf_at = [&tab](double x) {
    const auto it = std::upper_bound(tab.grid.begin(), tab.grid.end(), x);
    if (it == tab.grid.begin()) return 0.0;
    if (it == tab.grid.end()) return 1.0;
    const std::size_t hi = static_cast<std::size_t>(it - tab.grid.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - tab.grid[lo]) / (tab.grid[hi] - tab.grid[lo]);
    return tab.cdf[lo] + t * (tab.cdf[hi] - tab.cdf[lo]);
  };
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf_at(draws[i]);
    ks = std::max(ks, std::fabs(f - static_cast<double>(i) / n));
    ks = std::max(ks, std::fabs(f - static_cast<double>(i + 1) / n));
  }
  detail = "KS " + fmt(ks) + " over 1e6 samples";
  return ks < 2e-3;
}

// ---------------------------------------------------------------------------
// 8. planar nonrelativistic solver: exact back-substitution on solvable
//    instances, empty set on separated circles.
bool criterion_classical(std::string& detail) {
  std::mt19937 rng(20260819);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  for (int draw = 0; draw < 100; ++draw) {
    const double m = 0.3 + 2.2 * uni(rng);
    const double r1 = 0.3 + 2.2 * uni(rng);
    const double r2 = 0.3 + 2.2 * uni(rng);
    const double lo = std::max(std::fabs(r1 - r2), 0.25);
    const double hi = r1 + r2;
    if (lo >= hi) continue;
    const double w = hi - lo;
    const double pn = lo + (0.05 + 0.9 * uni(rng)) * w;
    const double phi = 2.0 * kPi * uni(rng);
    const udw::Vec2 p{pn * std::cos(phi), pn * std::sin(phi)};
    const double d1 = r1 * r1 / (2.0 * m);
    const double d2 = r2 * r2 / (2.0 * m);

    const auto sols = udw::solve_classical_2d(p, m, d1, d2);
    if (sols.empty()) {
      detail = "no solution on a solvable instance";
      return false;
    }
    for (const auto& s : sols) {
      const auto [da, db] = s.labeling == udw::Branch::one_two ? std::pair{d1, d2}
                                                               : std::pair{d2, d1};
      const double e1 = std::fabs((s.k1.x * s.k1.x + s.k1.y * s.k1.y) / (2.0 * m) - da);
      const double e2 = std::fabs((s.k2.x * s.k2.x + s.k2.y * s.k2.y) / (2.0 * m) - db);
      const double cx = std::fabs(s.k1.x + s.k2.x - pn);  // solutions use the p-aligned frame
      const double cy = std::fabs(s.k1.y + s.k2.y);
      if (e1 >= 1e-12 || e2 >= 1e-12 || cx >= 1e-12 || cy >= 1e-12) {
        detail = "residual above 1e-12 at draw " + std::to_string(draw);
        return false;
      }
    }
  }

  // separated circles: gap (pn > r1 + r2) and containment (pn < |r1 - r2|)
  if (!udw::solve_classical_2d({3.0, 0.0}, 1.0, 0.02, 0.02).empty()) {
    detail = "gap instance produced solutions";
    return false;
  }
  if (!udw::solve_classical_2d({0.4, 0.0}, 1.0, 2.0, 0.045).empty()) {
    detail = "containment instance produced solutions";
    return false;
  }
  detail = "100 solvable instances at 1e-12; separated circles empty";
  return true;
}

// ---------------------------------------------------------------------------
// 9. angular filtering never hurts the best guess, and a wide filter is
//    indistinguishable from no filter.
bool criterion_filter(std::string& detail) {
  const double eps = 0.3;
  std::string gains;
  for (double alpha : {kPi / 4.0, kPi / 2.0}) {
    const udw::DistributionContext plain =
        udw::make_context(default_proc(), default_det(5.0, alpha));

    udw::ContextOptions narrow;
    narrow.filter_sigma = 0.3;
    const udw::DistributionContext filtered =
        udw::make_context(default_proc(), default_det(5.0, alpha), narrow);

    const double p_plain = udw::best_guess(plain, eps).prob;
    const double p_filtered = udw::best_guess(filtered, eps).prob;
    gains += (gains.empty() ? "" : "/") + fmt(p_filtered / p_plain);
    if (!(p_filtered >= p_plain)) {
      detail = "filtered window probability " + fmt(p_filtered) + " < unfiltered " +
               fmt(p_plain) + " at alpha = " + fmt(alpha);
      return false;
    }

    udw::ContextOptions wide;
    wide.filter_sigma = 1e9;
    const udw::DistributionContext relaxed =
        udw::make_context(default_proc(), default_det(5.0, alpha), wide);
    for (int i = 0; i < 1024; ++i) {
      const double psi = 2.0 * kPi * i / 1024.0;
      if (std::fabs(udw::density(psi, relaxed) - udw::density(psi, plain)) > 1e-10) {
        detail = "wide filter deviates from unfiltered at alpha = " + fmt(alpha);
        return false;
      }
    }
  }
  detail = "filter gain " + gains + "; sigma -> inf recovers unfiltered at 1e-10";
  return true;
}

}  // namespace

int main() {
  run_criterion(1, "feasibility constraints and balance identities", 1.0, criterion_constraints);
  run_criterion(2, "analytic vs numeric normalization", 10.0, criterion_normalization);
  run_criterion(3, "aligned-detector uniform limits", 0.0, criterion_uniform_limits);
  run_criterion(4, "large-separation normalization decay rate", 30.0, criterion_decay);
  run_criterion(5, "brute-force oracle equivalence", 300.0, criterion_oracle);
  run_criterion(6, "entropy minimum geometry", 60.0, criterion_entropy_minimum);
  run_criterion(7, "inverse-CDF sampling fidelity", 0.0, criterion_sampling);
  run_criterion(8, "planar nonrelativistic solver", 0.0, criterion_classical);
  run_criterion(9, "angular filter behavior", 0.0, criterion_filter);

  if (g_failures == 0) {
    std::printf("all 9 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}

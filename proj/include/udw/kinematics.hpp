#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "udw/vec.hpp"

// Kinematics of a two-particle break-up watched by a detector pair.
// Natural units (hbar = c = 1): energies and momenta share units, lengths
// carry inverse-energy units. The working frame puts the incoming momentum
// p along +z and the detector separation in the x-z plane.

namespace udw {

/// Incoming side: a particle of mass M and spatial momentum magnitude P
/// decays into two particles of mass m each.
///
/// The constructor only enforces sign/finiteness. Feasibility conditions
/// that couple process and detector values (M >= 2m, energy closure, the
/// momentum band) are reported by validate_params so that diagnostic reports
/// can be produced for bad sets instead of failing at construction.
struct ProcessParams {
  double m;
  double M;
  double P;

  ProcessParams(double m_, double M_, double P_) : m(m_), M(M_), P(P_) {
    if (!(std::isfinite(m) && std::isfinite(M) && std::isfinite(P))) {
      throw std::invalid_argument("ProcessParams: non-finite input");
    }
    if (m <= 0.0) throw std::invalid_argument("ProcessParams: m must be positive");
    if (M <= 0.0) throw std::invalid_argument("ProcessParams: M must be positive");
    if (P < 0.0) throw std::invalid_argument("ProcessParams: P must be nonnegative");
  }

  /// Incoming energy sqrt(M^2 + P^2); recomputed, never stored.
  double omega_p() const { return std::sqrt(M * M + P * P); }
};

/// On-shell energy of an outgoing particle with momentum magnitude k.
inline double on_shell_energy(double kmag, double m) {
  return std::sqrt(m * m + kmag * kmag);
}

/// Two two-level detectors with gaps delta1, delta2 at separation r, tilted
/// by alpha relative to the incoming momentum. Couplings eps1, eps2 enter
/// only an overall factor that cancels under normalization; radius_a, when
/// present, switches on extended-detector form factors.
struct DetectorPair {
  double delta1;
  double delta2;
  double r;
  double alpha;
  double eps1;
  double eps2;
  std::optional<double> radius_a;

  DetectorPair(double delta1_, double delta2_, double r_, double alpha_,
               double eps1_ = 1.0, double eps2_ = 1.0,
               std::optional<double> radius_a_ = std::nullopt)
      : delta1(delta1_), delta2(delta2_), r(r_), alpha(alpha_),
        eps1(eps1_), eps2(eps2_), radius_a(radius_a_) {
    if (!(std::isfinite(delta1) && std::isfinite(delta2) && std::isfinite(r) &&
          std::isfinite(alpha))) {
      throw std::invalid_argument("DetectorPair: non-finite input");
    }
    if (delta1 <= 0.0 || delta2 <= 0.0) {
      throw std::invalid_argument("DetectorPair: gaps must be positive");
    }
    if (r < 0.0) throw std::invalid_argument("DetectorPair: separation r must be nonnegative");
    if (alpha < 0.0 || alpha > 3.14159265358979323846 + 1e-12) {
      throw std::invalid_argument("DetectorPair: alpha must lie in [0, pi]");
    }
    if (eps1 <= 0.0 || eps2 <= 0.0) {
      throw std::invalid_argument("DetectorPair: couplings must be positive");
    }
    if (radius_a && !(*radius_a > 0.0 && std::isfinite(*radius_a))) {
      throw std::invalid_argument("DetectorPair: radius_a must be positive and finite");
    }
  }

  double delta(int which) const {
    if (which == 1) return delta1;
    if (which == 2) return delta2;
    throw std::invalid_argument("DetectorPair::delta: index must be 1 or 2");
  }

  /// Unit vector along x1 - x2 in the working frame (x-z plane).
  Vec3 separation_dir() const { return {std::sin(alpha), 0.0, std::cos(alpha)}; }

  /// Separation vector x1 - x2.
  Vec3 separation() const { return r * separation_dir(); }
};

/// Branch (i,j): detector 1 absorbs energy delta_i from particle 1 and
/// detector 2 absorbs delta_j from particle 2. The density sums over both
/// assignments since the detector state erases which-way information.
enum class Branch { one_two, two_one };

inline constexpr std::array<Branch, 2> all_branches{Branch::one_two, Branch::two_one};

inline Branch swapped(Branch b) {
  return b == Branch::one_two ? Branch::two_one : Branch::one_two;
}

inline const char* branch_name(Branch b) {
  return b == Branch::one_two ? "(1,2)" : "(2,1)";
}

/// Gap assignment (delta_i, delta_j) for a branch.
inline std::pair<double, double> branch_gaps(const DetectorPair& det, Branch b) {
  return b == Branch::one_two ? std::pair{det.delta1, det.delta2}
                              : std::pair{det.delta2, det.delta1};
}

/// On-shell momentum magnitude sqrt(delta^2 - m^2) of a particle absorbed
/// with energy delta. Throws if the channel is closed (delta < m).
inline double kappa(double delta, double m) {
  if (!(std::isfinite(delta) && std::isfinite(m))) {
    throw std::domain_error("kappa: non-finite input");
  }
  if (delta < m) {
    throw std::domain_error("kappa: closed channel (delta < m)");
  }
  return std::sqrt((delta - m) * (delta + m));
}

/// Polar cosine of particle 1 relative to p for a branch with on-shell
/// magnitudes kappa_i (particle 1) and kappa_j (particle 2):
///   cos_theta = (P^2 + kappa_i^2 - kappa_j^2) / (2 P kappa_i).
/// Returns the raw quotient; callers gate on |result| <= 1. Degenerate
/// geometry (P = 0 leaves no axis, kappa_i = 0 leaves no direction) throws.
inline double cos_theta(double P, double kappa_i, double kappa_j) {
  if (!(P > 0.0) || !(kappa_i > 0.0)) {
    throw std::domain_error("cos_theta: degenerate geometry (requires P > 0 and kappa_i > 0)");
  }
  return (P * P + kappa_i * kappa_i - kappa_j * kappa_j) / (2.0 * P * kappa_i);
}

/// Everything the branch term needs: on-shell magnitudes, the polar
/// placement of particle 1, and whether both gates pass. For a closed
/// branch the computable fields are still filled in when they exist
/// (useful in reports); `open` is the only authoritative flag.
struct BranchKinematics {
  double kappa_i = 0.0;
  double kappa_j = 0.0;
  double cos_theta = 0.0;
  double sin_theta = 0.0;
  bool open = false;
};

inline BranchKinematics branch_kinematics(const ProcessParams& proc,
                                          const DetectorPair& det, Branch branch) {
  const auto [di, dj] = branch_gaps(det, branch);
  BranchKinematics out;
  // Both channels must be above threshold and a p axis must exist before the
  // momentum triangle can even be posed.
  if (!(di > proc.m) || !(dj > proc.m) || !(proc.P > 0.0)) return out;
  out.kappa_i = kappa(di, proc.m);
  out.kappa_j = kappa(dj, proc.m);
  out.cos_theta = cos_theta(proc.P, out.kappa_i, out.kappa_j);
  if (std::fabs(out.cos_theta) > 1.0) return out;  // triangle cannot close
  out.sin_theta = std::sqrt(std::max(0.0, (1.0 - out.cos_theta) * (1.0 + out.cos_theta)));
  out.open = true;
  return out;
}

/// One evaluated feasibility condition with the numbers that went into it.
struct ConstraintCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<ConstraintCheck> checks;
  bool feasible = false;

  const ConstraintCheck* find(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  /// Comma-separated names of failed checks, for error messages.
  std::string failed_names() const {
    std::string out;
    for (const auto& c : checks) {
      if (c.pass) continue;
      if (!out.empty()) out += ", ";
      out += c.name;
    }
    return out;
  }
};

/// Carries the full ValidationReport of a rejected parameter set.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, ValidationReport report)
      : std::runtime_error(what), report_(std::move(report)) {}

  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Thrown when a single branch's gates are closed (as opposed to the whole
/// parameter set being infeasible).
class BranchClosedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Checks every feasibility condition and reports each with its numbers:
///   - gap_delta1, gap_delta2:  delta_i > m (open detection channels)
///   - mass_threshold:          M >= 2m (decay energetically possible)
///   - energy_closure:          |P^2 + M^2 - (delta1+delta2)^2| <= closure_tol
///   - momentum_axis:           P > 0 (the p-aligned frame must exist; with
///                              P = 0 the polar placement is undefined)
///   - band_lower, band_upper:  |kappa1 - kappa2| <= P <= kappa1 + kappa2
/// The band is symmetric under branch swap, so it is checked once; when a gap
/// fails the band is unevaluable and recorded as failed with NaN entries.
/// closure_tol < 0 selects the default 1e-9 * (delta1+delta2)^2.
inline ValidationReport validate_params(const ProcessParams& proc, const DetectorPair& det,
                                        double closure_tol = -1.0) {
  const double gap_sum = det.delta1 + det.delta2;
  if (closure_tol < 0.0) closure_tol = 1e-9 * gap_sum * gap_sum;

  ValidationReport rep;
  auto add = [&rep](std::string name, double lhs, double rhs, bool pass) {
    rep.checks.push_back({std::move(name), lhs, rhs, pass});
  };

  add("gap_delta1", det.delta1, proc.m, det.delta1 > proc.m);
  add("gap_delta2", det.delta2, proc.m, det.delta2 > proc.m);
  add("mass_threshold", proc.M, 2.0 * proc.m, proc.M >= 2.0 * proc.m);

  const double closure_lhs = proc.P * proc.P + proc.M * proc.M;
  const double closure_rhs = gap_sum * gap_sum;
  add("energy_closure", closure_lhs, closure_rhs,
      std::fabs(closure_lhs - closure_rhs) <= closure_tol);

  add("momentum_axis", proc.P, 0.0, proc.P > 0.0);

  if (det.delta1 >= proc.m && det.delta2 >= proc.m) {
    const double k1 = kappa(det.delta1, proc.m);
    const double k2 = kappa(det.delta2, proc.m);
    add("band_lower", std::fabs(k1 - k2), proc.P, std::fabs(k1 - k2) <= proc.P);
    add("band_upper", proc.P, k1 + k2, proc.P <= k1 + k2);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    add("band_lower", nan, proc.P, false);
    add("band_upper", proc.P, nan, false);
  }

  rep.feasible = std::all_of(rep.checks.begin(), rep.checks.end(),
                             [](const ConstraintCheck& c) { return c.pass; });
  return rep;
}

/// Full momentum vectors for a branch at azimuth psi, in the frame with
/// p along +z:
///   k1 = kappa_i (sin_theta cos psi, sin_theta sin psi, cos_theta),
///   k2 = (0,0,P) - k1.
/// Momentum conservation holds by construction: transverse components cancel
/// exactly, the longitudinal sum reproduces P to one rounding. |k2| = kappa_j
/// follows from the cos_theta definition up to rounding.
inline std::pair<Vec3, Vec3> reconstruct_momenta(const ProcessParams& proc,
                                                 const DetectorPair& det, Branch branch,
                                                 double psi) {
  const BranchKinematics bk = branch_kinematics(proc, det, branch);
  if (!bk.open) {
    throw BranchClosedError(std::string("reconstruct_momenta: branch ") +
                            branch_name(branch) + " is closed");
  }
  const Vec3 k1{bk.kappa_i * bk.sin_theta * std::cos(psi),
                bk.kappa_i * bk.sin_theta * std::sin(psi),
                bk.kappa_i * bk.cos_theta};
  // Transverse components cancel exactly by sign flip; the longitudinal sum
  // reproduces P up to the one rounding in this subtraction (bit-exactness
  // for all inputs is unattainable: when |k2.z| > 2P the representable k2.z
  // values step in increments coarser than ulp(P)).
  const Vec3 k2{-k1.x, -k1.y, proc.P - k1.z};
  return {k1, k2};
}

/// One solution of the coplanar nonrelativistic break-up system, reported in
/// the frame where p defines the +x axis. `labeling` says which gap the
/// first vector satisfies: one_two means |k1|^2 = 2 m delta1.
struct ClassicalSolution {
  Vec2 k1;
  Vec2 k2;
  Branch labeling = Branch::one_two;
};

/// Solves the planar system
///   k1 + k2 = p,  |k1|^2 = 2 m delta_a,  |k2|^2 = 2 m delta_b
/// for both labelings (delta_a, delta_b) = (delta1, delta2) and (delta2,
/// delta1); particle labels are arbitrary. Geometrically this intersects a
/// circle of radius sqrt(2 m delta_a) around the origin with one of radius
/// sqrt(2 m delta_b) around p. Mirror solutions (y -> -y) are both returned;
/// the plane argument fixes the decay plane, not its orientation. No real
/// intersection yields an empty set, not an error.
inline std::vector<ClassicalSolution> solve_classical_2d(Vec2 p, double m, double delta1,
                                                         double delta2) {
  if (!(m > 0.0) || !(delta1 > 0.0) || !(delta2 > 0.0)) {
    throw std::invalid_argument("solve_classical_2d: require m > 0 and positive gaps");
  }
  const double pn = norm(p);
  std::vector<ClassicalSolution> out;
  for (Branch b : all_branches) {
    if (b == Branch::two_one && delta1 == delta2) break;  // labelings coincide
    const auto [da, db] = b == Branch::one_two ? std::pair{delta1, delta2}
                                               : std::pair{delta2, delta1};
    const double r1 = std::sqrt(2.0 * m * da);
    const double r2 = std::sqrt(2.0 * m * db);
    const double scale = std::max({r1 * r1, r2 * r2, pn * pn});

    if (pn == 0.0) {
      // Back-to-back: k2 = -k1 needs equal radii; report the two axis-aligned
      // representatives (the solution set is a full circle).
      if (std::fabs(r1 - r2) <= 2e-15 * (r1 + r2)) {
        out.push_back({{r1, 0.0}, {-r1, 0.0}, b});
        out.push_back({{-r1, 0.0}, {r1, 0.0}, b});
      }
      continue;
    }

    // Intersection abscissa along p; y^2 decides between two, one (tangent)
    // or no solutions. The tolerance absorbs cancellation noise in y^2.
    const double x = (pn * pn + r1 * r1 - r2 * r2) / (2.0 * pn);
    const double y2 = (r1 - x) * (r1 + x);
    const double tol = 4e-15 * scale;
    if (y2 < -tol) continue;
    if (y2 <= tol) {
      out.push_back({{x, 0.0}, {pn - x, 0.0}, b});
    } else {
      const double y = std::sqrt(y2);
      out.push_back({{x, y}, {pn - x, -y}, b});
      out.push_back({{x, -y}, {pn - x, y}, b});
    }
  }
  return out;
}

}  // namespace udw

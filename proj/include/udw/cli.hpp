#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "udw/config.hpp"
#include "udw/distribution.hpp"
#include "udw/kinematics.hpp"
#include "udw/oracle.hpp"
#include "udw/parallel.hpp"
#include "udw/statistics.hpp"

// Command implementations behind the udw binary. Each returns a process exit
// code: 0 success, 1 usage/parse error, 2 infeasible physics, 3 numerical
// failure. File outputs are byte-identical for identical config + seed: CSV
// numbers are printed with 17 significant digits, JSON uses the library's
// shortest-round-trip form, and nothing time- or host-dependent is written.

namespace udw::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_infeasible = 2;
inline constexpr int exit_numeric = 3;

inline constexpr int schema_version = 1;

struct CliOptions {
  bool json = false;                   // machine-readable stdout where supported
  std::optional<std::string> out_dir;  // overrides [output] directory
  std::optional<std::uint64_t> seed;   // overrides [output] seed
  unsigned threads = 0;                // 0 = UDW_THREADS env, then hardware
  std::ostream* out = nullptr;         // defaults to std::cout
  std::ostream* err = nullptr;         // defaults to std::cerr
};

namespace cli_detail {

inline std::ostream& out(const CliOptions& o) { return o.out ? *o.out : std::cout; }
inline std::ostream& err(const CliOptions& o) { return o.err ? *o.err : std::cerr; }

inline std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Config with CLI overrides applied (output directory, seed, threads).
inline RunConfig effective_config(RunConfig cfg, const CliOptions& options) {
  if (options.out_dir) cfg.output.directory = *options.out_dir;
  if (options.seed) {
    cfg.output.seed = *options.seed;
    cfg.oracle.seed = *options.seed;
  }
  cfg.oracle.threads = options.threads;
  return cfg;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + path.string());
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

inline void print_report(std::ostream& os, const ValidationReport& rep) {
  os << std::left << std::setw(18) << "constraint" << std::setw(6) << "pass"
     << std::setw(26) << "lhs" << "rhs\n";
  for (const auto& c : rep.checks) {
    os << std::left << std::setw(18) << c.name << std::setw(6) << (c.pass ? "yes" : "no")
       << std::setw(26) << fmt17(c.lhs) << fmt17(c.rhs) << "\n";
  }
  os << "feasible: " << (rep.feasible ? "yes" : "no") << "\n";
}

inline nlohmann::ordered_json report_json(const ValidationReport& rep) {
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}});
  }
  return {{"schema_version", schema_version}, {"feasible", rep.feasible}, {"checks", checks}};
}

/// Shared '#' header block echoing the effective configuration.
inline void echo_config(std::ostream& os, const RunConfig& cfg) {
  os << "# schema_version = " << schema_version << "\n";
  os << "# m = " << fmt17(cfg.m) << "\n";
  os << "# M = " << fmt17(cfg.M) << "\n";
  os << "# P = " << fmt17(cfg.P) << "\n";
  os << "# delta1 = " << fmt17(cfg.delta1) << "\n";
  os << "# delta2 = " << fmt17(cfg.delta2) << "\n";
  if (cfg.r) {
    os << "# r = " << fmt17(*cfg.r) << "\n";
  } else if (cfg.r_sweep) {
    os << "# r_sweep = " << fmt17(cfg.r_sweep->lo) << ":" << fmt17(cfg.r_sweep->hi) << ":"
       << cfg.r_sweep->count << ":" << (cfg.r_sweep->log_scale ? "log" : "lin") << "\n";
  }
  os << "# alpha =";
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
    os << (i ? ", " : " ") << fmt17(cfg.alphas[i]);
  }
  os << "\n";
  os << "# eps1 = " << fmt17(cfg.eps1) << "\n";
  os << "# eps2 = " << fmt17(cfg.eps2) << "\n";
  if (cfg.radius_a) os << "# radius_a = " << fmt17(*cfg.radius_a) << "\n";
  os << "# filter = " << (cfg.filter ? "on" : "off") << "\n";
  if (cfg.filter) os << "# sigma_angle = " << fmt17(cfg.sigma_angle) << "\n";
  os << "# form_factors = " << (cfg.form_factors ? "on" : "off") << "\n";
  os << "# epsilon = " << fmt17(cfg.epsilon) << "\n";
  os << "# psi_grid = " << cfg.psi_grid << "\n";
  os << "# seed = " << cfg.output.seed << "\n";
}

inline int fail_numeric(const CliOptions& options, const std::string& what) {
  err(options) << "numerical failure: " << what << "\n";
  return exit_numeric;
}

inline int fail_infeasible(const CliOptions& options, const InfeasibleError& e) {
  err(options) << e.what() << "\n";
  print_report(err(options), e.report());
  return exit_infeasible;
}

}  // namespace cli_detail

/// Prints the per-constraint feasibility table (JSON with --json).
/// Exit 0 when feasible, 2 otherwise.
inline int cmd_validate(const RunConfig& config, const CliOptions& options) {
  using namespace cli_detail;
  const RunConfig cfg = effective_config(config, options);
  const double r0 = cfg.r ? *cfg.r : cfg.r_sweep->lo;
  const ValidationReport rep = validate_params(cfg.process(), cfg.detector(r0, cfg.alphas.front()));
  if (options.json) {
    out(options) << report_json(rep).dump(2) << "\n";
  } else {
    print_report(out(options), rep);
  }
  return rep.feasible ? exit_ok : exit_infeasible;
}

/// Writes distribution.csv: column psi plus one normalized-density column per
/// alpha (headers density, density_alpha2, ...). Every column is checked to
/// integrate to 1 (trapezoid, 1e-6) before anything is written.
inline int cmd_distribution(const RunConfig& config, const CliOptions& options) {
  using namespace cli_detail;
  const RunConfig cfg = effective_config(config, options);
  if (!cfg.r) {
    err(options) << "distribution requires a scalar r in [detectors] (got r_sweep)\n";
    return exit_usage;
  }

  try {
    const ProcessParams proc = cfg.process();
    {
      const ValidationReport rep = validate_params(proc, cfg.detector(*cfg.r, cfg.alphas.front()));
      if (!rep.feasible) {
        err(options) << "infeasible parameters\n";
        print_report(err(options), rep);
        return exit_infeasible;
      }
    }

    const std::size_t n = cfg.psi_grid;
    const double h = two_pi / static_cast<double>(n - 1);
    std::vector<std::vector<double>> columns(cfg.alphas.size());
    std::vector<double> norms(cfg.alphas.size());
    parallel_for(cfg.alphas.size(), options.threads, [&](std::size_t a) {
      const DistributionContext ctx =
          make_context(proc, cfg.detector(*cfg.r, cfg.alphas[a]), cfg.context_options());
      norms[a] = ctx.normalization;
      auto& col = columns[a];
      col.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        col[i] = density(h * static_cast<double>(i), ctx);
      }
    });

    // normalization check before write
    for (std::size_t a = 0; a < columns.size(); ++a) {
      double integral = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        integral += 0.5 * (columns[a][i] + columns[a][i + 1]) * h;
      }
      if (std::fabs(integral - 1.0) > 1e-6) {
        err(options) << "normalization check failed for alpha = " << fmt17(cfg.alphas[a])
                     << ": integral = " << fmt17(integral)
                     << ", cached normalization = " << fmt17(norms[a]) << "\n";
        return exit_numeric;
      }
    }

    std::ostringstream csv;
    csv << "# normalized azimuthal density, one column per alpha\n";
    echo_config(csv, cfg);
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      csv << "# column " << (a ? "density_alpha" + std::to_string(a + 1) : std::string("density"))
          << ": alpha = " << fmt17(cfg.alphas[a])
          << ", normalization = " << fmt17(norms[a]) << "\n";
    }
    csv << "psi";
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      csv << (a ? ",density_alpha" + std::to_string(a + 1) : ",density");
    }
    csv << "\n";
    for (std::size_t i = 0; i < n; ++i) {
      csv << fmt17(h * static_cast<double>(i));
      for (const auto& col : columns) csv << "," << fmt17(col[i]);
      csv << "\n";
    }

    if (cfg.output.csv) {
      const auto path = std::filesystem::path(cfg.output.directory) / "distribution.csv";
      write_file(path, csv.str());
      out(options) << "wrote " << path.string() << " (" << n << " rows, "
                   << cfg.alphas.size() << " density column" << (cfg.alphas.size() > 1 ? "s" : "")
                   << ")\n";
    } else {
      out(options) << "csv output disabled by [output] formats; nothing written\n";
    }
    return exit_ok;
  } catch (const InfeasibleError& e) {
    return fail_infeasible(options, e);
  } catch (const QuadratureError& e) {
    return fail_numeric(options, std::string(e.what()) + " (last estimate " +
                                     fmt17(e.last_estimate()) + ")");
  } catch (const std::exception& e) {
    return fail_numeric(options, e.what());
  }
}

/// Writes stats.csv with one row per (alpha, r): entropy, best-guess window
/// probability and its center. Sweep points run concurrently; output order
/// is deterministic by (alpha, r).
inline int cmd_stats(const RunConfig& config, const CliOptions& options) {
  using namespace cli_detail;
  const RunConfig cfg = effective_config(config, options);

  try {
    const ProcessParams proc = cfg.process();
    const std::vector<double> rs = cfg.r_list();
    {
      const ValidationReport rep = validate_params(proc, cfg.detector(rs.front(), cfg.alphas.front()));
      if (!rep.feasible) {
        err(options) << "infeasible parameters\n";
        print_report(err(options), rep);
        return exit_infeasible;
      }
    }

    std::vector<StatRow> rows(cfg.alphas.size() * rs.size());
    parallel_for(rows.size(), options.threads, [&](std::size_t i) {
      const std::size_t a = i / rs.size();
      const std::size_t j = i % rs.size();
      rows[i] = compute_stat_row(proc, cfg.detector(rs[j], cfg.alphas[a]), cfg.epsilon,
                                 cfg.context_options());
    });

    std::ostringstream csv;
    csv << "# geometry sweep statistics\n";
    echo_config(csv, cfg);
    csv << "# baseline_entropy_uniform = " << fmt17(std::log(two_pi)) << "  (ln(2 pi))\n";
    csv << "# baseline_best_guess_prob_uniform = " << fmt17(cfg.epsilon / std::numbers::pi)
        << "  (epsilon/pi)\n";
    csv << "r,alpha,entropy,best_guess_prob,best_guess_center\n";
    for (const StatRow& row : rows) {
      csv << fmt17(row.r) << "," << fmt17(row.alpha) << "," << fmt17(row.entropy) << ","
          << fmt17(row.best_guess_prob) << "," << fmt17(row.best_guess_center) << "\n";
    }

    if (cfg.output.csv) {
      const auto path = std::filesystem::path(cfg.output.directory) / "stats.csv";
      write_file(path, csv.str());
      out(options) << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
    } else {
      out(options) << "csv output disabled by [output] formats; nothing written\n";
    }
    return exit_ok;
  } catch (const InfeasibleError& e) {
    return fail_infeasible(options, e);
  } catch (const QuadratureError& e) {
    return fail_numeric(options, std::string(e.what()) + " (last estimate " +
                                     fmt17(e.last_estimate()) + ")");
  } catch (const std::exception& e) {
    return fail_numeric(options, e.what());
  }
}

/// Runs the analytic-vs-brute-force comparison and writes oracle_compare.json
/// (tv, sup-norm gap, optional eta scan). Runtimes are reported on stdout
/// only, keeping the file byte-identical across runs.
inline int cmd_oracle(const RunConfig& config, const CliOptions& options) {
  using namespace cli_detail;
  const RunConfig cfg = effective_config(config, options);
  const auto path = std::filesystem::path(cfg.output.directory) / "oracle_compare.json";

  if (!cfg.oracle_enabled) {
    nlohmann::ordered_json doc{{"schema_version", schema_version}, {"status", "skipped"}};
    if (cfg.output.json) write_file(path, doc.dump(2) + "\n");
    out(options) << "oracle disabled; skipped\n";
    return exit_ok;
  }
  if (!cfg.r) {
    err(options) << "oracle requires a scalar r in [detectors] (got r_sweep)\n";
    return exit_usage;
  }

  try {
    const ProcessParams proc = cfg.process();
    const DetectorPair det = cfg.detector(*cfg.r, cfg.alphas.front());

    const OracleComparison base = oracle_compare(proc, det, cfg.oracle);
    if (!base.feasible) {
      nlohmann::ordered_json doc{{"schema_version", schema_version},
                                 {"status", "infeasible"},
                                 {"report", report_json(base.report)}};
      if (cfg.output.json) write_file(path, doc.dump(2) + "\n");
      err(options) << "infeasible parameters\n";
      print_report(err(options), base.report);
      return exit_infeasible;
    }

    nlohmann::ordered_json doc{
        {"schema_version", schema_version},
        {"status", "ok"},
        {"m", cfg.m},
        {"M", cfg.M},
        {"P", cfg.P},
        {"delta1", cfg.delta1},
        {"delta2", cfg.delta2},
        {"r", *cfg.r},
        {"alpha", cfg.alphas.front()},
        {"eta", cfg.oracle.eta},
        {"n_psi", base.n_psi},
        {"integrator", cfg.oracle.mc_samples ? "stratified_mc" : "tensor_grid"},
        {"tv", base.tv},
        {"sup", base.sup},
    };
    out(options) << "oracle tv = " << fmt17(base.tv) << ", sup = " << fmt17(base.sup)
                 << " (analytic " << std::setprecision(3) << base.analytic_seconds
                 << " s, brute force " << base.oracle_seconds << " s)\n";

    if (!cfg.eta_scan.empty()) {
      nlohmann::ordered_json scan = nlohmann::ordered_json::array();
      for (double eta : cfg.eta_scan) {
        OracleSettings s = cfg.oracle;
        s.eta = eta;
        const OracleComparison c = oracle_compare(proc, det, s);
        scan.push_back({{"eta", eta}, {"tv", c.tv}, {"sup", c.sup}});
        out(options) << "eta = " << fmt17(eta) << ": tv = " << fmt17(c.tv) << "\n";
      }
      doc["eta_scan"] = scan;
    }

    if (cfg.output.json) {
      write_file(path, doc.dump(2) + "\n");
      out(options) << "wrote " << path.string() << "\n";
    }
    return exit_ok;
  } catch (const InfeasibleError& e) {
    return fail_infeasible(options, e);
  } catch (const ResolutionError& e) {
    return fail_numeric(options, e.what());
  } catch (const QuadratureError& e) {
    return fail_numeric(options, e.what());
  } catch (const std::exception& e) {
    return fail_numeric(options, e.what());
  }
}

/// Solves the planar nonrelativistic break-up system for p = (P, 0) and the
/// configured m, delta1, delta2; prints the solution set (JSON with --json).
/// An empty set is a valid result, not an error.
inline int cmd_classical2d(const RunConfig& config, const CliOptions& options) {
  using namespace cli_detail;
  const RunConfig cfg = effective_config(config, options);

  try {
    const Vec2 p{cfg.P, 0.0};
    const auto solutions = solve_classical_2d(p, cfg.m, cfg.delta1, cfg.delta2);

    if (options.json) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& s : solutions) {
        arr.push_back({{"labeling", branch_name(s.labeling)},
                       {"k1", {s.k1.x, s.k1.y}},
                       {"k2", {s.k2.x, s.k2.y}}});
      }
      const nlohmann::ordered_json doc{{"schema_version", schema_version},
                                       {"p", {p.x, p.y}},
                                       {"m", cfg.m},
                                       {"delta1", cfg.delta1},
                                       {"delta2", cfg.delta2},
                                       {"solutions", arr}};
      out(options) << doc.dump(2) << "\n";
      return exit_ok;
    }

    out(options) << "planar break-up solutions, frame with p on +x\n";
    out(options) << "p = (" << fmt17(p.x) << ", " << fmt17(p.y) << "), m = " << fmt17(cfg.m)
                 << ", delta1 = " << fmt17(cfg.delta1) << ", delta2 = " << fmt17(cfg.delta2)
                 << "\n";
    if (solutions.empty()) {
      out(options) << "no real solutions (energy circles do not intersect)\n";
      return exit_ok;
    }
    for (std::size_t i = 0; i < solutions.size(); ++i) {
      const auto& s = solutions[i];
      out(options) << "solution " << (i + 1) << ": labeling " << branch_name(s.labeling)
                   << "  k1 = (" << fmt17(s.k1.x) << ", " << fmt17(s.k1.y) << ")  k2 = ("
                   << fmt17(s.k2.x) << ", " << fmt17(s.k2.y) << ")\n";
    }
    return exit_ok;
  } catch (const std::invalid_argument& e) {
    err(options) << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    return fail_numeric(options, e.what());
  }
}

}  // namespace udw::cli

#pragma once

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "udw/kinematics.hpp"
#include "udw/distribution.hpp"
#include "udw/oracle.hpp"

// Flat sectioned key-value run configuration. One file fully determines a
// run; the grammar is documented in the README. Example:
//
//   [process]
//   m = 1
//   M = 4
//   P = 3
//   [detectors]
//   delta1 = 2
//   delta2 = 3
//   r = 5                      # scalar separation, or instead:
//   # r_sweep = 0.3:30:240:log #   min:max:count:lin|log
//   alpha = 0, pi/4, pi/2
//
// Numbers accept pi arithmetic (pi, pi/2, 0.75*pi); '#' and ';' start
// comments; keys may appear once.

namespace udw::cli {

/// Parse/semantic failure with file position; what() is "path:line: message".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, int line, const std::string& message)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + message),
        path_(path), line_(line) {}

  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

/// Geometric or linear grid specification min:max:count[:lin|log].
struct SweepSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  bool log_scale = true;

  std::vector<double> points() const {
    std::vector<double> out(count);
    if (count == 1) {
      out[0] = lo;
      return out;
    }
    if (log_scale) {
      const double step = std::log(hi / lo) / static_cast<double>(count - 1);
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo * std::exp(step * static_cast<double>(i));
      }
    } else {
      const double step = (hi - lo) / static_cast<double>(count - 1);
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + step * static_cast<double>(i);
      }
    }
    out.back() = hi;
    return out;
  }
};

struct OutputOptions {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
  std::uint64_t seed = 1;
};

/// Everything one run needs. Defaults match configs/default.cfg; the parser
/// requires the process and detector geometry to be stated explicitly.
struct RunConfig {
  double m = 1.0;
  double M = 4.0;
  double P = 3.0;

  double delta1 = 2.0;
  double delta2 = 3.0;
  std::optional<double> r;
  std::optional<SweepSpec> r_sweep;
  std::vector<double> alphas;
  std::optional<double> radius_a;
  double eps1 = 1.0;
  double eps2 = 1.0;

  bool filter = false;
  double sigma_angle = 0.3;
  bool form_factors = false;

  double epsilon = 0.3;
  std::size_t psi_grid = 4096;

  bool oracle_enabled = true;
  OracleSettings oracle{};
  std::vector<double> eta_scan;

  OutputOptions output{};

  ProcessParams process() const { return {m, M, P}; }

  DetectorPair detector(double r_value, double alpha) const {
    return {delta1, delta2, r_value, alpha, eps1, eps2, radius_a};
  }

  ContextOptions context_options() const {
    ContextOptions opts;
    if (filter) opts.filter_sigma = sigma_angle;
    opts.form_factors = form_factors;
    return opts;
  }

  std::vector<double> r_list() const {
    if (r) return {*r};
    return r_sweep->points();
  }
};

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool parse_plain_number(std::string_view s, double& out) {
  const std::string owned(s);
  char* end = nullptr;
  const double v = std::strtod(owned.c_str(), &end);
  if (end == owned.c_str() || end != owned.c_str() + owned.size()) return false;
  out = v;
  return true;
}

/// NUM | [-]pi | NUM*pi | [-]pi/NUM | NUM*pi/NUM
inline bool parse_number(std::string_view raw, double& out) {
  std::string_view s = trim(raw);
  if (s.empty()) return false;
  if (parse_plain_number(s, out)) return std::isfinite(out);

  double factor = 1.0;
  if (const auto star = s.find('*'); star != std::string_view::npos) {
    if (!parse_plain_number(trim(s.substr(0, star)), factor)) return false;
    s = trim(s.substr(star + 1));
  } else if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    factor = s.front() == '-' ? -1.0 : 1.0;
    s = trim(s.substr(1));
  }
  double divisor = 1.0;
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    if (!parse_plain_number(trim(s.substr(slash + 1)), divisor) || divisor == 0.0) return false;
    s = trim(s.substr(0, slash));
  }
  if (s != "pi") return false;
  out = factor * std::numbers::pi / divisor;
  return std::isfinite(out);
}

inline bool parse_bool(std::string_view raw, bool& out) {
  const std::string_view s = trim(raw);
  if (s == "true" || s == "on" || s == "yes" || s == "1") {
    out = true;
    return true;
  }
  if (s == "false" || s == "off" || s == "no" || s == "0") {
    out = false;
    return true;
  }
  return false;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

}  // namespace config_detail

/// Parses config text. `path` is used for diagnostics only.
inline RunConfig parse_config_text(std::string_view text, const std::string& path) {
  using namespace config_detail;

  RunConfig cfg;
  cfg.alphas.clear();
  std::string section;
  std::set<std::string> seen;
  bool have_r = false, have_sweep = false;
  bool have_m = false, have_M = false, have_P = false;
  bool have_d1 = false, have_d2 = false, have_alpha = false;
  std::size_t mc_samples = 0;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                           : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(path, line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const std::set<std::string> known{"process", "detectors", "model",
                                               "stats",   "oracle",    "output"};
      if (!known.count(section)) {
        throw ConfigError(path, line_no, "unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path, line_no, "expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path, line_no, "empty key");
    if (section.empty()) {
      throw ConfigError(path, line_no, "key '" + key + "' appears before any [section]");
    }
    const std::string qualified = section + "." + key;
    if (!seen.insert(qualified).second) {
      throw ConfigError(path, line_no, "duplicate key '" + qualified + "'");
    }

    auto number = [&](double min_ok = -std::numeric_limits<double>::infinity(),
                      bool strict_positive = false) {
      double v = 0.0;
      if (!parse_number(value, v)) {
        throw ConfigError(path, line_no, "cannot parse number '" + std::string(value) + "'");
      }
      if (strict_positive && !(v > 0.0)) {
        throw ConfigError(path, line_no, "'" + qualified + "' must be positive");
      }
      if (v < min_ok) {
        throw ConfigError(path, line_no, "'" + qualified + "' is below its minimum");
      }
      return v;
    };
    auto boolean = [&]() {
      bool b = false;
      if (!parse_bool(value, b)) {
        throw ConfigError(path, line_no, "cannot parse boolean '" + std::string(value) + "'");
      }
      return b;
    };
    auto unsigned_int = [&](std::size_t min_ok) {
      const double v = number(0.0);
      if (v != std::floor(v) || v < static_cast<double>(min_ok) || v > 1e15) {
        throw ConfigError(path, line_no,
                          "'" + qualified + "' must be an integer >= " + std::to_string(min_ok));
      }
      return static_cast<std::size_t>(v);
    };

    if (section == "process") {
      if (key == "m") { cfg.m = number(0.0, true); have_m = true; }
      else if (key == "M") { cfg.M = number(0.0, true); have_M = true; }
      else if (key == "P") { cfg.P = number(0.0); have_P = true; }
      else throw ConfigError(path, line_no, "unknown key '" + qualified + "'");
    } else if (section == "detectors") {
      if (key == "delta1") { cfg.delta1 = number(0.0, true); have_d1 = true; }
      else if (key == "delta2") { cfg.delta2 = number(0.0, true); have_d2 = true; }
      else if (key == "r") { cfg.r = number(0.0); have_r = true; }
      else if (key == "r_sweep") {
        const auto parts = split(value, ':');
        if (parts.size() != 3 && parts.size() != 4) {
          throw ConfigError(path, line_no, "r_sweep expects min:max:count[:lin|log]");
        }
        SweepSpec sw;
        double cnt = 0.0;
        if (!parse_number(parts[0], sw.lo) || !parse_number(parts[1], sw.hi) ||
            !parse_number(parts[2], cnt) || cnt != std::floor(cnt) || cnt < 2) {
          throw ConfigError(path, line_no, "r_sweep expects numeric min:max and count >= 2");
        }
        sw.count = static_cast<std::size_t>(cnt);
        if (parts.size() == 4) {
          if (parts[3] == "log") sw.log_scale = true;
          else if (parts[3] == "lin") sw.log_scale = false;
          else throw ConfigError(path, line_no, "r_sweep scale must be lin or log");
        }
        if (!(sw.lo <= sw.hi)) throw ConfigError(path, line_no, "r_sweep needs min <= max");
        if (sw.log_scale && !(sw.lo > 0.0)) {
          throw ConfigError(path, line_no, "log r_sweep needs min > 0");
        }
        if (!(sw.lo >= 0.0)) throw ConfigError(path, line_no, "r_sweep needs min >= 0");
        cfg.r_sweep = sw;
        have_sweep = true;
      }
      else if (key == "alpha") {
        cfg.alphas.clear();
        for (const auto part : split(value, ',')) {
          double a = 0.0;
          if (!parse_number(part, a)) {
            throw ConfigError(path, line_no, "cannot parse alpha '" + std::string(part) + "'");
          }
          if (a < 0.0 || a > std::numbers::pi + 1e-12) {
            throw ConfigError(path, line_no, "alpha must lie in [0, pi]");
          }
          cfg.alphas.push_back(a);
        }
        if (cfg.alphas.empty()) throw ConfigError(path, line_no, "alpha list is empty");
        have_alpha = true;
      }
      else if (key == "radius_a") cfg.radius_a = number(0.0, true);
      else if (key == "eps1") cfg.eps1 = number(0.0, true);
      else if (key == "eps2") cfg.eps2 = number(0.0, true);
      else throw ConfigError(path, line_no, "unknown key '" + qualified + "'");
    } else if (section == "model") {
      if (key == "filter") cfg.filter = boolean();
      else if (key == "sigma_angle") cfg.sigma_angle = number(0.0, true);
      else if (key == "form_factors") cfg.form_factors = boolean();
      else throw ConfigError(path, line_no, "unknown key '" + qualified + "'");
    } else if (section == "stats") {
      if (key == "epsilon") {
        cfg.epsilon = number(0.0, true);
        if (!(cfg.epsilon < std::numbers::pi)) {
          throw ConfigError(path, line_no, "epsilon must be less than pi");
        }
      }
      else if (key == "psi_grid") cfg.psi_grid = unsigned_int(1024);
      else throw ConfigError(path, line_no, "unknown key '" + qualified + "'");
    } else if (section == "oracle") {
      if (key == "enabled") cfg.oracle_enabled = boolean();
      else if (key == "eta") cfg.oracle.eta = number(0.0, true);
      else if (key == "n_k") cfg.oracle.n_k = unsigned_int(64);
      else if (key == "n_cos") cfg.oracle.n_cos = unsigned_int(64);
      else if (key == "n_psi") cfg.oracle.n_psi = unsigned_int(256);
      else if (key == "mc_samples") mc_samples = unsigned_int(0);
      else if (key == "max_refinements") cfg.oracle.max_refinements = static_cast<int>(unsigned_int(0));
      else if (key == "eta_scan") {
        cfg.eta_scan.clear();
        for (const auto part : split(value, ',')) {
          double e = 0.0;
          if (!parse_number(part, e) || !(e > 0.0)) {
            throw ConfigError(path, line_no, "eta_scan entries must be positive numbers");
          }
          cfg.eta_scan.push_back(e);
        }
      }
      else throw ConfigError(path, line_no, "unknown key '" + qualified + "'");
    } else if (section == "output") {
      if (key == "directory") {
        if (value.empty()) throw ConfigError(path, line_no, "output directory must not be empty");
        cfg.output.directory = std::string(value);
      }
      else if (key == "formats") {
        cfg.output.csv = cfg.output.json = false;
        for (const auto part : split(value, ',')) {
          if (part == "csv") cfg.output.csv = true;
          else if (part == "json") cfg.output.json = true;
          else throw ConfigError(path, line_no, "unknown format '" + std::string(part) + "'");
        }
        if (!cfg.output.csv && !cfg.output.json) {
          throw ConfigError(path, line_no, "formats must include csv and/or json");
        }
      }
      else if (key == "seed") {
        const std::string owned(value);
        // digits only: strtoull would silently wrap a negative input
        if (owned.empty() || owned.find_first_not_of("0123456789") != std::string::npos) {
          throw ConfigError(path, line_no, "seed must be an unsigned integer");
        }
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(owned.c_str(), &end, 10);
        if (errno != 0 || end != owned.c_str() + owned.size()) {
          throw ConfigError(path, line_no, "seed must be an unsigned integer");
        }
        cfg.output.seed = v;
      }
      else throw ConfigError(path, line_no, "unknown key '" + qualified + "'");
    }
  }

  if (!have_m || !have_M || !have_P) {
    throw ConfigError(path, 0, "[process] must set m, M and P");
  }
  if (!have_d1 || !have_d2) {
    throw ConfigError(path, 0, "[detectors] must set delta1 and delta2");
  }
  if (!have_alpha) {
    throw ConfigError(path, 0, "[detectors] must set alpha");
  }
  if (have_r == have_sweep) {
    throw ConfigError(path, 0, "[detectors] must set exactly one of r and r_sweep");
  }
  if (mc_samples > 0) cfg.oracle.mc_samples = mc_samples;
  cfg.oracle.seed = cfg.output.seed;
  return cfg;
}

/// Loads and parses a config file.
inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace udw::cli

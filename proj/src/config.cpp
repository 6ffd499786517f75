#include "fsilab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fsilab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void RunConfig::validate() const {
  model_params().validate();
  if (!(beta_min > 0) || !(beta_max > beta_min))
    throw ConfigError("beta_min/beta_max: need 0 < beta_min < beta_max");
  if (beta_count < 5) throw ConfigError("beta_count: must be at least 5");
  if (fit_lo < 0 || fit_hi < 0 || (fit_hi > 0 && fit_hi <= fit_lo))
    throw ConfigError("fit_lo/fit_hi: need 0 <= fit_lo < fit_hi (or both 0)");
  if (t_final < 0) throw ConfigError("t_final: must be >= 0 (0 = automatic)");
  if (!(dt > 0)) throw ConfigError("dt: must be positive");
  if (!(dt_tol > 0)) throw ConfigError("dt_tol: must be positive");
  if (decay_lo < 0 || decay_hi < 0 || (decay_hi > 0 && decay_hi <= decay_lo))
    throw ConfigError("decay_lo/decay_hi: need 0 <= decay_lo < decay_hi (or both 0)");
  if (late_lo < 0 || late_hi < 0 || (late_hi > 0 && late_hi <= late_lo))
    throw ConfigError("late_lo/late_hi: need 0 <= late_lo < late_hi (or both 0)");
  if (samples < 1) throw ConfigError("samples: must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

ModelParams RunConfig::model_params() const {
  ModelParams p;
  p.mode = mode;
  p.rho = rho;
  p.n_fluid = n_fluid;
  return p;
}

void set_config_field(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "mode") c.mode = parse_mode(value);
  else if (key == "rho") c.rho = to_double(key, value);
  else if (key == "n_fluid") c.n_fluid = to_int<int>(key, value);
  else if (key == "beta_min") c.beta_min = to_double(key, value);
  else if (key == "beta_max") c.beta_max = to_double(key, value);
  else if (key == "beta_count") c.beta_count = to_int<int>(key, value);
  else if (key == "fit_lo") c.fit_lo = to_double(key, value);
  else if (key == "fit_hi") c.fit_hi = to_double(key, value);
  else if (key == "t_final") c.t_final = to_double(key, value);
  else if (key == "dt") c.dt = to_double(key, value);
  else if (key == "dt_tol") c.dt_tol = to_double(key, value);
  else if (key == "decay_lo") c.decay_lo = to_double(key, value);
  else if (key == "decay_hi") c.decay_hi = to_double(key, value);
  else if (key == "late_lo") c.late_lo = to_double(key, value);
  else if (key == "late_hi") c.late_hi = to_double(key, value);
  else if (key == "seed") c.seed = to_int<std::uint64_t>(key, value);
  else if (key == "samples") c.samples = to_int<int>(key, value);
  else if (key == "output_dir") c.output_dir = value;
  else throw ConfigError(key + ": unknown configuration key");
}

RunConfig load_config_file(const std::string& path, RunConfig cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": missing key");
    if (value.empty()) throw ConfigError(key + ": missing value");
    set_config_field(cfg, key, value);
  }
  return cfg;
}

std::string serialize(const RunConfig& c) {
  std::ostringstream o;
  o << "mode=" << to_string(c.mode) << '\n'
    << "rho=" << format_double(c.rho) << '\n'
    << "n_fluid=" << c.n_fluid << '\n'
    << "beta_min=" << format_double(c.beta_min) << '\n'
    << "beta_max=" << format_double(c.beta_max) << '\n'
    << "beta_count=" << c.beta_count << '\n'
    << "fit_lo=" << format_double(c.fit_lo) << '\n'
    << "fit_hi=" << format_double(c.fit_hi) << '\n'
    << "t_final=" << format_double(c.t_final) << '\n'
    << "dt=" << format_double(c.dt) << '\n'
    << "dt_tol=" << format_double(c.dt_tol) << '\n'
    << "decay_lo=" << format_double(c.decay_lo) << '\n'
    << "decay_hi=" << format_double(c.decay_hi) << '\n'
    << "late_lo=" << format_double(c.late_lo) << '\n'
    << "late_hi=" << format_double(c.late_hi) << '\n'
    << "seed=" << c.seed << '\n'
    << "samples=" << c.samples << '\n'
    << "output_dir=" << c.output_dir << '\n';
  return o.str();
}

std::string config_hash(const RunConfig& cfg) {
  // The output directory does not change any result.
  RunConfig c = cfg;
  c.output_dir = "";
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fsilab

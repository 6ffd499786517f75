#pragma once

#include <cstdint>
#include <string>

#include "fsilab/model.hpp"

namespace fsilab {

// Zero in a window or t_final field means "derive from the spectrum".
struct RunConfig {
  Mode mode = Mode::section2d;
  double rho = 1.0;
  int n_fluid = 24;
  double beta_min = 10.0;
  double beta_max = 300.0;
  int beta_count = 40;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
  double t_final = 0.0;
  double dt = 0.02;
  double dt_tol = 1e-3;
  double decay_lo = 0.0;
  double decay_hi = 0.0;
  double late_lo = 0.0;
  double late_hi = 0.0;
  std::uint64_t seed = 1;
  int samples = 20;
  std::string output_dir = "out";

  void validate() const;
  ModelParams model_params() const;
};

// Reads "key = value" lines; '#' starts a comment. Unknown keys and bad
// values raise ConfigError naming the field.
RunConfig load_config_file(const std::string& path, RunConfig base = {});
void set_config_field(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical one-line-per-field serialization (fixed order, round-trip
// precision) and its 64-bit FNV-1a hash in hex.
std::string serialize(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

std::string format_double(double x);

}  // namespace fsilab

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "model_core.hpp"
#include "optimizer.hpp"

namespace cellfree::cfg {

/// One sweep axis, in human units (lambda in AP/km^2).
struct SweepVar {
  std::string name;  // zeta | lambda | K | N
  double min = 0.0;
  double max = 0.0;
  int steps = 1;
  std::string scale = "linear";  // linear | log
};

struct McSpec {
  uint64_t n_realizations = 1000;
  uint64_t seed = 1;
  int threads = 0;
  bool emit_records = false;
  bool average_over_users = false;
  std::string pilot_policy = "round_robin";  // round_robin | random
};

struct OutputSpec {
  std::string path = "-";
  std::string format = "csv";  // csv | json
};

/// Human-unit run configuration; `to_system_params` / `to_power_model`
/// convert to SI on demand. Round-trips through JSON exactly.
struct RunConfig {
  // system, human units
  int n_antennas = 20;
  int n_users = 10;
  double pilot_reuse = 4.0;
  double ap_density_per_km2 = 100.0;
  double area_km2 = 1.0;
  double pathloss_exponent = 4.0;
  double pilot_power_mw = 100.0;
  double data_power_mw = 200.0;
  int tau_c = 200;
  double dl_fraction = 1.0 / 3.0;
  double bandwidth_hz = 20e6;
  double noise_figure_db = 9.0;
  double noise_temperature_k = 290.0;
  std::string pilot_corr_mode = "orthogonal_reuse";

  // power model, Table-style units (per-Gbit/s for the rate-dependent terms)
  double fixed_power_w = 5.0;
  double lo_power_w = 0.1;
  double ap_antenna_power_w = 0.2;
  double ue_power_w = 0.1;
  double coding_power_w_per_gbit = 0.01;
  double decoding_power_w_per_gbit = 0.08;
  double backhaul_power_w_per_gbit = 0.025;
  double computational_efficiency_gflops_w = 750.0;
  double amplifier_efficiency = 0.5;

  double gamma0 = 3.0;

  std::vector<SweepVar> sweep;
  McSpec mc;
  OutputSpec output;

  PilotCorrMode pilot_mode() const;
  SystemParams to_system_params() const;
  PowerModel to_power_model() const;
};

/// Parses and validates; unknown keys and invariant violations are rejected
/// with an error naming the offending key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string write_config(const RunConfig& c);

/// Reference default configuration as shipped.
RunConfig default_config();

}  // namespace cellfree::cfg

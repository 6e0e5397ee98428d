#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cellfree::cfg {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read_field(const json& obj, const std::string& key, T& out,
                const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

PilotCorrMode RunConfig::pilot_mode() const {
  if (pilot_corr_mode == "orthogonal_reuse")
    return PilotCorrMode::kOrthogonalReuse;
  if (pilot_corr_mode == "welch_bound") return PilotCorrMode::kWelchBound;
  throw ConfigError("system.pilot_corr_mode: must be orthogonal_reuse or "
                    "welch_bound");
}

SystemParams RunConfig::to_system_params() const {
  SystemParams p;
  p.n_antennas = n_antennas;
  p.n_users = n_users;
  p.pilot_reuse = pilot_reuse;
  p.ap_density = ap_density_per_km2 * 1e-6;  // AP/km^2 -> 1/m^2
  p.area = area_km2 * 1e6;
  p.pathloss_exp = pathloss_exponent;
  p.rho_tr_watts = pilot_power_mw * 1e-3;
  p.rho_d_watts = data_power_mw * 1e-3;
  p.tau_c = tau_c;
  p.dl_fraction = dl_fraction;
  p.bandwidth = bandwidth_hz;
  const double np =
      noise_power(bandwidth_hz, noise_figure_db, noise_temperature_k);
  p.rho_tr = p.rho_tr_watts / np;
  p.rho_d = p.rho_d_watts / np;
  p.pilot_corr_sum = pilot_corr_sum_for(n_users, pilot_reuse, pilot_mode());
  p.validate();
  return p;
}

PowerModel RunConfig::to_power_model() const {
  PowerModel pm;
  pm.p_fp = fixed_power_w;
  pm.p_lo = lo_power_w;
  pm.p_ap = ap_antenna_power_w;
  pm.p_ue = ue_power_w;
  pm.p_cod = coding_power_w_per_gbit * 1e-9;  // W/(Gbit/s) -> W/(bit/s)
  pm.p_dec = decoding_power_w_per_gbit * 1e-9;
  pm.p_bt = backhaul_power_w_per_gbit * 1e-9;
  pm.l_ap = computational_efficiency_gflops_w * 1e9;
  pm.amp_eff = amplifier_efficiency;
  pm.validate();
  return pm;
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown_keys(root, {"system", "power_model", "constraint", "sweep",
                             "mc", "output"},
                      "config");

  RunConfig c;
  if (root.contains("system")) {
    const json& s = root["system"];
    reject_unknown_keys(
        s,
        {"n_antennas", "n_users", "pilot_reuse", "ap_density_per_km2",
         "area_km2", "pathloss_exponent", "pilot_power_mw", "data_power_mw",
         "tau_c", "dl_fraction", "bandwidth_hz", "noise_figure_db",
         "noise_temperature_k", "pilot_corr_mode"},
        "system");
    read_field(s, "n_antennas", c.n_antennas, "system");
    read_field(s, "n_users", c.n_users, "system");
    read_field(s, "pilot_reuse", c.pilot_reuse, "system");
    read_field(s, "ap_density_per_km2", c.ap_density_per_km2, "system");
    read_field(s, "area_km2", c.area_km2, "system");
    read_field(s, "pathloss_exponent", c.pathloss_exponent, "system");
    read_field(s, "pilot_power_mw", c.pilot_power_mw, "system");
    read_field(s, "data_power_mw", c.data_power_mw, "system");
    read_field(s, "tau_c", c.tau_c, "system");
    read_field(s, "dl_fraction", c.dl_fraction, "system");
    read_field(s, "bandwidth_hz", c.bandwidth_hz, "system");
    read_field(s, "noise_figure_db", c.noise_figure_db, "system");
    read_field(s, "noise_temperature_k", c.noise_temperature_k, "system");
    read_field(s, "pilot_corr_mode", c.pilot_corr_mode, "system");
  }
  if (root.contains("power_model")) {
    const json& s = root["power_model"];
    reject_unknown_keys(
        s,
        {"fixed_power_w", "lo_power_w", "ap_antenna_power_w", "ue_power_w",
         "coding_power_w_per_gbit", "decoding_power_w_per_gbit",
         "backhaul_power_w_per_gbit", "computational_efficiency_gflops_w",
         "amplifier_efficiency"},
        "power_model");
    read_field(s, "fixed_power_w", c.fixed_power_w, "power_model");
    read_field(s, "lo_power_w", c.lo_power_w, "power_model");
    read_field(s, "ap_antenna_power_w", c.ap_antenna_power_w, "power_model");
    read_field(s, "ue_power_w", c.ue_power_w, "power_model");
    read_field(s, "coding_power_w_per_gbit", c.coding_power_w_per_gbit,
               "power_model");
    read_field(s, "decoding_power_w_per_gbit", c.decoding_power_w_per_gbit,
               "power_model");
    read_field(s, "backhaul_power_w_per_gbit", c.backhaul_power_w_per_gbit,
               "power_model");
    read_field(s, "computational_efficiency_gflops_w",
               c.computational_efficiency_gflops_w, "power_model");
    read_field(s, "amplifier_efficiency", c.amplifier_efficiency,
               "power_model");
  }
  if (root.contains("constraint")) {
    const json& s = root["constraint"];
    reject_unknown_keys(s, {"gamma0"}, "constraint");
    read_field(s, "gamma0", c.gamma0, "constraint");
  }
  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    reject_unknown_keys(s, {"variables"}, "sweep");
    if (s.contains("variables")) {
      if (!s["variables"].is_array())
        throw ConfigError("sweep.variables: must be an array");
      for (const json& v : s["variables"]) {
        reject_unknown_keys(v, {"name", "min", "max", "steps", "scale"},
                            "sweep.variables[]");
        SweepVar sv;
        read_field(v, "name", sv.name, "sweep.variables[]");
        read_field(v, "min", sv.min, "sweep.variables[]");
        read_field(v, "max", sv.max, "sweep.variables[]");
        read_field(v, "steps", sv.steps, "sweep.variables[]");
        read_field(v, "scale", sv.scale, "sweep.variables[]");
        c.sweep.push_back(sv);
      }
    }
  }
  if (root.contains("mc")) {
    const json& s = root["mc"];
    reject_unknown_keys(s,
                        {"n_realizations", "seed", "threads", "emit_records",
                         "average_over_users", "pilot_policy"},
                        "mc");
    read_field(s, "n_realizations", c.mc.n_realizations, "mc");
    read_field(s, "seed", c.mc.seed, "mc");
    read_field(s, "threads", c.mc.threads, "mc");
    read_field(s, "emit_records", c.mc.emit_records, "mc");
    read_field(s, "average_over_users", c.mc.average_over_users, "mc");
    read_field(s, "pilot_policy", c.mc.pilot_policy, "mc");
  }
  if (root.contains("output")) {
    const json& s = root["output"];
    reject_unknown_keys(s, {"path", "format"}, "output");
    read_field(s, "path", c.output.path, "output");
    read_field(s, "format", c.output.format, "output");
  }

  // field-level validation in human units
  check(c.n_antennas >= 1, "system.n_antennas", "must be >= 1");
  check(c.n_users >= 1, "system.n_users", "must be >= 1");
  check(c.pilot_reuse >= 1.0, "system.pilot_reuse", "must be >= 1");
  check(c.ap_density_per_km2 > 0.0, "system.ap_density_per_km2", "must be > 0");
  check(c.area_km2 > 0.0, "system.area_km2", "must be > 0");
  check(c.pathloss_exponent > 2.0, "system.pathloss_exponent", "must be > 2");
  check(c.pilot_power_mw > 0.0, "system.pilot_power_mw", "must be > 0");
  check(c.data_power_mw > 0.0, "system.data_power_mw", "must be > 0");
  check(c.tau_c >= 1, "system.tau_c", "must be >= 1");
  check(c.dl_fraction > 0.0 && c.dl_fraction <= 1.0, "system.dl_fraction",
        "must be in (0, 1]");
  check(c.bandwidth_hz > 0.0, "system.bandwidth_hz", "must be > 0");
  check(c.noise_figure_db >= 0.0, "system.noise_figure_db", "must be >= 0");
  check(c.noise_temperature_k > 0.0, "system.noise_temperature_k",
        "must be > 0");
  check(c.amplifier_efficiency > 0.0 && c.amplifier_efficiency <= 1.0,
        "power_model.amplifier_efficiency", "must be in (0, 1]");
  check(c.gamma0 > 0.0, "constraint.gamma0", "must be > 0");
  for (const auto& sv : c.sweep) {
    check(sv.name == "zeta" || sv.name == "lambda" || sv.name == "K" ||
              sv.name == "N",
          "sweep.variables[].name", "must be one of zeta, lambda, K, N");
    check(sv.max >= sv.min, "sweep.variables[]." + sv.name,
          "max must be >= min");
    check(sv.steps >= 0, "sweep.variables[].steps", "must be >= 0");
    check(sv.scale == "linear" || sv.scale == "log",
          "sweep.variables[].scale", "must be linear or log");
    if (sv.scale == "log")
      check(sv.min > 0.0, "sweep.variables[]." + sv.name,
            "log scale requires min > 0");
  }
  check(c.mc.n_realizations >= 1, "mc.n_realizations", "must be >= 1");
  check(c.mc.threads >= 0, "mc.threads", "must be >= 0");
  check(c.mc.pilot_policy == "round_robin" || c.mc.pilot_policy == "random",
        "mc.pilot_policy", "must be round_robin or random");
  check(c.output.format == "csv" || c.output.format == "json",
        "output.format", "must be csv or json");
  // cross-field invariant, same as the SI-side validation
  const double tau_tr = c.n_users / c.pilot_reuse;
  check(tau_tr >= 1.0 && tau_tr <= c.tau_c, "system.pilot_reuse",
        "tau_tr = K/zeta must satisfy 1 <= tau_tr <= tau_c");
  c.pilot_mode();  // validates the mode string
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string write_config(const RunConfig& c) {
  json root;
  root["system"] = {
      {"n_antennas", c.n_antennas},
      {"n_users", c.n_users},
      {"pilot_reuse", c.pilot_reuse},
      {"ap_density_per_km2", c.ap_density_per_km2},
      {"area_km2", c.area_km2},
      {"pathloss_exponent", c.pathloss_exponent},
      {"pilot_power_mw", c.pilot_power_mw},
      {"data_power_mw", c.data_power_mw},
      {"tau_c", c.tau_c},
      {"dl_fraction", c.dl_fraction},
      {"bandwidth_hz", c.bandwidth_hz},
      {"noise_figure_db", c.noise_figure_db},
      {"noise_temperature_k", c.noise_temperature_k},
      {"pilot_corr_mode", c.pilot_corr_mode},
  };
  root["power_model"] = {
      {"fixed_power_w", c.fixed_power_w},
      {"lo_power_w", c.lo_power_w},
      {"ap_antenna_power_w", c.ap_antenna_power_w},
      {"ue_power_w", c.ue_power_w},
      {"coding_power_w_per_gbit", c.coding_power_w_per_gbit},
      {"decoding_power_w_per_gbit", c.decoding_power_w_per_gbit},
      {"backhaul_power_w_per_gbit", c.backhaul_power_w_per_gbit},
      {"computational_efficiency_gflops_w", c.computational_efficiency_gflops_w},
      {"amplifier_efficiency", c.amplifier_efficiency},
  };
  root["constraint"] = {{"gamma0", c.gamma0}};
  if (!c.sweep.empty()) {
    json arr = json::array();
    for (const auto& sv : c.sweep)
      arr.push_back({{"name", sv.name},
                     {"min", sv.min},
                     {"max", sv.max},
                     {"steps", sv.steps},
                     {"scale", sv.scale}});
    root["sweep"] = {{"variables", arr}};
  }
  root["mc"] = {
      {"n_realizations", c.mc.n_realizations},
      {"seed", c.mc.seed},
      {"threads", c.mc.threads},
      {"emit_records", c.mc.emit_records},
      {"average_over_users", c.mc.average_over_users},
      {"pilot_policy", c.mc.pilot_policy},
  };
  root["output"] = {{"path", c.output.path}, {"format", c.output.format}};
  return root.dump(2);
}

RunConfig default_config() { return RunConfig{}; }

}  // namespace cellfree::cfg

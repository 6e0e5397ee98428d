#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "mc_sim.hpp"
#include "optimizer.hpp"

namespace cellfree::cmd {

using nlohmann::json;

namespace {

constexpr double kM2PerKm2 = 1e-6;

json breakdown_json(const EEBreakdown& b) {
  return json{{"check_gamma", b.check_gamma},
              {"sinr", b.gamma},
              {"se_per_user_bps_hz", b.se_per_user},
              {"ase_bps_hz_km2", b.ase * 1e6},
              {"apc_w_km2", b.apc * 1e6},
              {"ee_mbit_joule", b.ee * 1e-6},
              {"term_signal", b.term_signal},
              {"term_training", b.term_training},
              {"term_density", b.term_density},
              {"apc_circuit_w_km2", b.apc_circuit * 1e6},
              {"apc_backhaul_w_km2", b.apc_backhaul * 1e6}};
}

json report_json(const opt::OptimumReport& r, bool lambda_in_km2) {
  const double scale = lambda_in_km2 ? 1e6 : 1.0;
  json j{{"variable", r.variable},
         {"closed_form_value", r.closed_form_value * scale},
         {"oracle_value", r.oracle_value * scale},
         {"authoritative_value", r.authoritative_value * scale},
         {"feasible_interval",
          {r.feasible_interval[0] * scale, r.feasible_interval[1] * scale}},
         {"objective_at_closed_form_mbit_joule",
          r.objective_at_closed_form * 1e-6},
         {"objective_at_oracle_mbit_joule", r.objective_at_oracle * 1e-6},
         {"closed_form_applicable", r.closed_form_applicable},
         {"agreement", r.agreement},
         {"paper_form_value", r.paper_form_value * scale},
         {"diagnostics", r.diagnostics}};
  if (std::isnan(r.closed_form_value)) j["closed_form_value"] = nullptr;
  if (std::isnan(r.paper_form_value)) j["paper_form_value"] = nullptr;
  if (std::isnan(r.objective_at_closed_form))
    j["objective_at_closed_form_mbit_joule"] = nullptr;
  return j;
}

struct GridAxis {
  std::string name;
  std::vector<double> values;  // internal units (lambda in 1/m^2)
};

GridAxis make_axis(const cfg::SweepVar& sv) {
  GridAxis ax;
  ax.name = sv.name;
  const bool integer = sv.name == "K" || sv.name == "N";
  const double unit = sv.name == "lambda" ? kM2PerKm2 : 1.0;
  for (int s = 0; s <= sv.steps; ++s) {
    double v = sv.steps == 0
                   ? sv.min
                   : (sv.scale == "log"
                          ? sv.min * std::pow(sv.max / sv.min,
                                              static_cast<double>(s) / sv.steps)
                          : sv.min + (sv.max - sv.min) *
                                         static_cast<double>(s) / sv.steps);
    if (integer) v = std::round(v);
    ax.values.push_back(v * unit);
  }
  auto& vv = ax.values;
  vv.erase(std::unique(vv.begin(), vv.end()), vv.end());
  return ax;
}

SystemParams apply_axis(const SystemParams& p, const std::string& name,
                        double v, PilotCorrMode mode) {
  SystemParams q = p;
  if (name == "zeta") {
    q = with_pilot_reuse(q, v, mode);
  } else if (name == "lambda") {
    q.ap_density = v;
  } else if (name == "K") {
    q.n_users = static_cast<int>(v);
    q.pilot_corr_sum = pilot_corr_sum_for(q.n_users, q.pilot_reuse, mode);
  } else if (name == "N") {
    q.n_antennas = static_cast<int>(v);
  } else {
    throw ConfigError("sweep: unknown variable '" + name + "'");
  }
  return q;
}

double axis_out_unit(const std::string& name, double v) {
  return name == "lambda" ? v / kM2PerKm2 : v;
}

std::string axis_column(const std::string& name) {
  if (name == "lambda") return "lambda_ap_per_km2";
  if (name == "zeta") return "zeta";
  if (name == "K") return "n_users";
  return "n_antennas";
}

mc::McOptions mc_options(const cfg::RunConfig& c) {
  mc::McOptions o;
  o.threads = c.mc.threads;
  o.average_over_users = c.mc.average_over_users;
  o.collect_records = c.mc.emit_records;
  o.pilot_policy = c.mc.pilot_policy == "random" ? mc::PilotPolicy::kRandom
                                                 : mc::PilotPolicy::kRoundRobin;
  return o;
}

uint64_t effective_seed(const cfg::RunConfig& c, const RunOptions& o) {
  return o.seed.value_or(c.mc.seed);
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string evaluate_json(const cfg::RunConfig& c, const RunOptions& o) {
  const SystemParams p = c.to_system_params();
  const PowerModel pm = c.to_power_model();
  const EEBreakdown b = energy_efficiency(p, pm, o.apc_mode, o.strict_paper);
  json j = breakdown_json(b);
  j["apc_mode"] = o.apc_mode == ApcMode::kPolynomial ? "polynomial"
                                                     : "first-principles";
  j["strict_paper"] = o.strict_paper;
  return j.dump(2);
}

std::string sweep_doc(const cfg::RunConfig& c, const RunOptions& o,
                      const std::string& format) {
  if (c.sweep.empty())
    throw ConfigError("sweep: config has no sweep.variables");
  if (c.sweep.size() > 2)
    throw ConfigError("sweep: at most two axes are supported");
  const SystemParams base = c.to_system_params();
  const PowerModel pm = c.to_power_model();
  const PilotCorrMode mode = c.pilot_mode();

  std::vector<GridAxis> axes;
  for (const auto& sv : c.sweep) axes.push_back(make_axis(sv));

  struct Row {
    std::vector<double> coords;  // internal units
    EEBreakdown b;
  };
  std::vector<Row> rows;
  const size_t n0 = axes[0].values.size();
  const size_t n1 = axes.size() > 1 ? axes[1].values.size() : 1;
  for (size_t i = 0; i < n0; ++i) {
    for (size_t j = 0; j < n1; ++j) {
      SystemParams p = apply_axis(base, axes[0].name, axes[0].values[i], mode);
      if (axes.size() > 1)
        p = apply_axis(p, axes[1].name, axes[1].values[j], mode);
      try {
        Row r;
        r.coords.push_back(axes[0].values[i]);
        if (axes.size() > 1) r.coords.push_back(axes[1].values[j]);
        r.b = energy_efficiency(p, pm, o.apc_mode, o.strict_paper);
        rows.push_back(std::move(r));
      } catch (const std::exception&) {
        // grid point violates the parameter invariants; skipped
      }
    }
  }

  if (format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      json row = breakdown_json(r.b);
      for (size_t a = 0; a < axes.size(); ++a)
        row[axis_column(axes[a].name)] =
            axis_out_unit(axes[a].name, r.coords[a]);
      arr.push_back(row);
    }
    return arr.dump(2);
  }

  std::ostringstream os;
  for (size_t a = 0; a < axes.size(); ++a)
    os << axis_column(axes[a].name) << ",";
  os << "check_gamma,sinr,se_per_user_bps_hz,ase_bps_hz_km2,apc_w_km2,"
        "ee_mbit_joule\n";
  for (const auto& r : rows) {
    for (size_t a = 0; a < axes.size(); ++a)
      os << csv_number(axis_out_unit(axes[a].name, r.coords[a])) << ",";
    os << csv_number(r.b.check_gamma) << "," << csv_number(r.b.gamma) << ","
       << csv_number(r.b.se_per_user) << "," << csv_number(r.b.ase * 1e6)
       << "," << csv_number(r.b.apc * 1e6) << ","
       << csv_number(r.b.ee * 1e-6) << "\n";
  }
  return os.str();
}

std::string optimize_json(const cfg::RunConfig& c, const RunOptions& o,
                          const std::string& variables) {
  const SystemParams p = c.to_system_params();
  const PowerModel pm = c.to_power_model();
  const PilotCorrMode mode = c.pilot_mode();
  const double g0 = c.gamma0;

  std::vector<std::string> vars;
  {
    std::stringstream ss(variables.empty() ? std::string("all") : variables);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "lambda_ap") tok = "lambda";
      if (tok == "n_users") tok = "K";
      if (tok == "n_antennas") tok = "N";
      if (tok != "zeta" && tok != "lambda" && tok != "K" && tok != "N" &&
          tok != "all")
        throw ConfigError("optimize: unknown variable '" + tok + "'");
      vars.push_back(tok);
    }
  }

  json out;
  out["gamma0"] = g0;
  out["feasibility_bound"] = opt::feasibility_bound(p.ap_density);
  json reports = json::array();
  auto run_one = [&](const std::string& v) {
    if (v == "zeta")
      reports.push_back(
          report_json(opt::optimal_zeta(p, pm, g0, mode, o.strict_paper), false));
    else if (v == "lambda")
      reports.push_back(report_json(
          opt::optimal_ap_density(p, pm, g0, mode, o.strict_paper), true));
    else if (v == "N")
      reports.push_back(report_json(
          opt::optimal_n_antennas(p, pm, g0, mode, o.strict_paper), false));
    else if (v == "K")
      reports.push_back(
          report_json(opt::optimal_n_users(p, pm, g0, o.strict_paper), false));
  };
  if (vars.size() == 1 && vars[0] == "all") {
    for (const char* v : {"zeta", "lambda", "N", "K"}) run_one(v);
    const opt::OptimumReport jr =
        opt::joint_optimize(p, pm, g0, mode, o.strict_paper);
    json j = report_json(jr, true);
    j["variable"] = "joint";
    reports.push_back(j);
  } else {
    for (const auto& v : vars) run_one(v);
    if (vars.size() == 2 &&
        ((vars[0] == "K" && vars[1] == "N") ||
         (vars[0] == "N" && vars[1] == "K"))) {
      // joint integer surface with the constraint-consistent reuse factor
      std::vector<opt::GridSpec> grids{{"K", 2, 30, 28, false},
                                       {"N", 2, 64, 62, false}};
      const opt::OptimumReport br = opt::brute_force_optimum(
          p, pm, g0, grids, mode, o.strict_paper);
      json j = report_json(br, false);
      j["variable"] = "K,N";
      j["joint_argmax"] = {{"K", br.trace_ee[0][0]}, {"N", br.trace_ee[1][0]}};
      reports.push_back(j);
    }
  }
  out["reports"] = reports;
  return out.dump(2);
}

SimulateResult simulate(const cfg::RunConfig& c, const RunOptions& o) {
  const SystemParams p = c.to_system_params();
  const uint64_t seed = effective_seed(c, o);
  const mc::McSummary s =
      mc::mc_average_se(p, c.mc.n_realizations, seed, mc_options(c));

  SimulateResult res;
  json j{{"n_realizations", s.n_requested},
         {"n_used", s.n_used},
         {"seed", seed},
         {"threads_requested", c.mc.threads},
         {"mean_se_bps_hz", s.mean_se},
         {"stderr_se_bps_hz", s.stderr_se},
         {"bound_se_bps_hz", s.bound_se},
         {"bound_gap_bps_hz", s.bound_gap},
         {"jensen_ok", s.bound_gap >= -2.0 * s.stderr_se},
         {"degenerate", s.degenerate},
         {"resamples", s.resamples},
         {"small_m_flags", s.small_m}};
  res.summary_json = j.dump(2);
  if (c.mc.emit_records) {
    std::ostringstream os;
    for (const auto& r : s.records) {
      json rec{{"seed", seed},          {"index", r.index},
               {"m", r.m},               {"sinr", r.sinr},
               {"se", r.se},             {"resamples", r.resamples},
               {"small_m", r.small_m},   {"degenerate", r.degenerate}};
      os << rec.dump() << "\n";
    }
    res.records_ndjson = os.str();
  }
  return res;
}

namespace {

ReproduceResult reproduce_fig1(const cfg::RunConfig& base, const RunOptions& o) {
  cfg::RunConfig c = base;
  c.sweep = {{"zeta", 1.0, 10.0, 18, "linear"},
             {"lambda", 5.0, 200.0, 39, "log"}};
  ReproduceResult r;
  r.dataset_csv = sweep_doc(c, o, "csv");

  const SystemParams p = c.to_system_params();
  const PowerModel pm = c.to_power_model();
  double best = -1.0, bz = 0.0, bl = 0.0;
  const GridAxis za = make_axis(c.sweep[0]);
  const GridAxis la = make_axis(c.sweep[1]);
  for (double z : za.values)
    for (double lam : la.values) {
      SystemParams q = with_pilot_reuse(p, z, c.pilot_mode());
      q.ap_density = lam;
      try {
        const double ee =
            energy_efficiency(q, pm, o.apc_mode, o.strict_paper).ee;
        if (ee > best) {
          best = ee;
          bz = z;
          bl = lam;
        }
      } catch (const std::exception&) {
      }
    }
  SystemParams ref = with_pilot_reuse(p, 3.0, c.pilot_mode());
  ref.ap_density = 25.0 * kM2PerKm2;
  const double ee_ref =
      energy_efficiency(ref, pm, o.apc_mode, o.strict_paper).ee;
  json meta{{"figure", "fig1"},
            {"argmax", {{"zeta", bz}, {"lambda_ap_per_km2", bl / kM2PerKm2}}},
            {"ee_max_mbit_joule", best * 1e-6},
            {"reference_point",
             {{"zeta", 3.0},
              {"lambda_ap_per_km2", 25.0},
              {"ee_mbit_joule", ee_ref * 1e-6},
              {"ee_expected_mbit_joule", 5.92}}}};
  r.meta_json = meta.dump(2);
  return r;
}

ReproduceResult reproduce_fig3(const cfg::RunConfig& base, const RunOptions& o) {
  const SystemParams p = base.to_system_params();
  const PilotCorrMode mode = base.pilot_mode();
  const uint64_t seed = effective_seed(base, o);
  std::ostringstream os;
  os << "gamma0,lambda_ap_per_km2,constraint_feasible,zeta_used,"
        "bound_se_bps_hz,mc_mean_se_bps_hz,mc_stderr_se_bps_hz,"
        "ee_mbit_joule\n";
  const PowerModel pm = base.to_power_model();
  json notes = json::array();
  for (double g0 : {1.0, 3.0, 7.0}) {
    for (int i = 0; i <= 14; ++i) {
      const double lam_km2 = 5.0 * std::pow(200.0 / 5.0, i / 14.0);
      SystemParams q = p;
      q.ap_density = lam_km2 * kM2PerKm2;
      bool feasible = true;
      double zeta_used = q.pilot_reuse;
      try {
        const double z = opt::zeta_star_unclamped(q, g0, mode);
        if (z >= std::max(1.0, q.n_users / static_cast<double>(q.tau_c)) &&
            z <= q.n_users)
          zeta_used = z;
        else
          feasible = false;
      } catch (const std::exception&) {
        feasible = false;
      }
      q = with_pilot_reuse(q, zeta_used, mode);
      const EEBreakdown b = energy_efficiency(q, pm, o.apc_mode, o.strict_paper);
      mc::McOptions mo = mc_options(base);
      mo.collect_records = false;
      const mc::McSummary s =
          mc::mc_average_se(q, base.mc.n_realizations, seed, mo);
      os << g0 << "," << csv_number(lam_km2) << "," << (feasible ? 1 : 0)
         << "," << csv_number(zeta_used) << "," << csv_number(b.se_per_user)
         << "," << csv_number(s.mean_se) << "," << csv_number(s.stderr_se)
         << "," << csv_number(b.ee * 1e-6) << "\n";
    }
    SystemParams probe = p;
    try {
      const double z = opt::zeta_star_unclamped(probe, g0, mode);
      if (z < 1.0 || z > probe.n_users) {
        notes.push_back("gamma0=" + std::to_string(g0) +
                        " is infeasible at the default operating point; "
                        "rows fall back to the configured pilot reuse");
      }
    } catch (const std::exception&) {
    }
  }
  ReproduceResult r;
  r.dataset_csv = os.str();
  json meta{{"figure", "fig3"},
            {"n_realizations", base.mc.n_realizations},
            {"seed", seed},
            {"notes", notes}};
  r.meta_json = meta.dump(2);
  return r;
}

ReproduceResult reproduce_fig4(const cfg::RunConfig& base, const RunOptions& o) {
  const SystemParams p = base.to_system_params();
  const PowerModel pm = base.to_power_model();
  const PilotCorrMode mode = base.pilot_mode();
  std::ostringstream os;
  os << "gamma0,lambda_ap_per_km2,constraint_feasible,ase_bps_hz_km2,"
        "ee_mbit_joule\n";
  for (double g0 : {1.0, 3.0, 7.0}) {
    for (int i = 0; i <= 39; ++i) {
      const double lam_km2 = 1.0 * std::pow(400.0, i / 39.0);
      SystemParams q = p;
      q.ap_density = lam_km2 * kM2PerKm2;
      bool feasible = true;
      double zeta_used = q.pilot_reuse;
      try {
        const double z = opt::zeta_star_unclamped(q, g0, mode);
        if (z >= std::max(1.0, q.n_users / static_cast<double>(q.tau_c)) &&
            z <= q.n_users)
          zeta_used = z;
        else
          feasible = false;
      } catch (const std::exception&) {
        feasible = false;
      }
      q = with_pilot_reuse(q, zeta_used, mode);
      const EEBreakdown b = energy_efficiency(q, pm, o.apc_mode, o.strict_paper);
      os << g0 << "," << csv_number(lam_km2) << "," << (feasible ? 1 : 0)
         << "," << csv_number(b.ase * 1e6) << "," << csv_number(b.ee * 1e-6)
         << "\n";
    }
  }
  ReproduceResult r;
  r.dataset_csv = os.str();
  r.meta_json = json{{"figure", "fig4"},
                     {"trace", "EE versus ASE parameterized by the AP density"}}
                    .dump(2);
  return r;
}

ReproduceResult reproduce_fig5(const cfg::RunConfig& base, const RunOptions& o) {
  cfg::RunConfig c = base;
  c.pilot_reuse = 3.0;
  c.ap_density_per_km2 = 25.0;
  c.sweep = {{"K", 2, 30, 28, "linear"}, {"N", 2, 64, 62, "linear"}};
  ReproduceResult r;
  r.dataset_csv = sweep_doc(c, o, "csv");

  const SystemParams p = c.to_system_params();
  const PowerModel pm = c.to_power_model();
  double best = -1.0;
  int bk = 0, bn = 0;
  for (int k = 2; k <= 30; ++k)
    for (int n = 2; n <= 64; ++n) {
      SystemParams q = p;
      q.n_users = k;
      q.n_antennas = n;
      try {
        q.pilot_corr_sum = pilot_corr_sum_for(k, q.pilot_reuse, c.pilot_mode());
        const double ee =
            energy_efficiency(q, pm, o.apc_mode, o.strict_paper).ee;
        if (ee > best) {
          best = ee;
          bk = k;
          bn = n;
        }
      } catch (const std::exception&) {
      }
    }
  json meta{{"figure", "fig5"},
            {"gamma0", 3.0},
            {"zeta", 3.0},
            {"lambda_ap_per_km2", 25.0},
            {"argmax", {{"K", bk}, {"N", bn}}},
            {"ee_max_mbit_joule", best * 1e-6},
            {"reference_argmax", {{"K", 5}, {"N", 16}}},
            {"ee_expected_mbit_joule", 6.76}};
  r.meta_json = meta.dump(2);
  return r;
}

}  // namespace

ReproduceResult reproduce(const cfg::RunConfig& c, const RunOptions& o,
                          const std::string& figure) {
  if (figure == "fig1") return reproduce_fig1(c, o);
  if (figure == "fig3") return reproduce_fig3(c, o);
  if (figure == "fig4") return reproduce_fig4(c, o);
  if (figure == "fig5") return reproduce_fig5(c, o);
  throw ConfigError("reproduce: unknown figure '" + figure +
                    "' (expected fig1|fig3|fig4|fig5)");
}

}  // namespace cellfree::cmd

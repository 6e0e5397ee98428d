#include "model_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cellfree {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::domain_error(field + ": " + what);
}

}  // namespace

void SystemParams::validate() const {
  require(n_antennas >= 1, "n_antennas", "must be a positive integer");
  require(n_users >= 1, "n_users", "must be a positive integer");
  require(pilot_reuse >= 1.0, "pilot_reuse", "must be >= 1");
  require(ap_density > 0.0, "ap_density", "must be > 0");
  require(area > 0.0, "area", "must be > 0");
  require(pathloss_exp > 2.0, "pathloss_exp", "must be > 2");
  require(rho_tr > 0.0, "rho_tr", "must be > 0");
  require(rho_d > 0.0, "rho_d", "must be > 0");
  require(rho_tr_watts > 0.0, "rho_tr_watts", "must be > 0");
  require(rho_d_watts > 0.0, "rho_d_watts", "must be > 0");
  require(tau_c >= 1, "tau_c", "must be a positive integer");
  require(dl_fraction > 0.0 && dl_fraction <= 1.0, "dl_fraction",
          "must be in (0, 1]");
  require(bandwidth > 0.0, "bandwidth", "must be > 0");
  require(pilot_corr_sum >= 1.0, "pilot_corr_sum", "must be >= 1");
  const double tt = tau_tr();
  require(tt >= 1.0 && tt <= static_cast<double>(tau_c), "pilot_reuse",
          "tau_tr = K/zeta must satisfy 1 <= tau_tr <= tau_c");
}

void PowerModel::validate() const {
  require(p_fp >= 0.0, "p_fp", "must be >= 0");
  require(p_lo >= 0.0, "p_lo", "must be >= 0");
  require(p_ap >= 0.0, "p_ap", "must be >= 0");
  require(p_ue >= 0.0, "p_ue", "must be >= 0");
  require(p_cod >= 0.0, "p_cod", "must be >= 0");
  require(p_dec >= 0.0, "p_dec", "must be >= 0");
  require(p_bt >= 0.0, "p_bt", "must be >= 0");
  require(l_ap > 0.0, "l_ap", "must be > 0");
  require(amp_eff > 0.0 && amp_eff <= 1.0, "amp_eff", "must be in (0, 1]");
}

double noise_power(double bandwidth_hz, double noise_figure_db,
                   double temperature_k) {
  if (bandwidth_hz <= 0.0)
    throw std::domain_error("bandwidth_hz: must be > 0");
  if (temperature_k <= 0.0)
    throw std::domain_error("temperature_k: must be > 0");
  if (noise_figure_db < 0.0)
    throw std::domain_error("noise_figure_db: must be >= 0");
  return kBoltzmann * bandwidth_hz * temperature_k *
         std::pow(10.0, noise_figure_db / 10.0);
}

double pilot_corr_sum_for(int n_users, double pilot_reuse,
                          PilotCorrMode mode) {
  if (mode == PilotCorrMode::kOrthogonalReuse) {
    // the user itself plus zeta-1 co-pilot users, unit correlation each
    return pilot_reuse;
  }
  if (n_users <= 2)
    throw std::domain_error(
        "pilot_corr_sum: Welch-bound mode requires n_users > 2");
  const double k = n_users;
  const double tau = k / pilot_reuse;
  // the bound goes vacuous (< 1) for tau_tr > K-1; the self-term floors A at 1
  return std::max(1.0, 1.0 + (k - 1.0 - tau) / (tau * (k - 2.0)));
}

double pilot_corr_sum(const SystemParams& p, PilotCorrMode mode) {
  return pilot_corr_sum_for(p.n_users, p.pilot_reuse, mode);
}

double check_gamma(const SystemParams& p) {
  p.validate();
  const double a = p.pathloss_exp;
  const double api = a * kPi;
  const double n = p.n_antennas;
  const double k = p.n_users;
  const double t_signal =
      p.pilot_corr_sum * ((a - 2.0) / (api * n * p.rho_d) + (k - 1.0));
  const double t_training =
      p.pilot_reuse / (api * k * p.rho_tr) *
      ((k - 1.0) * (a - 2.0) + (a - 1.0) / (n * p.rho_d));
  const double t_density = p.ap_density * (k - 1.0);
  return t_signal + t_training + t_density;
}

double se_from_sinr(double sinr, double n_users, double pilot_reuse,
                    double tau_c) {
  const double prefactor = 1.0 - n_users / (pilot_reuse * tau_c);
  if (prefactor < 0.0)
    throw FeasibilityError("se_per_user: frame infeasible, K/(zeta*tau_c) > 1");
  if (sinr < 0.0) throw ModelError("se_from_sinr: negative SINR");
  return prefactor * std::log2(1.0 + sinr);
}

double se_per_user(const SystemParams& p) {
  const double cg = check_gamma(p);  // strictly positive; 1/inf -> SE of 0
  return se_from_sinr(1.0 / cg, p.n_users, p.pilot_reuse, p.tau_c);
}

double ase(const SystemParams& p) { return p.n_users / p.area * se_per_user(p); }

ApcCoefficients apc_coefficients(const SystemParams& p, const PowerModel& pm,
                                 bool strict_paper) {
  const double bw = p.bandwidth;
  const double tc = p.tau_c;
  const double xi = p.dl_fraction;
  const double z = p.pilot_reuse;
  ApcCoefficients c{};
  c.c0 = pm.p_fp + pm.p_lo;
  c.d0 = pm.p_ap;
  c.d2 = 3.0 * bw * (xi - 1.0) / (pm.l_ap * z * tc);
  c.backhaul = pm.backhaul_sum();
  if (strict_paper) {
    // published compaction, kept verbatim: the K and K^2 transmit-energy
    // coefficients carry a 1/(zeta*tau_c) payload scaling and an inverted
    // pilot power, and the NK coefficient drops the DL payload fraction.
    c.c1 = bw / (7.0 * pm.l_ap * tc) - xi * p.rho_d_watts / (pm.amp_eff * z * tc) +
           pm.p_ue;
    c.c2 = 1.0 / (pm.amp_eff * z * p.rho_tr_watts * tc);
    c.d1 = 3.0 * bw / pm.l_ap + 3.0 * bw / (pm.l_ap * tc);
  } else {
    // regrouped from the first-principles budget so the two constructions
    // agree identically
    c.c1 = bw / (7.0 * pm.l_ap * tc) + xi * p.rho_d_watts / pm.amp_eff + pm.p_ue;
    c.c2 = (p.rho_tr_watts - xi * p.rho_d_watts) / (pm.amp_eff * z * tc);
    c.d1 = 3.0 * bw * xi / pm.l_ap + 3.0 * bw / (pm.l_ap * tc);
  }
  return c;
}

namespace {

double apc_from_coefficients(const ApcCoefficients& c, const SystemParams& p,
                             double ase_value) {
  const double k = p.n_users;
  const double n = p.n_antennas;
  const double circuit =
      p.ap_density *
      (c.c0 + c.c1 * k + c.c2 * k * k + c.d0 * n + c.d1 * n * k - c.d2 * n * k * k);
  return circuit + c.backhaul * p.bandwidth * ase_value;
}

}  // namespace

double apc_polynomial(const SystemParams& p, const PowerModel& pm,
                      bool strict_paper) {
  p.validate();
  pm.validate();
  const double v = apc_from_coefficients(apc_coefficients(p, pm, strict_paper),
                                         p, ase(p));
  if (!(v > 0.0))
    throw ModelError("apc_polynomial: non-positive APC (coefficient or unit "
                     "inconsistency for the given parameters)");
  return v;
}

ApcTerms apc_first_principles_terms(const SystemParams& p,
                                    const PowerModel& pm) {
  p.validate();
  pm.validate();
  const double k = p.n_users;
  const double n = p.n_antennas;
  const double tc = p.tau_c;
  const double tau_tr = p.tau_tr();
  const double tau_d = p.dl_fraction * (tc - tau_tr);
  ApcTerms t{};
  t.p_tx = k * (tau_tr * p.rho_tr_watts + tau_d * p.rho_d_watts) / tc;
  t.p_fp = pm.p_fp;
  t.p_tc = n * pm.p_ap + pm.p_lo + k * pm.p_ue;
  t.p_ce = 3.0 * p.bandwidth / (pm.l_ap * tc) * k * n * (tau_tr + 1.0);
  t.p_lp = 3.0 * p.bandwidth / (pm.l_ap * tc) * k * n * p.dl_fraction *
               (tc - tau_tr) +
           p.bandwidth * k / (7.0 * tc * pm.l_ap);
  t.backhaul = pm.backhaul_sum() * p.bandwidth * ase(p);
  return t;
}

double apc_first_principles(const SystemParams& p, const PowerModel& pm) {
  const ApcTerms t = apc_first_principles_terms(p, pm);
  const double v = p.ap_density * (t.p_tx / pm.amp_eff + t.p_fp + t.p_tc +
                                   t.p_ce + t.p_lp) +
                   t.backhaul;
  if (!(v > 0.0))
    throw ModelError("apc_first_principles: non-positive APC");
  return v;
}

EEBreakdown energy_efficiency(const SystemParams& p, const PowerModel& pm,
                              ApcMode mode, bool strict_paper) {
  p.validate();
  pm.validate();
  EEBreakdown b;
  const double a = p.pathloss_exp;
  const double api = a * kPi;
  b.term_signal = p.pilot_corr_sum *
                  ((a - 2.0) / (api * p.n_antennas * p.rho_d) + (p.n_users - 1.0));
  b.term_training = p.pilot_reuse / (api * p.n_users * p.rho_tr) *
                    ((p.n_users - 1.0) * (a - 2.0) +
                     (a - 1.0) / (p.n_antennas * p.rho_d));
  b.term_density = p.ap_density * (p.n_users - 1.0);
  b.check_gamma = b.term_signal + b.term_training + b.term_density;
  b.gamma = 1.0 / b.check_gamma;
  b.se_per_user = se_from_sinr(b.gamma, p.n_users, p.pilot_reuse, p.tau_c);
  b.ase = p.n_users / p.area * b.se_per_user;
  b.apc_backhaul = pm.backhaul_sum() * p.bandwidth * b.ase;
  if (mode == ApcMode::kPolynomial) {
    b.apc = apc_from_coefficients(apc_coefficients(p, pm, strict_paper), p,
                                  b.ase);
  } else {
    const ApcTerms t = apc_first_principles_terms(p, pm);
    b.apc = p.ap_density * (t.p_tx / pm.amp_eff + t.p_fp + t.p_tc + t.p_ce +
                            t.p_lp) +
            t.backhaul;
  }
  if (!(b.apc > 0.0))
    throw ModelError("energy_efficiency: non-positive APC");
  b.apc_circuit = b.apc - b.apc_backhaul;
  b.ee = p.bandwidth * b.ase / b.apc;
  return b;
}

SystemParams with_pilot_reuse(const SystemParams& p, double zeta,
                              PilotCorrMode mode) {
  SystemParams q = p;
  q.pilot_reuse = zeta;
  q.pilot_corr_sum = pilot_corr_sum_for(q.n_users, zeta, mode);
  return q;
}

SystemParams with_integer_tau_tr(const SystemParams& p, PilotCorrMode mode) {
  SystemParams q = p;
  const double tt = std::ceil(p.tau_tr());
  q.pilot_reuse = p.n_users / tt;
  if (q.pilot_reuse < 1.0) q.pilot_reuse = 1.0;
  q.pilot_corr_sum = pilot_corr_sum_for(q.n_users, q.pilot_reuse, mode);
  return q;
}

}  // namespace cellfree

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "config.hpp"
#include "model_core.hpp"

using namespace cellfree;

namespace {

SystemParams default_params() {
  return cfg::default_config().to_system_params();
}

PowerModel default_power() { return cfg::default_config().to_power_model(); }

// independent long-double re-evaluation with a different term grouping
long double check_gamma_oracle(const SystemParams& p) {
  const long double a = p.pathloss_exp;
  const long double api = a * 3.141592653589793238462643383279502884L;
  const long double n = p.n_antennas;
  const long double k = p.n_users;
  const long double A = p.pilot_corr_sum;
  long double acc = p.ap_density * (k - 1.0L);
  acc += A * (k - 1.0L);
  acc += A * (a - 2.0L) / (api * n * p.rho_d);
  acc += p.pilot_reuse * (k - 1.0L) * (a - 2.0L) / (api * k * p.rho_tr);
  acc += p.pilot_reuse * (a - 1.0L) / (api * k * p.rho_tr * n * p.rho_d);
  return acc;
}

std::mt19937_64 rng_for(const char* tag) {
  std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
  return std::mt19937_64(seq);
}

SystemParams random_params(std::mt19937_64& g) {
  std::uniform_int_distribution<int> kd(2, 24), nd(1, 128);
  std::uniform_real_distribution<double> ad(2.3, 6.0), ld(1e-6, 1e-4),
      xd(0.1, 1.0), zd(0.0, 1.0);
  SystemParams p = default_params();
  p.n_users = kd(g);
  p.n_antennas = nd(g);
  p.pathloss_exp = ad(g);
  p.ap_density = ld(g);
  p.dl_fraction = xd(g);
  const double zmax = std::min<double>(p.n_users, 16.0);
  p.pilot_reuse = 1.0 + zd(g) * (zmax - 1.0);
  p.pilot_corr_sum = p.pilot_reuse;
  std::uniform_real_distribution<double> pw(0.01, 1.0);
  p.rho_tr_watts = pw(g);
  p.rho_d_watts = pw(g);
  const double np = noise_power(p.bandwidth, 9.0, 290.0);
  p.rho_tr = p.rho_tr_watts / np;
  p.rho_d = p.rho_d_watts / np;
  return p;
}

}  // namespace

TEST_CASE("noise power matches the reference constants") {
  const double np = noise_power(20e6, 9.0, 290.0);
  CHECK(np == doctest::Approx(6.3624e-13).epsilon(1e-4));
  CHECK(noise_power(20e6, 0.0, 290.0) ==
        doctest::Approx(kBoltzmann * 2e7 * 290.0).epsilon(1e-15));
  CHECK(0.2 / np == doctest::Approx(3.1435e11).epsilon(1e-4));
  CHECK_THROWS_AS(noise_power(0.0, 9.0, 290.0), std::domain_error);
  CHECK_THROWS_AS(noise_power(20e6, -1.0, 290.0), std::domain_error);
  CHECK_THROWS_AS(noise_power(20e6, 9.0, 0.0), std::domain_error);
}

TEST_CASE("pilot correlation sum") {
  CHECK(pilot_corr_sum_for(10, 1.0, PilotCorrMode::kOrthogonalReuse) == 1.0);
  CHECK(pilot_corr_sum_for(12, 4.0, PilotCorrMode::kOrthogonalReuse) == 4.0);
  // K=10, tau_tr=5 -> zeta=2: 1 + (10-1-5)/(5*8) = 1.1
  CHECK(pilot_corr_sum_for(10, 2.0, PilotCorrMode::kWelchBound) ==
        doctest::Approx(1.1).epsilon(1e-15));
  CHECK_THROWS_AS(pilot_corr_sum_for(2, 1.0, PilotCorrMode::kWelchBound),
                  std::domain_error);
}

TEST_CASE("check_gamma against independent re-evaluation") {
  const SystemParams p = default_params();
  const double cg = check_gamma(p);
  CHECK(cg ==
        doctest::Approx(static_cast<double>(check_gamma_oracle(p))).epsilon(1e-12));
  // the A(K-1) term dominates at the default operating point
  CHECK(cg == doctest::Approx(36.0009).epsilon(1e-6));

  auto g = rng_for("check-gamma-oracle");
  for (int i = 0; i < 200; ++i) {
    const SystemParams q = random_params(g);
    CHECK(check_gamma(q) ==
          doctest::Approx(static_cast<double>(check_gamma_oracle(q)))
              .epsilon(1e-11));
  }
}

TEST_CASE("check_gamma single-user form") {
  SystemParams p = default_params();
  p.n_users = 1;
  p.pilot_reuse = 1.0;
  p.pilot_corr_sum = 1.0;
  const double a = p.pathloss_exp;
  const double api = a * kPi;
  const double expect = (a - 2.0) / (api * p.n_antennas * p.rho_d) +
                        (a - 1.0) / (api * p.rho_tr * p.n_antennas * p.rho_d);
  CHECK(check_gamma(p) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("check_gamma monotonic in N, K and density") {
  // moderate SNR-like powers keep the 1/N terms above double-precision
  // resolution of the (K-1)-dominated total (the sign analysis itself is
  // scale-free)
  auto g = rng_for("check-gamma-monotone");
  std::uniform_real_distribution<double> snr(0.05, 50.0);
  for (int i = 0; i < 100; ++i) {
    SystemParams p = random_params(g);
    p.rho_tr = snr(g);
    p.rho_d = snr(g);
    SystemParams pn = p;
    pn.n_antennas = p.n_antennas + 1;
    CHECK(check_gamma(pn) < check_gamma(p));
    SystemParams pk = p;
    pk.n_users = p.n_users + 1;  // A-mode fixed: pilot_corr_sum unchanged
    CHECK(check_gamma(pk) > check_gamma(p));
    SystemParams pl = p;
    pl.ap_density = p.ap_density * 1.5;
    CHECK(check_gamma(pl) > check_gamma(p));
  }
}

TEST_CASE("per-user SE") {
  // prefactor (1 - 10/200) with log2(1+100)
  const double se = se_from_sinr(100.0, 10, 1.0, 200);
  CHECK(se == doctest::Approx(0.95 * std::log2(101.0)).epsilon(1e-15));
  CHECK(se == doctest::Approx(6.326).epsilon(3e-4));
  CHECK(se_from_sinr(0.0, 10, 4.0, 200) == 0.0);
  // all samples spent on pilots
  CHECK(se_from_sinr(5.0, 10, 10.0 / 200.0, 200) == 0.0);
  CHECK_THROWS_AS(se_from_sinr(5.0, 10, 0.04, 200), FeasibilityError);
}

TEST_CASE("area spectral efficiency") {
  SystemParams p = default_params();
  CHECK(ase(p) == p.n_users / p.area * se_per_user(p));
  p.area = 1e30;
  CHECK(ase(p) < 1e-20);
}

TEST_CASE("APC dual construction agrees after coefficient regrouping") {
  const SystemParams p = default_params();
  const PowerModel pm = default_power();
  const double poly = apc_polynomial(p, pm, false);
  const double fp = apc_first_principles(p, pm);
  CHECK(std::abs(poly - fp) / fp <= 1e-12);

  auto g = rng_for("apc-dual");
  double max_rel = 0.0, max_strict_rel = 0.0;
  for (int i = 0; i < 300; ++i) {
    const SystemParams q = random_params(g);
    const double a = apc_polynomial(q, pm, false);
    const double b = apc_first_principles(q, pm);
    max_rel = std::max(max_rel, std::abs(a - b) / b);
    try {
      const double s = apc_polynomial(q, pm, true);
      max_strict_rel = std::max(max_strict_rel, std::abs(s - b) / b);
    } catch (const ModelError&) {
      // published form can go non-positive at extreme parameters
    }
  }
  CHECK(max_rel <= 1e-9);
  MESSAGE("published-coefficient APC deviation from the first-principles "
          "construction (reported, not asserted): max rel = ",
          max_strict_rel);
}

TEST_CASE("APC zero-user collapse via coefficients") {
  const SystemParams p = default_params();
  const PowerModel pm = default_power();
  const ApcCoefficients c = apc_coefficients(p, pm, false);
  // polynomial evaluated at K = 0: lambda*(C0 + D0*N)
  const double collapsed = p.ap_density * (c.c0 + c.d0 * p.n_antennas);
  CHECK(collapsed ==
        doctest::Approx(p.ap_density * (pm.p_fp + pm.p_lo + pm.p_ap * p.n_antennas))
            .epsilon(1e-15));
}

TEST_CASE("APC backhaul term vanishes with the ASE") {
  SystemParams p = default_params();
  const PowerModel pm = default_power();
  p.area = 1e24;  // ASE ~ 0
  const ApcCoefficients c = apc_coefficients(p, pm, false);
  const double k = p.n_users, n = p.n_antennas;
  const double circuit_only =
      p.ap_density * (c.c0 + c.c1 * k + c.c2 * k * k + c.d0 * n + c.d1 * n * k -
                      c.d2 * n * k * k);
  CHECK(apc_polynomial(p, pm, false) ==
        doctest::Approx(circuit_only).epsilon(1e-12));
}

TEST_CASE("first-principles terms scale affinely in N") {
  const SystemParams p = default_params();
  const PowerModel pm = default_power();
  SystemParams p2 = p;
  p2.n_antennas = 2 * p.n_antennas;
  const ApcTerms t1 = apc_first_principles_terms(p, pm);
  const ApcTerms t2 = apc_first_principles_terms(p2, pm);
  CHECK(t2.p_tc - t1.p_tc ==
        doctest::Approx(p.n_antennas * pm.p_ap).epsilon(1e-12));
  CHECK(t2.p_ce == doctest::Approx(2.0 * t1.p_ce).epsilon(1e-12));
  const double lp_const = p.bandwidth * p.n_users / (7.0 * p.tau_c * pm.l_ap);
  CHECK(t2.p_lp - lp_const ==
        doctest::Approx(2.0 * (t1.p_lp - lp_const)).epsilon(1e-12));
  CHECK(t2.p_tx == t1.p_tx);  // transmit power does not depend on N
}

TEST_CASE("first-principles transmit term with zero DL fraction") {
  SystemParams p = default_params();
  p.dl_fraction = 1e-300;  // xi -> 0: pilots only
  const ApcTerms t = apc_first_principles_terms(p, default_power());
  const double pilots_only =
      p.n_users * p.n_users * p.rho_tr_watts / (p.pilot_reuse * p.tau_c);
  CHECK(t.p_tx == doctest::Approx(pilots_only).epsilon(1e-10));
}

TEST_CASE("energy efficiency breakdown invariants") {
  const SystemParams p = default_params();
  const PowerModel pm = default_power();
  const EEBreakdown b = energy_efficiency(p, pm);
  CHECK(b.gamma * b.check_gamma == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.ee * b.apc == doctest::Approx(p.bandwidth * b.ase).epsilon(1e-12));
  CHECK(b.ase == p.n_users / p.area * b.se_per_user);
  CHECK(b.check_gamma ==
        doctest::Approx(b.term_signal + b.term_training + b.term_density)
            .epsilon(1e-15));
  CHECK(b.apc == doctest::Approx(b.apc_circuit + b.apc_backhaul).epsilon(1e-12));

  // doubling every power-model entry doubles the APC and halves the EE
  PowerModel pm2 = pm;
  pm2.p_fp *= 2; pm2.p_lo *= 2; pm2.p_ap *= 2; pm2.p_ue *= 2;
  pm2.p_cod *= 2; pm2.p_dec *= 2; pm2.p_bt *= 2;
  pm2.l_ap /= 2; pm2.amp_eff /= 2;
  const EEBreakdown b2 = energy_efficiency(p, pm2);
  CHECK(b2.ee == doctest::Approx(0.5 * b.ee).epsilon(1e-12));
}

TEST_CASE("no NaN on the valid domain") {
  auto g = rng_for("fuzz-finite");
  const PowerModel pm = default_power();
  for (int i = 0; i < 500; ++i) {
    const SystemParams p = random_params(g);
    const EEBreakdown b = energy_efficiency(p, pm);
    CHECK(std::isfinite(b.check_gamma));
    CHECK(b.check_gamma > 0.0);
    CHECK(std::isfinite(b.se_per_user));
    CHECK(b.se_per_user >= 0.0);
    CHECK(std::isfinite(b.apc));
    CHECK(b.apc > 0.0);
    CHECK(std::isfinite(b.ee));
    CHECK(b.ee >= 0.0);
  }
}

TEST_CASE("parameter validation names the offending field") {
  SystemParams p = default_params();
  p.pathloss_exp = 2.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("pathloss_exp"),
                       std::domain_error);
  SystemParams q = default_params();
  q.pilot_reuse = 100.0;  // tau_tr < 1
  CHECK_THROWS_AS(q.validate(), std::domain_error);
}

TEST_CASE("strict frame mode rounds tau_tr up") {
  SystemParams p = default_params();  // K=10, zeta=4 -> tau_tr=2.5
  const SystemParams q =
      with_integer_tau_tr(p, PilotCorrMode::kOrthogonalReuse);
  CHECK(q.tau_tr() == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(q.pilot_reuse == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
  CHECK(q.pilot_corr_sum == doctest::Approx(q.pilot_reuse).epsilon(1e-15));
}

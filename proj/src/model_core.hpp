#pragma once

#include <stdexcept>
#include <string>

namespace cellfree {

/// Boltzmann constant [J/K] as used by the reference parameter set.
inline constexpr double kBoltzmann = 1.381e-23;
inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PilotCorrMode { kOrthogonalReuse, kWelchBound };
enum class ApcMode { kPolynomial, kFirstPrinciples };

/// Radio/network scalars, SI units throughout. Transmit powers are carried
/// both normalized (divided by the noise power, SNR-like) and in watts: the
/// normalized values drive the SINR bound, the watt values the power model.
struct SystemParams {
  int n_antennas = 20;        // N, antennas per AP
  int n_users = 10;           // K
  double pilot_reuse = 4.0;   // zeta >= 1, tau_tr = K/zeta
  double ap_density = 1e-4;   // lambda_AP [1/m^2]
  double area = 1e6;          // S [m^2]
  double pathloss_exp = 4.0;  // alpha > 2
  double rho_tr = 0.0;        // normalized UL pilot power
  double rho_d = 0.0;         // normalized DL data power
  double rho_tr_watts = 0.1;  // [W]
  double rho_d_watts = 0.2;   // [W]
  int tau_c = 200;            // samples per coherence block
  double dl_fraction = 1.0 / 3.0;  // xi in (0,1]
  double bandwidth = 20e6;    // B_w [Hz]
  double pilot_corr_sum = 4.0;  // A = sum_j |psi_j^H psi_k|^2

  double tau_tr() const { return n_users / pilot_reuse; }

  /// Throws std::domain_error naming the offending field.
  void validate() const;
};

/// Circuit/amplifier power constants. Per-rate powers are in W per (bit/s);
/// config ingestion converts from the W/(Gbit/s) convention.
struct PowerModel {
  double p_fp = 5.0;    // fixed power [W]
  double p_lo = 0.1;    // local oscillator [W]
  double p_ap = 0.2;    // per AP antenna [W]
  double p_ue = 0.1;    // per UE antenna [W]
  double p_cod = 0.01e-9;   // coding [W/(bit/s)]
  double p_dec = 0.08e-9;   // decoding [W/(bit/s)]
  double p_bt = 0.025e-9;   // backhaul traffic [W/(bit/s)]
  double l_ap = 750e9;  // computational efficiency [flops/W]
  double amp_eff = 0.5; // power amplifier efficiency, (0,1]

  double backhaul_sum() const { return p_cod + p_dec + p_bt; }
  void validate() const;
};

/// Polynomial form of the area power consumption,
///   APC = lambda*(C0 + C1*K + C2*K^2 + D0*N + D1*N*K - D2*N*K^2) + B*Bw*ASE.
/// The corrected set regroups the first-principles expansion exactly; the
/// strict set keeps the published compaction verbatim.
struct ApcCoefficients {
  double c0, c1, c2, d0, d1, d2;
  double backhaul;  // B = P_COD + P_DEC + P_BT
};

/// Additive pieces of the per-AP first-principles power budget [W].
struct ApcTerms {
  double p_tx;      // transmit, before amplifier efficiency division
  double p_fp;      // fixed
  double p_tc;      // transceiver chains
  double p_ce;      // channel estimation
  double p_lp;      // linear processing
  double backhaul;  // area-level B*Bw*ASE [W/m^2], outside the lambda factor
};

struct EEBreakdown {
  double check_gamma = 0;   // inverse-SINR bound
  double gamma = 0;         // SINR bound, 1/check_gamma
  double se_per_user = 0;   // [bit/s/Hz]
  double ase = 0;           // [bit/s/Hz/m^2]
  double apc = 0;           // [W/m^2]
  double ee = 0;            // [bit/Joule]
  // three additive terms of the inverse-SINR bound
  double term_signal = 0;    // A*((alpha-2)/(alpha*pi*N*rho_d) + K-1)
  double term_training = 0;  // zeta/(alpha*pi*K*rho_tr)*(...)
  double term_density = 0;   // lambda*(K-1)
  // APC components
  double apc_circuit = 0;    // lambda*(C0 + ... ) [W/m^2]
  double apc_backhaul = 0;   // B*Bw*ASE [W/m^2]
};

/// Thermal noise power kB*Bw*T*10^(NF/10) [W]. Normalized powers are
/// rho = rho_watts / noise_power.
double noise_power(double bandwidth_hz, double noise_figure_db,
                   double temperature_k);

/// Aggregate pilot cross-correlation A = sum_j |psi_j^H psi_k|^2 for the
/// typical user. Orthogonal reuse counts the zeta co-pilot users; the Welch
/// mode substitutes the Welch-inequality bound (requires K > 2).
double pilot_corr_sum_for(int n_users, double pilot_reuse, PilotCorrMode mode);
double pilot_corr_sum(const SystemParams& p, PilotCorrMode mode);

/// Inverse of the effective-SINR lower bound (always > 0).
double check_gamma(const SystemParams& p);

/// (1 - tau_tr/tau_c) * log2(1 + sinr); shared by the bound and the
/// Monte Carlo estimator. Throws FeasibilityError when the prefactor <= 0.
double se_from_sinr(double sinr, double n_users, double pilot_reuse,
                    double tau_c);

/// Per-user spectral efficiency lower bound [bit/s/Hz].
double se_per_user(const SystemParams& p);

/// Area spectral efficiency: user density times per-user SE. The user
/// density (not the AP density) multiplies the rate because every user is
/// served jointly by all APs.
double ase(const SystemParams& p);

ApcCoefficients apc_coefficients(const SystemParams& p, const PowerModel& pm,
                                 bool strict_paper);

/// Area power consumption via the polynomial form [W/m^2].
double apc_polynomial(const SystemParams& p, const PowerModel& pm,
                      bool strict_paper = false);

/// Area power consumption assembled term by term from the underlying power
/// budget [W/m^2]. Dual construction used as an oracle for the polynomial.
double apc_first_principles(const SystemParams& p, const PowerModel& pm);
ApcTerms apc_first_principles_terms(const SystemParams& p,
                                    const PowerModel& pm);

EEBreakdown energy_efficiency(const SystemParams& p, const PowerModel& pm,
                              ApcMode mode = ApcMode::kPolynomial,
                              bool strict_paper = false);

/// Copy of p with pilot_reuse = zeta and pilot_corr_sum recomputed per mode.
SystemParams with_pilot_reuse(const SystemParams& p, double zeta,
                              PilotCorrMode mode);

/// Strict frame mode: rounds tau_tr up to an integer and recomputes
/// zeta = K/tau_tr.
SystemParams with_integer_tau_tr(const SystemParams& p, PilotCorrMode mode);

}  // namespace cellfree

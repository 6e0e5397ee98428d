#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "model_core.hpp"

namespace cellfree::opt {

/// SINR target for the constrained EE maximization. Feasible only below
/// 1/lambda_AP (lambda in 1/m^2).
struct Constraint {
  double gamma0 = 3.0;
};

/// Published coefficient set behind the closed-form optimizers, evaluated
/// for a given operating point. Kept for auditability; the default
/// optimizers use re-derived forms and an oracle as arbiter.
struct CoefficientTable {
  double a1, a2, a3, a4, a5, a6;
  double b1, b2, b3, b4, b5, b6, b7, b8;
  double c11, c12, c22, d22, bar_c11, bar_d11;
  double e1, e2, e3, e4, e5, e6, e7, e8, e9, e10;
  double p0, p1, p2, p3, p4, p5;
  double q1, q2, q3;
  double cap_q1, cap_q2;  // reuse-factor compaction Q1, Q2
  double g;               // density closed-form combination G
};

struct OptimumReport {
  std::string variable;
  double closed_form_value = 0.0;  // NaN when inapplicable
  double oracle_value = 0.0;
  std::array<double, 2> feasible_interval{0.0, 0.0};
  double objective_at_closed_form = 0.0;  // EE [bit/Joule]
  double objective_at_oracle = 0.0;
  bool closed_form_applicable = false;
  bool agreement = false;  // objectives within the 5% arbitration band
  double authoritative_value = 0.0;
  double paper_form_value = 0.0;  // published closed form, NaN if broken
  std::string diagnostics;
  // joint optimization trace: (variable, value, ee) per accepted step
  std::vector<std::array<double, 2>> trace_ee;
};

struct GridSpec {
  std::string variable;  // "zeta" | "lambda" | "K" | "N"
  double lo = 0.0;
  double hi = 0.0;
  int steps = 200;
  bool log_scale = false;
};

/// Feasibility ceiling of the SINR target: gamma0 < 1/lambda_AP.
double feasibility_bound(double lambda_ap_m2);

/// Large-N SINR limit (printed form; carries K*lambda where the finite-N
/// bound carries (K-1)*lambda -- at K=1 this reduces exactly to 1/lambda).
double sinr_limit_inf_n(const SystemParams& p);

/// check_gamma is affine in zeta under both pilot-correlation modes:
/// check_gamma = slope*zeta + intercept.
struct ZetaLine {
  double slope;
  double intercept;
};
ZetaLine check_gamma_zeta_line(const SystemParams& p, PilotCorrMode mode);

/// Exact constraint inversion: zeta such that 1/check_gamma == gamma0.
/// Unclamped; may fall outside [max(1, K/tau_c), K].
double zeta_star_unclamped(const SystemParams& p, double gamma0,
                           PilotCorrMode mode);

/// Published reuse-factor closed form (Q1/Q2 compaction), for comparison
/// only.
double zeta_star_paper(const SystemParams& p, double gamma0);

/// EE with zeta substituted to meet the SINR constraint; nullopt when the
/// required zeta falls outside the feasible interval.
std::optional<double> constrained_ee(const SystemParams& p,
                                     const PowerModel& pm, double gamma0,
                                     PilotCorrMode mode,
                                     bool strict_paper = false);

OptimumReport optimal_zeta(const SystemParams& p, const PowerModel& pm,
                           double gamma0,
                           PilotCorrMode mode = PilotCorrMode::kOrthogonalReuse,
                           bool strict_paper = false);

OptimumReport optimal_ap_density(
    const SystemParams& p, const PowerModel& pm, double gamma0,
    PilotCorrMode mode = PilotCorrMode::kOrthogonalReuse,
    bool strict_paper = false);

OptimumReport optimal_n_antennas(
    const SystemParams& p, const PowerModel& pm, double gamma0,
    PilotCorrMode mode = PilotCorrMode::kOrthogonalReuse,
    bool strict_paper = false, int n_max = 256);

/// Uses the Welch-bound pilot-correlation model (the published derivation's
/// route); requires K > 2 for that mode.
OptimumReport optimal_n_users(const SystemParams& p, const PowerModel& pm,
                              double gamma0, bool strict_paper = false,
                              int k_min = 3, int k_max = 64);

/// Exhaustive (integer vars) / dense-grid (continuous vars) maximization of
/// EE over the requested variables. When gamma0 is given, zeta is
/// substituted per grid point (or, when zeta itself is swept, grid points
/// are scored by constraint match). Deterministic tie-break toward smaller
/// variable values.
OptimumReport brute_force_optimum(
    const SystemParams& p, const PowerModel& pm, std::optional<double> gamma0,
    const std::vector<GridSpec>& grids,
    PilotCorrMode mode = PilotCorrMode::kOrthogonalReuse,
    bool strict_paper = false);

/// Alternating single-variable optimization (zeta, lambda, N, K) to a fixed
/// point or 20 rounds; oracle values drive the iteration.
OptimumReport joint_optimize(const SystemParams& p, const PowerModel& pm,
                             double gamma0,
                             PilotCorrMode mode = PilotCorrMode::kOrthogonalReuse,
                             bool strict_paper = false);

CoefficientTable coefficient_table(const SystemParams& p, const PowerModel& pm,
                                   double gamma0);

/// Residual |sum p_i r^i| <= tol * max_i |p_i r^i| for a polynomial root.
bool root_residual_ok(const std::vector<double>& coeffs, double root,
                      double tol = 1e-8);

}  // namespace cellfree::opt

#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "poly.hpp"

namespace cellfree::opt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kArbitrationBand = 0.05;  // oracle-as-arbiter threshold

struct ZetaBounds {
  double lo, hi;
};

ZetaBounds zeta_bounds(const SystemParams& p) {
  return {std::max(1.0, static_cast<double>(p.n_users) / p.tau_c),
          static_cast<double>(p.n_users)};
}

/// EE evaluated at explicit parameters; nullopt where the model rejects them.
std::optional<double> ee_at(const SystemParams& p, const PowerModel& pm,
                            bool strict_paper) {
  try {
    return energy_efficiency(p, pm, ApcMode::kPolynomial, strict_paper).ee;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// Per-AP circuit wattage split into zeta-free and (1/zeta)-scaled parts,
/// consistent with apc_coefficients for the selected coefficient set.
struct PiSplit {
  double zeta_free;
  double inv_zeta;
};

PiSplit pi_split(const SystemParams& p, const PowerModel& pm,
                 bool strict_paper) {
  const double bw = p.bandwidth;
  const double tc = p.tau_c;
  const double xi = p.dl_fraction;
  const double k = p.n_users;
  const double n = p.n_antennas;
  PiSplit s{};
  if (strict_paper) {
    s.zeta_free = (pm.p_fp + pm.p_lo) + (bw / (7.0 * pm.l_ap * tc) + pm.p_ue) * k +
                  pm.p_ap * n + (3.0 * bw / pm.l_ap + 3.0 * bw / (pm.l_ap * tc)) * n * k;
    s.inv_zeta = -xi * p.rho_d_watts / (pm.amp_eff * tc) * k +
                 k * k / (pm.amp_eff * p.rho_tr_watts * tc) +
                 3.0 * bw * (1.0 - xi) / (pm.l_ap * tc) * n * k * k;
  } else {
    s.zeta_free = (pm.p_fp + pm.p_lo) +
                  (bw / (7.0 * pm.l_ap * tc) + xi * p.rho_d_watts / pm.amp_eff +
                   pm.p_ue) * k +
                  pm.p_ap * n +
                  (3.0 * bw * xi / pm.l_ap + 3.0 * bw / (pm.l_ap * tc)) * n * k;
    s.inv_zeta = (p.rho_tr_watts - xi * p.rho_d_watts) / (pm.amp_eff * tc) * k * k +
                 3.0 * bw * (1.0 - xi) / (pm.l_ap * tc) * n * k * k;
  }
  return s;
}

/// Constituents of the affine map check_gamma(zeta) for fixed (lambda, K, N).
struct LineParts {
  double ta0, ta1;  // A-multiplied term: TA = ta0 + ta1/N
  double tz0, tz1;  // zeta-multiplied term: TZ = tz0 + tz1/N
  double a_slope, a_icpt;  // A(zeta) = a_icpt + a_slope*zeta
};

LineParts line_parts(const SystemParams& p, PilotCorrMode mode) {
  const double a = p.pathloss_exp;
  const double api = a * kPi;
  const double k = p.n_users;
  LineParts lp{};
  lp.ta0 = k - 1.0;
  lp.ta1 = (a - 2.0) / (api * p.rho_d);
  lp.tz0 = (k - 1.0) * (a - 2.0) / (api * k * p.rho_tr);
  lp.tz1 = (a - 1.0) / (api * k * p.rho_tr * p.rho_d);
  if (mode == PilotCorrMode::kOrthogonalReuse) {
    lp.a_slope = 1.0;
    lp.a_icpt = 0.0;
  } else {
    if (p.n_users <= 2)
      throw std::domain_error("welch_bound mode requires n_users > 2");
    lp.a_slope = (k - 1.0) / (k * (k - 2.0));
    lp.a_icpt = (k - 3.0) / (k - 2.0);
  }
  return lp;
}

std::string format_interval(double lo, double hi) {
  std::ostringstream os;
  os << "[" << lo << ", " << hi << "]";
  return os.str();
}

}  // namespace

double feasibility_bound(double lambda_ap_m2) {
  if (lambda_ap_m2 <= 0.0)
    throw std::domain_error("feasibility_bound: lambda_ap must be > 0");
  return 1.0 / lambda_ap_m2;
}

double sinr_limit_inf_n(const SystemParams& p) {
  const double a = p.pathloss_exp;
  const double api = a * kPi;
  const double k = p.n_users;
  const double num = api * p.rho_tr * k;
  const double den = api * k *
                         (p.pilot_corr_sum * (k - 1.0) + k * p.ap_density) *
                         p.rho_tr +
                     (a - 2.0) * (k - 1.0) * p.pilot_reuse;
  if (den == 0.0) throw std::domain_error("sinr_limit_inf_n: zero denominator");
  return num / den;
}

ZetaLine check_gamma_zeta_line(const SystemParams& p, PilotCorrMode mode) {
  const LineParts lp = line_parts(p, mode);
  const double n = p.n_antennas;
  const double ta = lp.ta0 + lp.ta1 / n;
  const double tz = lp.tz0 + lp.tz1 / n;
  ZetaLine l{};
  l.slope = lp.a_slope * ta + tz;
  l.intercept = lp.a_icpt * ta + p.ap_density * (p.n_users - 1.0);
  return l;
}

double zeta_star_unclamped(const SystemParams& p, double gamma0,
                           PilotCorrMode mode) {
  if (gamma0 <= 0.0) throw std::domain_error("gamma0 must be > 0");
  const ZetaLine l = check_gamma_zeta_line(p, mode);
  double z = (1.0 / gamma0 - l.intercept) / l.slope;
  if (mode == PilotCorrMode::kWelchBound) {
    // below zeta = K/(K-1) the Welch value dips under the self-term floor
    // and A clamps to 1; the map stays continuous and increasing, so the
    // solution moves to the clamped branch
    const double k = p.n_users;
    const double boundary = k / (k - 1.0);
    if (z < boundary) {
      const LineParts lp = line_parts(p, mode);
      const double ta = lp.ta0 + lp.ta1 / p.n_antennas;
      const double tz = lp.tz0 + lp.tz1 / p.n_antennas;
      z = (1.0 / gamma0 - ta - p.ap_density * (k - 1.0)) / tz;
    }
  }
  return z;
}

double zeta_star_paper(const SystemParams& p, double gamma0) {
  const double a = p.pathloss_exp;
  const double api = a * kPi;
  const double k = p.n_users;
  const double n = p.n_antennas;
  const double A = p.pilot_corr_sum;
  const double q1 = k * p.rho_tr *
                    ((a - 2.0) * A +
                     api * n * p.rho_d * (k - 1.0) * (A + p.ap_density));
  const double q2 = (a - 1.0 + n * p.rho_d * (a - 2.0) * (k - 1.0)) / k;
  if (q2 == 0.0) throw std::domain_error("zeta_star_paper: Q2 = 0");
  return (api * k * n * p.rho_tr * p.rho_d - gamma0 * q1) / (gamma0 * q2);
}

std::optional<double> constrained_ee(const SystemParams& p,
                                     const PowerModel& pm, double gamma0,
                                     PilotCorrMode mode, bool strict_paper) {
  double z;
  try {
    z = zeta_star_unclamped(p, gamma0, mode);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  const ZetaBounds zb = zeta_bounds(p);
  const double tol = 1e-9 * std::max(1.0, std::abs(z));
  if (z < zb.lo - tol || z > zb.hi + tol) return std::nullopt;
  z = std::clamp(z, zb.lo, zb.hi);
  try {
    return ee_at(with_pilot_reuse(p, z, mode), pm, strict_paper);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

OptimumReport optimal_zeta(const SystemParams& p, const PowerModel& pm,
                           double gamma0, PilotCorrMode mode,
                           bool strict_paper) {
  OptimumReport r;
  r.variable = "zeta";
  const ZetaBounds zb = zeta_bounds(p);
  r.feasible_interval = {zb.lo, zb.hi};

  const double z_exact = zeta_star_unclamped(p, gamma0, mode);
  const double tol = 1e-9 * std::max(1.0, std::abs(z_exact));
  if (z_exact < zb.lo - tol || z_exact > zb.hi + tol)
    throw FeasibilityError(
        "optimal_zeta: required pilot reuse outside " +
        format_interval(zb.lo, zb.hi) + " for the requested SINR target");
  r.closed_form_value = std::clamp(z_exact, zb.lo, zb.hi);

  // independent oracle: bisection on the constraint residual itself
  auto residual = [&](double z) {
    return 1.0 / check_gamma(with_pilot_reuse(p, z, mode)) - gamma0;
  };
  double lo = zb.lo, hi = zb.hi;
  double flo = residual(lo), fhi = residual(hi);
  double z_oracle;
  if (flo <= 0.0)
    z_oracle = lo;  // constraint saturated at the most-orthogonal end
  else if (fhi >= 0.0)
    z_oracle = hi;
  else {
    for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
      const double m = 0.5 * (lo + hi);
      if (residual(m) > 0.0)
        lo = m;
      else
        hi = m;
    }
    z_oracle = 0.5 * (lo + hi);
  }
  r.oracle_value = z_oracle;

  const auto obj_cf =
      ee_at(with_pilot_reuse(p, r.closed_form_value, mode), pm, strict_paper);
  const auto obj_or =
      ee_at(with_pilot_reuse(p, z_oracle, mode), pm, strict_paper);
  r.objective_at_closed_form = obj_cf.value_or(kNaN);
  r.objective_at_oracle = obj_or.value_or(kNaN);

  const double achieved =
      1.0 / check_gamma(with_pilot_reuse(p, r.closed_form_value, mode));
  const double inv_err = std::abs(achieved - gamma0) / gamma0;
  r.closed_form_applicable = std::isfinite(r.closed_form_value) && inv_err <= 1e-9;
  r.agreement = std::abs(r.closed_form_value - z_oracle) <=
                1e-6 * std::max(1.0, std::abs(z_oracle));
  r.authoritative_value = r.closed_form_applicable ? r.closed_form_value : z_oracle;
  try {
    r.paper_form_value = zeta_star_paper(p, gamma0);
  } catch (const std::exception&) {
    r.paper_form_value = kNaN;
  }
  std::ostringstream d;
  d << "constraint inversion rel err " << inv_err;
  r.diagnostics = d.str();
  return r;
}

namespace {

/// Shared pieces of the constrained EE ratio in one free variable.
struct ConstrainedContext {
  double zmin, zmax;
  double w;        // K / tau_c
  double l0;       // log2(1 + gamma0)
  double c1;       // Bw*(K/S)*L0
  double bp;       // backhaul coefficient times c1
  PiSplit pi;
};

ConstrainedContext make_context(const SystemParams& p, const PowerModel& pm,
                                double gamma0, bool strict_paper) {
  ConstrainedContext c{};
  const ZetaBounds zb = zeta_bounds(p);
  c.zmin = zb.lo;
  c.zmax = zb.hi;
  c.w = p.n_users / static_cast<double>(p.tau_c);
  c.l0 = std::log2(1.0 + gamma0);
  c.c1 = p.bandwidth * p.n_users / p.area * c.l0;
  c.bp = pm.backhaul_sum() * c.c1;
  c.pi = pi_split(p, pm, strict_paper);
  return c;
}

}  // namespace

OptimumReport optimal_ap_density(const SystemParams& p, const PowerModel& pm,
                                 double gamma0, PilotCorrMode mode,
                                 bool strict_paper) {
  OptimumReport r;
  r.variable = "lambda";
  const double k = p.n_users;
  const ConstrainedContext cc = make_context(p, pm, gamma0, strict_paper);
  const LineParts lp = line_parts(p, mode);
  const double n = p.n_antennas;
  const double ta = lp.ta0 + lp.ta1 / n;
  const double tz = lp.tz0 + lp.tz1 / n;
  const double slope = lp.a_slope * ta + tz;          // d check_gamma / d zeta
  const double icpt0 = lp.a_icpt * ta;                // intercept minus lambda part
  const double g1 = 1.0 / gamma0 - icpt0;

  // practical search window: 1 AP/km2 and up, unless the constraint itself
  // forces sparser deployments
  constexpr double kPracticalFloor = 1e-6;  // 1/m^2
  double lam_lo, lam_hi;
  if (k > 1.0) {
    // zeta*(lam) = (g1 - lam(K-1))/slope in [zmin, zmax]
    lam_lo = (g1 - cc.zmax * slope) / (k - 1.0);
    lam_hi = (g1 - cc.zmin * slope) / (k - 1.0);
  } else {
    // single user: the constraint does not involve lambda
    lam_lo = kPracticalFloor;
    lam_hi = 1e-2;
  }
  if (lam_hi >= kPracticalFloor)
    lam_lo = std::max(lam_lo, kPracticalFloor);
  else
    lam_lo = std::max(lam_lo, 1e-12);
  if (!(lam_hi > lam_lo))
    throw FeasibilityError("optimal_ap_density: empty feasible density range");
  r.feasible_interval = {lam_lo, lam_hi};

  auto objective = [&](double lam) -> double {
    SystemParams q = p;
    q.ap_density = lam;
    return constrained_ee(q, pm, gamma0, mode, strict_paper)
        .value_or(-std::numeric_limits<double>::infinity());
  };

  // closed-form candidates: feasible endpoints plus the stationary points of
  // the rational EE(lambda) (quadratic after clearing denominators)
  std::vector<double> cands{lam_lo, lam_hi};
  if (k > 1.0) {
    const double gw = g1 - cc.w * slope;
    const double a2 = cc.pi.zeta_free * (k - 1.0) * (k - 1.0);
    const double b2 = -2.0 * cc.pi.zeta_free * (k - 1.0) * gw;
    const double c2 = gw * (cc.pi.zeta_free * g1 + cc.pi.inv_zeta * slope);
    const double disc = b2 * b2 - 4.0 * a2 * c2;
    if (disc >= 0.0 && a2 != 0.0) {
      for (double s : {1.0, -1.0}) {
        const double root = (-b2 + s * std::sqrt(disc)) / (2.0 * a2);
        if (root > lam_lo && root < lam_hi) cands.push_back(root);
      }
    }
  }
  std::sort(cands.begin(), cands.end());
  double best_v = kNaN, best_o = -std::numeric_limits<double>::infinity();
  for (double v : cands) {
    const double o = objective(v);
    if (std::isfinite(o) && o > best_o) {
      best_o = o;
      best_v = v;
    }
  }
  r.closed_form_value = best_v;
  r.objective_at_closed_form = std::isfinite(best_o) ? best_o : kNaN;

  // oracle: dense grid plus golden-section refinement
  double g_best = -std::numeric_limits<double>::infinity(), g_arg = lam_lo;
  const int kGrid = 200;
  for (int i = 0; i <= kGrid; ++i) {
    const double lam =
        lam_lo * std::pow(lam_hi / lam_lo, static_cast<double>(i) / kGrid);
    const double o = objective(lam);
    if (std::isfinite(o) && o > g_best) {
      g_best = o;
      g_arg = lam;
    }
  }
  const double span = (lam_hi - lam_lo) / kGrid;
  const double refined = poly::golden_section_max(
      objective, std::max(lam_lo, g_arg - span), std::min(lam_hi, g_arg + span),
      1e-12);
  if (objective(refined) > g_best) {
    g_best = objective(refined);
    g_arg = refined;
  }
  r.oracle_value = g_arg;
  r.objective_at_oracle = g_best;

  r.closed_form_applicable =
      std::isfinite(r.closed_form_value) &&
      r.closed_form_value >= lam_lo - 1e-15 &&
      r.closed_form_value <= lam_hi * (1.0 + 1e-12) &&
      std::isfinite(r.objective_at_closed_form) &&
      std::abs(r.objective_at_closed_form - r.objective_at_oracle) <=
          kArbitrationBand * std::abs(r.objective_at_oracle);
  r.agreement = r.closed_form_applicable;
  r.authoritative_value =
      r.closed_form_applicable ? r.closed_form_value : r.oracle_value;

  // published density closed form, diagnostic only
  try {
    const CoefficientTable t = coefficient_table(p, pm, gamma0);
    const double sq = t.a2 * t.a3 * t.a4 * (t.a1 + t.a3) * t.g;
    r.paper_form_value = sq >= 0.0 && t.a2 * t.a4 * t.g != 0.0
                             ? ((t.a1 + t.a3) * t.g + std::sqrt(sq)) /
                                   (t.a2 * t.a4 * t.g)
                             : kNaN;
  } catch (const std::exception&) {
    r.paper_form_value = kNaN;
  }
  std::ostringstream d;
  d << "candidates evaluated: " << cands.size();
  if (!r.closed_form_applicable) d << "; closed form inapplicable, oracle authoritative";
  r.diagnostics = d.str();
  return r;
}

OptimumReport optimal_n_antennas(const SystemParams& p, const PowerModel& pm,
                                 double gamma0, PilotCorrMode mode,
                                 bool strict_paper, int n_max) {
  OptimumReport r;
  r.variable = "N";
  const double k = p.n_users;
  const ConstrainedContext cc = make_context(p, pm, gamma0, strict_paper);
  const LineParts lp = line_parts(p, mode);

  // zeta*(N) = (u0*N + u1)/(s0*N + s1)
  const double u0 = 1.0 / gamma0 - p.ap_density * (k - 1.0) - lp.a_icpt * lp.ta0;
  const double u1 = -lp.a_icpt * lp.ta1;
  const double s0 = lp.a_slope * lp.ta0 + lp.tz0;
  const double s1 = lp.a_slope * lp.ta1 + lp.tz1;

  auto objective = [&](int nn) -> double {
    SystemParams q = p;
    q.n_antennas = nn;
    return constrained_ee(q, pm, gamma0, mode, strict_paper)
        .value_or(-std::numeric_limits<double>::infinity());
  };

  // numerator of (1 - ebar): a*N + b, after clearing (u0*N + u1)
  const double a = u0 - cc.w * s0;
  const double b = u1 - cc.w * s1;
  // per-AP wattage split in N: zeta_free = zf0 + zf1*N, inv_zeta = iz0 + iz1*N
  SystemParams p1 = p;
  p1.n_antennas = 1;
  SystemParams p2 = p;
  p2.n_antennas = 2;
  const PiSplit s_n1 = pi_split(p1, pm, strict_paper);
  const PiSplit s_n2 = pi_split(p2, pm, strict_paper);
  const double zf1 = s_n2.zeta_free - s_n1.zeta_free;
  const double zf0 = s_n1.zeta_free - zf1;
  const double iz1 = s_n2.inv_zeta - s_n1.inv_zeta;
  const double iz0 = s_n1.inv_zeta - iz1;
  const double lam = p.ap_density;
  const double q2 = lam * (zf1 * u0 + iz1 * s0);
  const double q1 = lam * (zf0 * u0 + zf1 * u1 + iz0 * s0 + iz1 * s1) + cc.bp * a;
  const double q0 = lam * (zf0 * u1 + iz0 * s1) + cc.bp * b;

  std::vector<int> cands{1, n_max};
  // stationary points: a*q2*N^2 + 2*b*q2*N - (a*q0 - b*q1) = 0
  const double qa = a * q2, qb = 2.0 * b * q2, qc = -(a * q0 - b * q1);
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc >= 0.0 && qa != 0.0) {
    for (double s : {1.0, -1.0}) {
      const double root = (-qb + s * std::sqrt(disc)) / (2.0 * qa);
      if (root >= 1.0 && root <= n_max) {
        cands.push_back(static_cast<int>(std::floor(root)));
        cands.push_back(static_cast<int>(std::ceil(root)));
      }
    }
  }
  // feasibility boundaries: zeta*(N) = zmin and zmax
  for (double zb : {cc.zmin, cc.zmax}) {
    const double den = u0 - zb * s0;
    if (den != 0.0) {
      const double nb = (zb * s1 - u1) / den;
      if (nb >= 1.0 && nb <= n_max) {
        cands.push_back(static_cast<int>(std::floor(nb)));
        cands.push_back(static_cast<int>(std::ceil(nb)));
      }
    }
  }
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  double best_o = -std::numeric_limits<double>::infinity();
  int best_n = 0;
  for (int nn : cands) {
    if (nn < 1 || nn > n_max) continue;
    const double o = objective(nn);
    if (std::isfinite(o) && o > best_o) {
      best_o = o;
      best_n = nn;
    }
  }
  r.closed_form_value = best_n > 0 ? best_n : kNaN;
  r.objective_at_closed_form = best_n > 0 ? best_o : kNaN;

  // oracle: exhaustive integer sweep
  double or_best = -std::numeric_limits<double>::infinity();
  int or_n = 0;
  for (int nn = 1; nn <= n_max; ++nn) {
    const double o = objective(nn);
    if (std::isfinite(o) && o > or_best) {
      or_best = o;
      or_n = nn;
    }
  }
  if (or_n == 0)
    throw FeasibilityError("optimal_n_antennas: no feasible antenna count");
  r.oracle_value = or_n;
  r.objective_at_oracle = or_best;
  r.feasible_interval = {1.0, static_cast<double>(n_max)};

  r.closed_form_applicable =
      best_n > 0 && std::isfinite(r.objective_at_closed_form) &&
      std::abs(r.objective_at_closed_form - r.objective_at_oracle) <=
          kArbitrationBand * std::abs(r.objective_at_oracle);
  r.agreement = r.closed_form_applicable;
  r.authoritative_value = r.closed_form_applicable ? r.closed_form_value
                                                   : r.oracle_value;

  // published antenna-count closed form, diagnostic only
  try {
    const CoefficientTable t = coefficient_table(p, pm, gamma0);
    if (t.q2 != 0.0 && t.q3 >= 0.0) {
      const double n0 = (t.q1 - std::sqrt(t.q3)) / t.q2;
      const double n1 = (t.b1 + t.b3) / (t.b4 - t.b2);
      const double n2 = (k / p.tau_c * t.b1 + t.b3) / (t.b4 - k / p.tau_c * t.b2);
      r.paper_form_value = std::min(std::max(n0, n1), n2);
    } else {
      r.paper_form_value = kNaN;
    }
  } catch (const std::exception&) {
    r.paper_form_value = kNaN;
  }
  std::ostringstream d;
  d << "candidates: " << cands.size();
  if (!r.closed_form_applicable) d << "; closed form inapplicable, oracle authoritative";
  r.diagnostics = d.str();
  return r;
}

namespace {

// Low-degree long-double polynomial helpers for the K-variable closed form.
// A generic rational-function assembly carries redundant factors whose
// coefficient spread swallows the small-K stationary points in rounding
// noise, so the polynomials are built at minimal degree instead.
using LPoly = std::vector<long double>;

LPoly lmul(const LPoly& a, const LPoly& b) {
  LPoly r(a.size() + b.size() - 1, 0.0L);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}
LPoly ladd(const LPoly& a, const LPoly& b) {
  LPoly r(std::max(a.size(), b.size()), 0.0L);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}
LPoly lsub(const LPoly& a, const LPoly& b) {
  LPoly r(std::max(a.size(), b.size()), 0.0L);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return r;
}
LPoly lscale(const LPoly& a, long double s) {
  LPoly r = a;
  for (auto& v : r) v *= s;
  return r;
}
LPoly lder(const LPoly& a) {
  if (a.size() <= 1) return {0.0L};
  LPoly r(a.size() - 1);
  for (size_t i = 1; i < a.size(); ++i)
    r[i - 1] = a[i] * static_cast<long double>(i);
  return r;
}
long double leval(const LPoly& a, long double x) {
  long double v = 0.0L;
  for (auto it = a.rbegin(); it != a.rend(); ++it) v = v * x + *it;
  return v;
}
std::vector<double> lroots(const LPoly& c, double lo, double hi) {
  return poly::find_roots_bracketed(
      [&c](double x) { return static_cast<double>(leval(c, x)); }, lo, hi);
}

struct KBranchPolys {
  LPoly zn, zd;          // zeta*(K) = zn/zd on this branch
  LPoly ee_num, ee_den;  // EE(K), up to a positive constant factor
};

/// Constrained EE as a ratio of polynomials in real-valued K for one branch
/// of the Welch pilot-correlation model: the active bound, or the region
/// where it clamps at the self-term floor A = 1.
KBranchPolys k_branch_polys(const SystemParams& p, const PowerModel& pm,
                            double gamma0, bool strict_paper, bool clamped) {
  const long double a = p.pathloss_exp;
  const long double api = a * static_cast<long double>(kPi);
  const long double n = p.n_antennas;
  const long double tc = p.tau_c;
  const long double lam = p.ap_density;
  const long double bw = p.bandwidth;
  const long double xi = p.dl_fraction;
  const long double g = 1.0L / static_cast<long double>(gamma0);
  const long double ca = (a - 2.0L) / (api * n * (long double)p.rho_d);
  const long double cb = (a - 1.0L) / (n * (long double)p.rho_d);
  const long double cz = api * (long double)p.rho_tr;

  const LPoly ta{ca - 1.0L, 1.0L};  // K - 1 + ca
  const LPoly glam{g + lam, -lam};  // g - lam*(K-1)
  KBranchPolys out;
  if (!clamped) {
    // active bound: clear cz*K^2*(K-2) from the constraint, cancel one K
    out.zn = lscale(lmul(LPoly{0.0L, 1.0L},
                         lsub(lmul(glam, LPoly{-2.0L, 1.0L}),
                              lmul(ta, LPoly{-3.0L, 1.0L}))),
                    cz);
    out.zd = ladd(lscale(lmul(ta, LPoly{-1.0L, 1.0L}), cz),
                  lmul(LPoly{-2.0L, 1.0L},
                       ladd(lscale(LPoly{-1.0L, 1.0L}, a - 2.0L), LPoly{cb})));
  } else {
    // A = 1: clear cz*K
    out.zn = lscale(lmul(LPoly{0.0L, 1.0L}, lsub(glam, ta)), cz);
    out.zd = ladd(lscale(LPoly{-1.0L, 1.0L}, a - 2.0L), LPoly{cb});
  }
  // rate prefactor numerator over the shared denominator tc*zn
  const LPoly fr = lsub(lscale(out.zn, tc), lmul(LPoly{0.0L, 1.0L}, out.zd));
  const long double l0 = std::log2(1.0L + (long double)gamma0);
  const LPoly ba = lscale(lmul(LPoly{0.0L, 1.0L}, fr), bw * l0 / p.area);

  LPoly cf, ci;  // circuit watts: cf(K) + ci(K)/zeta
  if (strict_paper) {
    cf = {pm.p_fp + pm.p_lo + pm.p_ap * (double)n,
          (double)(bw / (7.0L * pm.l_ap * tc) + pm.p_ue +
                   (3.0L * bw / pm.l_ap + 3.0L * bw / (pm.l_ap * tc)) * n)};
    ci = {0.0L, -xi * p.rho_d_watts / (pm.amp_eff * tc),
          1.0L / ((long double)pm.amp_eff * p.rho_tr_watts * tc) +
              3.0L * bw * (1.0L - xi) * n / (pm.l_ap * tc)};
  } else {
    cf = {pm.p_fp + pm.p_lo + pm.p_ap * (double)n,
          (double)(bw / (7.0L * pm.l_ap * tc) + xi * p.rho_d_watts / pm.amp_eff +
                   pm.p_ue +
                   (3.0L * bw * xi / pm.l_ap + 3.0L * bw / (pm.l_ap * tc)) * n)};
    ci = {0.0L, 0.0L,
          (p.rho_tr_watts - xi * p.rho_d_watts) / (pm.amp_eff * tc) +
              3.0L * bw * (1.0L - xi) * n / (pm.l_ap * tc)};
  }
  const LPoly apc =
      ladd(lscale(ladd(lmul(cf, out.zn), lmul(ci, out.zd)), lam * tc),
           lscale(ba, pm.backhaul_sum()));
  out.ee_num = ba;
  out.ee_den = apc;
  return out;
}

}  // namespace

OptimumReport optimal_n_users(const SystemParams& p, const PowerModel& pm,
                              double gamma0, bool strict_paper, int k_min,
                              int k_max) {
  OptimumReport r;
  r.variable = "K";
  const PilotCorrMode mode = PilotCorrMode::kWelchBound;
  k_min = std::max(k_min, 3);  // Welch mode needs K > 2
  r.feasible_interval = {static_cast<double>(k_min), static_cast<double>(k_max)};

  auto objective = [&](int kk) -> double {
    SystemParams q = p;
    q.n_users = kk;
    return constrained_ee(q, pm, gamma0, mode, strict_paper)
        .value_or(-std::numeric_limits<double>::infinity());
  };

  std::vector<int> cands{k_min, k_max};
  const double scan_lo = 2.0 + 1e-6;  // Welch form has a pole at K = 2
  const double scan_hi = 10.0 * k_max;
  auto push_root = [&](double root) {
    if (root >= k_min - 1.0 && root <= k_max + 1.0) {
      cands.push_back(static_cast<int>(std::floor(root)));
      cands.push_back(static_cast<int>(std::ceil(root)));
    }
  };
  size_t dnum_degree = 0;
  for (bool clamped : {false, true}) {
    const KBranchPolys kb =
        k_branch_polys(p, pm, gamma0, strict_paper, clamped);
    // stationary points of the EE ratio on this branch
    const LPoly dnum = lsub(lmul(lder(kb.ee_num), kb.ee_den),
                            lmul(kb.ee_num, lder(kb.ee_den)));
    dnum_degree = std::max(dnum_degree, dnum.size() - 1);
    for (double root : lroots(dnum, scan_lo, scan_hi)) push_root(root);
    // feasibility boundaries zeta* = 1, zeta* = K, tau_c*zeta* = K, and the
    // switch to the clamped branch zeta* = K/(K-1)
    const LPoly b1 = lsub(kb.zn, kb.zd);
    const LPoly b2 = lsub(kb.zn, lmul(LPoly{0.0L, 1.0L}, kb.zd));
    const LPoly b3 = lsub(lscale(kb.zn, (long double)p.tau_c),
                          lmul(LPoly{0.0L, 1.0L}, kb.zd));
    const LPoly b4 = lsub(lmul(kb.zn, LPoly{-1.0L, 1.0L}),
                          lmul(LPoly{0.0L, 1.0L}, kb.zd));
    for (const auto& bp : {b1, b2, b3, b4})
      for (double root : lroots(bp, scan_lo, scan_hi)) push_root(root);
  }
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  double best_o = -std::numeric_limits<double>::infinity();
  int best_k = 0;
  for (int kk : cands) {
    if (kk < k_min || kk > k_max) continue;
    const double o = objective(kk);
    if (std::isfinite(o) && o > best_o) {
      best_o = o;
      best_k = kk;
    }
  }
  r.closed_form_value = best_k > 0 ? best_k : kNaN;
  r.objective_at_closed_form = best_k > 0 ? best_o : kNaN;

  double or_best = -std::numeric_limits<double>::infinity();
  int or_k = 0;
  for (int kk = k_min; kk <= k_max; ++kk) {
    const double o = objective(kk);
    if (std::isfinite(o) && o > or_best) {
      or_best = o;
      or_k = kk;
    }
  }
  if (or_k == 0)
    throw FeasibilityError("optimal_n_users: no feasible user count");
  r.oracle_value = or_k;
  r.objective_at_oracle = or_best;
  r.closed_form_applicable =
      best_k > 0 &&
      std::abs(r.objective_at_closed_form - r.objective_at_oracle) <=
          kArbitrationBand * std::abs(r.objective_at_oracle);
  r.agreement = r.closed_form_applicable;
  r.authoritative_value =
      r.closed_form_applicable ? r.closed_form_value : r.oracle_value;

  // published quintic coefficient mapping, diagnostic only
  try {
    const CoefficientTable t = coefficient_table(p, pm, gamma0);
    const std::vector<double> pc{t.p0, t.p1, t.p2, t.p3, t.p4, t.p5};
    const auto roots = poly::find_roots_bracketed(pc, 0.0, 10.0 * k_max);
    double best_paper = kNaN, best_paper_o = -1.0;
    for (double root : roots) {
      if (!root_residual_ok(pc, root)) continue;
      const int kk = static_cast<int>(std::lround(root));
      if (kk < k_min || kk > k_max) continue;
      const double o = objective(kk);
      if (std::isfinite(o) && o > best_paper_o) {
        best_paper_o = o;
        best_paper = root;
      }
    }
    r.paper_form_value = best_paper;
  } catch (const std::exception&) {
    r.paper_form_value = kNaN;
  }
  std::ostringstream d;
  d << "derivative polynomial degree " << dnum_degree << ", candidates "
    << cands.size();
  if (!r.closed_form_applicable) d << "; closed form inapplicable, oracle authoritative";
  r.diagnostics = d.str();
  return r;
}

OptimumReport brute_force_optimum(const SystemParams& p, const PowerModel& pm,
                                  std::optional<double> gamma0,
                                  const std::vector<GridSpec>& grids,
                                  PilotCorrMode mode, bool strict_paper) {
  if (grids.empty())
    throw std::invalid_argument("brute_force_optimum: no grids given");
  for (const auto& g : grids)
    if (!(g.hi >= g.lo) || g.steps < 1)
      throw std::invalid_argument("brute_force_optimum: bad grid for " +
                                  g.variable);

  std::vector<std::vector<double>> values(grids.size());
  for (size_t i = 0; i < grids.size(); ++i) {
    const auto& g = grids[i];
    const bool integer = g.variable == "K" || g.variable == "N";
    for (int s = 0; s <= g.steps; ++s) {
      double v = g.log_scale
                     ? g.lo * std::pow(g.hi / g.lo, static_cast<double>(s) / g.steps)
                     : g.lo + (g.hi - g.lo) * static_cast<double>(s) / g.steps;
      if (integer) v = std::round(v);
      values[i].push_back(v);
    }
    auto& vv = values[i];
    vv.erase(std::unique(vv.begin(), vv.end()), vv.end());
  }

  const bool zeta_free =
      std::any_of(grids.begin(), grids.end(),
                  [](const GridSpec& g) { return g.variable == "zeta"; });

  OptimumReport r;
  r.variable = grids[0].variable;
  for (size_t i = 1; i < grids.size(); ++i) r.variable += "," + grids[i].variable;

  double best_obj = -std::numeric_limits<double>::infinity();
  double best_match = std::numeric_limits<double>::infinity();
  std::vector<double> best_point;
  size_t feasible_count = 0;

  std::vector<size_t> idx(grids.size(), 0);
  const auto total = [&] {
    size_t t = 1;
    for (const auto& vv : values) t *= vv.size();
    return t;
  }();
  for (size_t flat = 0; flat < total; ++flat) {
    size_t rem = flat;
    for (size_t i = grids.size(); i-- > 0;) {
      idx[i] = rem % values[i].size();
      rem /= values[i].size();
    }
    SystemParams q = p;
    for (size_t i = 0; i < grids.size(); ++i) {
      const double v = values[i][idx[i]];
      const auto& name = grids[i].variable;
      if (name == "zeta")
        q = with_pilot_reuse(q, v, mode);
      else if (name == "lambda")
        q.ap_density = v;
      else if (name == "K") {
        q.n_users = static_cast<int>(v);
        q.pilot_corr_sum = pilot_corr_sum_for(q.n_users, q.pilot_reuse, mode);
      } else if (name == "N")
        q.n_antennas = static_cast<int>(v);
      else
        throw std::invalid_argument("brute_force_optimum: unknown variable " +
                                    name);
    }
    std::optional<double> obj;
    double match = 0.0;
    if (gamma0 && zeta_free) {
      // score by constraint match at the point's own zeta
      try {
        match = std::abs(1.0 / check_gamma(q) - *gamma0);
        obj = ee_at(q, pm, strict_paper);
      } catch (const std::exception&) {
      }
    } else if (gamma0) {
      obj = constrained_ee(q, pm, *gamma0, mode, strict_paper);
    } else {
      try {
        q.validate();
        obj = ee_at(q, pm, strict_paper);
      } catch (const std::exception&) {
      }
    }
    if (!obj || !std::isfinite(*obj)) continue;
    ++feasible_count;
    bool better;
    if (gamma0 && zeta_free)
      better = match < best_match - 1e-18 ||
               (match <= best_match && *obj > best_obj);
    else
      better = *obj > best_obj;
    if (better) {
      best_obj = *obj;
      best_match = match;
      best_point.clear();
      for (size_t i = 0; i < grids.size(); ++i)
        best_point.push_back(values[i][idx[i]]);
    }
  }
  if (feasible_count == 0)
    throw FeasibilityError("brute_force_optimum: empty feasible grid");

  r.oracle_value = best_point[0];
  r.objective_at_oracle = best_obj;
  r.closed_form_value = kNaN;
  r.objective_at_closed_form = kNaN;
  r.closed_form_applicable = false;
  r.agreement = false;
  r.authoritative_value = best_point[0];
  r.feasible_interval = {grids[0].lo, grids[0].hi};
  std::ostringstream d;
  d << "feasible points " << feasible_count << "/" << total << "; argmax (";
  for (size_t i = 0; i < best_point.size(); ++i) {
    if (i) d << ", ";
    d << grids[i].variable << "=" << best_point[i];
  }
  d << ")";
  r.diagnostics = d.str();
  r.trace_ee.push_back({best_point[0], best_obj});
  if (best_point.size() > 1) r.trace_ee.push_back({best_point[1], best_obj});
  return r;
}

OptimumReport joint_optimize(const SystemParams& p, const PowerModel& pm,
                             double gamma0, PilotCorrMode mode,
                             bool strict_paper) {
  OptimumReport r;
  r.variable = "joint";
  SystemParams cur = p;

  auto current_ee = [&]() -> double {
    return constrained_ee(cur, pm, gamma0, mode, strict_paper)
        .value_or(-std::numeric_limits<double>::infinity());
  };

  // enforce the constraint once; afterwards every candidate evaluation
  // re-substitutes zeta
  {
    const double z = zeta_star_unclamped(cur, gamma0, mode);
    const ZetaBounds zb = zeta_bounds(cur);
    if (z < zb.lo - 1e-9 || z > zb.hi + 1e-9)
      throw FeasibilityError("joint_optimize: infeasible starting point");
    cur = with_pilot_reuse(cur, std::clamp(z, zb.lo, zb.hi), mode);
  }
  double ee_now = current_ee();
  r.trace_ee.push_back({0.0, ee_now});

  int round = 0;
  for (; round < 20; ++round) {
    bool improved = false;
    // lambda step
    try {
      const OptimumReport lr =
          optimal_ap_density(cur, pm, gamma0, mode, strict_paper);
      SystemParams cand = cur;
      cand.ap_density = lr.authoritative_value;
      const double v = constrained_ee(cand, pm, gamma0, mode, strict_paper)
                           .value_or(-std::numeric_limits<double>::infinity());
      if (v > ee_now * (1.0 + 1e-12)) {
        cur = cand;
        ee_now = v;
        improved = true;
      }
    } catch (const std::exception&) {
    }
    // N step
    try {
      const OptimumReport nr =
          optimal_n_antennas(cur, pm, gamma0, mode, strict_paper);
      SystemParams cand = cur;
      cand.n_antennas = static_cast<int>(nr.authoritative_value);
      const double v = constrained_ee(cand, pm, gamma0, mode, strict_paper)
                           .value_or(-std::numeric_limits<double>::infinity());
      if (v > ee_now * (1.0 + 1e-12)) {
        cur = cand;
        ee_now = v;
        improved = true;
      }
    } catch (const std::exception&) {
    }
    // K step: integer sweep under the caller's pilot-correlation mode
    {
      double best = ee_now;
      int best_k = cur.n_users;
      for (int kk = 2; kk <= 64; ++kk) {
        SystemParams cand = cur;
        cand.n_users = kk;
        try {
          cand.pilot_corr_sum =
              pilot_corr_sum_for(kk, cand.pilot_reuse, mode);
        } catch (const std::exception&) {
          continue;
        }
        const double v = constrained_ee(cand, pm, gamma0, mode, strict_paper)
                             .value_or(-std::numeric_limits<double>::infinity());
        if (v > best * (1.0 + 1e-12)) {
          best = v;
          best_k = kk;
        }
      }
      if (best_k != cur.n_users) {
        cur.n_users = best_k;
        cur.pilot_corr_sum = pilot_corr_sum_for(best_k, cur.pilot_reuse, mode);
        ee_now = best;
        improved = true;
      }
    }
    r.trace_ee.push_back({static_cast<double>(round + 1), ee_now});
    if (!improved) break;
  }

  r.oracle_value = cur.ap_density;
  r.objective_at_oracle = ee_now;
  r.closed_form_value = kNaN;
  r.objective_at_closed_form = kNaN;
  r.authoritative_value = cur.ap_density;
  r.closed_form_applicable = false;
  r.agreement = true;
  std::ostringstream d;
  d << "converged after " << round + 1 << " rounds; final lambda="
    << cur.ap_density << " 1/m^2, N=" << cur.n_antennas
    << ", K=" << cur.n_users << ", zeta="
    << zeta_star_unclamped(cur, gamma0, mode) << ", ee=" << ee_now;
  r.diagnostics = d.str();
  return r;
}

CoefficientTable coefficient_table(const SystemParams& p, const PowerModel& pm,
                                   double gamma0) {
  CoefficientTable t{};
  const double a = p.pathloss_exp;
  const double api = a * kPi;
  const double k = p.n_users;
  const double n = p.n_antennas;
  const double tc = p.tau_c;
  const double g = gamma0;
  const double A = p.pilot_corr_sum;
  const double lam = p.ap_density;
  const double rd = p.rho_d;
  const double rtr = p.rho_tr;
  const double bw = p.bandwidth;
  const double xi = p.dl_fraction;
  const double tau_tr = p.tau_tr();
  const double backhaul = pm.backhaul_sum();

  t.cap_q1 = k * rtr * ((a - 2.0) * A + api * n * rd * (k - 1.0) * (A + lam));
  t.cap_q2 = (a - 1.0 + n * rd * (a - 2.0) * (k - 1.0)) / k;

  t.a1 = rtr * tc * k * (api * n * rd - ((a - 2.0) + api * n * rd) * g * A);
  t.a2 = api * g * rd * rtr * tc * k * n * (k - 1.0);
  t.a3 = g * k * n * rd * (a - 1.0 + (k - 1.0) * (a - 2.0));
  const double c11_unnorm = bw / (7.0 * pm.l_ap * tc) + pm.p_ue;
  const double d1 = 3.0 * bw / pm.l_ap + 3.0 * bw / (pm.l_ap * tc);
  t.a4 = (pm.p_fp + pm.p_lo) + c11_unnorm * k + n * (pm.p_ap + d1 * k);
  t.a5 = ((xi - 1.0) * rd + k * rtr) / pm.amp_eff - 3.0 * bw * k * n * xi / pm.l_ap;
  t.a6 = backhaul;
  t.g = t.a2 * (t.a4 + t.a5 + t.a6 * k * std::log(1.0 + g));

  t.b1 = k * (a - 1.0);
  t.b2 = rd * k * (k - 1.0) * (a - 2.0);
  t.b3 = api * rd * rtr * tc * (1.0 - g * (A + lam) * (k - 1.0));
  t.b4 = rtr * tc * g * (a - 2.0) * A;
  t.c11 = c11_unnorm / lam;
  t.c12 = (rd * (1.0 - xi) / pm.amp_eff - (pm.p_fp + pm.p_lo)) / lam;
  t.c22 = rtr / (pm.amp_eff * lam);
  t.d22 = 3.0 * bw * xi / (pm.l_ap * lam);
  t.bar_c11 = t.c12 - (t.c11 + t.c22) * k;
  t.bar_d11 = (pm.p_ap + d1 * k) / lam;
  const double d2 = 3.0 * bw * (xi - 1.0) / (pm.l_ap * p.pilot_reuse * tc);
  t.b5 = ((pm.p_fp + pm.p_lo) + c11_unnorm * k) / lam;
  t.b6 = (pm.p_ap + d1 * k - d2 * k * k) / lam;
  t.b7 = (t.c22 - t.d22 - t.c12) * k * k / lam;
  t.b8 = backhaul / lam;

  t.q1 = t.b3 * t.b3 * t.bar_d11 +
         t.b1 * k * (t.b1 * t.d22 * k * k + t.b4 * t.bar_c11) +
         t.b3 * k * t.b2 * t.bar_c11 + t.b1 * (t.bar_d11 + t.d22 * k);
  t.q2 = 2.0 * (t.b3 + t.b1 * k) * (t.b4 - t.b2 * k) *
         (t.b2 * t.d22 * k * k - t.b4 * t.bar_d11);
  t.q3 = t.q1 * t.q1 + 4.0 * t.q2 * (t.b2 * t.d22 * k * k - t.b4 * t.bar_d11);

  t.e1 = g * n * rd * (a - 2.0);
  t.e2 = g * n * rd * (1.0 - 3.0 * (a - 2.0));
  t.e3 = 2.0 * g * (1.0 - a) - 2.0 * t.b1;
  t.e4 = -api * n * rtr * tc * rd * g * (tau_tr + lam - 1.0);
  t.e6 = (a - 2.0) * (g - 3.0 * tau_tr);
  t.e5 = g * rtr * tc *
             ((a - 2.0) * (tau_tr + 1.0) + api * n * rtr * tc * rd * (tau_tr + g)) -
         t.e6;
  const double c2 = 1.0 / (pm.amp_eff * p.pilot_reuse * rtr * tc);
  t.e7 = ((pm.p_fp + pm.p_lo) + pm.p_ap * n) / lam;
  t.e8 = backhaul / lam;
  t.e9 = (c2 - d2 * n) / lam;
  t.e10 = backhaul / lam;

  t.p0 = t.e1 - t.e2;
  t.p1 = (t.e1 - t.e2) + 2.0 * t.e3;
  t.p2 = 3.0 * (t.e3 - 2.0 * t.e1);
  t.p3 = (t.e2 + t.e1) - t.e1 * t.e3;
  t.p4 = 2.0 * t.e4 * (t.e1 - t.e2);
  t.p5 = (t.e2 - t.e1) - t.e1;
  return t;
}

bool root_residual_ok(const std::vector<double>& coeffs, double root,
                      double tol) {
  double sum = 0.0, max_term = 0.0, x = 1.0;
  for (double c : coeffs) {
    const double term = c * x;
    sum += term;
    max_term = std::max(max_term, std::abs(term));
    x *= root;
  }
  if (max_term == 0.0) return std::abs(sum) <= tol;
  return std::abs(sum) <= tol * max_term;
}

}  // namespace cellfree::opt

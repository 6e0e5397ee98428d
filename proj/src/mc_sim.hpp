#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "model_core.hpp"

namespace cellfree::mc {

/// Counter-based substream generator: every stream is keyed by
/// (seed, stream, substream), so draws are independent of evaluation order
/// and thread count.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream, uint64_t substream = 0);

  uint64_t next_u64();
  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double();
  /// Poisson sample; exact (Knuth with recursive halving for large means).
  int next_poisson(double mean);

 private:
  uint64_t state_;
};

using Point = std::array<double, 2>;

struct NetworkRealization {
  std::vector<Point> ap_positions;    // in [0, torus_side)^2, meters
  std::vector<Point> user_positions;  // K entries
  int m_count = 0;
  double torus_side = 0.0;
  int resample_count = 0;   // M=0 draws rejected before this one
  bool small_m_flag = false;  // M <= 8, outside the law-of-large-numbers regime
};

struct PilotAssignment {
  std::vector<int> pilot_index;  // per user, in [0, n_pilots)
  int n_pilots = 0;
};

struct PathlossTable {
  std::vector<double> l;  // M x K, row-major: min(1, r^-alpha)
  std::vector<double> d;  // M x K: sum_i |psi_i^H psi_k|^2 l_mi + 1/(tau_tr rho_tr)
  int m = 0, k = 0;

  double lv(int mi, int ki) const { return l[mi * k + ki]; }
  double dv(int mi, int ki) const { return d[mi * k + ki]; }
};

enum class PilotPolicy { kRoundRobin, kRandom };

/// Shortest displacement on the torus.
double torus_distance(const Point& a, const Point& b, double side);

/// Draws M ~ Poisson(lambda*S), AP and user coordinates i.i.d. uniform.
/// M = 0 draws are resampled on an incremented substream and counted.
NetworkRealization sample_realization(const SystemParams& p, uint64_t seed,
                                      uint64_t realization_index = 0);

/// Round-robin assigns user u the pilot u mod n_pilots with
/// n_pilots = ceil(tau_tr); random permutes the users first.
PilotAssignment assign_pilots(int n_users, double tau_tr, PilotPolicy policy,
                              uint64_t seed);

PathlossTable pathloss_table(const NetworkRealization& net,
                             const PilotAssignment& pilots,
                             const SystemParams& p);

/// Exact conditional SINR of the typical user for one realization (scalar
/// form). Throws SimulationError on a non-positive denominator, which can
/// arise only from floating-point rounding.
double conditional_sinr(const NetworkRealization& net,
                        const PilotAssignment& pilots, const SystemParams& p,
                        int user_index);

struct RealizationRecord {
  uint64_t index = 0;
  int m = 0;
  double sinr = 0.0;
  double se = 0.0;
  int resamples = 0;
  bool small_m = false;
  bool degenerate = false;
};

struct McOptions {
  int threads = 0;               // 0 = hardware concurrency
  bool typical_at_origin = true; // translate so user 0 sits at the origin
  bool average_over_users = false;
  bool collect_records = false;
  PilotPolicy pilot_policy = PilotPolicy::kRoundRobin;
};

struct McSummary {
  double mean_se = 0.0;
  double stderr_se = 0.0;
  double bound_se = 0.0;   // closed-form lower bound for the same params
  double bound_gap = 0.0;  // mean_se - bound_se
  uint64_t n_requested = 0;
  uint64_t n_used = 0;
  uint64_t degenerate = 0;
  uint64_t resamples = 0;
  uint64_t small_m = 0;
  int threads = 1;
  std::vector<RealizationRecord> records;  // when collect_records
};

/// Average SE over PPP realizations. Aggregation runs in realization-index
/// order, so results are bitwise identical for any worker count. Aborts when
/// more than 0.1% of draws hit the degenerate-denominator guard.
McSummary mc_average_se(const SystemParams& p, uint64_t n_realizations,
                        uint64_t seed, const McOptions& opts = {});

}  // namespace cellfree::mc

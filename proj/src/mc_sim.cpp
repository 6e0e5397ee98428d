#include "mc_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace cellfree::mc {

namespace {

uint64_t splitmix_finalize(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream, uint64_t substream) {
  uint64_t s = splitmix_finalize(seed + 0x9E3779B97F4A7C15ULL);
  s = splitmix_finalize(s ^ (stream + 0xD1B54A32D192ED03ULL));
  state_ = splitmix_finalize(s ^ (substream + 0x8BB84B93962EACC9ULL));
}

uint64_t RngStream::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return splitmix_finalize(state_);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int RngStream::next_poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean > 60.0) {
    const double half = 0.5 * mean;
    return next_poisson(half) + next_poisson(mean - half);
  }
  const double limit = std::exp(-mean);
  double prod = 1.0;
  int count = -1;
  do {
    ++count;
    prod *= next_double();
  } while (prod > limit);
  return count;
}

double torus_distance(const Point& a, const Point& b, double side) {
  double dx = std::abs(a[0] - b[0]);
  double dy = std::abs(a[1] - b[1]);
  dx = std::min(dx, side - dx);
  dy = std::min(dy, side - dy);
  return std::hypot(dx, dy);
}

NetworkRealization sample_realization(const SystemParams& p, uint64_t seed,
                                      uint64_t realization_index) {
  p.validate();
  NetworkRealization net;
  net.torus_side = std::sqrt(p.area);
  const double mean = p.ap_density * p.area;
  for (uint64_t attempt = 0;; ++attempt) {
    RngStream rng(seed, realization_index, attempt);
    const int m = rng.next_poisson(mean);
    if (m == 0) {
      ++net.resample_count;
      continue;
    }
    net.m_count = m;
    net.ap_positions.resize(m);
    for (auto& ap : net.ap_positions) {
      ap[0] = rng.next_double() * net.torus_side;
      ap[1] = rng.next_double() * net.torus_side;
    }
    net.user_positions.resize(p.n_users);
    for (auto& u : net.user_positions) {
      u[0] = rng.next_double() * net.torus_side;
      u[1] = rng.next_double() * net.torus_side;
    }
    break;
  }
  net.small_m_flag = net.m_count <= 8;
  return net;
}

PilotAssignment assign_pilots(int n_users, double tau_tr, PilotPolicy policy,
                              uint64_t seed) {
  if (n_users < 1) throw std::domain_error("assign_pilots: n_users >= 1");
  if (tau_tr < 1.0) throw std::domain_error("assign_pilots: tau_tr >= 1");
  PilotAssignment pa;
  pa.n_pilots = static_cast<int>(std::ceil(tau_tr));
  pa.pilot_index.resize(n_users);
  std::vector<int> order(n_users);
  std::iota(order.begin(), order.end(), 0);
  if (policy == PilotPolicy::kRandom) {
    RngStream rng(seed, /*stream=*/0x70696C6F74ULL);  // dedicated pilot stream
    for (int i = n_users - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_u64() % (i + 1));
      std::swap(order[i], order[j]);
    }
  }
  for (int i = 0; i < n_users; ++i)
    pa.pilot_index[order[i]] = i % pa.n_pilots;
  return pa;
}

PathlossTable pathloss_table(const NetworkRealization& net,
                             const PilotAssignment& pilots,
                             const SystemParams& p) {
  PathlossTable t;
  t.m = net.m_count;
  t.k = p.n_users;
  t.l.resize(static_cast<size_t>(t.m) * t.k);
  t.d.resize(static_cast<size_t>(t.m) * t.k);
  const double noise = 1.0 / (p.tau_tr() * p.rho_tr);
  for (int mi = 0; mi < t.m; ++mi) {
    for (int ki = 0; ki < t.k; ++ki) {
      const double r = torus_distance(net.ap_positions[mi],
                                      net.user_positions[ki], net.torus_side);
      t.l[mi * t.k + ki] = std::min(1.0, std::pow(r, -p.pathloss_exp));
    }
    for (int ki = 0; ki < t.k; ++ki) {
      double acc = 0.0;
      for (int i = 0; i < t.k; ++i)
        if (pilots.pilot_index[i] == pilots.pilot_index[ki])
          acc += t.l[mi * t.k + i];
      t.d[mi * t.k + ki] = acc + noise;
    }
  }
  return t;
}

double conditional_sinr(const NetworkRealization& net,
                        const PilotAssignment& pilots, const SystemParams& p,
                        int user_index) {
  if (net.m_count < 1)
    throw SimulationError("conditional_sinr: requires M >= 1");
  if (user_index < 0 || user_index >= p.n_users)
    throw std::out_of_range("conditional_sinr: user_index");
  const PathlossTable t = pathloss_table(net, pilots, p);
  const int m = t.m, k = t.k;
  const double n = p.n_antennas;
  const double inv_kpd = 1.0 / (k * p.rho_d);

  double t1 = 0.0;
  for (int i = 0; i < k; ++i)
    for (int mi = 0; mi < m; ++mi) {
      const double linv = 1.0 / t.lv(mi, i);
      t1 += t.dv(mi, user_index) * linv * linv *
            (n * t.lv(mi, user_index) + inv_kpd);
    }
  double t2 = 0.0;
  for (int i = 0; i < k; ++i) {
    if (i == user_index) continue;
    double s = 0.0;
    for (int mi = 0; mi < m; ++mi)
      s += t.lv(mi, user_index) / t.lv(mi, i);
    t2 += s * s;
  }
  t2 *= n;
  double t3 = 0.0;
  for (int mi = 0; mi < m; ++mi)
    t3 += t.dv(mi, user_index) / t.lv(mi, user_index);
  t3 *= n;

  const double den = t1 + t2 - t3 + m;
  if (!(den > 0.0)) {
    throw SimulationError(
        "conditional_sinr: non-positive denominator (t1=" + std::to_string(t1) +
        ", t2=" + std::to_string(t2) + ", t3=" + std::to_string(t3) +
        ", M=" + std::to_string(m) + ")");
  }
  return static_cast<double>(m) * m * n / den;
}

namespace {

NetworkRealization translate_to_origin(const NetworkRealization& net,
                                       int user_index) {
  NetworkRealization out = net;
  const Point shift = net.user_positions[user_index];
  auto wrap = [&](double v) {
    double w = std::fmod(v, out.torus_side);
    if (w < 0.0) w += out.torus_side;
    return w;
  };
  for (auto& ap : out.ap_positions) {
    ap[0] = wrap(ap[0] - shift[0]);
    ap[1] = wrap(ap[1] - shift[1]);
  }
  for (auto& u : out.user_positions) {
    u[0] = wrap(u[0] - shift[0]);
    u[1] = wrap(u[1] - shift[1]);
  }
  return out;
}

}  // namespace

McSummary mc_average_se(const SystemParams& p, uint64_t n_realizations,
                        uint64_t seed, const McOptions& opts) {
  if (n_realizations < 1)
    throw std::invalid_argument("mc_average_se: n_realizations >= 1");
  p.validate();

  McSummary sum;
  sum.n_requested = n_realizations;
  const int n_threads =
      opts.threads > 0
          ? opts.threads
          : std::max(1u, std::thread::hardware_concurrency());
  sum.threads = n_threads;

  const PilotAssignment pilots =
      assign_pilots(p.n_users, p.tau_tr(), opts.pilot_policy, seed);

  std::vector<RealizationRecord> recs(n_realizations);
  std::atomic<uint64_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const uint64_t i = cursor.fetch_add(1);
      if (i >= n_realizations) return;
      RealizationRecord rec;
      rec.index = i;
      NetworkRealization net = sample_realization(p, seed, i);
      rec.m = net.m_count;
      rec.resamples = net.resample_count;
      rec.small_m = net.small_m_flag;
      if (opts.typical_at_origin) net = translate_to_origin(net, 0);
      try {
        if (opts.average_over_users) {
          double acc = 0.0;
          for (int u = 0; u < p.n_users; ++u)
            acc += se_from_sinr(conditional_sinr(net, pilots, p, u), p.n_users,
                                p.pilot_reuse, p.tau_c);
          rec.se = acc / p.n_users;
          rec.sinr = conditional_sinr(net, pilots, p, 0);
        } else {
          rec.sinr = conditional_sinr(net, pilots, p, 0);
          rec.se = se_from_sinr(rec.sinr, p.n_users, p.pilot_reuse, p.tau_c);
        }
      } catch (const SimulationError&) {
        rec.degenerate = true;
      }
      recs[i] = rec;
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // fixed-order aggregation (two-pass for a deterministic variance)
  uint64_t used = 0;
  double mean = 0.0;
  for (const auto& rec : recs) {
    sum.resamples += rec.resamples;
    if (rec.small_m) ++sum.small_m;
    if (rec.degenerate) {
      ++sum.degenerate;
      continue;
    }
    mean += rec.se;
    ++used;
  }
  if (used == 0)
    throw SimulationError("mc_average_se: all realizations degenerate");
  if (sum.degenerate * 1000 > n_realizations)
    throw SimulationError(
        "mc_average_se: degenerate denominators exceed 0.1% of draws (" +
        std::to_string(sum.degenerate) + "/" + std::to_string(n_realizations) +
        "); the expression is analytically positive, so this indicates a bug");
  mean /= static_cast<double>(used);
  double var = 0.0;
  for (const auto& rec : recs) {
    if (rec.degenerate) continue;
    const double dlt = rec.se - mean;
    var += dlt * dlt;
  }
  var = used > 1 ? var / static_cast<double>(used - 1) : 0.0;

  sum.n_used = used;
  sum.mean_se = mean;
  sum.stderr_se = std::sqrt(var / static_cast<double>(used));
  sum.bound_se = se_per_user(p);
  sum.bound_gap = sum.mean_se - sum.bound_se;
  if (opts.collect_records) sum.records = std::move(recs);
  return sum;
}

}  // namespace cellfree::mc

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fairaoi/aoi_shs.hpp"
#include "fairaoi/common.hpp"
#include "fairaoi/random.hpp"
#include "fairaoi/sps_access.hpp"

namespace fairaoi {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
};

namespace detail {

// Slots shared by two cyclic windows of size_a and size_b slots on a ring of
// `period` slots, with window b starting `d` slots after window a.
inline std::int64_t cyclic_overlap_len(std::int64_t d, std::int64_t size_a, std::int64_t size_b,
                                       std::int64_t period) {
  if (size_a > period) size_a = period;
  if (size_b > period) size_b = period;
  d %= period;
  if (d < 0) d += period;
  if (d + size_b <= period) {
    std::int64_t hi = d + size_b < size_a ? d + size_b : size_a;
    return hi > d ? hi - d : 0;
  }
  std::int64_t tail = d < size_a ? size_a - d : 0;
  std::int64_t wrap = d + size_b - period;
  std::int64_t head = wrap < size_a ? wrap : size_a;
  return tail + head;
}

}  // namespace detail

/*! Fraction of uniform cyclic placements where the two windows share a slot. */
inline McEstimate mc_overlap(int w_v, int w_j, int period_slots, std::int64_t trials,
                             std::uint64_t seed) {
  if (w_v < 0 || w_j < 0) throw std::domain_error("mc_overlap: negative window");
  if (period_slots < 1) throw std::domain_error("mc_overlap: period must be >= 1");
  if (trials < 1) throw std::domain_error("mc_overlap: trials must be >= 1");
  Rng rng(seed);
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    std::int64_t a = static_cast<std::int64_t>(rng.below(period_slots));
    std::int64_t b = static_cast<std::int64_t>(rng.below(period_slots));
    if (detail::cyclic_overlap_len(b - a, w_v + 1, w_j + 1, period_slots) > 0) ++hits;
  }
  McEstimate e;
  e.trials = trials;
  e.mean = static_cast<double>(hits) / static_cast<double>(trials);
  e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(trials));
  return e;
}

/*! Mean number of shared slots conditioned on the windows overlapping. */
inline McEstimate mc_shared(int w_v, int w_j, int period_slots, std::int64_t trials,
                            std::uint64_t seed) {
  if (w_v < 0 || w_j < 0) throw std::domain_error("mc_shared: negative window");
  if (period_slots < 1) throw std::domain_error("mc_shared: period must be >= 1");
  if (trials < 1) throw std::domain_error("mc_shared: trials must be >= 1");
  Rng rng(seed);
  std::int64_t n = 0;
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t t = 0; t < trials; ++t) {
    std::int64_t a = static_cast<std::int64_t>(rng.below(period_slots));
    std::int64_t b = static_cast<std::int64_t>(rng.below(period_slots));
    std::int64_t len = detail::cyclic_overlap_len(b - a, w_v + 1, w_j + 1, period_slots);
    if (len > 0) {
      ++n;
      sum += static_cast<double>(len);
      sumsq += static_cast<double>(len) * static_cast<double>(len);
    }
  }
  if (n == 0) throw model_error("mc_shared: no conditioning events in the sample");
  McEstimate e;
  e.trials = n;
  e.mean = sum / static_cast<double>(n);
  double var = n > 1 ? (sumsq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1)
                     : 0.0;
  if (var < 0) var = 0;
  e.std_error = std::sqrt(var / static_cast<double>(n));
  return e;
}

/*!
 * Two-vehicle pick experiment: cyclic window placement (uniform starts unless
 * pinned), a uniform slot inside each own window, a uniform subchannel;
 * collision means identical slot and subchannel.
 */
inline McEstimate mc_collision(int w_v, int w_j, const CollisionParams& p, std::int64_t trials,
                               std::uint64_t seed,
                               std::optional<std::pair<int, int>> fixed_starts = std::nullopt) {
  if (w_v < 0 || w_j < 0) throw std::domain_error("mc_collision: negative window");
  if (p.period_slots < 1) throw std::domain_error("mc_collision: period must be >= 1");
  if (p.n_subchannels < 1) throw std::domain_error("mc_collision: need >= 1 subchannel");
  if (trials < 1) throw std::domain_error("mc_collision: trials must be >= 1");
  Rng rng(seed);
  std::int64_t hits = 0;
  const std::int64_t period = p.period_slots;
  for (std::int64_t t = 0; t < trials; ++t) {
    std::int64_t a, b;
    if (fixed_starts) {
      a = ((fixed_starts->first % period) + period) % period;
      b = ((fixed_starts->second % period) + period) % period;
    } else {
      a = static_cast<std::int64_t>(rng.below(period));
      b = static_cast<std::int64_t>(rng.below(period));
    }
    std::int64_t slot_v = (a + static_cast<std::int64_t>(rng.below(w_v + 1))) % period;
    std::int64_t slot_j = (b + static_cast<std::int64_t>(rng.below(w_j + 1))) % period;
    std::uint64_t sc_v = rng.below(static_cast<std::uint64_t>(p.n_subchannels));
    std::uint64_t sc_j = rng.below(static_cast<std::uint64_t>(p.n_subchannels));
    if (slot_v == slot_j && sc_v == sc_j) ++hits;
  }
  McEstimate e;
  e.trials = trials;
  e.mean = static_cast<double>(hits) / static_cast<double>(trials);
  e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(trials));
  return e;
}

struct ShsSimResult {
  std::vector<double> mean_age;   // per-link time-average of the receiver age
  std::vector<double> occupancy;  // per-link fraction of measured time busy
  double idle_fraction = 0.0;
  double measured_time = 0.0;     // post warm-up
  double time_check = 0.0;        // compensated re-summation of the same gaps
  std::int64_t events = 0;
  std::int64_t warmup_events = 0;
};

/*!
 * Event-driven run of the access chain. From idle, link s grabs the channel
 * at fail_rate_s. While busy on s, competing clocks fire a successful
 * delivery at (service_rate - reeval_rate) or a no-op re-evaluation at
 * reeval_rate, so busy-state events arrive at service_rate overall. On a
 * link-k delivery the receiver age of k drops to the source age, which
 * restarts from zero; the source age of k grows only while k is busy.
 * The leading warmup fraction of events is excluded from all averages.
 */
inline ShsSimResult simulate_shs_aoi(const std::vector<RateTriple>& rates,
                                     std::int64_t horizon_events, std::uint64_t seed,
                                     double warmup_fraction = 0.01) {
  if (rates.empty()) throw std::domain_error("simulate_shs_aoi: no links");
  if (horizon_events < 1) throw std::domain_error("simulate_shs_aoi: empty horizon");
  if (warmup_fraction < 0 || warmup_fraction >= 1)
    throw std::domain_error("simulate_shs_aoi: warmup fraction must lie in [0,1)");
  const std::size_t n = rates.size();
  double r_total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    check_feasible(rates[k], k);
    r_total += rates[k].fail_rate;
  }

  Rng rng(seed);
  std::vector<double> age_r(n, 0.0), age_src(n, 0.0);
  std::vector<double> area(n, 0.0), busy_time(n, 0.0);
  double idle_time = 0.0, measured = 0.0;
  double check_sum = 0.0, check_c = 0.0;  // Kahan re-accumulation of gaps
  int state = -1;                          // -1 idle, otherwise busy link index
  const std::int64_t warmup =
      static_cast<std::int64_t>(static_cast<double>(horizon_events) * warmup_fraction);

  for (std::int64_t ev = 0; ev < horizon_events; ++ev) {
    double gap;
    bool success = false;
    int next_state;
    if (state < 0) {
      gap = rng.exponential(r_total);
      double pick = rng.uniform01() * r_total;
      std::size_t s = 0;
      double acc = rates[0].fail_rate;
      while (s + 1 < n && pick > acc) acc += rates[++s].fail_rate;
      next_state = static_cast<int>(s);
    } else {
      const RateTriple& r = rates[static_cast<std::size_t>(state)];
      gap = rng.exponential(r.service_rate);
      success = rng.uniform01() * r.service_rate >= r.reeval_rate;
      next_state = success ? -1 : state;
    }

    bool record = ev >= warmup;
    if (record) {
      measured += gap;
      double y = gap - check_c;
      double t = check_sum + y;
      check_c = (t - check_sum) - y;
      check_sum = t;
      for (std::size_t k = 0; k < n; ++k) area[k] += (age_r[k] + 0.5 * gap) * gap;
      if (state < 0)
        idle_time += gap;
      else
        busy_time[static_cast<std::size_t>(state)] += gap;
    }
    for (std::size_t k = 0; k < n; ++k) age_r[k] += gap;
    if (state >= 0) age_src[static_cast<std::size_t>(state)] += gap;
    if (success) {
      std::size_t k = static_cast<std::size_t>(state);
      age_r[k] = age_src[k];
      age_src[k] = 0.0;
    }
    state = next_state;
  }

  ShsSimResult out;
  out.events = horizon_events;
  out.warmup_events = warmup;
  out.measured_time = measured;
  out.time_check = check_sum;
  out.mean_age.resize(n);
  out.occupancy.resize(n);
  if (measured <= 0) throw model_error("simulate_shs_aoi: no measured time after warm-up");
  for (std::size_t k = 0; k < n; ++k) {
    out.mean_age[k] = area[k] / measured;
    out.occupancy[k] = busy_time[k] / measured;
  }
  out.idle_fraction = idle_time / measured;
  return out;
}

}  // namespace fairaoi

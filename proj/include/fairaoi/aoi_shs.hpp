#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fairaoi/common.hpp"
#include "fairaoi/scenario.hpp"

namespace fairaoi {

// Per-link transition rates of the shared access chain. fail_rate is the
// rate at which the idle channel gets occupied by this link (reservation
// after a failure, includes the retransmission penalty), service_rate the
// rate of leaving the busy state, reeval_rate the rate of no-op resource
// re-evaluations while busy.
struct RateTriple {
  double fail_rate = 0.0;     // R, 1/s
  double service_rate = 0.0;  // H, 1/s
  double reeval_rate = 0.0;   // E, 1/s
};

inline void check_feasible(const RateTriple& r, std::size_t link) {
  if (!(r.fail_rate > 0) || !(r.service_rate > 0) || !(r.reeval_rate >= 0))
    throw infeasible_rates_error(link, "nonpositive rate");
  if (!(r.service_rate > r.reeval_rate))
    throw infeasible_rates_error(link, "re-evaluation rate reaches the service rate");
}

/*!
 * Rates induced by a selection window of `w_slots` slots. With
 * c_H = t_proc + t_frame_align + t_tx and u the window in seconds:
 * H = 1/(u + c_H), R = 1/(u + c_H + n_retx * t_retx), E = 1/t_reeval.
 */
inline RateTriple rates_from_window(double w_slots, const ScenarioConfig& cfg,
                                    std::size_t link = 0) {
  if (w_slots < 0) throw std::domain_error("rates_from_window: negative window");
  double u = w_slots * cfg.slot_seconds();
  RateTriple r;
  r.service_rate = 1.0 / (u + cfg.overhead_s());
  r.fail_rate = 1.0 / (u + cfg.overhead_s() + cfg.n_retx * cfg.t_retx_s);
  r.reeval_rate = 1.0 / cfg.t_reeval_s;
  check_feasible(r, link);
  return r;
}

inline std::vector<RateTriple> link_rates(const std::vector<double>& windows_slots,
                                          const ScenarioConfig& cfg) {
  std::vector<RateTriple> out;
  out.reserve(windows_slots.size());
  for (std::size_t k = 0; k < windows_slots.size(); ++k)
    out.push_back(rates_from_window(windows_slots[k], cfg, k));
  return out;
}

struct SteadyState {
  double norm_factor = 1.0;  // N_F
  double pi0 = 1.0;
  std::vector<double> pi;  // per link
};

/*!
 * Stationary occupancy: pi_0 = 1/N_F, pi_k = R_k / (N_F (H_k - E_k)),
 * N_F = 1 + sum_k R_k / (H_k - E_k).
 */
inline SteadyState steady_state(const std::vector<RateTriple>& rates) {
  if (rates.empty()) throw std::domain_error("steady_state: no links");
  SteadyState ss;
  ss.pi.resize(rates.size());
  double nf = 1.0;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    check_feasible(rates[k], k);
    nf += rates[k].fail_rate / (rates[k].service_rate - rates[k].reeval_rate);
  }
  ss.norm_factor = nf;
  ss.pi0 = 1.0 / nf;
  for (std::size_t k = 0; k < rates.size(); ++k)
    ss.pi[k] = rates[k].fail_rate / (nf * (rates[k].service_rate - rates[k].reeval_rate));
  return ss;
}

// Intermediate first moments of the age process conditioned on the chain
// state, exposed so tests can pin each term of the closed form.
struct LinkAoiParts {
  double q00 = 0.0;             // idle-state moment of the receiver age
  double q01 = 0.0;             // idle-state moment of the source age (always 0)
  double qk1 = 0.0;             // busy-on-k moment of the source age
  std::vector<double> qs0;      // per-state moments of the receiver age
  double age = 0.0;             // resulting mean age of link k
};

/*!
 * Mean age of link k:
 * q00 * N_F + sum_s pi_s / (H_s - E_s) with q00 = (H_k - E_k)/(H_k R_k).
 */
inline LinkAoiParts link_aoi_parts(std::size_t k, const std::vector<RateTriple>& rates) {
  if (k >= rates.size()) throw std::domain_error("link_aoi: link index out of range");
  SteadyState ss = steady_state(rates);
  const RateTriple& rk = rates[k];
  LinkAoiParts parts;
  parts.q00 = (rk.service_rate - rk.reeval_rate) / (rk.service_rate * rk.fail_rate);
  parts.q01 = 0.0;
  parts.qk1 = ss.pi[k] / (rk.service_rate - rk.reeval_rate);
  parts.qs0.resize(rates.size());
  double tail = 0.0;
  for (std::size_t s = 0; s < rates.size(); ++s) {
    double gap = rates[s].service_rate - rates[s].reeval_rate;
    parts.qs0[s] = (ss.pi[s] + rates[s].fail_rate * parts.q00) / gap;
    tail += ss.pi[s] / gap;
  }
  parts.age = parts.q00 * ss.norm_factor + tail;
  return parts;
}

inline double link_aoi(std::size_t k, const std::vector<RateTriple>& rates) {
  return link_aoi_parts(k, rates).age;
}

struct AoiReport {
  std::vector<double> per_link;
  double mean = 0.0;
};

inline AoiReport mean_aoi(const std::vector<RateTriple>& rates) {
  AoiReport rep;
  rep.per_link.resize(rates.size());
  double s = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    rep.per_link[k] = link_aoi(k, rates);
    s += rep.per_link[k];
  }
  rep.mean = s / static_cast<double>(rates.size());
  return rep;
}

}  // namespace fairaoi

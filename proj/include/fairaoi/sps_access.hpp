#pragma once

#include <cmath>
#include <vector>

#include "fairaoi/common.hpp"
#include "fairaoi/scenario.hpp"

namespace fairaoi {

// Everything the pairwise collision chain needs. candidate_pool_mean and
// shared_candidates of 0 select the derived rules N_Sc*(mean window + 1)
// and N_Sc*N_Sh respectively.
struct CollisionParams {
  int period_slots = 100;
  int n_subchannels = 4;
  int n_resources = 400;
  double candidate_pool_mean = 15.0;
  double shared_candidates = 0.0;

  static CollisionParams from(const ScenarioConfig& cfg) {
    CollisionParams p;
    p.period_slots = cfg.period_slots();
    p.n_subchannels = cfg.n_subchannels;
    p.n_resources = cfg.n_resources;
    p.candidate_pool_mean = cfg.candidate_pool_mean;
    p.shared_candidates = cfg.shared_candidates;
    return p;
  }
};

/*!
 * Probability that two cyclically placed selection windows of w_v+1 and
 * w_j+1 slots share at least one slot: (w_v + w_j + 1) / period, capped at 1.
 */
inline double overlap_prob(double w_v, double w_j, int period_slots) {
  if (w_v < 0 || w_j < 0) throw std::domain_error("overlap_prob: negative window");
  if (period_slots < 1) throw std::domain_error("overlap_prob: period must be >= 1 slot");
  return std::min(1.0, (w_v + w_j + 1.0) / period_slots);
}

/*!
 * Mean number of shared slots given the windows overlap:
 * (w_v+1)(w_j+1) / (w_v + w_j + 1).
 */
inline double shared_resources(double w_v, double w_j) {
  if (w_v < 0 || w_j < 0) throw std::domain_error("shared_resources: negative window");
  return (w_v + 1.0) * (w_j + 1.0) / (w_v + w_j + 1.0);
}

/*!
 * Probability both vehicles pick inside the shared region given an overlap:
 * (N_Sc * N_Sh / N_r)^2. More shared candidates than resources is outside
 * the model.
 */
inline double p_shared_given_overlap(double n_sh, int n_subchannels, int n_resources) {
  if (n_sh < 0) throw std::domain_error("p_shared_given_overlap: negative N_Sh");
  double shared = n_subchannels * n_sh;
  if (shared > n_resources)
    throw model_error("p_shared_given_overlap: shared candidates exceed the resource pool");
  double r = shared / n_resources;
  return r * r;
}

struct CollisionValue {
  double delta = 0.0;  // clamped to [0, 1 - 1e-9]
  double d_wv = 0.0;
  double d_wj = 0.0;
};

/*!
 * Pairwise collision probability, composed as
 * overlap * shared-pick * C_Ca / N_Ca^2, with exact partial derivatives of
 * the active branch (derivatives are zero where a clamp is active).
 */
inline CollisionValue collision_prob_grad(double w_v, double w_j, const CollisionParams& p) {
  if (w_v < 0 || w_j < 0) throw std::domain_error("collision_prob: negative window");
  double W = w_v + w_j + 1.0;
  double a = w_v + 1.0, b = w_j + 1.0;

  double p_o = std::min(1.0, W / p.period_slots);
  bool o_clamped = W >= p.period_slots;

  double n_sh = a * b / W;
  // d n_sh / d w_v = b*(W - a)/W^2, and W - a = w_j.
  double dsh_v = b * w_j / (W * W);
  double dsh_j = a * w_v / (W * W);

  double p_sh = p_shared_given_overlap(n_sh, p.n_subchannels, p.n_resources);

  bool c_rule = p.shared_candidates <= 0.0;
  double c_ca = c_rule ? p.n_subchannels * n_sh : p.shared_candidates;
  bool n_rule = p.candidate_pool_mean <= 0.0;
  double n_ca = n_rule ? p.n_subchannels * ((w_v + w_j) / 2.0 + 1.0) : p.candidate_pool_mean;
  if (n_ca < 1.0) throw model_error("collision_prob: candidate pool mean below one resource");

  double raw = p_o * p_sh * c_ca / (n_ca * n_ca);

  CollisionValue out;
  if (raw >= 1.0 - 1e-9) {
    out.delta = 1.0 - 1e-9;
    return out;  // flat on the clamp
  }
  out.delta = raw;
  if (raw == 0.0) return out;

  // Logarithmic derivative, term by term.
  double lv = 0.0, lj = 0.0;
  if (!o_clamped) {
    lv += 1.0 / W;
    lj += 1.0 / W;
  }
  lv += 2.0 * dsh_v / n_sh;
  lj += 2.0 * dsh_j / n_sh;
  if (c_rule) {
    lv += dsh_v / n_sh;
    lj += dsh_j / n_sh;
  }
  if (n_rule) {
    double dn = p.n_subchannels / 2.0;
    lv -= 2.0 * dn / n_ca;
    lj -= 2.0 * dn / n_ca;
  }
  out.d_wv = raw * lv;
  out.d_wj = raw * lj;
  return out;
}

inline double collision_prob(double w_v, double w_j, const CollisionParams& p) {
  return collision_prob_grad(w_v, w_j, p).delta;
}

/*! Reception probability of vehicle v: product of (1 - delta_vj) over j != v. */
inline double success_prob(std::size_t v, const std::vector<double>& windows,
                           const CollisionParams& p) {
  if (v >= windows.size()) throw std::domain_error("success_prob: vehicle index out of range");
  double pr = 1.0;
  for (std::size_t j = 0; j < windows.size(); ++j)
    if (j != v) pr *= 1.0 - collision_prob(windows[v], windows[j], p);
  return pr;
}

/*! Semantic fairness index: ISS * log2(1 + SNR) * PR / V. */
inline double fairness_index(double iss, double snr, double pr, double speed_mps) {
  if (speed_mps <= 0) throw std::domain_error("fairness_index: speed must be positive");
  if (iss < 0 || iss > 1) throw std::domain_error("fairness_index: iss must lie in [0,1]");
  if (pr < 0 || pr > 1) throw std::domain_error("fairness_index: pr must lie in [0,1]");
  if (snr <= 0) throw std::domain_error("fairness_index: snr must be positive");
  return iss * std::log2(1.0 + snr) * pr / speed_mps;
}

struct FairnessReport {
  std::vector<double> index;      // per vehicle
  double mean = 0.0;              // network mean
  std::vector<double> deviation;  // |index - mean|
};

inline FairnessReport fairness_report(const std::vector<Vehicle>& vehicles,
                                      const std::vector<double>& windows,
                                      const ScenarioConfig& cfg) {
  if (vehicles.empty()) throw std::domain_error("fairness_report: no vehicles");
  if (vehicles.size() != windows.size())
    throw std::domain_error("fairness_report: window count does not match vehicle count");
  CollisionParams p = CollisionParams::from(cfg);
  FairnessReport rep;
  rep.index.resize(vehicles.size());
  for (std::size_t v = 0; v < vehicles.size(); ++v) {
    double pr = success_prob(v, windows, p);
    rep.index[v] =
        fairness_index(vehicles[v].iss, snr_linear(vehicles[v], cfg), pr, vehicles[v].speed_mps);
  }
  double s = 0.0;
  for (double x : rep.index) s += x;
  rep.mean = s / static_cast<double>(rep.index.size());
  rep.deviation.resize(rep.index.size());
  for (std::size_t v = 0; v < rep.index.size(); ++v)
    rep.deviation[v] = std::fabs(rep.index[v] - rep.mean);
  return rep;
}

}  // namespace fairaoi

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fairaoi/common.hpp"
#include "fairaoi/random.hpp"

namespace fairaoi {

// Highway segment served by one roadside unit, plus the protocol timing and
// resource-pool constants every other module consumes. Defaults describe a
// 200 m segment with a 100 ms reservation period on 1 ms slots.
struct ScenarioConfig {
  double rsu_range_m = 200.0;
  double bandwidth_hz = 20e6;
  double noise_power = 7.943282347242815;  // 9 dB, stored linear
  double pathloss_exp = 3.0;
  double rri_s = 0.1;       // reservation period
  int scs_exp = 0;          // numerology mu; slot = 2^-mu ms
  int n_subchannels = 4;    // N_Sc
  int n_resources = 400;    // N_r
  // Mean candidate-pool size after exclusion (N_Ca). 0 selects the derived
  // rule N_Sc * (mean window + 1).
  double candidate_pool_mean = 15.0;
  // Shared candidate count across an overlap (C_Ca). 0 selects the derived
  // rule N_Sc * N_Sh.
  double shared_candidates = 0.0;

  int w_min_slots = 20;
  int w_max_slots = 150;

  double t_proc_s = 0.001;          // t_p
  double t_frame_align_s = 0.000468;  // t_fa
  double t_tx_s = 0.0005;           // t_t
  double t_retx_s = 0.01;           // T_r, per retransmission
  int n_retx = 1;                   // retransmission count n
  double t_reeval_s = 10.0;         // T^E, mean time between re-evaluations

  double v_min_mps = 20.0;
  double v_max_mps = 30.0;
  std::vector<double> lane_speeds = {21.4, 25.0, 28.6};
  double vehicle_density_per_m = 0.015;

  double tx_power = 2e8;        // lumped linear gain (power * antenna terms)
  double ar_coeff = 0.9;        // channel autocorrelation rho
  double init_channel_gain = 1.0;
  double iss_default = 0.9;     // image semantic similarity when no corpus given
  double payload_bits = 8000.0;  // per-image payload when no corpus given
  double distance_snapshot_m = 0.0;  // 0 selects midpoint R/2
  int bits_per_char = 8;
  int similarity_count = 100;  // G, scores averaged into ISS

  int baseline_window_slots = 100;

  double sca_eps_slots = 0.01;
  int sca_gmax = 5000;
  double sca_beta = 0.2;
  double sca_lambda_fairness = 0.0;  // 0 balances the deviation block's pull against the age block's
  double sca_lambda_aoi = 0.0;       // 0 normalizes by the mean age at the start point
  int sca_subproblem_iters = 20000;

  int moead_pop = 30;
  int moead_neighbors = 5;
  double moead_pnear = 0.9;
  int moead_generations = 100;
  int llm_budget = 8;
  double llm_timeout_s = 10.0;

  double slot_seconds() const { return std::ldexp(0.001, -scs_exp); }

  // Reservation period expressed in slots: 1000 * 2^mu * rri.
  int period_slots() const {
    double p = 1000.0 * std::ldexp(1.0, scs_exp) * rri_s;
    long r = std::lround(p);
    if (r <= 0 || std::fabs(p - static_cast<double>(r)) > 1e-9)
      throw config_error("reservation period is not a whole number of slots");
    return static_cast<int>(r);
  }

  // Fixed per-transmission overhead c_H = t_p + t_fa + t_t.
  double overhead_s() const { return t_proc_s + t_frame_align_s + t_tx_s; }

  double window_seconds(double w_slots) const { return w_slots * slot_seconds(); }

  void validate() const {
    if (rsu_range_m <= 0) throw config_error("rsu_range_m must be positive");
    if (bandwidth_hz <= 0) throw config_error("bandwidth_hz must be positive");
    if (noise_power <= 0) throw config_error("noise_power must be positive");
    if (rri_s <= 0) throw config_error("rri_s must be positive");
    if (n_subchannels < 1) throw config_error("n_subchannels must be >= 1");
    if (n_resources < 1) throw config_error("n_resources must be >= 1");
    if (candidate_pool_mean < 0 || (candidate_pool_mean > 0 && candidate_pool_mean < 1))
      throw config_error("candidate_pool_mean must be 0 (derived) or >= 1");
    if (shared_candidates < 0) throw config_error("shared_candidates must be >= 0");
    if (w_min_slots < 0 || w_max_slots < w_min_slots)
      throw config_error("window bounds require 0 <= w_min_slots <= w_max_slots");
    if (t_proc_s < 0 || t_frame_align_s < 0 || t_tx_s < 0 || t_retx_s < 0)
      throw config_error("timing constants must be nonnegative");
    if (n_retx < 0) throw config_error("n_retx must be >= 0");
    if (t_reeval_s <= 0) throw config_error("t_reeval_s must be positive");
    if (v_min_mps <= 0 || v_max_mps < v_min_mps)
      throw config_error("speed bounds require 0 < v_min_mps <= v_max_mps");
    if (lane_speeds.empty()) throw config_error("lane_speeds must not be empty");
    for (std::size_t i = 0; i < lane_speeds.size(); ++i) {
      if (lane_speeds[i] < v_min_mps || lane_speeds[i] > v_max_mps)
        throw config_error("lane speed " + std::to_string(lane_speeds[i]) +
                           " outside [v_min_mps, v_max_mps]");
      for (std::size_t j = i + 1; j < lane_speeds.size(); ++j)
        if (std::fabs(lane_speeds[i] - lane_speeds[j]) < 3.6 - 1e-12)
          throw config_error("lane speeds must differ pairwise by >= 3.6 m/s");
    }
    if (vehicle_density_per_m < 0) throw config_error("vehicle_density_per_m must be >= 0");
    if (tx_power <= 0) throw config_error("tx_power must be positive");
    if (ar_coeff < 0 || ar_coeff > 1) throw config_error("ar_coeff must lie in [0,1]");
    if (iss_default < 0 || iss_default > 1) throw config_error("iss_default must lie in [0,1]");
    if (payload_bits < 0) throw config_error("payload_bits must be >= 0");
    if (distance_snapshot_m < 0 || distance_snapshot_m > rsu_range_m)
      throw config_error("distance_snapshot_m must lie in [0, rsu_range_m]");
    if (bits_per_char < 1) throw config_error("bits_per_char must be >= 1");
    if (similarity_count < 1) throw config_error("similarity_count must be >= 1");
    if (baseline_window_slots < w_min_slots || baseline_window_slots > w_max_slots)
      throw config_error("baseline_window_slots outside the window box");
    if (sca_eps_slots <= 0) throw config_error("sca_eps_slots must be positive");
    if (sca_gmax < 1) throw config_error("sca_gmax must be >= 1");
    if (sca_beta <= 0 || sca_beta > 1) throw config_error("sca_beta must lie in (0,1]");
    if (sca_subproblem_iters < 100)
      throw config_error("sca_subproblem_iters must be >= 100");
    if (sca_lambda_fairness < 0 || sca_lambda_aoi < 0)
      throw config_error("lambda overrides must be >= 0");
    if (moead_pop < 2) throw config_error("moead_pop must be >= 2");
    if (moead_neighbors < 1) throw config_error("moead_neighbors must be >= 1");
    if (moead_pnear < 0 || moead_pnear > 1) throw config_error("moead_pnear must lie in [0,1]");
    if (moead_generations < 1) throw config_error("moead_generations must be >= 1");
    if (llm_budget < 0) throw config_error("llm_budget must be >= 0");
    if (llm_timeout_s <= 0) throw config_error("llm_timeout_s must be positive");
    period_slots();  // must be integral
    // Every window in the box must leave the renewal chain feasible (H > E).
    double h_min = 1.0 / (window_seconds(w_max_slots) + overhead_s());
    if (h_min <= 1.0 / t_reeval_s)
      throw config_error(
          "window box infeasible: service rate at w_max_slots does not exceed "
          "the re-evaluation rate 1/t_reeval_s");
  }
};

struct Vehicle {
  int id = 0;
  int lane = 0;
  double speed_mps = 0.0;
  double tx_power = 0.0;
  double distance_m = 0.0;
  double channel_gain = 1.0;
  double ar_coeff = 0.9;
  double iss = 1.0;  // image semantic similarity score in [0,1]
};

// Per-vehicle selection windows in slots. The real-valued view is what the
// solvers iterate on; slots() is the deployable integer view (round half up).
struct WindowVector {
  std::vector<double> v;

  WindowVector() = default;
  explicit WindowVector(std::vector<double> vals) : v(std::move(vals)) {}
  static WindowVector uniform(std::size_t n, double w) {
    return WindowVector(std::vector<double>(n, w));
  }

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  std::vector<int> slots() const {
    std::vector<int> s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      s[i] = static_cast<int>(std::floor(v[i] + 0.5));
    return s;
  }

  void clamp(double lo, double hi) {
    for (double& x : v) x = std::min(hi, std::max(lo, x));
  }
};

inline void check_windows(const WindowVector& w, const ScenarioConfig& cfg) {
  for (double x : w.v)
    if (x < cfg.w_min_slots - 1e-9 || x > cfg.w_max_slots + 1e-9)
      throw config_error("window " + std::to_string(x) + " outside the slot box");
}

/*! Time a vehicle spends inside the served segment: T = range / speed. */
inline double dwell_time(double range_m, double speed_mps) {
  if (speed_mps <= 0.0) throw std::domain_error("dwell_time: speed must be positive");
  if (range_m < 0.0) throw std::domain_error("dwell_time: range must be nonnegative");
  return range_m / speed_mps;
}

inline double snr_linear(const Vehicle& veh, const ScenarioConfig& cfg) {
  if (veh.distance_m <= 0) throw std::domain_error("snr: distance must be positive");
  return veh.tx_power * veh.channel_gain * std::pow(veh.distance_m, -cfg.pathloss_exp) /
         cfg.noise_power;
}

/*!
 * Air time of one image: I / (B * log2(1 + SNR) * PR). Reception probability
 * scales the effective rate, so pr = 0 would mean the image never completes.
 */
inline double per_image_tx_time(double payload_bits, double bandwidth_hz, double snr,
                                double pr) {
  if (pr <= 0.0 || pr > 1.0)
    throw std::domain_error("per_image_tx_time: pr must lie in (0,1]");
  if (bandwidth_hz <= 0.0 || snr <= 0.0)
    throw std::domain_error("per_image_tx_time: bandwidth and snr must be positive");
  if (payload_bits < 0.0) throw std::domain_error("per_image_tx_time: negative payload");
  if (payload_bits == 0.0) return 0.0;
  return payload_bits / (bandwidth_hz * std::log2(1.0 + snr) * pr);
}

/*!
 * One step of the first-order autoregressive channel proxy:
 * x' = rho * x + sqrt(1 - rho^2) * e, e ~ N(0,1). The proxy is stationary
 * with unit variance and lag-1 autocorrelation rho.
 */
inline double ar_step(double proxy, double rho, Rng& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::domain_error("ar_step: rho must lie in [0,1]");
  return rho * proxy + std::sqrt(1.0 - rho * rho) * rng.gaussian();
}

// Power gain of the proxy, floored away from zero so SNR stays defined.
inline double gain_from_proxy(double proxy) {
  return std::max(proxy * proxy, 1e-9);
}

/*!
 * Draw vehicles lane by lane: counts are Poisson(density * range), positions
 * uniform on (0, range]. Bit-reproducible for a fixed seed.
 */
inline std::vector<Vehicle> place_vehicles(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::vector<Vehicle> out;
  int id = 0;
  for (std::size_t lane = 0; lane < cfg.lane_speeds.size(); ++lane) {
    std::uint64_t count = rng.poisson(cfg.vehicle_density_per_m * cfg.rsu_range_m);
    for (std::uint64_t i = 0; i < count; ++i) {
      Vehicle v;
      v.id = id++;
      v.lane = static_cast<int>(lane);
      v.speed_mps = cfg.lane_speeds[lane];
      v.tx_power = cfg.tx_power;
      v.distance_m = (1.0 - rng.uniform01()) * cfg.rsu_range_m;  // uniform on (0, R]
      v.channel_gain = cfg.init_channel_gain;
      v.ar_coeff = cfg.ar_coeff;
      v.iss = cfg.iss_default;
      out.push_back(v);
    }
  }
  return out;
}

// Deterministic instance used by the solvers and sweeps: one vehicle per
// entry of lane_speeds cycled until n vehicles exist, at the configured
// distance snapshot (midpoint by default).
inline std::vector<Vehicle> snapshot_vehicles(const ScenarioConfig& cfg, std::size_t n) {
  cfg.validate();
  if (n == 0) throw config_error("snapshot_vehicles: need at least one vehicle");
  double d = cfg.distance_snapshot_m > 0 ? cfg.distance_snapshot_m : cfg.rsu_range_m / 2.0;
  std::vector<Vehicle> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vehicle v;
    v.id = static_cast<int>(i);
    v.lane = static_cast<int>(i % cfg.lane_speeds.size());
    v.speed_mps = cfg.lane_speeds[v.lane];
    v.tx_power = cfg.tx_power;
    v.distance_m = d;
    v.channel_gain = cfg.init_channel_gain;
    v.ar_coeff = cfg.ar_coeff;
    v.iss = cfg.iss_default;
    out.push_back(v);
  }
  return out;
}

}  // namespace fairaoi

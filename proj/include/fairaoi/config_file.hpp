#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fairaoi/common.hpp"
#include "fairaoi/scenario.hpp"

namespace fairaoi {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& key, const std::string& val) {
  try {
    std::size_t pos = 0;
    double x = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return x;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': cannot parse number from '" + val + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& val) {
  double x = parse_number(key, val);
  long r = std::lround(x);
  if (std::fabs(x - static_cast<double>(r)) > 1e-9)
    throw config_error("config key '" + key + "': expected an integer, got '" + val + "'");
  return static_cast<int>(r);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& val) {
  std::vector<double> out;
  std::stringstream ss(val);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw config_error("config key '" + key + "': empty list element");
    out.push_back(parse_number(key, item));
  }
  if (out.empty()) throw config_error("config key '" + key + "': empty list");
  return out;
}

// Shortest decimal string that round-trips the double. Small integral values
// prefer the plain form ("20", not "2e+01"); large ones keep the exponent
// form when it is shorter ("2e+08", not "200000000").
inline std::string compact_double(double x) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::stod(buf) == x) break;
  }
  std::string g = buf;
  if (std::isfinite(x) && std::floor(x) == x && std::fabs(x) < 1e17) {
    std::snprintf(buf, sizeof buf, "%.0f", x);
    if (std::string(buf).size() <= g.size()) return buf;
  }
  return g;
}

}  // namespace detail

// Flat "key = value" text; '#' starts a comment; lists are comma-separated.
inline std::map<std::string, std::string> parse_flat_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

inline void apply_config(ScenarioConfig& cfg, const std::map<std::string, std::string>& kv) {
  using detail::parse_int;
  using detail::parse_list;
  using detail::parse_number;
  for (const auto& [key, val] : kv) {
    if (key == "rsu_range_m") cfg.rsu_range_m = parse_number(key, val);
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_number(key, val);
    else if (key == "noise_power") cfg.noise_power = parse_number(key, val);
    else if (key == "pathloss_exp") cfg.pathloss_exp = parse_number(key, val);
    else if (key == "rri_s") cfg.rri_s = parse_number(key, val);
    else if (key == "scs_exp") cfg.scs_exp = parse_int(key, val);
    else if (key == "n_subchannels") cfg.n_subchannels = parse_int(key, val);
    else if (key == "n_resources") cfg.n_resources = parse_int(key, val);
    else if (key == "candidate_pool_mean") cfg.candidate_pool_mean = parse_number(key, val);
    else if (key == "shared_candidates") cfg.shared_candidates = parse_number(key, val);
    else if (key == "w_min_slots") cfg.w_min_slots = parse_int(key, val);
    else if (key == "w_max_slots") cfg.w_max_slots = parse_int(key, val);
    else if (key == "t_proc_s") cfg.t_proc_s = parse_number(key, val);
    else if (key == "t_frame_align_s") cfg.t_frame_align_s = parse_number(key, val);
    else if (key == "t_tx_s") cfg.t_tx_s = parse_number(key, val);
    else if (key == "t_retx_s") cfg.t_retx_s = parse_number(key, val);
    else if (key == "n_retx") cfg.n_retx = parse_int(key, val);
    else if (key == "t_reeval_s") cfg.t_reeval_s = parse_number(key, val);
    else if (key == "v_min_mps") cfg.v_min_mps = parse_number(key, val);
    else if (key == "v_max_mps") cfg.v_max_mps = parse_number(key, val);
    else if (key == "lane_speeds") cfg.lane_speeds = parse_list(key, val);
    else if (key == "vehicle_density_per_m") cfg.vehicle_density_per_m = parse_number(key, val);
    else if (key == "tx_power") cfg.tx_power = parse_number(key, val);
    else if (key == "ar_coeff") cfg.ar_coeff = parse_number(key, val);
    else if (key == "init_channel_gain") cfg.init_channel_gain = parse_number(key, val);
    else if (key == "iss_default") cfg.iss_default = parse_number(key, val);
    else if (key == "payload_bits") cfg.payload_bits = parse_number(key, val);
    else if (key == "distance_snapshot_m") cfg.distance_snapshot_m = parse_number(key, val);
    else if (key == "bits_per_char") cfg.bits_per_char = parse_int(key, val);
    else if (key == "similarity_count") cfg.similarity_count = parse_int(key, val);
    else if (key == "baseline_window_slots") cfg.baseline_window_slots = parse_int(key, val);
    else if (key == "sca_eps_slots") cfg.sca_eps_slots = parse_number(key, val);
    else if (key == "sca_gmax") cfg.sca_gmax = parse_int(key, val);
    else if (key == "sca_beta") cfg.sca_beta = parse_number(key, val);
    else if (key == "sca_lambda_fairness") cfg.sca_lambda_fairness = parse_number(key, val);
    else if (key == "sca_lambda_aoi") cfg.sca_lambda_aoi = parse_number(key, val);
    else if (key == "sca_subproblem_iters") cfg.sca_subproblem_iters = parse_int(key, val);
    else if (key == "moead_pop") cfg.moead_pop = parse_int(key, val);
    else if (key == "moead_neighbors") cfg.moead_neighbors = parse_int(key, val);
    else if (key == "moead_pnear") cfg.moead_pnear = parse_number(key, val);
    else if (key == "moead_generations") cfg.moead_generations = parse_int(key, val);
    else if (key == "llm_budget") cfg.llm_budget = parse_int(key, val);
    else if (key == "llm_timeout_s") cfg.llm_timeout_s = parse_number(key, val);
    else throw config_error("unknown config key '" + key + "'");
  }
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  ScenarioConfig cfg;
  apply_config(cfg, parse_flat_config(in));
  cfg.validate();
  return cfg;
}

// Canonical serialization: every key in fixed order, shortest round-trip
// numbers. Input to the config hash, so it must stay stable.
inline std::string serialize_config(const ScenarioConfig& cfg) {
  using detail::compact_double;
  std::ostringstream o;
  o << "rsu_range_m = " << compact_double(cfg.rsu_range_m) << "\n"
    << "bandwidth_hz = " << compact_double(cfg.bandwidth_hz) << "\n"
    << "noise_power = " << compact_double(cfg.noise_power) << "\n"
    << "pathloss_exp = " << compact_double(cfg.pathloss_exp) << "\n"
    << "rri_s = " << compact_double(cfg.rri_s) << "\n"
    << "scs_exp = " << cfg.scs_exp << "\n"
    << "n_subchannels = " << cfg.n_subchannels << "\n"
    << "n_resources = " << cfg.n_resources << "\n"
    << "candidate_pool_mean = " << compact_double(cfg.candidate_pool_mean) << "\n"
    << "shared_candidates = " << compact_double(cfg.shared_candidates) << "\n"
    << "w_min_slots = " << cfg.w_min_slots << "\n"
    << "w_max_slots = " << cfg.w_max_slots << "\n"
    << "t_proc_s = " << compact_double(cfg.t_proc_s) << "\n"
    << "t_frame_align_s = " << compact_double(cfg.t_frame_align_s) << "\n"
    << "t_tx_s = " << compact_double(cfg.t_tx_s) << "\n"
    << "t_retx_s = " << compact_double(cfg.t_retx_s) << "\n"
    << "n_retx = " << cfg.n_retx << "\n"
    << "t_reeval_s = " << compact_double(cfg.t_reeval_s) << "\n"
    << "v_min_mps = " << compact_double(cfg.v_min_mps) << "\n"
    << "v_max_mps = " << compact_double(cfg.v_max_mps) << "\n";
  o << "lane_speeds = ";
  for (std::size_t i = 0; i < cfg.lane_speeds.size(); ++i)
    o << (i ? "," : "") << compact_double(cfg.lane_speeds[i]);
  o << "\n"
    << "vehicle_density_per_m = " << compact_double(cfg.vehicle_density_per_m) << "\n"
    << "tx_power = " << compact_double(cfg.tx_power) << "\n"
    << "ar_coeff = " << compact_double(cfg.ar_coeff) << "\n"
    << "init_channel_gain = " << compact_double(cfg.init_channel_gain) << "\n"
    << "iss_default = " << compact_double(cfg.iss_default) << "\n"
    << "payload_bits = " << compact_double(cfg.payload_bits) << "\n"
    << "distance_snapshot_m = " << compact_double(cfg.distance_snapshot_m) << "\n"
    << "bits_per_char = " << cfg.bits_per_char << "\n"
    << "similarity_count = " << cfg.similarity_count << "\n"
    << "baseline_window_slots = " << cfg.baseline_window_slots << "\n"
    << "sca_eps_slots = " << compact_double(cfg.sca_eps_slots) << "\n"
    << "sca_gmax = " << cfg.sca_gmax << "\n"
    << "sca_beta = " << compact_double(cfg.sca_beta) << "\n"
    << "sca_lambda_fairness = " << compact_double(cfg.sca_lambda_fairness) << "\n"
    << "sca_lambda_aoi = " << compact_double(cfg.sca_lambda_aoi) << "\n"
    << "sca_subproblem_iters = " << cfg.sca_subproblem_iters << "\n"
    << "moead_pop = " << cfg.moead_pop << "\n"
    << "moead_neighbors = " << cfg.moead_neighbors << "\n"
    << "moead_pnear = " << compact_double(cfg.moead_pnear) << "\n"
    << "moead_generations = " << cfg.moead_generations << "\n"
    << "llm_budget = " << cfg.llm_budget << "\n"
    << "llm_timeout_s = " << compact_double(cfg.llm_timeout_s) << "\n";
  return o.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// 16-hex-digit digest carried on every CSV row.
inline std::string config_hash(const ScenarioConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_config(cfg))));
  return buf;
}

}  // namespace fairaoi

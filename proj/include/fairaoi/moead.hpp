#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairaoi/common.hpp"
#include "fairaoi/config_file.hpp"
#include "fairaoi/evaluate.hpp"
#include "fairaoi/random.hpp"
#include "fairaoi/scenario.hpp"

namespace fairaoi {

struct WeightSet {
  std::vector<std::vector<double>> weights;            // S x n_obj, each sums to 1
  std::vector<std::vector<std::size_t>> neighborhoods; // S x T, self included
};

/*! Simplex lattice with the given denominator, first coordinate ascending. */
inline std::vector<std::vector<double>> das_dennis(std::size_t n_obj, int divisions) {
  if (n_obj < 1) throw std::domain_error("das_dennis: need at least one objective");
  if (divisions < 1) throw std::domain_error("das_dennis: divisions must be >= 1");
  std::vector<std::vector<double>> out;
  std::vector<int> parts(n_obj, 0);
  // depth-first enumeration of compositions of `divisions` into n_obj parts
  auto rec = [&](auto&& self, std::size_t idx, int left) -> void {
    if (idx + 1 == n_obj) {
      parts[idx] = left;
      std::vector<double> w(n_obj);
      for (std::size_t i = 0; i < n_obj; ++i)
        w[i] = static_cast<double>(parts[i]) / static_cast<double>(divisions);
      out.push_back(std::move(w));
      return;
    }
    for (int p = 0; p <= left; ++p) {
      parts[idx] = p;
      self(self, idx + 1, left - p);
    }
  };
  rec(rec, 0, divisions);
  return out;
}

/*! Smallest division count whose lattice size reaches the requested population. */
inline int choose_divisions(int pop_size, std::size_t n_obj) {
  if (pop_size < 1) throw std::domain_error("choose_divisions: population must be >= 1");
  for (int div = 1;; ++div) {
    // C(div + n_obj - 1, n_obj - 1) without overflow worries at these sizes
    double count = 1.0;
    for (std::size_t i = 1; i < n_obj; ++i)
      count *= static_cast<double>(div + static_cast<int>(i)) / static_cast<double>(i);
    if (count + 0.5 >= static_cast<double>(pop_size)) return div;
    if (div > 1000000) throw std::domain_error("choose_divisions: population unreachable");
  }
}

/*! T nearest weight vectors by Euclidean distance, stable on ties, self included. */
inline std::vector<std::vector<std::size_t>> weight_neighborhoods(
    const std::vector<std::vector<double>>& weights, std::size_t t) {
  const std::size_t s = weights.size();
  if (s == 0) throw std::domain_error("weight_neighborhoods: empty weight set");
  if (t < 1 || t > s) throw std::domain_error("weight_neighborhoods: bad neighborhood size");
  std::vector<std::vector<std::size_t>> out(s);
  std::vector<std::pair<double, std::size_t>> dist(s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < weights[i].size(); ++k) {
        double d = weights[i][k] - weights[j][k];
        d2 += d * d;
      }
      dist[j] = {d2, j};
    }
    std::stable_sort(dist.begin(), dist.end());
    out[i].reserve(t);
    for (std::size_t k = 0; k < t; ++k) out[i].push_back(dist[k].second);
  }
  return out;
}

inline WeightSet build_weight_set(int pop_size, std::size_t n_obj, int neighbors) {
  WeightSet ws;
  ws.weights = das_dennis(n_obj, choose_divisions(pop_size, n_obj));
  std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(neighbors), ws.weights.size());
  ws.neighborhoods = weight_neighborhoods(ws.weights, t);
  return ws;
}

/*! Weighted Chebyshev distance from the ideal point. */
inline double tchebycheff(const ObjectiveVector& g_vals, const std::vector<double>& m,
                          const std::vector<double>& z_star) {
  std::vector<double> g = g_vals.flat();
  if (g.size() != m.size() || g.size() != z_star.size())
    throw std::domain_error("tchebycheff: dimension mismatch");
  double best = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    best = std::max(best, m[i] * std::fabs(g[i] - z_star[i]));
  return best;
}

struct Individual {
  std::vector<double> w;
  ObjectiveVector obj;
};

struct Population {
  std::vector<Individual> members;
  std::vector<double> z_star;  // componentwise minima seen so far

  void absorb(const ObjectiveVector& obj) {
    std::vector<double> g = obj.flat();
    if (z_star.empty()) z_star.assign(g.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < g.size(); ++i) z_star[i] = std::min(z_star[i], g[i]);
  }
};

// Single text exchange with an external completion service. Implementations
// return nullopt on transport failure or timeout.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::optional<std::string> complete(const std::string& prompt) = 0;
};

struct OffspringOperator {
  enum class Kind { genetic, external_text };
  Kind kind = Kind::genetic;
  CompletionClient* client = nullptr;  // required for external_text
  int budget = 0;                      // external calls allowed per run
  double mutation_sd_slots = 8.0;
  double blend_span = 1.0;  // blend factor drawn uniformly from [-span, span]
};

/*!
 * Blend crossover symmetric around the parent midpoint plus zero-mean
 * Gaussian mutation, clamped to the window box.
 */
inline std::vector<double> genetic_offspring(const std::vector<double>& p1,
                                             const std::vector<double>& p2, Rng& rng,
                                             double w_min, double w_max,
                                             double mutation_sd, double blend_span = 1.0) {
  if (p1.size() != p2.size()) throw std::domain_error("genetic_offspring: parent size mismatch");
  std::vector<double> child(p1.size());
  for (std::size_t k = 0; k < p1.size(); ++k) {
    double mid = 0.5 * (p1[k] + p2[k]);
    double half = 0.5 * (p1[k] - p2[k]);
    double gamma = (2.0 * rng.uniform01() - 1.0) * blend_span;
    double c = mid + gamma * half;
    if (mutation_sd > 0) c += mutation_sd * rng.gaussian();
    child[k] = std::clamp(c, w_min, w_max);
  }
  return child;
}

/*!
 * Deterministic prompt: task description, the prior points with their
 * objective values, and the required reply format. Every data set is
 * wrapped in <begin>/<end> markers.
 */
inline std::string build_prompt(
    const std::vector<std::pair<std::vector<double>, ObjectiveVector>>& points, double w_min,
    double w_max) {
  if (points.empty()) throw std::domain_error("build_prompt: need at least one point");
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += detail::compact_double(v[i]);
    }
    return s;
  };
  std::size_t dim = points.front().first.size();
  std::string p;
  p += "Task: choose per-vehicle resource selection windows for a vehicular network.\n";
  p += "Each point is a selection-window vector; each value lists the per-vehicle "
       "fairness index differences followed by the mean age of information. Lower is "
       "better on every coordinate.\n";
  p += "Data sets follow; every data set starts with <begin> and finishes with <end>.\n\n";
  for (const auto& [w, obj] : points) {
    p += "point: <begin>" + join(w) + " <end>\n";
    p += "value: <begin>" + join(obj.flat()) + " <end>\n";
  }
  p += "\nPropose one improved point with " + std::to_string(dim) +
       " comma-separated entries, each between " + detail::compact_double(w_min) + " and " +
       detail::compact_double(w_max) + ".\n";
  p += "Reply with a single data set that starts with <begin> and finishes with <end>.\n";
  return p;
}

/*!
 * First <begin>...<end> span, comma-split, strict decimal parse, clamped to
 * the box; anything else (including a wrong entry count) is a parse failure.
 */
inline std::optional<std::vector<double>> parse_completion(const std::string& text,
                                                           std::size_t expected_dim,
                                                           double w_min, double w_max) {
  std::size_t b = text.find("<begin>");
  if (b == std::string::npos) return std::nullopt;
  b += 7;
  std::size_t e = text.find("<end>", b);
  if (e == std::string::npos) return std::nullopt;
  std::string body = text.substr(b, e - b);
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t comma = body.find(',', pos);
    std::string tok = body.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos);
    // trim spaces and newlines
    std::size_t a = tok.find_first_not_of(" \t\r\n");
    std::size_t z = tok.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) return std::nullopt;
    tok = tok.substr(a, z - a + 1);
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(v)) return std::nullopt;
      out.push_back(std::clamp(v, w_min, w_max));
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.size() != expected_dim) return std::nullopt;
  return out;
}

struct EvolveStats {
  int external_calls = 0;
  int external_parsed = 0;
  int external_fallbacks = 0;  // transport failures + parse failures
  int infeasible_discards = 0;
  int replacements = 0;
};

/*!
 * One generation: for every subproblem pick parents (neighborhood with
 * probability p_near, otherwise the whole population), produce an offspring,
 * evaluate it exactly, update the ideal point, and replace any neighbor
 * whose scalarized value does not beat the offspring's.
 */
inline void evolve_step(Population& pop, const WeightSet& ws,
                        const std::vector<Vehicle>& vehicles, const ScenarioConfig& cfg,
                        OffspringOperator& op, double p_near, Rng& rng, EvolveStats& stats) {
  const std::size_t s_count = ws.weights.size();
  if (pop.members.size() != s_count) throw std::domain_error("evolve_step: population size mismatch");
  const double w_min = cfg.w_min_slots, w_max = cfg.w_max_slots;

  for (std::size_t s = 0; s < s_count; ++s) {
    const std::vector<std::size_t>& hood = ws.neighborhoods[s];
    bool near = rng.uniform01() < p_near;
    auto pick = [&]() -> std::size_t {
      if (near) return hood[static_cast<std::size_t>(rng.below(hood.size()))];
      return static_cast<std::size_t>(rng.below(pop.members.size()));
    };
    std::size_t i1 = pick(), i2 = pick();
    const std::vector<double>& p1 = pop.members[i1].w;
    const std::vector<double>& p2 = pop.members[i2].w;

    std::vector<double> child;
    if (op.kind == OffspringOperator::Kind::external_text && op.client != nullptr &&
        stats.external_calls < op.budget) {
      ++stats.external_calls;
      std::string prompt = build_prompt({{p1, pop.members[i1].obj}, {p2, pop.members[i2].obj}},
                                        w_min, w_max);
      std::optional<std::string> reply = op.client->complete(prompt);
      std::optional<std::vector<double>> parsed =
          reply ? parse_completion(*reply, p1.size(), w_min, w_max) : std::nullopt;
      if (parsed) {
        ++stats.external_parsed;
        child = std::move(*parsed);
      } else {
        ++stats.external_fallbacks;
      }
    }
    if (child.empty())
      child = genetic_offspring(p1, p2, rng, w_min, w_max, op.mutation_sd_slots, op.blend_span);

    ObjectiveVector obj;
    try {
      obj = evaluate_objectives(vehicles, child, cfg).objectives;
    } catch (const std::exception&) {
      ++stats.infeasible_discards;
      continue;
    }
    pop.absorb(obj);
    for (std::size_t j : hood) {
      double g_new = tchebycheff(obj, ws.weights[j], pop.z_star);
      double g_old = tchebycheff(pop.members[j].obj, ws.weights[j], pop.z_star);
      if (g_new <= g_old) {
        pop.members[j].w = child;
        pop.members[j].obj = obj;
        ++stats.replacements;
      }
    }
  }
}

/*! Indices of members not dominated by any other member (minimization). */
inline std::vector<std::size_t> nondominated_indices(const Population& pop) {
  std::vector<std::size_t> out;
  const std::size_t n = pop.members.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> gi = pop.members[i].obj.flat();
    bool dominated = false;
    for (std::size_t j = 0; j < n && !dominated; ++j) {
      if (j == i) continue;
      std::vector<double> gj = pop.members[j].obj.flat();
      bool all_le = true, any_lt = false;
      for (std::size_t k = 0; k < gi.size(); ++k) {
        if (gj[k] > gi[k]) all_le = false;
        if (gj[k] < gi[k]) any_lt = true;
      }
      dominated = all_le && any_lt;
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

struct Selection {
  Individual chosen;
  bool relaxed = false;  // no candidate met the caps; global min-age returned
};

/*!
 * Final pick: among members whose fairness deviations all fit obj_caps,
 * the lowest mean age not above age_threshold wins; otherwise fall back to
 * the global minimum-age member and set the relaxation flag.
 */
inline Selection select_final(const Population& pop, const std::vector<double>& obj_caps,
                              double age_threshold) {
  if (pop.members.empty()) throw std::domain_error("select_final: empty population");
  const Individual* best = nullptr;
  for (const Individual& ind : pop.members) {
    if (ind.obj.fairness_dev.size() != obj_caps.size())
      throw std::domain_error("select_final: cap dimension mismatch");
    bool ok = ind.obj.mean_aoi <= age_threshold;
    for (std::size_t k = 0; k < obj_caps.size() && ok; ++k)
      if (ind.obj.fairness_dev[k] > obj_caps[k]) ok = false;
    if (ok && (best == nullptr || ind.obj.mean_aoi < best->obj.mean_aoi)) best = &ind;
  }
  Selection sel;
  if (best != nullptr) {
    sel.chosen = *best;
    return sel;
  }
  sel.relaxed = true;
  const Individual* min_age = &pop.members.front();
  for (const Individual& ind : pop.members)
    if (ind.obj.mean_aoi < min_age->obj.mean_aoi) min_age = &ind;
  sel.chosen = *min_age;
  return sel;
}

struct MoeadResult {
  Population pop;
  std::vector<std::size_t> nondominated;
  Selection selection;
  EvolveStats stats;
  int generations = 0;
};

/*!
 * Full decomposition run. Caps and age threshold default from the
 * fixed-window baseline: twice its fairness deviations and its mean age.
 */
inline MoeadResult moead_run(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles,
                             OffspringOperator op, std::uint64_t seed) {
  const std::size_t n = vehicles.size();
  if (n == 0) throw std::domain_error("moead_run: no vehicles");
  WeightSet ws = build_weight_set(cfg.moead_pop, n + 1, cfg.moead_neighbors);
  Rng rng(seed);

  MoeadResult res;
  res.pop.members.resize(ws.weights.size());
  for (Individual& ind : res.pop.members) {
    ind.w.resize(n);
    for (double& w : ind.w)
      w = cfg.w_min_slots + rng.uniform01() * (cfg.w_max_slots - cfg.w_min_slots);
    ind.obj = evaluate_objectives(vehicles, ind.w, cfg).objectives;
    res.pop.absorb(ind.obj);
  }

  for (int g = 0; g < cfg.moead_generations; ++g) {
    evolve_step(res.pop, ws, vehicles, cfg, op, cfg.moead_pnear, rng, res.stats);
    ++res.generations;
  }

  Evaluation base = evaluate_fixed_window(vehicles, cfg.baseline_window_slots, cfg);
  std::vector<double> caps(n);
  for (std::size_t v = 0; v < n; ++v) caps[v] = 2.0 * base.objectives.fairness_dev[v];
  res.nondominated = nondominated_indices(res.pop);
  res.selection = select_final(res.pop, caps, base.objectives.mean_aoi);
  return res;
}

}  // namespace fairaoi

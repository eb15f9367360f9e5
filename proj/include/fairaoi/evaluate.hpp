#pragma once

#include <vector>

#include "fairaoi/aoi_shs.hpp"
#include "fairaoi/scenario.hpp"
#include "fairaoi/sps_access.hpp"

namespace fairaoi {

// The joint objective: one fairness deviation per vehicle plus the network
// mean age, in that order.
struct ObjectiveVector {
  std::vector<double> fairness_dev;  // |G_v - mean|
  double mean_aoi = 0.0;

  std::size_t size() const { return fairness_dev.size() + 1; }
  double operator[](std::size_t i) const {
    return i < fairness_dev.size() ? fairness_dev[i] : mean_aoi;
  }
  std::vector<double> flat() const {
    std::vector<double> v = fairness_dev;
    v.push_back(mean_aoi);
    return v;
  }
};

struct Evaluation {
  ObjectiveVector objectives;
  FairnessReport fairness;
  AoiReport aoi;
};

/*! Exact (non-linearized) objective evaluation at a window vector in slots. */
inline Evaluation evaluate_objectives(const std::vector<Vehicle>& vehicles,
                                      const std::vector<double>& windows_slots,
                                      const ScenarioConfig& cfg) {
  Evaluation ev;
  ev.fairness = fairness_report(vehicles, windows_slots, cfg);
  ev.aoi = mean_aoi(link_rates(windows_slots, cfg));
  ev.objectives.fairness_dev = ev.fairness.deviation;
  ev.objectives.mean_aoi = ev.aoi.mean;
  return ev;
}

/*! Baseline evaluation: every vehicle on the same fixed window. */
inline Evaluation evaluate_fixed_window(const std::vector<Vehicle>& vehicles, double w_slots,
                                        const ScenarioConfig& cfg) {
  std::vector<double> w(vehicles.size(), w_slots);
  return evaluate_objectives(vehicles, w, cfg);
}

}  // namespace fairaoi

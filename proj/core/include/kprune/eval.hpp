#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kprune/mask.hpp"
#include "kprune/model.hpp"
#include "kprune/profiler.hpp"
#include "kprune/scenegen.hpp"

namespace kprune {

// IoU on a 0-100 scale. per_class[c] is empty when class c appears in
// neither mask; global is the unweighted mean over classes present in the
// ground truth.
struct IoUReport {
  std::vector<std::optional<double>> per_class;
  double global = 0.0;
};

IoUReport iou(const SegMask& pred, const SegMask& truth, std::size_t num_classes = 6);

// 100 * |disha - random| / random; empty when random is 0.
std::optional<double> improvement(double disha, double random);

// Fraction of pixels on which two predictions agree.
double fidelity(const SegMask& a, const SegMask& b);

struct MethodSummary {
  std::string name;
  std::size_t params = 0;
  std::size_t prunable_params = 0;
  double param_reduction_pct = 0.0;
  double prunable_reduction_pct = 0.0;
  double mean_fidelity = 0.0;
  double mean_global_iou = 0.0;
  // Timing-derived.
  double latency_ms = 0.0;
  double energy_j = 0.0;
  double latency_reduction_pct = 0.0;
  double energy_reduction_pct = 0.0;
  double avg_power_w = 0.0;
  double battery_hours = 0.0;
  double battery_delta_hours = 0.0;
};

struct BatteryConfig {
  double capacity_mah = 7800.0;
  double voltage_v = 12.0;
  double system_watts = 5.0;
};

struct ComparisonReport {
  double p = 0.0;
  std::size_t scenes = 0;
  MethodSummary base;
  MethodSummary disha;
  MethodSummary random;
  std::optional<double> iou_improvement_pct;
  std::optional<double> fidelity_improvement_pct;
};

struct ProfiledModel {
  const ModelGraph* model = nullptr;
  ModelProfile profile;
};

// Fidelity is measured against the base model's own predictions; IoU against
// the scenes' ground truth. Energy uses `power`; battery hours assume one
// inference per base-model frame period.
ComparisonReport compare_report(const ProfiledModel& base, const ProfiledModel& disha, const ProfiledModel& random,
                                std::span<const Scene> dataset, double p, const PowerModel& power,
                                const BatteryConfig& battery = {});

// Timing-derived fields live under "timing" so determinism checks can drop them.
nlohmann::json to_json(const ComparisonReport& report);
std::string to_table(const ComparisonReport& report);

}  // namespace kprune

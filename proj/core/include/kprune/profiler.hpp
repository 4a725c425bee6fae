#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kprune/model.hpp"
#include "kprune/tensor.hpp"

namespace kprune {

struct BlockProfile {
  int block = 0;
  double latency_ms = 0.0;  // median of per-group means
  double latency_stddev_ms = 0.0;
  std::size_t param_count = 0;
  std::size_t prunable_param_count = 0;
};

struct ModelProfile {
  std::vector<BlockProfile> blocks;  // exactly one per encoder block
  double decoder_ms = 0.0;
  double total_ms = 0.0;
  int reps = 0;
  int warmup = 0;
};

// Wall-clock latency of every block measured around its op run inside a full
// forward pass. Warmup passes are discarded. Only one profiling session may
// run per process at a time; a concurrent call throws BusyError.
ModelProfile profile_blocks(const ModelGraph& model, int reps, int warmup, const Tensor& input);

// Watts drawn while each block executes. Blocks missing from the map are a
// configuration error; a missing decoder entry means the decoder is not
// charged.
struct PowerModel {
  std::map<int, double> block_watts;
  std::optional<double> decoder_watts;

  static PowerModel uniform(int blocks, double watts, std::optional<double> decoder_watts = std::nullopt);
};

struct BlockEnergy {
  int block = 0;
  double latency_ms = 0.0;
  std::size_t param_count = 0;
  double power_w = 0.0;
  double energy_j = 0.0;
};

struct EnergyReport {
  std::vector<BlockEnergy> blocks;
  double decoder_latency_ms = 0.0;
  double decoder_power_w = 0.0;
  double decoder_energy_j = 0.0;
  double total_latency_ms = 0.0;
  double total_energy_j = 0.0;
};

EnergyReport estimate_energy(const ModelProfile& profile, const PowerModel& power);
EnergyReport estimate_energy(std::span<const BlockProfile> blocks, const PowerModel& power);

// 100 * (baseline - value) / baseline.
double reduction_percent(double baseline, double value);

// Nominal pack energy over average draw: (mAh / 1000 * V) / W.
double battery_hours(double avg_power_w, double capacity_mah, double voltage_v);
double battery_extension_hours(double baseline_power_w, double pruned_power_w, double capacity_mah, double voltage_v);

// Average draw when one inference runs every `frame_period_ms` on top of a
// constant system draw.
double average_power(const EnergyReport& report, double frame_period_ms, double system_watts);

nlohmann::json to_json(const EnergyReport& report, const EnergyReport* baseline = nullptr);
nlohmann::json to_json(const ModelProfile& profile);
// Inverse of to_json(ModelProfile); ConfigError on a malformed document.
ModelProfile profile_from_json(const nlohmann::json& j);

}  // namespace kprune

#include "kprune/profiler.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "kprune/errors.hpp"
#include "kprune/forward.hpp"

namespace kprune {
namespace {

std::atomic<bool> g_profiling{false};

class SessionGuard {
 public:
  SessionGuard() {
    if (g_profiling.exchange(true)) throw BusyError("another profiling session is already running");
  }
  ~SessionGuard() { g_profiling.store(false); }
  SessionGuard(const SessionGuard&) = delete;
  SessionGuard& operator=(const SessionGuard&) = delete;
};

class SegmentTimer : public ForwardObserver {
 public:
  using Clock = std::chrono::steady_clock;

  explicit SegmentTimer(int blocks) : elapsed_ms_(static_cast<std::size_t>(blocks) + 1, 0.0) {}

  void segment_begin(int) override { start_ = Clock::now(); }
  void segment_end(int block) override {
    elapsed_ms_[static_cast<std::size_t>(block)] += std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
  }

  void reset() { std::fill(elapsed_ms_.begin(), elapsed_ms_.end(), 0.0); }
  const std::vector<double>& elapsed_ms() const { return elapsed_ms_; }

 private:
  Clock::time_point start_;
  std::vector<double> elapsed_ms_;
};

double median_of_means(const std::vector<double>& samples) {
  const std::size_t groups = std::min<std::size_t>(5, samples.size());
  std::vector<double> means;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t lo = g * samples.size() / groups, hi = (g + 1) * samples.size() / groups;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += samples[i];
    means.push_back(s / static_cast<double>(hi - lo));
  }
  std::sort(means.begin(), means.end());
  const std::size_t mid = means.size() / 2;
  return means.size() % 2 ? means[mid] : 0.5 * (means[mid - 1] + means[mid]);
}

double stddev(const std::vector<double>& samples) {
  if (samples.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

}  // namespace

ModelProfile profile_blocks(const ModelGraph& model, int reps, int warmup, const Tensor& input) {
  if (reps < 1) throw DomainError("profile: reps must be >= 1, got " + std::to_string(reps));
  if (warmup < 0) throw DomainError("profile: warmup must be >= 0, got " + std::to_string(warmup));
  SessionGuard guard;

  SegmentTimer timer(model.num_blocks);
  for (int i = 0; i < warmup; ++i) forward(model, input, Capture::kOff, &timer);

  const std::size_t segments = static_cast<std::size_t>(model.num_blocks) + 1;
  std::vector<std::vector<double>> samples(segments);
  std::vector<double> totals;
  for (int i = 0; i < reps; ++i) {
    timer.reset();
    const auto t0 = SegmentTimer::Clock::now();
    forward(model, input, Capture::kOff, &timer);
    totals.push_back(std::chrono::duration<double, std::milli>(SegmentTimer::Clock::now() - t0).count());
    for (std::size_t s = 0; s < segments; ++s) samples[s].push_back(timer.elapsed_ms()[s]);
  }

  ModelProfile profile;
  profile.reps = reps;
  profile.warmup = warmup;
  for (int b = 1; b <= model.num_blocks; ++b) {
    const auto& xs = samples[static_cast<std::size_t>(b)];
    BlockProfile bp;
    bp.block = b;
    bp.latency_ms = median_of_means(xs);
    bp.latency_stddev_ms = stddev(xs);
    bp.param_count = model.block_param_count(b);
    bp.prunable_param_count = model.block_prunable_param_count(b);
    profile.blocks.push_back(bp);
  }
  profile.decoder_ms = median_of_means(samples[0]);
  profile.total_ms = median_of_means(totals);
  return profile;
}

PowerModel PowerModel::uniform(int blocks, double watts, std::optional<double> decoder_watts) {
  PowerModel pm;
  for (int b = 1; b <= blocks; ++b) pm.block_watts[b] = watts;
  pm.decoder_watts = decoder_watts;
  return pm;
}

EnergyReport estimate_energy(const ModelProfile& profile, const PowerModel& power) {
  EnergyReport r;
  for (const BlockProfile& bp : profile.blocks) {
    auto it = power.block_watts.find(bp.block);
    if (it == power.block_watts.end()) {
      throw ConfigError("power model has no entry for block " + std::to_string(bp.block));
    }
    if (!(it->second > 0.0)) throw DomainError("power for block " + std::to_string(bp.block) + " must be > 0");
    BlockEnergy be;
    be.block = bp.block;
    be.latency_ms = bp.latency_ms;
    be.param_count = bp.param_count;
    be.power_w = it->second;
    be.energy_j = it->second * bp.latency_ms / 1000.0;
    r.blocks.push_back(be);
    r.total_latency_ms += bp.latency_ms;
    r.total_energy_j += be.energy_j;
  }
  if (power.decoder_watts) {
    if (!(*power.decoder_watts > 0.0)) throw DomainError("decoder power must be > 0");
    r.decoder_latency_ms = profile.decoder_ms;
    r.decoder_power_w = *power.decoder_watts;
    r.decoder_energy_j = r.decoder_power_w * profile.decoder_ms / 1000.0;
    r.total_latency_ms += profile.decoder_ms;
    r.total_energy_j += r.decoder_energy_j;
  }
  return r;
}

EnergyReport estimate_energy(std::span<const BlockProfile> blocks, const PowerModel& power) {
  ModelProfile p;
  p.blocks.assign(blocks.begin(), blocks.end());
  return estimate_energy(p, power);
}

double reduction_percent(double baseline, double value) {
  if (!(baseline > 0.0)) throw DomainError("reduction baseline must be > 0");
  return 100.0 * (baseline - value) / baseline;
}

double battery_hours(double avg_power_w, double capacity_mah, double voltage_v) {
  if (!(avg_power_w > 0.0) || !(capacity_mah > 0.0) || !(voltage_v > 0.0)) {
    throw DomainError("battery estimate needs positive power, capacity and voltage");
  }
  return capacity_mah / 1000.0 * voltage_v / avg_power_w;
}

double battery_extension_hours(double baseline_power_w, double pruned_power_w, double capacity_mah, double voltage_v) {
  return battery_hours(pruned_power_w, capacity_mah, voltage_v) - battery_hours(baseline_power_w, capacity_mah, voltage_v);
}

double average_power(const EnergyReport& report, double frame_period_ms, double system_watts) {
  if (!(frame_period_ms > 0.0)) throw DomainError("frame period must be > 0");
  if (system_watts < 0.0) throw DomainError("system power must be >= 0");
  return system_watts + report.total_energy_j / (frame_period_ms / 1000.0);
}

nlohmann::json to_json(const EnergyReport& report, const EnergyReport* baseline) {
  nlohmann::json j;
  nlohmann::json blocks = nlohmann::json::array();
  for (const BlockEnergy& be : report.blocks) {
    blocks.push_back({{"b", be.block},
                      {"l_b_ms", be.latency_ms},
                      {"w_b", be.param_count},
                      {"power_W", be.power_w},
                      {"energy_J", be.energy_j}});
  }
  j["blocks"] = blocks;
  j["decoder"] = {{"l_ms", report.decoder_latency_ms},
                  {"power_W", report.decoder_power_w},
                  {"energy_J", report.decoder_energy_j}};
  j["totals"] = {{"latency_ms", report.total_latency_ms}, {"energy_J", report.total_energy_j}};
  if (baseline != nullptr) {
    j["reduction_pct"] = {{"latency", reduction_percent(baseline->total_latency_ms, report.total_latency_ms)},
                          {"energy", reduction_percent(baseline->total_energy_j, report.total_energy_j)}};
  }
  return j;
}

nlohmann::json to_json(const ModelProfile& profile) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const BlockProfile& bp : profile.blocks) {
    blocks.push_back({{"b", bp.block},
                      {"l_b_ms", bp.latency_ms},
                      {"l_b_stddev_ms", bp.latency_stddev_ms},
                      {"w_b", bp.param_count},
                      {"w_b_prunable", bp.prunable_param_count}});
  }
  return {{"blocks", blocks},
          {"decoder_ms", profile.decoder_ms},
          {"total_ms", profile.total_ms},
          {"reps", profile.reps},
          {"warmup", profile.warmup}};
}

ModelProfile profile_from_json(const nlohmann::json& j) {
  try {
    ModelProfile p;
    for (const auto& b : j.at("blocks")) {
      BlockProfile bp;
      bp.block = b.at("b").get<int>();
      bp.latency_ms = b.at("l_b_ms").get<double>();
      bp.latency_stddev_ms = b.value("l_b_stddev_ms", 0.0);
      bp.param_count = b.at("w_b").get<std::size_t>();
      bp.prunable_param_count = b.at("w_b_prunable").get<std::size_t>();
      p.blocks.push_back(bp);
    }
    p.decoder_ms = j.value("decoder_ms", 0.0);
    p.total_ms = j.value("total_ms", 0.0);
    p.reps = j.value("reps", 0);
    p.warmup = j.value("warmup", 0);
    if (p.blocks.empty()) throw ConfigError("profile has no blocks");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed profile: ") + e.what());
  }
}

}  // namespace kprune

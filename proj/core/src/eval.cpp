#include "kprune/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kprune/errors.hpp"
#include "kprune/forward.hpp"

namespace kprune {

IoUReport iou(const SegMask& pred, const SegMask& truth, std::size_t num_classes) {
  if (pred.height != truth.height || pred.width != truth.width) {
    throw DimensionError("iou: prediction is " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                         ", truth is " + std::to_string(truth.height) + "x" + std::to_string(truth.width));
  }
  std::vector<std::size_t> inter(num_classes, 0), uni(num_classes, 0), in_truth(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t a = pred.labels[i], b = truth.labels[i];
    if (a >= num_classes || b >= num_classes) throw DomainError("iou: class id outside 0.." + std::to_string(num_classes - 1));
    ++in_truth[b];
    if (a == b) {
      ++inter[a];
      ++uni[a];
    } else {
      ++uni[a];
      ++uni[b];
    }
  }
  IoUReport r;
  r.per_class.resize(num_classes);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (uni[c] == 0) continue;
    r.per_class[c] = 100.0 * static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    if (in_truth[c] > 0) {
      sum += *r.per_class[c];
      ++present;
    }
  }
  r.global = present ? sum / static_cast<double>(present) : 0.0;
  return r;
}

std::optional<double> improvement(double disha, double random) {
  if (random < 0.0) throw DomainError("improvement: random-pruning accuracy must be >= 0");
  if (random == 0.0) return std::nullopt;
  return 100.0 * std::fabs(disha - random) / random;
}

double fidelity(const SegMask& a, const SegMask& b) {
  if (a.height != b.height || a.width != b.width) throw DimensionError("fidelity: mask shapes differ");
  if (a.size() == 0) throw DimensionError("fidelity: empty masks");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a.labels[i] == b.labels[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

namespace {

MethodSummary summarize(const std::string& name, const ProfiledModel& pm, const ModelGraph& base_model,
                        std::span<const SegMask> base_preds, std::span<const Scene> dataset) {
  MethodSummary s;
  s.name = name;
  s.params = pm.model->param_count();
  s.prunable_params = pm.model->prunable_param_count();
  s.param_reduction_pct = reduction_percent(static_cast<double>(base_model.param_count()), static_cast<double>(s.params));
  const double base_prunable = static_cast<double>(base_model.prunable_param_count());
  s.prunable_reduction_pct = base_prunable > 0.0
                                 ? 100.0 * (static_cast<double>(base_model.param_count()) - static_cast<double>(s.params)) /
                                       base_prunable
                                 : 0.0;
  double fid = 0.0, glob = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const SegMask pred = argmax_mask(forward(*pm.model, dataset[i].image).logits);
    fid += fidelity(pred, base_preds[i]);
    glob += iou(pred, dataset[i].truth, base_model.num_classes).global;
  }
  if (!dataset.empty()) {
    s.mean_fidelity = fid / static_cast<double>(dataset.size());
    s.mean_global_iou = glob / static_cast<double>(dataset.size());
  }
  return s;
}

void fill_timing(MethodSummary& s, const EnergyReport& e, const EnergyReport& base_e, double period_ms,
                 const BatteryConfig& battery) {
  s.latency_ms = e.total_latency_ms;
  s.energy_j = e.total_energy_j;
  s.latency_reduction_pct = reduction_percent(base_e.total_latency_ms, e.total_latency_ms);
  s.energy_reduction_pct = reduction_percent(base_e.total_energy_j, e.total_energy_j);
  s.avg_power_w = average_power(e, period_ms, battery.system_watts);
  s.battery_hours = battery_hours(s.avg_power_w, battery.capacity_mah, battery.voltage_v);
}

}  // namespace

ComparisonReport compare_report(const ProfiledModel& base, const ProfiledModel& disha, const ProfiledModel& random,
                                std::span<const Scene> dataset, double p, const PowerModel& power,
                                const BatteryConfig& battery) {
  for (const ProfiledModel* m : {&base, &disha, &random}) {
    if (m->model == nullptr) throw ConfigError("compare_report: missing model");
    if (m->model->input_shape != base.model->input_shape || m->model->num_classes != base.model->num_classes) {
      throw DimensionError("compare_report: models do not share input/output shapes");
    }
  }
  std::vector<SegMask> base_preds;
  base_preds.reserve(dataset.size());
  for (const Scene& s : dataset) base_preds.push_back(argmax_mask(forward(*base.model, s.image).logits));

  ComparisonReport r;
  r.p = p;
  r.scenes = dataset.size();
  r.base = summarize("unpruned", base, *base.model, base_preds, dataset);
  r.disha = summarize("disha", disha, *base.model, base_preds, dataset);
  r.random = summarize("random", random, *base.model, base_preds, dataset);

  const EnergyReport eb = estimate_energy(base.profile, power);
  const EnergyReport ed = estimate_energy(disha.profile, power);
  const EnergyReport er = estimate_energy(random.profile, power);
  const double period = eb.total_latency_ms;
  fill_timing(r.base, eb, eb, period, battery);
  fill_timing(r.disha, ed, eb, period, battery);
  fill_timing(r.random, er, eb, period, battery);
  for (MethodSummary* s : {&r.base, &r.disha, &r.random}) s->battery_delta_hours = s->battery_hours - r.base.battery_hours;

  r.iou_improvement_pct = improvement(r.disha.mean_global_iou, r.random.mean_global_iou);
  r.fidelity_improvement_pct = improvement(r.disha.mean_fidelity, r.random.mean_fidelity);
  return r;
}

nlohmann::json to_json(const ComparisonReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json methods = json::object();
  json timing = json::object();
  for (const MethodSummary* s : {&r.base, &r.disha, &r.random}) {
    methods[s->name] = {{"params", s->params},
                        {"prunable_params", s->prunable_params},
                        {"param_reduction_pct", s->param_reduction_pct},
                        {"prunable_reduction_pct", s->prunable_reduction_pct},
                        {"mean_fidelity", s->mean_fidelity},
                        {"mean_global_iou", s->mean_global_iou}};
    timing[s->name] = {{"latency_ms", s->latency_ms},
                       {"energy_J", s->energy_j},
                       {"latency_reduction_pct", s->latency_reduction_pct},
                       {"energy_reduction_pct", s->energy_reduction_pct},
                       {"avg_power_W", s->avg_power_w},
                       {"battery_hours", s->battery_hours},
                       {"battery_delta_hours", s->battery_delta_hours}};
  }
  return {{"p", r.p},
          {"scenes", r.scenes},
          {"methods", methods},
          {"iou_improvement_pct", opt(r.iou_improvement_pct)},
          {"fidelity_improvement_pct", opt(r.fidelity_improvement_pct)},
          {"timing", timing}};
}

std::string to_table(const ComparisonReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s| %-19s|| %-19s|\n", "", "     Latency (%)", "      Energy (%)");
  os << line;
  std::snprintf(line, sizeof line, "%-10s| %-8s | %-8s || %-8s | %-8s |\n", "", "Random", "DISHA", "Random", "DISHA");
  os << line;
  std::snprintf(line, sizeof line, "p=%-8.2f| %8.2f | %8.2f || %8.2f | %8.2f |\n", r.p, r.random.latency_reduction_pct,
                r.disha.latency_reduction_pct, r.random.energy_reduction_pct, r.disha.energy_reduction_pct);
  os << line << '\n';
  std::snprintf(line, sizeof line, "%-10s %10s %12s %10s %10s %12s\n", "method", "params", "prunable %", "fidelity",
                "mIoU", "battery +h");
  os << line;
  for (const MethodSummary* s : {&r.base, &r.disha, &r.random}) {
    std::snprintf(line, sizeof line, "%-10s %10zu %12.2f %10.4f %10.2f %12.3f\n", s->name.c_str(), s->params,
                  s->prunable_reduction_pct, s->mean_fidelity, s->mean_global_iou, s->battery_delta_hours);
    os << line;
  }
  return os.str();
}

}  // namespace kprune

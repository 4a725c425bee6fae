#include "kprune/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "kprune/errors.hpp"
#include "kprune/forward.hpp"

namespace kprune {

std::size_t KScoreTable::total_params() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.params;
  return n;
}

KScoreTable compute_kscores(std::span<const BlockCost> costs) {
  if (costs.empty()) throw DomainError("k-scores need at least one block");
  KScoreTable t;
  for (const BlockCost& c : costs) {
    if (!(c.latency_ms > 0.0) || !std::isfinite(c.latency_ms)) {
      throw DomainError("block " + std::to_string(c.block) + " latency must be positive and finite");
    }
    if (c.params == 0) throw DomainError("block " + std::to_string(c.block) + " has no parameters");
    KScoreEntry e{c.block, c.params, c.latency_ms, static_cast<double>(c.params) * c.latency_ms};
    t.sum_k += e.k;
    t.entries.push_back(e);
  }
  return t;
}

KScoreTable compute_kscores(std::span<const BlockProfile> profiles, ParamBasis basis) {
  std::vector<BlockCost> costs;
  for (const BlockProfile& p : profiles) {
    costs.push_back({p.block, basis == ParamBasis::kPrunable ? p.prunable_param_count : p.param_count, p.latency_ms});
  }
  return compute_kscores(costs);
}

std::size_t AllocationPlan::pruned_total() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.pruned;
  return n;
}

double AllocationPlan::ratio_for(int block) const {
  for (const auto& b : blocks) {
    if (b.block == block) return b.ratio;
  }
  throw ConfigError("allocation plan has no ratio for block " + std::to_string(block));
}

namespace {

void check_ratio(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("pruning ratio must lie in (0, 1), got " + std::to_string(p));
  }
}

AllocationPlan plan_header(double p, const KScoreTable& table, double p_max) {
  if (table.entries.empty()) throw DomainError("allocation needs a non-empty k-score table");
  AllocationPlan plan;
  plan.p = p;
  plan.p_max = p_max;
  plan.total_params = table.total_params();
  plan.target_pruned = p * static_cast<double>(plan.total_params);
  plan.c = plan.target_pruned / table.sum_k;
  return plan;
}

}  // namespace

AllocationPlan allocate(double p, const KScoreTable& table, double p_max) {
  check_ratio(p);
  if (!(p_max > 0.0 && p_max < 1.0)) throw DomainError("p_max must lie in (0, 1)");
  AllocationPlan plan = plan_header(p, table, p_max);

  const std::size_t n = table.entries.size();
  std::vector<bool> clamped(n, false);
  double c = plan.c;
  for (;;) {
    double fixed = 0.0, free_k = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (clamped[i]) {
        fixed += p_max * static_cast<double>(table.entries[i].params);
      } else {
        free_k += table.entries[i].k;
      }
    }
    if (free_k == 0.0) {
      if (plan.target_pruned - fixed > 1e-9 * plan.target_pruned) {
        throw InfeasibleError("every block is clamped at p_max=" + std::to_string(p_max) +
                              " and the budget p=" + std::to_string(p) + " is still not met");
      }
      break;
    }
    c = (plan.target_pruned - fixed) / free_k;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!clamped[i] && c * table.entries[i].k > p_max * static_cast<double>(table.entries[i].params)) {
        clamped[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const KScoreEntry& e = table.entries[i];
    BlockAllocation a;
    a.block = e.block;
    a.params = e.params;
    a.k = e.k;
    a.clamped = clamped[i];
    const double w = static_cast<double>(e.params);
    if (clamped[i]) {
      a.pruned_exact = p_max * w;
      a.pruned = static_cast<std::size_t>(std::floor(a.pruned_exact));
      a.ratio = p_max;
    } else {
      a.pruned_exact = c * e.k;
      a.pruned = static_cast<std::size_t>(std::llround(a.pruned_exact));
      a.ratio = a.pruned_exact / w;
    }
    plan.blocks.push_back(a);
  }
  return plan;
}

AllocationPlan uniform_allocation(double p, const KScoreTable& table) {
  check_ratio(p);
  AllocationPlan plan = plan_header(p, table, p);
  for (const KScoreEntry& e : table.entries) {
    BlockAllocation a;
    a.block = e.block;
    a.params = e.params;
    a.k = e.k;
    a.pruned_exact = p * static_cast<double>(e.params);
    a.pruned = static_cast<std::size_t>(std::llround(a.pruned_exact));
    a.ratio = p;
    plan.blocks.push_back(a);
  }
  return plan;
}

OpActivations OpActivations::from_sums(std::string op, int block, std::vector<double> sums,
                                       std::vector<std::size_t> unit_groups) {
  OpActivations a;
  a.op = std::move(op);
  a.block = block;
  a.sums = std::move(sums);
  a.unit_groups = unit_groups.empty() ? std::vector<std::size_t>{a.sums.size()} : std::move(unit_groups);
  if (std::accumulate(a.unit_groups.begin(), a.unit_groups.end(), std::size_t{0}) != a.sums.size()) {
    throw DimensionError("unit groups of '" + a.op + "' do not cover its " + std::to_string(a.sums.size()) + " units");
  }
  a.order.resize(a.sums.size());
  std::iota(a.order.begin(), a.order.end(), std::size_t{0});
  std::stable_sort(a.order.begin(), a.order.end(), [&](std::size_t x, std::size_t y) { return a.sums[x] > a.sums[y]; });
  return a;
}

const OpActivations& ActivationStats::find(std::string_view op) const {
  for (const auto& a : ops) {
    if (a.op == op) return a;
  }
  throw ConsistencyError("no activation statistics for op '" + std::string(op) + "'");
}

ActivationStats collect_activations(const ModelGraph& model, std::span<const Tensor> calibration) {
  if (calibration.empty()) throw DomainError("activation collection needs at least one calibration image");
  ActivationTrace total;
  for (const Tensor& image : calibration) {
    const ForwardResult r = forward(model, image, Capture::kOn);
    total.accumulate(*r.trace);
  }
  ActivationStats stats;
  stats.samples = calibration.size();
  for (const OpSpec& o : model.ops) {
    if (!o.prunable) continue;
    stats.ops.push_back(OpActivations::from_sums(o.id, o.block, total.unit_abs_sums.at(o.id), o.unit_groups));
  }
  return stats;
}

std::size_t prune_count(double ratio, std::size_t units, std::size_t groups) {
  if (ratio < 0.0 || ratio > 1.0) throw DomainError("unit pruning ratio must lie in [0, 1]");
  if (groups == 0 || groups > units) throw DomainError("unit groups must number between 1 and the unit count");
  const auto m = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(units) + 1e-9));
  return std::min(m, units - groups);
}

namespace {

// Group index of each unit, given contiguous group sizes.
std::vector<std::size_t> group_of_units(std::span<const std::size_t> groups) {
  std::vector<std::size_t> g;
  for (std::size_t i = 0; i < groups.size(); ++i) g.insert(g.end(), groups[i], i);
  return g;
}

}  // namespace

std::vector<std::size_t> select_lowest(const OpActivations& acts, std::size_t m) {
  const std::size_t units = acts.sums.size();
  if (m > units - acts.unit_groups.size()) throw DomainError("cannot remove " + std::to_string(m) + " units from '" + acts.op + "'");
  const auto group = group_of_units(acts.unit_groups);
  std::vector<bool> protect(units, false), seen(acts.unit_groups.size(), false);
  for (std::size_t u : acts.order) {
    if (!seen[group[u]]) {
      seen[group[u]] = true;
      protect[u] = true;
    }
  }
  std::vector<std::size_t> removed;
  for (auto it = acts.order.rbegin(); it != acts.order.rend() && removed.size() < m; ++it) {
    if (!protect[*it]) removed.push_back(*it);
  }
  std::sort(removed.begin(), removed.end());
  return removed;
}

std::vector<std::size_t> select_random(std::size_t units, std::span<const std::size_t> unit_groups, std::size_t m,
                                       std::uint64_t seed) {
  std::vector<std::size_t> groups(unit_groups.begin(), unit_groups.end());
  if (groups.empty()) groups = {units};
  if (std::accumulate(groups.begin(), groups.end(), std::size_t{0}) != units) {
    throw DimensionError("unit groups do not cover " + std::to_string(units) + " units");
  }
  if (m > units - groups.size()) throw DomainError("cannot remove " + std::to_string(m) + " units");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool;
  std::size_t base = 0;
  for (std::size_t g : groups) {
    const std::size_t keeper = base + std::uniform_int_distribution<std::size_t>(0, g - 1)(rng);
    for (std::size_t u = base; u < base + g; ++u) {
      if (u != keeper) pool.push_back(u);
    }
    base += g;
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string_view to_string(PruneMethod method) { return method == PruneMethod::kDisha ? "disha" : "random"; }

PruneMethod prune_method_from_string(std::string_view name) {
  if (name == "disha") return PruneMethod::kDisha;
  if (name == "random") return PruneMethod::kRandom;
  throw ConfigError("unknown pruning method '" + std::string(name) + "' (expected disha or random)");
}

std::size_t PrunePlan::removed_units() const {
  std::size_t n = 0;
  for (const auto& o : ops) n += o.removed.size();
  return n;
}

PrunePlan make_prune_plan(const ActivationStats& stats, const AllocationPlan& plan, PruneMethod method,
                          std::uint64_t seed, const ModelGraph* model) {
  PrunePlan out;
  out.method = method;
  out.seed = seed;
  for (std::size_t i = 0; i < stats.ops.size(); ++i) {
    const OpActivations& acts = stats.ops[i];
    const std::size_t units = acts.sums.size();
    OpPrune op;
    op.op = acts.op;
    op.block = acts.block;
    op.units = units;
    op.ratio = plan.ratio_for(acts.block);
    if (model != nullptr) op.propagated = model->op(acts.op).consumers;
    if (units <= acts.unit_groups.size()) {
      out.warnings.push_back({acts.op, "skipped: " + std::to_string(units) +
                                           " unit(s) cannot be pruned without emptying a group"});
      continue;
    }
    op.m = prune_count(op.ratio, units, acts.unit_groups.size());
    if (method == PruneMethod::kDisha) {
      op.removed = select_lowest(acts, op.m);
    } else {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::uint64_t op_seed = 0;
      std::vector<std::uint32_t> words(2);
      seq.generate(words.begin(), words.end());
      op_seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
      op.removed = select_random(units, acts.unit_groups, op.m, op_seed);
    }
    out.ops.push_back(std::move(op));
  }
  return out;
}

namespace {

// New per-head widths after dropping `removed` from contiguous heads `dims`.
std::vector<std::size_t> shrink_dims(const std::vector<std::size_t>& dims, const std::vector<bool>& drop,
                                     const std::string& where) {
  std::vector<std::size_t> out;
  std::size_t base = 0;
  for (std::size_t d : dims) {
    std::size_t kept = 0;
    for (std::size_t u = base; u < base + d; ++u) kept += drop[u] ? 0 : 1;
    if (kept == 0) throw ConsistencyError(where + ": pruning would empty a head");
    out.push_back(kept);
    base += d;
  }
  return out;
}

}  // namespace

ModelGraph apply_prune(const ModelGraph& model, const PrunePlan& plan) {
  ModelGraph out = model;
  for (const OpPrune& p : plan.ops) {
    if (p.removed.empty()) continue;
    OpSpec& leader = out.op(p.op);
    if (!leader.prunable) throw ConsistencyError("plan prunes non-prunable op '" + p.op + "'");
    const std::size_t units = leader.unit_count();
    std::vector<bool> drop(units, false);
    for (std::size_t u : p.removed) {
      if (u >= units) throw ConsistencyError("plan removes unit " + std::to_string(u) + " of '" + p.op + "' which has " + std::to_string(units));
      if (drop[u]) throw ConsistencyError("plan removes unit " + std::to_string(u) + " of '" + p.op + "' twice");
      drop[u] = true;
    }
    std::vector<std::size_t> keep;
    for (std::size_t u = 0; u < units; ++u) {
      if (!drop[u]) keep.push_back(u);
    }

    for (const Consumer& c : leader.consumers) {
      const std::size_t extent = out.axis_extent(c.op, c.axis);
      if (extent != units) {
        throw ConsistencyError("consumer '" + c.op + "' axis " + std::to_string(c.axis) + " has extent " +
                               std::to_string(extent) + ", producer '" + p.op + "' has " + std::to_string(units));
      }
      OpSpec& t = out.op(c.op);
      switch (t.kind) {
        case OpKind::kLinear:
        case OpKind::kConv:
          if (c.axis == kOutputAxis) {
            const bool depthwise = t.kind == OpKind::kConv && t.groups > 1 && t.groups == t.weight.dim(0);
            t.weight = t.weight.select(0, keep);
            if (!t.bias.empty()) t.bias = t.bias.select(0, keep);
            if (depthwise) t.groups = keep.size();
          } else if (t.kind == OpKind::kLinear || t.groups == 1) {
            t.weight = t.weight.select(1, keep);
          } else {
            throw ConsistencyError("cannot slice the input axis of grouped conv '" + t.id + "'");
          }
          break;
        case OpKind::kLayerNorm:
          t.weight = t.weight.select(0, keep);
          t.bias = t.bias.select(0, keep);
          break;
        case OpKind::kAttention:
          if (c.axis == kOutputAxis) {
            t.heads.qk_dims = shrink_dims(t.heads.qk_dims, drop, t.id);
          } else {
            t.heads.v_dims = shrink_dims(t.heads.v_dims, drop, t.id);
          }
          break;
        default:
          throw ConsistencyError("op '" + t.id + "' cannot consume pruned units");
      }
    }

    leader.unit_groups = shrink_dims(leader.unit_groups, drop, leader.id);
    leader.weight = leader.weight.select(0, keep);
    if (!leader.bias.empty()) leader.bias = leader.bias.select(0, keep);
  }
  out.validate();
  return out;
}

PruneOutcome prune_model(const ModelGraph& model, std::span<const BlockProfile> profiles,
                         std::span<const Tensor> calibration, double p, PruneMethod method, std::uint64_t seed) {
  PruneOutcome r;
  r.kscores = compute_kscores(profiles, ParamBasis::kPrunable);
  r.allocation = method == PruneMethod::kDisha ? allocate(p, r.kscores) : uniform_allocation(p, r.kscores);
  const ActivationStats stats = collect_activations(model, calibration);
  r.plan = make_prune_plan(stats, r.allocation, method, seed, &model);
  r.model = apply_prune(model, r.plan);
  return r;
}

nlohmann::json to_json(const KScoreTable& table) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& e : table.entries) {
    blocks.push_back({{"b", e.block}, {"w_b", e.params}, {"l_b_ms", e.latency_ms}, {"k_b", e.k}});
  }
  return {{"blocks", blocks}, {"sum_k", table.sum_k}};
}

nlohmann::json to_json(const AllocationPlan& plan) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : plan.blocks) {
    blocks.push_back({{"b", b.block},
                      {"w_b", b.params},
                      {"k_b", b.k},
                      {"w_b_pruned_exact", b.pruned_exact},
                      {"w_b_pruned", b.pruned},
                      {"p_b", b.ratio},
                      {"clamped", b.clamped}});
  }
  return {{"p", plan.p},
          {"p_max", plan.p_max},
          {"w", plan.total_params},
          {"w_pruned_target", plan.target_pruned},
          {"w_pruned", plan.pruned_total()},
          {"c", plan.c},
          {"blocks", blocks}};
}

nlohmann::json to_json(const PrunePlan& plan) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& o : plan.ops) {
    nlohmann::json propagated = nlohmann::json::array();
    for (const auto& c : o.propagated) propagated.push_back({{"op", c.op}, {"axis", c.axis}});
    ops.push_back({{"op", o.op},
                   {"block", o.block},
                   {"units", o.units},
                   {"p_b", o.ratio},
                   {"M", o.m},
                   {"removed", o.removed},
                   {"propagated", propagated}});
  }
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& w : plan.warnings) warnings.push_back({{"op", w.op}, {"message", w.message}});
  return {{"method", to_string(plan.method)}, {"seed", plan.seed}, {"ops", ops}, {"warnings", warnings}};
}

PrunePlan prune_plan_from_json(const nlohmann::json& j) {
  try {
    PrunePlan plan;
    plan.method = prune_method_from_string(j.at("method").get<std::string>());
    plan.seed = j.value("seed", std::uint64_t{0});
    for (const auto& jo : j.at("ops")) {
      OpPrune o;
      o.op = jo.at("op").get<std::string>();
      o.block = jo.value("block", 0);
      o.units = jo.value("units", std::size_t{0});
      o.ratio = jo.value("p_b", 0.0);
      o.m = jo.value("M", std::size_t{0});
      o.removed = jo.at("removed").get<std::vector<std::size_t>>();
      if (jo.contains("propagated")) {
        for (const auto& c : jo.at("propagated")) o.propagated.push_back({c.at("op").get<std::string>(), c.at("axis").get<int>()});
      }
      plan.ops.push_back(std::move(o));
    }
    if (j.contains("warnings")) {
      for (const auto& w : j.at("warnings")) plan.warnings.push_back({w.at("op").get<std::string>(), w.at("message").get<std::string>()});
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed prune plan: ") + e.what());
  }
}

}  // namespace kprune

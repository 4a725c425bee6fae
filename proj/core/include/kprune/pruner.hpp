#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kprune/model.hpp"
#include "kprune/profiler.hpp"
#include "kprune/tensor.hpp"

namespace kprune {

// ---------------------------------------------------------------------------
// k-scores and per-block budget allocation
// ---------------------------------------------------------------------------

struct BlockCost {
  int block = 0;
  std::size_t params = 0;   // w_b
  double latency_ms = 0.0;  // l_b
};

struct KScoreEntry {
  int block = 0;
  std::size_t params = 0;
  double latency_ms = 0.0;
  double k = 0.0;  // w_b * l_b
};

struct KScoreTable {
  std::vector<KScoreEntry> entries;
  double sum_k = 0.0;

  std::size_t total_params() const;
};

enum class ParamBasis {
  kPrunable,  // parameters that structured pruning can remove
  kTotal,     // every parameter in the block
};

KScoreTable compute_kscores(std::span<const BlockCost> costs);
KScoreTable compute_kscores(std::span<const BlockProfile> profiles, ParamBasis basis = ParamBasis::kPrunable);

inline constexpr double kDefaultMaxBlockRatio = 0.9;

struct BlockAllocation {
  int block = 0;
  std::size_t params = 0;   // w_b
  double k = 0.0;           // k_b
  double pruned_exact = 0;  // w_b' before rounding
  std::size_t pruned = 0;   // w_b' after rounding
  double ratio = 0.0;       // p_b = w_b' / w_b
  bool clamped = false;
};

struct AllocationPlan {
  double p = 0.0;
  double p_max = kDefaultMaxBlockRatio;
  std::size_t total_params = 0;  // w
  double target_pruned = 0.0;    // w' = p * w
  double c = 0.0;                // w' / sum k_b
  std::vector<BlockAllocation> blocks;

  std::size_t pruned_total() const;
  // p_b of `block`; ConfigError when the block is not in the plan.
  double ratio_for(int block) const;
};

// Distributes w' = p*w over blocks in proportion to k_b. Ratios above p_max
// are clamped and the excess is spread over the remaining blocks in
// proportion to their k-scores.
AllocationPlan allocate(double p, const KScoreTable& table, double p_max = kDefaultMaxBlockRatio);
// Same ratio p in every block.
AllocationPlan uniform_allocation(double p, const KScoreTable& table);

// ---------------------------------------------------------------------------
// Activation statistics and unit selection
// ---------------------------------------------------------------------------

struct OpActivations {
  std::string op;
  int block = 0;
  std::vector<double> sums;              // A[u]
  std::vector<std::size_t> order;        // units by descending A, ties by lower index
  std::vector<std::size_t> unit_groups;  // head partition of the units

  static OpActivations from_sums(std::string op, int block, std::vector<double> sums,
                                 std::vector<std::size_t> unit_groups = {});
};

struct ActivationStats {
  std::vector<OpActivations> ops;
  std::size_t samples = 0;

  const OpActivations& find(std::string_view op) const;
};

ActivationStats collect_activations(const ModelGraph& model, std::span<const Tensor> calibration);

// M = floor(ratio * units), capped so every unit group keeps one unit.
std::size_t prune_count(double ratio, std::size_t units, std::size_t groups = 1);

// The m lowest-A units, sorted ascending by index. The top unit of each group
// (by descending A, lower index first) is never chosen.
std::vector<std::size_t> select_lowest(const OpActivations& acts, std::size_t m);
// m units drawn uniformly, one random keeper per group. Deterministic in seed.
std::vector<std::size_t> select_random(std::size_t units, std::span<const std::size_t> unit_groups, std::size_t m,
                                       std::uint64_t seed);

enum class PruneMethod { kDisha, kRandom };
std::string_view to_string(PruneMethod method);
PruneMethod prune_method_from_string(std::string_view name);

struct OpPrune {
  std::string op;
  int block = 0;
  std::size_t units = 0;
  double ratio = 0.0;  // p_b applied to this op
  std::size_t m = 0;
  std::vector<std::size_t> removed;  // ascending
  std::vector<Consumer> propagated;  // consumer slices dropped with the same indices
};

struct PruneWarning {
  std::string op;
  std::string message;
};

struct PrunePlan {
  PruneMethod method = PruneMethod::kDisha;
  std::uint64_t seed = 0;
  std::vector<OpPrune> ops;
  std::vector<PruneWarning> warnings;

  std::size_t removed_units() const;
};

PrunePlan make_prune_plan(const ActivationStats& stats, const AllocationPlan& plan, PruneMethod method,
                          std::uint64_t seed = 0, const ModelGraph* model = nullptr);

// Returns a new model with the planned output units and every consumer slice
// removed. Throws ConsistencyError if the plan does not fit the model.
ModelGraph apply_prune(const ModelGraph& model, const PrunePlan& plan);

// ---------------------------------------------------------------------------
// End-to-end: k-scores -> allocation -> activations -> plan -> pruned model
// ---------------------------------------------------------------------------

struct PruneOutcome {
  ModelGraph model;
  KScoreTable kscores;
  AllocationPlan allocation;
  PrunePlan plan;
};

// DISHA uses the k-score allocation; the random baseline uses the same p in
// every block.
PruneOutcome prune_model(const ModelGraph& model, std::span<const BlockProfile> profiles,
                         std::span<const Tensor> calibration, double p, PruneMethod method, std::uint64_t seed = 0);

nlohmann::json to_json(const KScoreTable& table);
nlohmann::json to_json(const AllocationPlan& plan);
nlohmann::json to_json(const PrunePlan& plan);
PrunePlan prune_plan_from_json(const nlohmann::json& j);

}  // namespace kprune

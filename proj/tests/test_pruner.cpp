#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "kprune/errors.hpp"
#include "kprune/forward.hpp"
#include "kprune/pruner.hpp"
#include "kprune/scenegen.hpp"
#include "kprune/toyformer.hpp"
#include "oracle.hpp"

using namespace kprune;

namespace {

std::vector<BlockCost> table2_costs() {
  return {{1, 158848, 3.49}, {2, 235776, 3.07}, {3, 835200, 3.57}, {4, 1597952, 2.4}};
}

std::vector<BlockProfile> flat_profiles(const ModelGraph& m, double ms = 1.0) {
  std::vector<BlockProfile> out;
  for (const BlockSpec& b : m.blocks()) out.push_back({b.index, ms * b.index, 0.0, b.param_count, m.block_prunable_param_count(b.index)});
  return out;
}

const ModelGraph& toy() {
  static const ModelGraph m = build_toyformer();
  return m;
}

const std::vector<Tensor>& calib() {
  static const std::vector<Tensor> c = calibration_images(4, 0);
  return c;
}

OpSpec linear_op(std::string id, std::string input, Tensor w, Tensor b, int block) {
  OpSpec o;
  o.id = std::move(id);
  o.kind = OpKind::kLinear;
  o.block = block;
  o.inputs = {std::move(input)};
  o.weight = std::move(w);
  o.bias = std::move(b);
  return o;
}

}  // namespace

TEST(KScore, HandExamples) {
  const std::vector<BlockCost> one{{1, 10, 2.0}};
  const KScoreTable t1 = compute_kscores(one);
  EXPECT_DOUBLE_EQ(t1.entries[0].k, 20.0);
  EXPECT_DOUBLE_EQ(t1.sum_k, 20.0);

  const std::vector<BlockCost> two{{1, 100, 2.0}, {2, 300, 1.0}};
  const KScoreTable t2 = compute_kscores(two);
  EXPECT_DOUBLE_EQ(t2.entries[0].k, 200.0);
  EXPECT_DOUBLE_EQ(t2.entries[1].k, 300.0);
  EXPECT_DOUBLE_EQ(t2.sum_k, 500.0);
}

TEST(KScore, Table2BlockFour) {
  const auto costs = table2_costs();
  const KScoreTable t = compute_kscores(costs);
  EXPECT_NEAR(t.entries[3].k, 3835085.0, 1.0);
}

TEST(KScore, Errors) {
  EXPECT_THROW(compute_kscores(std::span<const BlockCost>{}), DomainError);
  const std::vector<BlockCost> zero{{1, 10, 0.0}};
  EXPECT_THROW(compute_kscores(zero), DomainError);
}

TEST(Allocate, Table2Ratios) {
  const auto costs = table2_costs();
  const KScoreTable t = compute_kscores(costs);
  const double p35[] = {0.43, 0.37, 0.44, 0.29};
  const double p40[] = {0.49, 0.43, 0.50, 0.34};
  const AllocationPlan a = allocate(0.35, t);
  const AllocationPlan b = allocate(0.40, t);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(a.blocks[i].ratio, p35[i], 0.01) << "block " << i + 1;
    EXPECT_NEAR(b.blocks[i].ratio, p40[i], 0.01) << "block " << i + 1;
  }
}

TEST(Allocate, TwoBlockHandExample) {
  const std::vector<BlockCost> costs{{1, 100, 2.0}, {2, 300, 1.0}};
  const AllocationPlan a = allocate(0.25, compute_kscores(costs));
  EXPECT_DOUBLE_EQ(a.target_pruned, 100.0);
  EXPECT_NEAR(a.blocks[0].pruned_exact, 40.0, 1e-12);
  EXPECT_NEAR(a.blocks[1].pruned_exact, 60.0, 1e-12);
  EXPECT_EQ(a.blocks[0].pruned, 40u);
  EXPECT_EQ(a.blocks[1].pruned, 60u);
  EXPECT_NEAR(a.blocks[0].ratio, 0.40, 1e-12);
  EXPECT_NEAR(a.blocks[1].ratio, 0.20, 1e-12);
  EXPECT_NEAR(a.c, 0.2, 1e-15);
}

TEST(Allocate, SingleBlockGetsExactlyP) {
  const std::vector<BlockCost> one{{1, 12345, 7.7}};
  for (double p : {0.1, 0.35, 0.4, 0.85}) EXPECT_EQ(allocate(p, compute_kscores(one)).blocks[0].ratio, p);
}

TEST(Allocate, RatioOutsideOpenIntervalIsDomainError) {
  const auto costs = table2_costs();
  const KScoreTable t = compute_kscores(costs);
  EXPECT_THROW(allocate(0.0, t), DomainError);
  EXPECT_THROW(allocate(1.0, t), DomainError);
  EXPECT_THROW(allocate(-0.2, t), DomainError);
}

TEST(Allocate, ClampRedistributesAndInfeasibleThrows) {
  // Block 1 is tiny but slow: unclamped p_1 would exceed 1.
  const std::vector<BlockCost> costs{{1, 10, 100.0}, {2, 1000, 1.0}, {3, 1000, 1.0}};
  const KScoreTable t = compute_kscores(costs);
  const AllocationPlan a = allocate(0.3, t);
  EXPECT_TRUE(a.blocks[0].clamped);
  EXPECT_DOUBLE_EQ(a.blocks[0].ratio, 0.9);
  double sum = 0.0;
  for (const auto& b : a.blocks) {
    EXPECT_LE(b.ratio, 0.9 + 1e-12);
    EXPECT_GT(b.ratio, 0.0);
    sum += b.pruned_exact;
  }
  EXPECT_NEAR(sum, a.target_pruned, 1e-9);
  EXPECT_NEAR(a.blocks[1].pruned_exact / a.blocks[1].k, a.blocks[2].pruned_exact / a.blocks[2].k, 1e-12);

  EXPECT_THROW(allocate(0.95, t), InfeasibleError);
}

TEST(Allocate, PropertiesOnRandomProfiles) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> params(1000, 2000000);
  std::uniform_real_distribution<double> lat(0.5, 5.0), pr(0.05, 0.6), scale(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 7;
    std::vector<BlockCost> costs;
    for (int b = 1; b <= n; ++b) costs.push_back({b, params(rng), lat(rng)});
    const double p = pr(rng);
    const KScoreTable t = compute_kscores(costs);
    const AllocationPlan a = allocate(p, t);
    const double w = static_cast<double>(t.total_params());
    EXPECT_LE(std::fabs(static_cast<double>(a.pruned_total()) - p * w), static_cast<double>(n));

    bool any_clamped = false;
    for (const auto& b : a.blocks) any_clamped |= b.clamped;
    if (!any_clamped) {
      for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        EXPECT_NEAR(a.blocks[i].pruned_exact / a.blocks[i].k, a.c, 1e-9 * a.c);
        // p * (w / w_b) * (k_b / sum_k) == p * w * l_b / sum_k
        const double lhs = p * (w / static_cast<double>(costs[i].params)) * (t.entries[i].k / t.sum_k);
        const double rhs = p * w * costs[i].latency_ms / t.sum_k;
        EXPECT_NEAR(lhs, rhs, 1e-9 * rhs);
        EXPECT_NEAR(a.blocks[i].ratio, rhs, 1e-9 * rhs);
      }
      for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        for (std::size_t j = 0; j < a.blocks.size(); ++j) {
          if (a.blocks[i].k > a.blocks[j].k) EXPECT_GE(a.blocks[i].pruned, a.blocks[j].pruned);
        }
      }
    }

    const double s = scale(rng);
    auto scaled = costs;
    for (auto& c : scaled) c.latency_ms *= s;
    const AllocationPlan as = allocate(p, compute_kscores(scaled));
    for (std::size_t i = 0; i < a.blocks.size(); ++i) EXPECT_NEAR(as.blocks[i].ratio, a.blocks[i].ratio, 1e-9);
  }
}

TEST(Allocate, UniformAllocationUsesPEverywhere) {
  const auto costs = table2_costs();
  const AllocationPlan u = uniform_allocation(0.35, compute_kscores(costs));
  for (const auto& b : u.blocks) EXPECT_EQ(b.ratio, 0.35);
  EXPECT_LE(std::fabs(static_cast<double>(u.pruned_total()) - u.target_pruned), 4.0);
}

TEST(Activations, ZeroRowGivesZeroSum) {
  ModelGraph g;
  g.input_shape = {2, 1, 1};
  g.num_classes = 2;
  g.num_blocks = 1;
  OpSpec fc = linear_op("b1.fc", "input", Tensor::from({2, 2}, {1, 1, 0, 0}), Tensor({2}, 0.0f), 1);
  fc.prunable = true;
  fc.unit_groups = {2};
  fc.consumers = {{"dec.classifier", kInputAxis}};
  g.ops.push_back(fc);
  g.ops.push_back(linear_op("dec.classifier", "b1.fc", Tensor({2, 2}, 0.5f), Tensor({2}, 0.0f), 0));
  g.output = "dec.classifier";
  g.validate();

  const std::vector<Tensor> one{Tensor::from({2, 1, 1}, {1, 1})};
  const ActivationStats s = collect_activations(g, one);
  const OpActivations& a = s.find("b1.fc");
  ASSERT_EQ(a.sums.size(), 2u);
  EXPECT_DOUBLE_EQ(a.sums[0], 2.0);
  EXPECT_DOUBLE_EQ(a.sums[1], 0.0);
}

TEST(Activations, TwoOpModelMatchesPerUnitLoopOracle) {
  std::mt19937 rng(17);
  ModelGraph g;
  g.input_shape = {3, 4, 5};
  g.num_classes = 2;
  g.num_blocks = 1;
  OpSpec conv;
  conv.id = "b1.conv";
  conv.kind = OpKind::kConv;
  conv.block = 1;
  conv.inputs = {"input"};
  conv.weight = oracle::random_tensor({4, 3, 3, 3}, rng);
  conv.bias = oracle::random_tensor({4}, rng);
  conv.padding = 1;
  conv.prunable = true;
  conv.unit_groups = {4};
  conv.consumers = {{"b1.fc", kInputAxis}};
  g.ops.push_back(conv);
  OpSpec fc = linear_op("b1.fc", "b1.conv", oracle::random_tensor({5, 4}, rng), oracle::random_tensor({5}, rng), 1);
  fc.prunable = true;
  fc.unit_groups = {5};
  fc.consumers = {{"dec.classifier", kInputAxis}};
  g.ops.push_back(fc);
  g.ops.push_back(linear_op("dec.classifier", "b1.fc", oracle::random_tensor({2, 5}, rng), Tensor({2}, 0.0f), 0));
  g.output = "dec.classifier";
  g.validate();

  std::vector<Tensor> images;
  for (int i = 0; i < 3; ++i) images.push_back(oracle::random_tensor({3, 4, 5}, rng));

  std::vector<double> want_conv(4, 0.0), want_fc(5, 0.0);
  for (const Tensor& img : images) {
    const auto c = oracle::conv2d(img, g.op("b1.conv").weight, g.op("b1.conv").bias, 1, 1, 1);
    Tensor conv_out({4, 4, 5});
    for (std::size_t i = 0; i < c.size(); ++i) conv_out[i] = static_cast<float>(c[i]);
    for (std::size_t u = 0; u < 4; ++u)
      for (std::size_t p = 0; p < 20; ++p) want_conv[u] += std::fabs(c[u * 20 + p]);
    for (std::size_t p = 0; p < 20; ++p) {
      for (std::size_t u = 0; u < 5; ++u) {
        double s = g.op("b1.fc").bias[u];
        for (std::size_t i = 0; i < 4; ++i) s += static_cast<double>(conv_out[i * 20 + p]) * g.op("b1.fc").weight[u * 4 + i];
        want_fc[u] += std::fabs(s);
      }
    }
  }
  const ActivationStats s = collect_activations(g, images);
  for (std::size_t u = 0; u < 4; ++u) EXPECT_NEAR(s.find("b1.conv").sums[u], want_conv[u], 1e-4 * want_conv[u]);
  for (std::size_t u = 0; u < 5; ++u) EXPECT_NEAR(s.find("b1.fc").sums[u], want_fc[u], 1e-4 * want_fc[u]);
}

TEST(Activations, DuplicatedCalibrationDoublesSums) {
  const std::vector<Tensor> once(calib().begin(), calib().begin() + 2);
  std::vector<Tensor> twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  const ActivationStats a = collect_activations(toy(), once);
  const ActivationStats b = collect_activations(toy(), twice);
  ASSERT_EQ(a.ops.size(), b.ops.size());
  for (std::size_t i = 0; i < a.ops.size(); ++i) {
    for (std::size_t u = 0; u < a.ops[i].sums.size(); ++u) {
      EXPECT_NEAR(b.ops[i].sums[u], 2.0 * a.ops[i].sums[u], 1e-9 * std::max(1.0, a.ops[i].sums[u]));
    }
  }
}

TEST(Activations, EmptyCalibrationIsDomainError) {
  EXPECT_THROW(collect_activations(toy(), std::span<const Tensor>{}), DomainError);
}

TEST(Selection, SortAndCutExample) {
  const OpActivations a = OpActivations::from_sums("t", 1, {5.0, 0.1, 3.0, 2.0});
  EXPECT_EQ(prune_count(0.5, 4), 2u);
  EXPECT_EQ(select_lowest(a, 2), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(a.order, (std::vector<std::size_t>{0, 2, 3, 1}));
}

TEST(Selection, TiesKeepLowerIndex) {
  const OpActivations a = OpActivations::from_sums("t", 1, {1.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(select_lowest(a, 2), (std::vector<std::size_t>{2, 3}));
}

TEST(Selection, PruneCountFloorsAndCaps) {
  EXPECT_EQ(prune_count(0.0, 10), 0u);
  EXPECT_EQ(prune_count(0.29, 10), 2u);
  EXPECT_EQ(prune_count(0.3, 10), 3u);
  EXPECT_EQ(prune_count(1.0, 10), 9u);
  EXPECT_EQ(prune_count(1.0, 8, 4), 4u);
  EXPECT_THROW(prune_count(1.5, 10), DomainError);
}

TEST(Selection, MatchesBruteForceOracle) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t units = 2 + rng() % 30;
    std::vector<double> a(units);
    for (double& x : a) x = static_cast<double>(rng() % 6);  // many ties
    const OpActivations acts = OpActivations::from_sums("t", 1, a);
    const std::size_t m = rng() % units;
    EXPECT_EQ(select_lowest(acts, m), oracle::lowest_units(a, m));
  }
}

TEST(Selection, HeadGroupsKeepTheirTopUnit) {
  const OpActivations a = OpActivations::from_sums("t", 1, {1, 2, 3, 4, 9, 9, 9, 0.5}, {4, 4});
  // group 2's best unit is 4 (lower index among ties); group 1's is 3
  const auto removed = select_lowest(a, 6);
  EXPECT_EQ(removed, (std::vector<std::size_t>{0, 1, 2, 5, 6, 7}));
  EXPECT_THROW(select_lowest(a, 7), DomainError);
}

TEST(Selection, RandomIsSeededAndRespectsGroups) {
  const std::vector<std::size_t> groups{5, 5};
  const auto r1 = select_random(10, groups, 6, 7);
  EXPECT_EQ(r1, select_random(10, groups, 6, 7));
  EXPECT_EQ(r1.size(), 6u);
  EXPECT_TRUE(std::is_sorted(r1.begin(), r1.end()));
  bool differs = false;
  for (std::uint64_t s = 8; s < 20; ++s) differs |= select_random(10, groups, 6, s) != r1;
  EXPECT_TRUE(differs);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto r = select_random(10, groups, 8, s);
    std::size_t g0 = 0;
    for (auto u : r) g0 += u < 5;
    EXPECT_EQ(g0, 4u);
  }
}

namespace {

// conv(3 -> 8 filters) feeding a linear that reads its channels.
ModelGraph conv_fixture() {
  std::mt19937 rng(5);
  ModelGraph g;
  g.input_shape = {3, 6, 6};
  g.num_classes = 2;
  g.num_blocks = 1;
  OpSpec conv;
  conv.id = "b1.conv";
  conv.kind = OpKind::kConv;
  conv.block = 1;
  conv.inputs = {"input"};
  conv.weight = oracle::random_tensor({8, 3, 3, 3}, rng);
  conv.bias = oracle::random_tensor({8}, rng);
  conv.padding = 1;
  conv.prunable = true;
  conv.unit_groups = {8};
  conv.consumers = {{"b1.fc", kInputAxis}};
  g.ops.push_back(conv);
  g.ops.push_back(linear_op("b1.fc", "b1.conv", oracle::random_tensor({4, 8}, rng), oracle::random_tensor({4}, rng), 1));
  g.ops.push_back(linear_op("dec.classifier", "b1.fc", oracle::random_tensor({2, 4}, rng), Tensor({2}, 0.0f), 0));
  g.output = "dec.classifier";
  g.validate();
  return g;
}

}  // namespace

TEST(ApplyPrune, ConvLosesTwoFilters) {
  const ModelGraph g = conv_fixture();
  PrunePlan plan;
  plan.ops.push_back({"b1.conv", 1, 8, 0.25, 2, {1, 6}, {}});
  const ModelGraph p = apply_prune(g, plan);
  EXPECT_EQ(p.op("b1.conv").weight.shape(), (Shape{6, 3, 3, 3}));
  EXPECT_EQ(p.op("b1.conv").bias.size(), 6u);
  EXPECT_EQ(p.op("b1.fc").weight.shape(), (Shape{4, 6}));
  EXPECT_EQ(p.op("b1.conv").weight.at(0, 0, 0), g.op("b1.conv").weight.at(0, 0, 0));
  // filter 2 moved to slot 1
  EXPECT_EQ(p.op("b1.conv").weight[1 * 27], g.op("b1.conv").weight[2 * 27]);
  EXPECT_EQ(p.op("b1.fc").weight[1], g.op("b1.fc").weight[2]);
  EXPECT_NO_THROW(p.validate());
  EXPECT_TRUE(forward(p, Tensor({3, 6, 6}, 0.3f)).logits.all_finite());
}

TEST(ApplyPrune, PrunedModelMatchesZeroedConsumerColumns) {
  // Removing a unit must equal zeroing its consumer columns in the unpruned model.
  const ModelGraph g = conv_fixture();
  PrunePlan plan;
  plan.ops.push_back({"b1.conv", 1, 8, 0.25, 2, {0, 5}, {}});
  const ModelGraph p = apply_prune(g, plan);
  ModelGraph z = g;
  for (std::size_t o = 0; o < 4; ++o) {
    z.op("b1.fc").weight[o * 8 + 0] = 0.0f;
    z.op("b1.fc").weight[o * 8 + 5] = 0.0f;
  }
  std::mt19937 rng(3);
  const Tensor img = oracle::random_tensor({3, 6, 6}, rng);
  const Tensor a = forward(p, img).logits, b = forward(z, img).logits;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
}

TEST(ApplyPrune, EmptyPlanIsIdentity) {
  const ModelGraph p = apply_prune(toy(), PrunePlan{});
  ASSERT_EQ(p.ops.size(), toy().ops.size());
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    EXPECT_EQ(p.ops[i].weight, toy().ops[i].weight);
    EXPECT_EQ(p.ops[i].bias, toy().ops[i].bias);
  }
}

TEST(ApplyPrune, ZeroRatioRemovesNothing) {
  const ActivationStats s = collect_activations(toy(), std::span(calib()).first(1));
  AllocationPlan a;
  for (int b = 1; b <= 4; ++b) a.blocks.push_back({b, 1, 1.0, 0.0, 0, 0.0, false});
  const PrunePlan plan = make_prune_plan(s, a, PruneMethod::kDisha);
  EXPECT_EQ(plan.removed_units(), 0u);
  EXPECT_EQ(apply_prune(toy(), plan).param_count(), toy().param_count());
}

TEST(ApplyPrune, BadPlansAreConsistencyErrors) {
  const ModelGraph g = conv_fixture();
  PrunePlan out_of_range;
  out_of_range.ops.push_back({"b1.conv", 1, 8, 0.1, 1, {8}, {}});
  EXPECT_THROW(apply_prune(g, out_of_range), ConsistencyError);
  PrunePlan non_prunable;
  non_prunable.ops.push_back({"b1.fc", 1, 4, 0.25, 1, {0}, {}});
  EXPECT_THROW(apply_prune(g, non_prunable), ConsistencyError);
}

TEST(PruneModel, ToyFormerStaysConsistent) {
  for (double p : {0.35, 0.40}) {
    for (PruneMethod m : {PruneMethod::kDisha, PruneMethod::kRandom}) {
      const PruneOutcome out = prune_model(toy(), flat_profiles(toy()), calib(), p, m, 3);
      EXPECT_NO_THROW(out.model.validate());
      const Tensor logits = forward(out.model, calib()[0]).logits;
      EXPECT_EQ(logits.shape(), (Shape{6, 64, 64}));
      EXPECT_TRUE(logits.all_finite());
      const double removed = static_cast<double>(toy().param_count() - out.model.param_count());
      EXPECT_NEAR(removed / static_cast<double>(toy().prunable_param_count()), p, 0.01) << to_string(m) << " p=" << p;
      std::size_t sum = out.model.decoder_param_count();
      for (const BlockSpec& b : out.model.blocks()) sum += b.param_count;
      EXPECT_EQ(sum, out.model.param_count());
    }
  }
}

TEST(PruneModel, RandomIsReproducible) {
  const auto a = prune_model(toy(), flat_profiles(toy()), calib(), 0.4, PruneMethod::kRandom, 11);
  const auto b = prune_model(toy(), flat_profiles(toy()), calib(), 0.4, PruneMethod::kRandom, 11);
  EXPECT_EQ(to_json(a.plan), to_json(b.plan));
  const auto c = prune_model(toy(), flat_profiles(toy()), calib(), 0.4, PruneMethod::kRandom, 12);
  EXPECT_NE(to_json(a.plan), to_json(c.plan));
}

TEST(PruneModel, DishaRemovesLowestActivationUnits) {
  const auto out = prune_model(toy(), flat_profiles(toy()), calib(), 0.35, PruneMethod::kDisha);
  const ActivationStats s = collect_activations(toy(), calib());
  for (const OpPrune& op : out.plan.ops) {
    const OpActivations& a = s.find(op.op);
    if (a.unit_groups.size() == 1) EXPECT_EQ(op.removed, oracle::lowest_units(a.sums, op.m)) << op.op;
    EXPECT_EQ(op.m, prune_count(out.allocation.ratio_for(op.block), op.units, a.unit_groups.size()));
  }
}

TEST(PruneModel, SingleUnitOpIsSkippedWithWarning) {
  ModelGraph g;
  g.input_shape = {2, 1, 1};
  g.num_classes = 2;
  g.num_blocks = 1;
  OpSpec fc = linear_op("b1.fc", "input", Tensor({1, 2}, 1.0f), Tensor({1}, 0.0f), 1);
  fc.prunable = true;
  fc.unit_groups = {1};
  fc.consumers = {{"dec.classifier", kInputAxis}};
  g.ops.push_back(fc);
  g.ops.push_back(linear_op("dec.classifier", "b1.fc", Tensor({2, 1}, 1.0f), Tensor({2}, 0.0f), 0));
  g.output = "dec.classifier";
  g.validate();
  const std::vector<Tensor> one{Tensor({2, 1, 1}, 1.0f)};
  const ActivationStats s = collect_activations(g, one);
  AllocationPlan a;
  a.blocks.push_back({1, 3, 1.0, 0.0, 0, 0.5, false});
  const PrunePlan plan = make_prune_plan(s, a, PruneMethod::kDisha);
  EXPECT_TRUE(plan.ops.empty());
  ASSERT_EQ(plan.warnings.size(), 1u);
  EXPECT_EQ(plan.warnings[0].op, "b1.fc");
}

TEST(PlanJson, RoundTrip) {
  const auto out = prune_model(toy(), flat_profiles(toy()), calib(), 0.35, PruneMethod::kRandom, 5);
  const PrunePlan back = prune_plan_from_json(to_json(out.plan));
  EXPECT_EQ(to_json(back), to_json(out.plan));
  const ModelGraph again = apply_prune(toy(), back);
  ASSERT_EQ(again.ops.size(), out.model.ops.size());
  for (std::size_t i = 0; i < again.ops.size(); ++i) EXPECT_EQ(again.ops[i].weight, out.model.ops[i].weight);
}

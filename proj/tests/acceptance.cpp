// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kprune/eval.hpp"
#include "kprune/forward.hpp"
#include "kprune/mask.hpp"
#include "kprune/navpipe.hpp"
#include "kprune/profiler.hpp"
#include "kprune/pruner.hpp"
#include "kprune/scenegen.hpp"
#include "kprune/toyformer.hpp"
#include "oracle.hpp"

using namespace kprune;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& why) {
    if (!cond && ok) detail << why;
    ok = ok && cond;
  }
  void note(const std::string& what) {
    if (ok) detail << what;
  }
};

int g_failed = 0;

void criterion(int id, const std::string& name, const std::function<void(Verdict&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    body(v);
  } catch (const std::exception& e) {
    v.ok = false;
    v.detail << "exception: " << e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %d %s (%.1fs)%s%s\n", v.ok ? "PASS" : "FAIL", id, name.c_str(), s, v.detail.str().empty() ? "" : ": ",
              v.detail.str().c_str());
  std::fflush(stdout);
  if (!v.ok) ++g_failed;
}

std::vector<double> ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> idx(xs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += ra[i] / n, mb += rb[i] / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<BlockCost> published_costs() {
  return {{1, 158848, 3.49}, {2, 235776, 3.07}, {3, 835200, 3.57}, {4, 1597952, 2.4}};
}

void k_scores_and_ratios(Verdict& v) {
  const auto costs = published_costs();
  const KScoreTable t = compute_kscores(costs);
  const double k[] = {554062, 723361, 2985005, 3835085};
  const double p35[] = {0.43, 0.37, 0.44, 0.29};
  const double p40[] = {0.49, 0.43, 0.50, 0.34};
  const AllocationPlan a35 = allocate(0.35, t), a40 = allocate(0.40, t);
  for (std::size_t i = 0; i < 4; ++i) {
    v.require(std::fabs(t.entries[i].k - k[i]) <= 0.005 * k[i], "k of block " + std::to_string(i + 1));
    v.require(std::fabs(a35.blocks[i].ratio - p35[i]) <= 0.01, "p_b at 0.35, block " + std::to_string(i + 1));
    v.require(std::fabs(a40.blocks[i].ratio - p40[i]) <= 0.01, "p_b at 0.40, block " + std::to_string(i + 1));
  }
}

void allocation_properties(Verdict& v) {
  std::mt19937_64 rng(2024);
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
    v.require(std::fabs(static_cast<double>(a.pruned_total()) - p * w) <= n, "budget off by more than B");
    bool clamped = false;
    for (const auto& b : a.blocks) clamped |= b.clamped;
    if (!clamped) {
      for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        v.require(std::fabs(a.blocks[i].pruned_exact / a.blocks[i].k - a.c) <= 1e-9 * a.c, "w_b'/k_b not constant");
        const double rhs = p * w * costs[i].latency_ms / t.sum_k;
        v.require(std::fabs(a.blocks[i].ratio - rhs) <= 1e-9 * rhs, "p_b identity");
        for (std::size_t j = 0; j < a.blocks.size(); ++j) {
          if (a.blocks[i].k > a.blocks[j].k) v.require(a.blocks[i].pruned >= a.blocks[j].pruned, "monotonicity");
        }
      }
    }
    auto scaled = costs;
    const double s = scale(rng);
    for (auto& c : scaled) c.latency_ms *= s;
    const AllocationPlan as = allocate(p, compute_kscores(scaled));
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
      v.require(std::fabs(as.blocks[i].ratio - a.blocks[i].ratio) <= 1e-9, "latency scale changed p_b");
    }
  }
  const std::vector<BlockCost> one{{1, 12345, 1.7}};
  for (double p : {0.1, 0.35, 0.4, 0.8}) v.require(allocate(p, compute_kscores(one)).blocks[0].ratio == p, "B=1");
}

void selection_matches_oracle(Verdict& v) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t units = 2 + rng() % 40;
    std::vector<double> a(units);
    for (double& x : a) x = static_cast<double>(rng() % 8);
    const std::size_t m = rng() % units;
    const OpActivations acts = OpActivations::from_sums("op", 1, a);
    v.require(select_lowest(acts, m) == oracle::lowest_units(a, m), "trial " + std::to_string(trial));
  }
}

std::vector<BlockProfile> measured_profile(const ModelGraph& m, const Tensor& input, int reps) {
  return profile_blocks(m, reps, 2, input).blocks;
}

void toyformer_consistency(Verdict& v) {
  const ModelGraph base = build_toyformer();
  const auto calib = calibration_images(8, 0);
  const auto prof = measured_profile(base, calib[0], 5);
  for (double p : {0.35, 0.40}) {
    for (PruneMethod method : {PruneMethod::kDisha, PruneMethod::kRandom}) {
      const std::string tag = std::string(to_string(method)) + "@" + std::to_string(p).substr(0, 4);
      const PruneOutcome out = prune_model(base, prof, calib, p, method, 1);
      out.model.validate();
      const Tensor logits = forward(out.model, calib[1]).logits;
      v.require(logits.shape() == Shape{6, 64, 64} && logits.all_finite(), tag + " logits");
      const double red = static_cast<double>(base.param_count() - out.model.param_count()) /
                         static_cast<double>(base.prunable_param_count());
      v.require(std::fabs(red - p) <= 0.01, tag + " reduction " + std::to_string(red));
    }
  }
}

double mean_fidelity(const ModelGraph& m, const std::vector<Scene>& scenes, const std::vector<SegMask>& ref) {
  double s = 0.0;
  for (std::size_t i = 0; i < scenes.size(); ++i) s += fidelity(argmax_mask(forward(m, scenes[i].image).logits), ref[i]);
  return s / static_cast<double>(scenes.size());
}

void fidelity_dominance(Verdict& v) {
  std::vector<Scene> scenes;
  for (std::uint64_t i = 0; i < 20; ++i) scenes.push_back(generate_scene(random_scene_spec(50000 + i)));
  int wins = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ArchitectureConfig cfg;
    cfg.seed = seed;
    const ModelGraph base = build_toyformer(cfg);
    const auto calib = calibration_images(8, 100 + seed);
    const auto prof = measured_profile(base, calib[0], 5);
    std::vector<SegMask> ref;
    for (const Scene& s : scenes) ref.push_back(argmax_mask(forward(base, s.image).logits));
    const auto d = prune_model(base, prof, calib, 0.40, PruneMethod::kDisha, seed);
    const auto r = prune_model(base, prof, calib, 0.40, PruneMethod::kRandom, seed);
    const double fd = mean_fidelity(d.model, scenes, ref), fr = mean_fidelity(r.model, scenes, ref);
    if (fd > fr) ++wins;
    char buf[64];
    std::snprintf(buf, sizeof buf, " %llu:%.3f/%.3f", static_cast<unsigned long long>(seed), fd, fr);
    per_seed << buf;
  }
  const std::string summary = "DISHA ahead in " + std::to_string(wins) + "/10 seeds; disha/random by seed:" + per_seed.str();
  v.require(wins >= 8, summary);
  v.note(summary);
}

void latency_and_rank(Verdict& v) {
  const ModelGraph base = build_toyformer();
  const auto calib = calibration_images(8, 0);
  const Tensor input = generate_scene(random_scene_spec(7)).image;
  const auto prof = measured_profile(base, input, 20);
  const auto d = prune_model(base, prof, calib, 0.35, PruneMethod::kDisha, 0);
  const auto r = prune_model(base, prof, calib, 0.35, PruneMethod::kRandom, 0);
  // interleave to spread drift across all three
  std::vector<double> tb, td, tr;
  for (int round = 0; round < 3; ++round) {
    tb.push_back(profile_blocks(base, 20, 2, input).total_ms);
    td.push_back(profile_blocks(d.model, 20, 2, input).total_ms);
    tr.push_back(profile_blocks(r.model, 20, 2, input).total_ms);
  }
  auto median = [](std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
  };
  const double mb = median(tb), md = median(td), mr = median(tr);
  char buf[128];
  std::snprintf(buf, sizeof buf, "total ms base %.3f disha %.3f random %.3f", mb, md, mr);
  v.require(md < mb && mr < mb, buf);

  std::vector<double> removed, k;
  for (const BlockSpec& b : base.blocks()) {
    removed.push_back(static_cast<double>(b.param_count - d.model.block_param_count(b.index)));
    for (const auto& e : d.kscores.entries) {
      if (e.block == b.index) k.push_back(e.k);
    }
  }
  const double rho = spearman(removed, k);
  v.require(std::fabs(rho - 1.0) < 1e-12, "spearman " + std::to_string(rho));
  v.note(std::string(buf) + ", spearman " + std::to_string(rho));
}

void battery(Verdict& v) {
  const double h = battery_hours(9.36, 7800, 12);
  v.require(std::fabs(h - 10.0) <= 0.01, "hours " + std::to_string(h));
  for (double saved : {0.0, 0.1, 1.0, 3.0}) {
    v.require(battery_extension_hours(9.36, 9.36 - saved, 7800, 12) >= 0.0, "negative extension");
  }
  EnergyReport base, pruned;
  base.total_energy_j = 0.05;
  pruned.total_energy_j = 0.04;
  const double pb = average_power(base, 100, 5), pp = average_power(pruned, 100, 5);
  v.require(battery_extension_hours(pb, pp, 7800, 12) >= 0.0, "pipeline extension");
}

void navigation(Verdict& v) {
  using D = Direction;
  PipelineConfig cfg;
  {
    std::vector<Frame> frames;
    for (const Scene& s : generate_walk_sequence(SceneSpec{}, 12, Drift::kLeft)) frames.push_back({s.image, s.truth});
    VectorFrameSource src(frames);
    const auto recs = run_pipeline(src, truth_segmenter(), cfg);
    std::optional<std::size_t> onset, settled;
    for (const auto& r : recs) {
      if (!onset && r.frame_direction == D::kLeft) onset = r.frame_id;
      if (!settled && r.decision == D::kLeft) settled = r.frame_id;
    }
    v.require(onset && settled && *settled - *onset < cfg.window && recs.back().decision == D::kLeft, "drift left");
  }
  {
    const WalkableMask zero{10, 12, std::vector<std::uint8_t>(120, 0)};
    v.require(decide_direction(partition_confidence(zero), cfg.threshold) == D::kStop, "all-zero mask");
  }
  {
    std::mt19937 rng(5);
    const std::uint8_t walk[] = {kSidewalk, kCrosswalk};
    for (int t = 0; t < 100; ++t) {
      SegMask m(12, 30);
      for (std::size_t b = 0, n = 1 + rng() % 4; b < n; ++b) {
        const std::size_t x0 = rng() % 30, y0 = rng() % 12, bw = 1 + rng() % 15, bh = 1 + rng() % 12;
        for (std::size_t y = y0; y < std::min<std::size_t>(12, y0 + bh); ++y)
          for (std::size_t x = x0; x < std::min<std::size_t>(30, x0 + bw); ++x) m.at(y, x) = kSidewalk;
      }
      const WalkableMask w = extract_walkable(m, walk);
      const PartitionConfidence c = partition_confidence(w), cm = partition_confidence(w.mirrored());
      const D d = decide_direction(c, 0.4), dm = decide_direction(cm, 0.4);
      const bool side_tie = c.left == c.right && c.center < 0.4 && c.left >= 0.4;
      v.require(c.left == cm.right && c.center == cm.center, "strip mirror, mask " + std::to_string(t));
      v.require(side_tie ? d == dm : dm == mirror(d), "decision mirror, mask " + std::to_string(t));
    }
  }
  {
    const Scene s = generate_scene(SceneSpec{});
    std::vector<Frame> frames(6, Frame{s.image, s.truth});
    VectorFrameSource src(frames, {2});
    const auto recs = run_pipeline(src, truth_segmenter(), cfg);
    v.require(recs.size() == 6 && recs[2].read_failed && recs[2].cue == std::string(kCameraErrorCue), "camera error");
    v.require(!recs[3].read_failed && !recs[5].read_failed, "pipeline stopped after a failed read");
  }
}

void iou_checks(Verdict& v) {
  SegMask a(8, 8, 0), c(8, 8, 2);
  v.require(std::fabs(iou(a, a).global - 100.0) <= 0.01, "identical");
  v.require(std::fabs(iou(a, c).global) <= 0.01, "disjoint");
  SegMask half(8, 8, 0), shifted(8, 8, 0);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      if (x < 4) half.at(y, x) = 1;
      if (x >= 2 && x < 6) shifted.at(y, x) = 1;
    }
  }
  // class 1 overlap 16 / union 48
  const auto r = iou(half, shifted);
  v.require(r.per_class[1] && std::fabs(*r.per_class[1] - 100.0 / 3.0) <= 0.01, "half overlap");
  v.require(improvement(55.0, 50.0) == std::optional<double>(10.0), "improvement(55, 50)");
}

}  // namespace

int main() {
  criterion(1, "k-scores and per-block ratios on the published block costs", k_scores_and_ratios);
  criterion(2, "allocation properties on 200 random profile sets", allocation_properties);
  criterion(3, "lowest-activation selection matches brute force on 50 ops", selection_matches_oracle);
  criterion(4, "pruned ToyFormer stays consistent at p=0.35/0.40", toyformer_consistency);
  criterion(5, "DISHA fidelity beats random in >= 8 of 10 weight seeds at p=0.40", fidelity_dominance);
  criterion(6, "pruned models are faster and prune in k-score rank order", latency_and_rank);
  criterion(7, "battery estimate and non-negative extension", battery);
  criterion(8, "navigation drift, stop, mirror and camera-error behaviour", navigation);
  criterion(9, "IoU and improvement examples", iou_checks);
  std::printf("%d criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}

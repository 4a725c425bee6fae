#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kprune/errors.hpp"
#include "kprune/eval.hpp"
#include "kprune/navpipe.hpp"
#include "kprune/profiler.hpp"
#include "kprune/pruner.hpp"
#include "kprune/scenegen.hpp"
#include "kprune/serialize.hpp"
#include "kprune/toyformer.hpp"

namespace kprune::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Evaluation scenes are drawn from seeds well clear of the calibration set.
constexpr std::uint64_t kEvalSeedOffset = 10000;

struct RunConfig {
  std::string model;
  std::string out;
  double ratio = 0.35;
  std::string method = "disha";
  std::uint64_t seed = 0;
  double threshold = kDefaultThreshold;
  std::size_t window = kDefaultWindow;
  int reps = 20;
  int warmup = 3;
  std::size_t calib = 8;
  std::string frames;
  std::string cue_hook;

  // subcommand specific
  std::string profile;
  std::string plan;
  std::string audit;
  std::string disha_model;
  std::string random_model;
  std::size_t count = 10;
  std::size_t scenes = 20;
  std::string drift = "none";
  std::size_t step = 2;
  bool truth = false;
};

CLI::Validator open_unit_interval() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0.0;
        try {
          std::size_t used = 0;
          v = std::stod(s, &used);
          if (used != s.size()) return "must be a number in the open range (0, 1), got '" + s + "'";
        } catch (const std::exception&) {
          return "must be a number in the open range (0, 1), got '" + s + "'";
        }
        if (!(v > 0.0 && v < 1.0)) return "must lie in the open range (0, 1), got " + s;
        return {};
      },
      "in (0, 1)");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

ModelProfile obtain_profile(const RunConfig& rc, const ModelGraph& model, const Tensor& input) {
  if (!rc.profile.empty()) return profile_from_json(read_json(rc.profile));
  return profile_blocks(model, rc.reps, rc.warmup, input);
}

int cmd_build(const RunConfig& rc, std::ostream& out) {
  ArchitectureConfig cfg;
  cfg.seed = rc.seed;
  const ModelGraph model = build_toyformer(cfg);
  save_model(model, rc.out);
  out << "wrote " << rc.out << ": " << model.ops.size() << " ops, " << model.param_count() << " params ("
      << model.prunable_param_count() << " prunable)\n";
  return kExitOk;
}

int cmd_scenegen(const RunConfig& rc, std::ostream& out) {
  fs::create_directories(rc.out);
  if (rc.drift == "random") {
    for (std::size_t i = 0; i < rc.count; ++i) write_scene(rc.out, rc.seed, i, generate_scene(random_scene_spec(rc.seed + i)));
  } else {
    const Drift d = rc.drift == "left" ? Drift::kLeft : rc.drift == "right" ? Drift::kRight : Drift::kNone;
    SceneSpec spec;
    spec.seed = rc.seed;
    const auto seq = generate_walk_sequence(spec, rc.count, d, rc.step);
    for (std::size_t i = 0; i < seq.size(); ++i) write_scene(rc.out, rc.seed, i, seq[i]);
  }
  out << "wrote " << rc.count << " scenes to " << rc.out << "\n";
  return kExitOk;
}

int cmd_profile(const RunConfig& rc, std::ostream& out) {
  const ModelGraph model = load_model(rc.model);
  const auto calib = calibration_images(1, rc.seed);
  const ModelProfile prof = profile_blocks(model, rc.reps, rc.warmup, calib.front());
  const std::string text = to_json(prof).dump(2) + "\n";
  if (rc.out.empty()) {
    out << text;
  } else {
    write_text(rc.out, text);
    out << "wrote " << rc.out << "\n";
  }
  return kExitOk;
}

int cmd_prune(const RunConfig& rc, std::ostream& out) {
  const ModelGraph model = load_model(rc.model);
  json audit;
  ModelGraph pruned;
  if (!rc.plan.empty()) {
    json j = read_json(rc.plan);
    const PrunePlan plan = prune_plan_from_json(j.contains("plan") ? j.at("plan") : j);
    pruned = apply_prune(model, plan);
    audit = {{"plan", to_json(plan)}};
  } else {
    const auto calib = calibration_images(rc.calib, rc.seed);
    const ModelProfile prof = obtain_profile(rc, model, calib.front());
    PruneOutcome res = prune_model(model, prof.blocks, calib, rc.ratio, prune_method_from_string(rc.method), rc.seed);
    for (const PruneWarning& w : res.plan.warnings) out << "warning: " << w.op << ": " << w.message << "\n";
    audit = {{"kscores", to_json(res.kscores)}, {"allocation", to_json(res.allocation)}, {"plan", to_json(res.plan)}};
    audit["timing"] = {{"profile", to_json(prof)}};
    pruned = std::move(res.model);
  }
  audit["params_before"] = model.param_count();
  audit["params_after"] = pruned.param_count();
  audit["prunable_before"] = model.prunable_param_count();
  save_model(pruned, rc.out);
  const std::string audit_path = rc.audit.empty() ? rc.out + ".plan.json" : rc.audit;
  write_text(audit_path, audit.dump(2) + "\n");
  const double removed = static_cast<double>(model.param_count() - pruned.param_count());
  out << "wrote " << rc.out << ": " << pruned.param_count() << " params, removed " << static_cast<std::size_t>(removed)
      << " (" << 100.0 * removed / static_cast<double>(model.prunable_param_count()) << "% of prunable)\n";
  out << "wrote " << audit_path << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& rc, std::ostream& out) {
  const ModelGraph base = load_model(rc.model);
  const auto calib = calibration_images(rc.calib, rc.seed);
  std::vector<Scene> dataset;
  for (std::size_t i = 0; i < rc.scenes; ++i) {
    dataset.push_back(generate_scene(random_scene_spec(rc.seed + kEvalSeedOffset + i)));
  }
  const ModelProfile base_prof = obtain_profile(rc, base, dataset.front().image);

  ModelGraph disha, random;
  if (!rc.disha_model.empty()) {
    disha = load_model(rc.disha_model);
  } else {
    disha = prune_model(base, base_prof.blocks, calib, rc.ratio, PruneMethod::kDisha, rc.seed).model;
  }
  if (!rc.random_model.empty()) {
    random = load_model(rc.random_model);
  } else {
    random = prune_model(base, base_prof.blocks, calib, rc.ratio, PruneMethod::kRandom, rc.seed).model;
  }
  const Tensor& probe = dataset.front().image;
  // All three are re-measured back to back so their timings are comparable.
  ProfiledModel pb{&base, profile_blocks(base, rc.reps, rc.warmup, probe)};
  ProfiledModel pd{&disha, profile_blocks(disha, rc.reps, rc.warmup, probe)};
  ProfiledModel pr{&random, profile_blocks(random, rc.reps, rc.warmup, probe)};

  const PowerModel power = PowerModel::uniform(base.num_blocks, 10.0, 10.0);
  const ComparisonReport report = compare_report(pb, pd, pr, dataset, rc.ratio, power);
  out << to_table(report);
  if (!rc.out.empty()) {
    write_text(rc.out, to_json(report).dump(2) + "\n");
    out << "wrote " << rc.out << "\n";
  }
  return kExitOk;
}

int cmd_navigate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  DirectoryFrameSource source(rc.frames);
  if (source.size() == 0) throw ConfigError("no .ppm frames in '" + rc.frames + "'");
  Segmenter seg;
  if (rc.truth) {
    seg = truth_segmenter();
  } else {
    seg = model_segmenter(load_model(rc.model));
  }
  PipelineConfig cfg;
  cfg.threshold = rc.threshold;
  cfg.window = rc.window;
  CueHook hook;
  if (!rc.cue_hook.empty()) {
    hook = CueHook(rc.cue_hook, [&err](const std::string& msg) { err << "cue hook: " << msg << "\n"; });
  }
  std::ostringstream log;
  const auto records =
      run_pipeline(source, seg, cfg, [&](const FrameRecord& r) { log << format_record(r) << "\n"; }, hook);
  std::optional<Direction> final;
  for (const FrameRecord& r : records) {
    if (!r.read_failed) final = r.decision;
  }
  log << "final\t" << (final ? std::string(to_string(*final)) : std::string("-")) << "\n";
  out << log.str();
  if (!rc.out.empty()) write_text(rc.out, log.str());
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Latency-aware structured pruning toolkit for a toy segmentation transformer", "kprune"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build", "Write a freshly initialised ToyFormer");
  build->add_option("--out", rc.out, "Model file to write")->required();
  build->add_option("--seed", rc.seed, "Weight seed");

  auto* scenegen = app.add_subcommand("scenegen", "Write synthetic street scenes (.ppm image, .pgm class mask)");
  scenegen->add_option("--out", rc.out, "Output directory")->required();
  scenegen->add_option("--seed", rc.seed, "Scene seed");
  scenegen->add_option("--count", rc.count, "Number of scenes")->check(CLI::PositiveNumber);
  scenegen->add_option("--drift", rc.drift, "Walk sequence drift, or 'random' for independent scenes")
      ->check(CLI::IsMember({"none", "left", "right", "random"}));
  scenegen->add_option("--step", rc.step, "Sidewalk shift per frame, in columns");

  auto* profile = app.add_subcommand("profile", "Measure per-block latency and parameter counts");
  profile->add_option("--model", rc.model, "Model file")->required()->check(CLI::ExistingFile);
  profile->add_option("--out", rc.out, "Profile JSON (stdout when omitted)");
  profile->add_option("--reps", rc.reps, "Timed repetitions")->check(CLI::PositiveNumber);
  profile->add_option("--warmup", rc.warmup, "Discarded warmup passes")->check(CLI::NonNegativeNumber);
  profile->add_option("--seed", rc.seed, "Seed of the probe image");

  auto* prune = app.add_subcommand("prune", "Prune a model and write the pruned model and plan audit");
  prune->add_option("--model", rc.model, "Model file")->required()->check(CLI::ExistingFile);
  prune->add_option("--out", rc.out, "Pruned model file")->required();
  prune->add_option("--ratio", rc.ratio, "Global pruning ratio p")->check(open_unit_interval());
  prune->add_option("--method", rc.method, "disha or random")->check(CLI::IsMember({"disha", "random"}));
  prune->add_option("--seed", rc.seed, "Calibration and random-selection seed");
  prune->add_option("--calib", rc.calib, "Calibration image count")->check(CLI::PositiveNumber);
  prune->add_option("--reps", rc.reps, "Timed repetitions when profiling")->check(CLI::PositiveNumber);
  prune->add_option("--warmup", rc.warmup, "Warmup passes when profiling")->check(CLI::NonNegativeNumber);
  prune->add_option("--profile", rc.profile, "Use a saved profile instead of measuring")->check(CLI::ExistingFile);
  prune->add_option("--plan", rc.plan, "Apply a saved prune plan instead of planning")->check(CLI::ExistingFile);
  prune->add_option("--audit", rc.audit, "Plan audit JSON (default <out>.plan.json)");

  auto* eval = app.add_subcommand("eval", "Compare unpruned, DISHA and random-pruned models");
  eval->add_option("--model", rc.model, "Unpruned model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--disha", rc.disha_model, "DISHA-pruned model (pruned in-process when omitted)")
      ->check(CLI::ExistingFile);
  eval->add_option("--random", rc.random_model, "Random-pruned model (pruned in-process when omitted)")
      ->check(CLI::ExistingFile);
  eval->add_option("--out", rc.out, "Report JSON");
  eval->add_option("--ratio", rc.ratio, "Global pruning ratio p")->check(open_unit_interval());
  eval->add_option("--seed", rc.seed, "Calibration, selection and scene seed");
  eval->add_option("--calib", rc.calib, "Calibration image count")->check(CLI::PositiveNumber);
  eval->add_option("--scenes", rc.scenes, "Evaluation scene count")->check(CLI::PositiveNumber);
  eval->add_option("--reps", rc.reps, "Timed repetitions")->check(CLI::PositiveNumber);
  eval->add_option("--warmup", rc.warmup, "Warmup passes")->check(CLI::NonNegativeNumber);
  eval->add_option("--profile", rc.profile, "Saved profile of the unpruned model, used for allocation")
      ->check(CLI::ExistingFile);

  auto* navigate = app.add_subcommand("navigate", "Run the navigation loop over a directory of frames");
  navigate->add_option("--frames", rc.frames, "Directory of .ppm frames")->required()->check(CLI::ExistingDirectory);
  navigate->add_option("--model", rc.model, "Segmentation model")->check(CLI::ExistingFile);
  navigate->add_flag("--truth", rc.truth, "Use the .pgm ground-truth masks instead of a model");
  navigate->add_option("--threshold", rc.threshold, "Strip confidence threshold")
      ->check(open_unit_interval());
  navigate->add_option("--window", rc.window, "Majority-vote window")->check(CLI::PositiveNumber);
  navigate->add_option("--cue-hook", rc.cue_hook, "Command run with each cue as its argument");
  navigate->add_option("--out", rc.out, "Cue log file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (*navigate && rc.truth == !rc.model.empty()) {
    err << "error: navigate needs exactly one of --model and --truth\n\n" << navigate->help();
    return kExitUsage;
  }

  try {
    if (*build) return cmd_build(rc, out);
    if (*scenegen) return cmd_scenegen(rc, out);
    if (*profile) return cmd_profile(rc, out);
    if (*prune) return cmd_prune(rc, out);
    if (*eval) return cmd_eval(rc, out);
    if (*navigate) return cmd_navigate(rc, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace kprune::cli

#include "kprune/navpipe.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "kprune/errors.hpp"
#include "kprune/forward.hpp"
#include "kprune/image_io.hpp"

namespace kprune {

WalkableMask WalkableMask::mirrored() const {
  WalkableMask m = *this;
  for (std::size_t y = 0; y < height; ++y) {
    std::reverse(m.pixels.begin() + static_cast<std::ptrdiff_t>(y * width),
                 m.pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * width));
  }
  return m;
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kLeft: return "Left";
    case Direction::kSlightLeft: return "SlightLeft";
    case Direction::kStraight: return "Straight";
    case Direction::kSlightRight: return "SlightRight";
    case Direction::kRight: return "Right";
    case Direction::kStop: return "Stop";
  }
  return "?";
}

Direction mirror(Direction d) {
  switch (d) {
    case Direction::kLeft: return Direction::kRight;
    case Direction::kSlightLeft: return Direction::kSlightRight;
    case Direction::kSlightRight: return Direction::kSlightLeft;
    case Direction::kRight: return Direction::kLeft;
    default: return d;
  }
}

namespace {

// Labels 4-connected nonzero regions; returns per-pixel label (0 = none) and sizes.
std::vector<std::size_t> label_components(const std::vector<bool>& on, std::size_t h, std::size_t w,
                                          std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> label(h * w, 0);
  std::vector<std::size_t> stack;
  sizes.assign(1, 0);
  for (std::size_t start = 0; start < h * w; ++start) {
    if (!on[start] || label[start] != 0) continue;
    const std::size_t id = sizes.size();
    sizes.push_back(0);
    stack.push_back(start);
    label[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++sizes[id];
      const std::size_t y = p / w, x = p % w;
      auto visit = [&](std::size_t q) {
        if (on[q] && label[q] == 0) {
          label[q] = id;
          stack.push_back(q);
        }
      };
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
    }
  }
  return label;
}

}  // namespace

WalkableMask extract_walkable(const SegMask& mask, std::span<const std::uint8_t> walkable_classes,
                              std::size_t num_classes) {
  std::vector<bool> walkable_class(256, false);
  for (std::uint8_t c : walkable_classes) {
    if (c >= num_classes) {
      throw ConfigError("walkable class " + std::to_string(c) + " is outside 0.." + std::to_string(num_classes - 1));
    }
    walkable_class[c] = true;
  }
  std::vector<bool> on(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) on[i] = walkable_class[mask.labels[i]];

  std::vector<std::size_t> sizes;
  const auto label = label_components(on, mask.height, mask.width, sizes);
  std::size_t best = 0;
  for (std::size_t id = 1; id < sizes.size(); ++id) {
    if (sizes[id] > sizes[best]) best = id;
  }
  WalkableMask out{mask.height, mask.width, std::vector<std::uint8_t>(mask.size(), 0)};
  if (best == 0) return out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == best) out.pixels[i] = 255;
  }
  return out;
}

std::size_t count_components(const WalkableMask& mask) {
  std::vector<bool> on(mask.pixels.size());
  for (std::size_t i = 0; i < on.size(); ++i) on[i] = mask.pixels[i] != 0;
  std::vector<std::size_t> sizes;
  label_components(on, mask.height, mask.width, sizes);
  return sizes.size() - 1;
}

PartitionConfidence partition_confidence(const WalkableMask& mask) {
  if (mask.width < 3) throw DimensionError("partition_confidence: mask must be at least 3 columns wide");
  if (mask.height == 0) throw DimensionError("partition_confidence: mask has no rows");
  const std::size_t base = mask.width / 3, rem = mask.width % 3;
  const std::size_t widths[3] = {base + (rem > 0 ? 1 : 0), base + (rem > 1 ? 1 : 0), base};
  double conf[3];
  std::size_t x0 = 0;
  for (int s = 0; s < 3; ++s) {
    double sum = 0.0;
    for (std::size_t y = 0; y < mask.height; ++y) {
      for (std::size_t x = x0; x < x0 + widths[s]; ++x) sum += mask.at(y, x);
    }
    conf[s] = sum / 255.0 / static_cast<double>(widths[s] * mask.height);
    x0 += widths[s];
  }
  return {conf[0], conf[1], conf[2]};
}

Direction decide_direction(const PartitionConfidence& c, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("direction threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
  if (c.left < threshold && c.center < threshold && c.right < threshold) return Direction::kStop;
  const double top = std::max({c.left, c.center, c.right});
  const bool center_ok = c.center >= threshold;
  if (center_ok && c.center == top) return Direction::kStraight;
  if (c.left == c.right) return center_ok ? Direction::kStraight : Direction::kLeft;
  if (c.left > c.right) return center_ok ? Direction::kSlightLeft : Direction::kLeft;
  return center_ok ? Direction::kSlightRight : Direction::kRight;
}

VoteWindow::VoteWindow(std::size_t size) : size_(size) {
  if (size == 0) throw ConfigError("vote window must hold at least one frame");
}

Direction VoteWindow::push(Direction d) {
  buffer_.push_back(d);
  if (buffer_.size() > size_) buffer_.pop_front();
  return *majority();
}

std::optional<Direction> VoteWindow::majority() const {
  if (buffer_.empty()) return std::nullopt;
  constexpr std::size_t kinds = 6;
  std::size_t count[kinds] = {};
  std::size_t last_seen[kinds] = {};
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    const auto k = static_cast<std::size_t>(buffer_[i]);
    ++count[k];
    last_seen[k] = i;
  }
  std::size_t best = static_cast<std::size_t>(buffer_.back());
  for (std::size_t k = 0; k < kinds; ++k) {
    if (count[k] > count[best] || (count[k] == count[best] && count[k] > 0 && last_seen[k] > last_seen[best])) best = k;
  }
  return static_cast<Direction>(best);
}

Direction vote(VoteWindow& window, Direction d) { return window.push(d); }

std::optional<std::string> emit_cue(Direction d) {
  switch (d) {
    case Direction::kLeft: return "Left";
    case Direction::kSlightLeft: return "Slight Left";
    case Direction::kSlightRight: return "Slight Right";
    case Direction::kRight: return "Right";
    case Direction::kStop: return "Stop";
    case Direction::kStraight: return std::nullopt;
  }
  return std::nullopt;
}

CueHook::CueHook(std::string command, std::function<void(const std::string&)> on_error)
    : command_(std::move(command)), on_error_(std::move(on_error)) {}

void CueHook::operator()(const std::string& cue) const {
  if (command_.empty()) return;
  std::string quoted = "'";
  for (char ch : cue) {
    if (ch == '\'') {
      quoted += "'\\''";
    } else {
      quoted += ch;
    }
  }
  quoted += "'";
  const int rc = std::system((command_ + " " + quoted).c_str());
  if (rc != 0 && on_error_) on_error_("cue hook '" + command_ + "' failed with status " + std::to_string(rc));
}

VectorFrameSource::VectorFrameSource(std::vector<Frame> frames, std::vector<std::size_t> fail_at)
    : frames_(std::move(frames)), fail_at_(std::move(fail_at)) {}

ReadStatus VectorFrameSource::next(Frame& frame) {
  if (pos_ >= frames_.size()) return ReadStatus::kEnd;
  const std::size_t i = pos_++;
  if (std::find(fail_at_.begin(), fail_at_.end(), i) != fail_at_.end()) return ReadStatus::kFailed;
  frame = frames_[i];
  return ReadStatus::kOk;
}

DirectoryFrameSource::DirectoryFrameSource(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("frame directory '" + dir.string() + "' does not exist");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".ppm") files_.push_back(e.path());
  }
  std::sort(files_.begin(), files_.end());
}

ReadStatus DirectoryFrameSource::next(Frame& frame) {
  if (pos_ >= files_.size()) return ReadStatus::kEnd;
  const auto& path = files_[pos_++];
  try {
    frame.image = read_ppm(path);
    auto truth = path;
    truth.replace_extension(".pgm");
    frame.mask.reset();
    if (std::filesystem::exists(truth)) frame.mask = read_pgm(truth);
  } catch (const Error&) {
    return ReadStatus::kFailed;
  }
  return ReadStatus::kOk;
}

Segmenter model_segmenter(const ModelGraph& model) {
  return [model](const Frame& f) { return argmax_mask(forward(model, f.image).logits); };
}

Segmenter truth_segmenter() {
  return [](const Frame& f) {
    if (!f.mask) throw ConfigError("frame has no ground-truth mask");
    return *f.mask;
  };
}

std::string format_record(const FrameRecord& r) {
  std::ostringstream os;
  os << r.frame_id << '\t';
  if (r.read_failed) {
    os << "-\t-\t";
  } else {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f", r.confidence.left, r.confidence.center, r.confidence.right);
    os << buf << '\t' << to_string(r.decision) << '\t';
  }
  os << (r.cue ? *r.cue : std::string("-"));
  return os.str();
}

std::vector<FrameRecord> run_pipeline(FrameSource& source, const Segmenter& segment, const PipelineConfig& config,
                                      const std::function<void(const FrameRecord&)>& sink, const CueHook& hook) {
  if (!(config.threshold > 0.0 && config.threshold < 1.0)) {
    throw ConfigError("direction threshold must lie in (0, 1), got " + std::to_string(config.threshold));
  }
  VoteWindow window(config.window);
  std::vector<FrameRecord> records;
  Frame frame;
  for (std::size_t id = 0;; ++id) {
    const ReadStatus st = source.next(frame);
    if (st == ReadStatus::kEnd) break;
    FrameRecord r;
    r.frame_id = id;
    if (st == ReadStatus::kFailed) {
      r.read_failed = true;
      r.cue = std::string(kCameraErrorCue);
    } else {
      const SegMask mask = segment(frame);
      const WalkableMask walkable = extract_walkable(mask, config.walkable_classes, config.num_classes);
      r.confidence = partition_confidence(walkable);
      r.frame_direction = decide_direction(r.confidence, config.threshold);
      r.decision = vote(window, r.frame_direction);
      r.cue = emit_cue(r.decision);
    }
    if (r.cue) hook(*r.cue);
    if (sink) sink(r);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace kprune

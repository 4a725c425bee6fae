#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kprune/mask.hpp"
#include "kprune/model.hpp"
#include "kprune/tensor.hpp"

namespace kprune {

// 255 on the largest 4-connected walkable region, 0 elsewhere.
struct WalkableMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
  WalkableMask mirrored() const;
};

struct PartitionConfidence {
  double left = 0.0;
  double center = 0.0;
  double right = 0.0;
};

enum class Direction { kLeft, kSlightLeft, kStraight, kSlightRight, kRight, kStop };
std::string_view to_string(Direction d);
Direction mirror(Direction d);

inline constexpr double kDefaultThreshold = 0.4;
inline constexpr std::size_t kDefaultWindow = 5;
inline constexpr std::uint8_t kDefaultWalkable[] = {2, 3};  // sidewalk, crosswalk

WalkableMask extract_walkable(const SegMask& mask, std::span<const std::uint8_t> walkable_classes,
                              std::size_t num_classes = 6);

// Number of 4-connected nonzero regions.
std::size_t count_components(const WalkableMask& mask);

// Three side-by-side strips; the remainder columns go to the left strip
// first, then the center.
PartitionConfidence partition_confidence(const WalkableMask& mask);

// Rule table:
//   all three below threshold            -> Stop
//   center >= threshold and is the max   -> Straight
//   left strictly the max                -> SlightLeft if center >= threshold else Left
//   right strictly the max               -> mirror of the above
//   left == right > center               -> Straight if center >= threshold else Left
Direction decide_direction(const PartitionConfidence& conf, double threshold = kDefaultThreshold);

// Mode of the last `size` directions; ties go to the most recent entrant.
class VoteWindow {
 public:
  explicit VoteWindow(std::size_t size = kDefaultWindow);

  Direction push(Direction d);
  std::optional<Direction> majority() const;
  std::size_t capacity() const noexcept { return size_; }
  const std::deque<Direction>& contents() const noexcept { return buffer_; }

 private:
  std::size_t size_;
  std::deque<Direction> buffer_;
};

Direction vote(VoteWindow& window, Direction d);

// Straight is silent; everything else maps to its spoken cue.
std::optional<std::string> emit_cue(Direction d);
inline constexpr std::string_view kCameraErrorCue = "camera error";

// Runs `command <cue>` through the shell for every emitted cue. Failures are
// reported through `on_error` and never propagate.
class CueHook {
 public:
  CueHook() = default;
  CueHook(std::string command, std::function<void(const std::string&)> on_error);

  void operator()(const std::string& cue) const;
  bool enabled() const noexcept { return !command_.empty(); }

 private:
  std::string command_;
  std::function<void(const std::string&)> on_error_;
};

struct Frame {
  Tensor image;
  std::optional<SegMask> mask;  // ground truth, when the source has it
};

enum class ReadStatus { kOk, kFailed, kEnd };

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual ReadStatus next(Frame& frame) = 0;
};

// In-memory frames; indices listed in `fail_at` report a read failure.
class VectorFrameSource : public FrameSource {
 public:
  explicit VectorFrameSource(std::vector<Frame> frames, std::vector<std::size_t> fail_at = {});
  ReadStatus next(Frame& frame) override;

 private:
  std::vector<Frame> frames_;
  std::vector<std::size_t> fail_at_;
  std::size_t pos_ = 0;
};

// *.ppm files of a directory in lexicographic order; the matching .pgm is
// attached as ground truth when present. Unreadable files are read failures.
class DirectoryFrameSource : public FrameSource {
 public:
  explicit DirectoryFrameSource(const std::filesystem::path& dir);
  ReadStatus next(Frame& frame) override;
  std::size_t size() const noexcept { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
  std::size_t pos_ = 0;
};

using Segmenter = std::function<SegMask(const Frame&)>;
Segmenter model_segmenter(const ModelGraph& model);
Segmenter truth_segmenter();

struct PipelineConfig {
  double threshold = kDefaultThreshold;
  std::size_t window = kDefaultWindow;
  std::vector<std::uint8_t> walkable_classes{std::begin(kDefaultWalkable), std::end(kDefaultWalkable)};
  std::size_t num_classes = 6;
};

struct FrameRecord {
  std::size_t frame_id = 0;
  bool read_failed = false;
  PartitionConfidence confidence;
  Direction frame_direction = Direction::kStop;
  Direction decision = Direction::kStop;  // windowed majority
  std::optional<std::string> cue;
};

// frame_id<TAB>cL,cC,cR<TAB>direction<TAB>cue
std::string format_record(const FrameRecord& record);

std::vector<FrameRecord> run_pipeline(FrameSource& source, const Segmenter& segment, const PipelineConfig& config,
                                      const std::function<void(const FrameRecord&)>& sink = {},
                                      const CueHook& hook = {});

}  // namespace kprune

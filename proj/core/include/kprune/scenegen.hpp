#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "kprune/mask.hpp"
#include "kprune/tensor.hpp"

namespace kprune {

// Layout of one synthetic street frame. The sidewalk is a vertical strip
// spanning every row; its left edge sits at `sidewalk_col` on the bottom row
// and bends by curvature * (H-1-y)^2 / (H-1) columns on row y. The road runs
// along the sidewalk's right edge below the horizon.
struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t height = 64;
  std::size_t width = 64;
  bool sidewalk = true;
  long sidewalk_col = 24;
  std::size_t sidewalk_width = 16;
  double curvature = 0.0;
  std::size_t horizon = 16;
  std::size_t road_width = 20;
  bool crosswalk = false;
  std::size_t crosswalk_row = 44;
  std::size_t crosswalk_height = 4;
  std::size_t vehicle_count = 0;
  std::size_t obstacle_count = 0;
  double noise = 0.05;
};

struct Scene {
  Tensor image;  // [3,H,W], values in [0,1]
  SegMask truth;
};

enum class Drift { kNone, kLeft, kRight };

// Left edge of the sidewalk on row y.
long sidewalk_left(const SceneSpec& spec, std::size_t y);

// Throws ConfigError when the layout does not fit the frame.
Scene generate_scene(const SceneSpec& spec);

// Frame i shifts the sidewalk by i * step columns in the drift direction.
std::vector<Scene> generate_walk_sequence(const SceneSpec& spec, std::size_t n_frames, Drift drift,
                                          std::size_t step = 2);

// A varied but reproducible layout drawn from `seed`.
SceneSpec random_scene_spec(std::uint64_t seed, std::size_t height = 64, std::size_t width = 64);

// `count` images from random_scene_spec(seed + i).
std::vector<Tensor> calibration_images(std::size_t count, std::uint64_t seed);

// scene_<seed>_<index>.ppm / .pgm in `dir`; the index is zero-padded to six
// digits.
void write_scene(const std::filesystem::path& dir, std::uint64_t seed, std::size_t index, const Scene& scene);

}  // namespace kprune

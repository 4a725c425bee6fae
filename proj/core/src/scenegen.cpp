#include "kprune/scenegen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "kprune/errors.hpp"
#include "kprune/image_io.hpp"
#include "kprune/toyformer.hpp"

namespace kprune {
namespace {

constexpr std::array<std::array<float, 3>, 6> kPalette{{
    {0.45f, 0.55f, 0.70f},  // background
    {0.30f, 0.30f, 0.32f},  // road
    {0.78f, 0.72f, 0.60f},  // sidewalk
    {0.95f, 0.95f, 0.92f},  // crosswalk
    {0.70f, 0.12f, 0.10f},  // vehicle
    {0.20f, 0.55f, 0.22f},  // obstacle
}};

void check_layout(const SceneSpec& s) {
  if (s.height == 0 || s.width == 0) throw ConfigError("scene size must be >= 1x1");
  if (s.noise < 0.0) throw ConfigError("scene noise must be >= 0");
  if (s.horizon > s.height) throw ConfigError("horizon below the bottom row");
  if (!s.sidewalk) return;
  if (s.sidewalk_width == 0) throw ConfigError("sidewalk width must be >= 1 when the sidewalk is enabled");
  if (s.sidewalk_width > s.width) {
    throw ConfigError("sidewalk width " + std::to_string(s.sidewalk_width) + " exceeds frame width " +
                      std::to_string(s.width));
  }
  for (std::size_t y = 0; y < s.height; ++y) {
    const long left = sidewalk_left(s, y);
    if (left < 0 || left + static_cast<long>(s.sidewalk_width) > static_cast<long>(s.width)) {
      throw ConfigError("sidewalk leaves the frame on row " + std::to_string(y) + " (left edge " +
                        std::to_string(left) + ")");
    }
  }
}

}  // namespace

long sidewalk_left(const SceneSpec& spec, std::size_t y) {
  if (spec.height < 2) return spec.sidewalk_col;
  const double up = static_cast<double>(spec.height - 1 - y);
  return spec.sidewalk_col + std::lround(spec.curvature * up * up / static_cast<double>(spec.height - 1));
}

Scene generate_scene(const SceneSpec& s) {
  check_layout(s);
  const std::size_t h = s.height, w = s.width;
  SegMask truth(h, w, kBackground);
  std::mt19937_64 rng(s.seed);

  auto road_left = [&](std::size_t y) { return sidewalk_left(s, y) + (s.sidewalk ? static_cast<long>(s.sidewalk_width) : 0); };

  for (std::size_t y = s.horizon; y < h; ++y) {
    const long lo = road_left(y);
    for (long x = std::max(0L, lo); x < std::min<long>(static_cast<long>(w), lo + static_cast<long>(s.road_width)); ++x) {
      truth.at(y, static_cast<std::size_t>(x)) = kRoad;
    }
  }
  if (s.crosswalk) {
    for (std::size_t y = s.crosswalk_row; y < std::min(h, s.crosswalk_row + s.crosswalk_height); ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (truth.at(y, x) == kRoad) truth.at(y, x) = kCrosswalk;
      }
    }
  }
  if (s.sidewalk) {
    for (std::size_t y = 0; y < h; ++y) {
      const long lo = sidewalk_left(s, y);
      for (std::size_t x = static_cast<std::size_t>(lo); x < static_cast<std::size_t>(lo) + s.sidewalk_width; ++x) {
        truth.at(y, x) = kSidewalk;
      }
    }
  }

  auto uniform = [&](long lo, long hi) { return std::uniform_int_distribution<long>(lo, std::max(lo, hi))(rng); };
  for (std::size_t i = 0; i < s.vehicle_count; ++i) {
    const long vw = uniform(8, 14), vh = uniform(5, 9);
    const long y0 = uniform(static_cast<long>(s.horizon), static_cast<long>(h) - vh);
    const long x0 = road_left(static_cast<std::size_t>(std::clamp<long>(y0 + vh / 2, 0, static_cast<long>(h) - 1))) +
                    uniform(0, static_cast<long>(s.road_width) - vw);
    for (long y = y0; y < y0 + vh; ++y) {
      for (long x = x0; x < x0 + vw; ++x) {
        if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) continue;
        auto& px = truth.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        if (px == kRoad || px == kCrosswalk) px = kVehicle;
      }
    }
  }
  for (std::size_t i = 0; i < s.obstacle_count && s.sidewalk; ++i) {
    const long side = uniform(3, 5);
    const long y0 = uniform(0, static_cast<long>(h) - side);
    const long x0 = sidewalk_left(s, static_cast<std::size_t>(y0)) + uniform(0, static_cast<long>(s.sidewalk_width) - side);
    for (long y = y0; y < y0 + side; ++y) {
      for (long x = x0; x < x0 + side; ++x) {
        if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) continue;
        auto& px = truth.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        if (px == kSidewalk) px = kObstacle;
      }
    }
  }

  Tensor image({3, h, w});
  std::normal_distribution<float> noise(0.0f, static_cast<float>(s.noise));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto& rgb = kPalette[truth.at(y, x)];
      for (std::size_t c = 0; c < 3; ++c) {
        const float n = s.noise > 0.0 ? noise(rng) : 0.0f;
        image.at(c, y, x) = std::clamp(rgb[c] + n, 0.0f, 1.0f);
      }
    }
  }
  return {std::move(image), std::move(truth)};
}

std::vector<Scene> generate_walk_sequence(const SceneSpec& spec, std::size_t n_frames, Drift drift, std::size_t step) {
  if (n_frames == 0) throw ConfigError("walk sequence needs at least one frame");
  const long dir = drift == Drift::kLeft ? -1 : drift == Drift::kRight ? 1 : 0;
  std::vector<Scene> frames;
  frames.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    SceneSpec f = spec;
    f.sidewalk_col = spec.sidewalk_col + dir * static_cast<long>(i * step);
    frames.push_back(generate_scene(f));
  }
  return frames;
}

SceneSpec random_scene_spec(std::uint64_t seed, std::size_t height, std::size_t width) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  auto pick = [&](long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng); };
  SceneSpec s;
  s.seed = seed;
  s.height = height;
  s.width = width;
  s.sidewalk_width = static_cast<std::size_t>(pick(static_cast<long>(width) / 8, static_cast<long>(width) * 3 / 8));
  s.sidewalk_col = pick(0, static_cast<long>(width - s.sidewalk_width));
  s.curvature = std::uniform_real_distribution<double>(-0.15, 0.15)(rng);
  s.horizon = static_cast<std::size_t>(pick(static_cast<long>(height) / 8, static_cast<long>(height) * 3 / 8));
  s.road_width = static_cast<std::size_t>(pick(static_cast<long>(width) / 6, static_cast<long>(width) / 2));
  s.crosswalk = pick(0, 1) == 1;
  s.crosswalk_row = static_cast<std::size_t>(pick(static_cast<long>(s.horizon), static_cast<long>(height) - 4));
  s.vehicle_count = static_cast<std::size_t>(pick(0, 2));
  s.obstacle_count = static_cast<std::size_t>(pick(0, 2));
  s.noise = std::uniform_real_distribution<double>(0.02, 0.08)(rng);
  // Straighten the strip until it fits.
  for (int i = 0; i < 8; ++i) {
    bool fits = true;
    for (std::size_t y = 0; y < height && fits; ++y) {
      const long left = sidewalk_left(s, y);
      fits = left >= 0 && left + static_cast<long>(s.sidewalk_width) <= static_cast<long>(width);
    }
    if (fits) break;
    s.curvature = i == 6 ? 0.0 : s.curvature / 2.0;
  }
  return s;
}

std::vector<Tensor> calibration_images(std::size_t count, std::uint64_t seed) {
  std::vector<Tensor> images;
  images.reserve(count);
  for (std::size_t i = 0; i < count; ++i) images.push_back(generate_scene(random_scene_spec(seed + i)).image);
  return images;
}

void write_scene(const std::filesystem::path& dir, std::uint64_t seed, std::size_t index, const Scene& scene) {
  // Zero-padded so lexicographic order is frame order.
  char idx[32];
  std::snprintf(idx, sizeof idx, "%06zu", index);
  const std::string stem = "scene_" + std::to_string(seed) + "_" + idx;
  write_ppm(dir / (stem + ".ppm"), scene.image);
  write_pgm(dir / (stem + ".pgm"), scene.truth);
}

}  // namespace kprune

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "kprune/model.hpp"

namespace kprune {

// Class ids shared by the toy model, the scene generator and the navigator.
enum SceneClass : std::uint8_t {
  kBackground = 0,
  kRoad = 1,
  kSidewalk = 2,
  kCrosswalk = 3,
  kVehicle = 4,
  kObstacle = 5,
};
inline constexpr std::array<std::string_view, 6> kClassNames{"background", "road",    "sidewalk",
                                                            "crosswalk",  "vehicle", "obstacle"};

// Hierarchical four-stage segmentation transformer. Each stage is an
// overlapping patch-embed conv followed by one encoder layer (efficient
// attention with a spatial-reduction conv, then Mix-FFN); the decoder
// projects every stage to a shared width, upsamples to 1/4 resolution,
// fuses and classifies.
struct ArchitectureConfig {
  std::size_t input_channels = 3;
  std::size_t input_h = 64;
  std::size_t input_w = 64;
  std::vector<std::size_t> channels{16, 32, 64, 128};
  std::vector<std::size_t> heads{1, 1, 2, 4};
  std::vector<std::size_t> sr_ratios{8, 4, 2, 1};
  std::vector<std::size_t> patch_kernels{7, 3, 3, 3};
  std::vector<std::size_t> patch_strides{4, 2, 2, 2};
  std::size_t mlp_ratio = 2;
  std::size_t decoder_dim = 64;
  std::size_t num_classes = 6;
  std::uint64_t seed = 0;
  float init_std = 0.06f;
};

// Throws ConfigError when the stage lists disagree, channels are not
// strictly increasing, K < 2, heads do not divide a width, or a stride or
// reduction ratio does not tile the feature map.
void validate_config(const ArchitectureConfig& config);

ModelGraph build_toyformer(const ArchitectureConfig& config = {});

}  // namespace kprune

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kprune/mask.hpp"
#include "kprune/tensor.hpp"

// Binary netpbm: P6 for RGB images, P5 for 8-bit gray / class-id maps.
namespace kprune {

void write_ppm(const std::filesystem::path& path, const Tensor& image);
Tensor read_ppm(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const SegMask& mask);
SegMask read_pgm(const std::filesystem::path& path);

}  // namespace kprune

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kprune/tensor.hpp"

namespace kprune {

// Per-pixel class ids, row-major [H,W].
struct SegMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  SegMask() = default;
  SegMask(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), labels(h * w, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  std::size_t size() const noexcept { return labels.size(); }

  friend bool operator==(const SegMask&, const SegMask&) = default;
};

// Argmax over the class axis of [K,H,W] logits; ties resolve to the lower class id.
SegMask argmax_mask(const Tensor& logits);

}  // namespace kprune

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kprune/tensor.hpp"

// Dense kernels for the segmentation forward pass. All functions are pure;
// dot products accumulate in double and round once on store.
namespace kprune::ops {

// input [C_in,H,W], weight [C_out,C_in/groups,kH,kW], bias [C_out] or empty.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding, std::size_t groups = 1);

// Affine map over the last axis; leading axes are flattened. bias may be empty.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

// Per-head dims of an attention layer. Heads may have unequal widths once
// pruned; the softmax scale stays fixed per head.
struct HeadLayout {
  std::vector<std::size_t> qk_dims;
  std::vector<std::size_t> v_dims;
  std::vector<float> scales;

  static HeadLayout uniform(std::size_t dim, std::size_t heads);
  std::size_t heads() const noexcept { return qk_dims.size(); }
  std::size_t qk_width() const noexcept;
  std::size_t v_width() const noexcept;
};

// q [N,D], k [M,D], v [M,D] -> [N,D]; softmax(QK^T / sqrt(D/heads)) V per head.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads);
// q [N,Dqk], k [M,Dqk], v [M,Dv] -> [N,Dv] with an explicit head layout.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const HeadLayout& layout);

// align_corners=false bilinear resampling of a [C,H,W] map.
Tensor resize_bilinear(const Tensor& input, std::size_t out_h, std::size_t out_w);

Tensor relu(const Tensor& input);
Tensor gelu(const Tensor& input);
Tensor softmax(const Tensor& input);  // over the last axis
Tensor add(const Tensor& a, const Tensor& b);

// Layout helpers between [C,H,W] maps and [H*W,C] token matrices.
Tensor to_tokens(const Tensor& map);
Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width);
Tensor concat_channels(std::span<const Tensor> maps);

// Channel-axis variants of linear/layer_norm for [C,H,W] maps.
Tensor linear_channels(const Tensor& map, const Tensor& weight, const Tensor& bias);
Tensor layer_norm_channels(const Tensor& map, const Tensor& gamma, const Tensor& beta, float eps);

}  // namespace kprune::ops

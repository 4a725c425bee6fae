#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kprune/ops.hpp"
#include "kprune/tensor.hpp"

namespace kprune {

enum class OpKind { kConv, kLinear, kLayerNorm, kAttention, kActivation, kAdd, kResize, kConcat };
enum class ActivationFn { kGelu, kRelu };

std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);
std::string_view to_string(ActivationFn fn);
ActivationFn activation_from_string(std::string_view name);

// Axis convention for consumer edges. For conv/linear, 0 is the weight's
// output axis (bias follows) and 1 its input axis. For layernorm only 0
// exists. For attention, 0 is the q/k feature width and 1 the v width.
inline constexpr int kOutputAxis = 0;
inline constexpr int kInputAxis = 1;

struct Consumer {
  std::string op;
  int axis = kInputAxis;

  friend bool operator==(const Consumer&, const Consumer&) = default;
};

struct OpSpec {
  std::string id;
  OpKind kind = OpKind::kLinear;
  int block = 0;  // 1..B for encoder blocks, 0 for the decoder
  std::vector<std::string> inputs;

  // conv/linear: weight + bias; layernorm: gamma + beta.
  Tensor weight;
  Tensor bias;

  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
  float eps = 1e-5f;
  ActivationFn activation = ActivationFn::kGelu;
  std::size_t out_h = 0;
  std::size_t out_w = 0;
  ops::HeadLayout heads;

  bool prunable = false;
  // Partition of the output units into heads; each group keeps >= 1 unit.
  std::vector<std::size_t> unit_groups;
  std::vector<Consumer> consumers;

  std::size_t param_count() const noexcept { return weight.size() + bias.size(); }
  std::size_t unit_count() const;
};

struct BlockSpec {
  int index = 0;
  std::vector<std::string> op_ids;
  std::size_t param_count = 0;
};

// The segmentation network as an ordered op list. Ops appear in execution
// order and may only read the image ("input") or earlier ops.
struct ModelGraph {
  std::string name;
  Shape input_shape;  // [3,H,W]
  std::size_t num_classes = 0;
  int num_blocks = 0;
  std::vector<OpSpec> ops;
  std::string output;

  const OpSpec& op(std::string_view id) const;
  OpSpec& op(std::string_view id);
  bool has_op(std::string_view id) const;

  std::vector<BlockSpec> blocks() const;
  std::size_t param_count() const;
  std::size_t block_param_count(int block) const;
  std::size_t decoder_param_count() const;

  // Parameters that vanish together with one leader's output units: the
  // leader itself plus every consumer slice it drags along.
  std::size_t prunable_param_count(const OpSpec& leader) const;
  std::size_t block_prunable_param_count(int block) const;
  std::size_t prunable_param_count() const;

  // Extent of `axis` on op `id` under the consumer-axis convention above.
  std::size_t axis_extent(std::string_view id, int axis) const;

  // Shape of every op output for the configured input size.
  std::map<std::string, Shape> infer_shapes() const;

  // Throws ConsistencyError on dangling ids, cycles, consumer axis
  // mismatches, bad prunable flags or any shape disagreement.
  void validate() const;
};

}  // namespace kprune

#include "kprune/model.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "kprune/errors.hpp"
#include "kprune/mask.hpp"

namespace kprune {

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kConv: return "conv";
    case OpKind::kLinear: return "linear";
    case OpKind::kLayerNorm: return "layernorm";
    case OpKind::kAttention: return "attention";
    case OpKind::kActivation: return "activation";
    case OpKind::kAdd: return "add";
    case OpKind::kResize: return "resize";
    case OpKind::kConcat: return "concat";
  }
  return "?";
}

OpKind op_kind_from_string(std::string_view name) {
  for (OpKind k : {OpKind::kConv, OpKind::kLinear, OpKind::kLayerNorm, OpKind::kAttention, OpKind::kActivation,
                   OpKind::kAdd, OpKind::kResize, OpKind::kConcat}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown op kind '" + std::string(name) + "'");
}

std::string_view to_string(ActivationFn fn) { return fn == ActivationFn::kGelu ? "gelu" : "relu"; }

ActivationFn activation_from_string(std::string_view name) {
  if (name == "gelu") return ActivationFn::kGelu;
  if (name == "relu") return ActivationFn::kRelu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t OpSpec::unit_count() const {
  if (kind != OpKind::kConv && kind != OpKind::kLinear) {
    throw ConsistencyError("op '" + id + "' of kind " + std::string(to_string(kind)) + " has no prunable units");
  }
  return weight.dim(0);
}

SegMask argmax_mask(const Tensor& logits) {
  if (logits.rank() != 3) throw DimensionError("argmax_mask: logits must be [K,H,W], got " + shape_str(logits.shape()));
  const std::size_t k = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  if (k > 256) throw DimensionError("argmax_mask: more than 256 classes");
  SegMask mask(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t best = 0;
      float best_v = logits.at(0, y, x);
      for (std::size_t c = 1; c < k; ++c) {
        const float v = logits.at(c, y, x);
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      mask.at(y, x) = static_cast<std::uint8_t>(best);
    }
  }
  return mask;
}

const OpSpec& ModelGraph::op(std::string_view id) const {
  for (const OpSpec& o : ops) {
    if (o.id == id) return o;
  }
  throw ConsistencyError("no op named '" + std::string(id) + "'");
}

OpSpec& ModelGraph::op(std::string_view id) {
  return const_cast<OpSpec&>(static_cast<const ModelGraph&>(*this).op(id));
}

bool ModelGraph::has_op(std::string_view id) const {
  return std::any_of(ops.begin(), ops.end(), [&](const OpSpec& o) { return o.id == id; });
}

std::vector<BlockSpec> ModelGraph::blocks() const {
  std::vector<BlockSpec> out(static_cast<std::size_t>(num_blocks));
  for (int b = 0; b < num_blocks; ++b) out[static_cast<std::size_t>(b)].index = b + 1;
  for (const OpSpec& o : ops) {
    if (o.block < 1 || o.block > num_blocks) continue;
    BlockSpec& bs = out[static_cast<std::size_t>(o.block - 1)];
    bs.op_ids.push_back(o.id);
    bs.param_count += o.param_count();
  }
  return out;
}

std::size_t ModelGraph::param_count() const {
  std::size_t n = 0;
  for (const OpSpec& o : ops) n += o.param_count();
  return n;
}

std::size_t ModelGraph::block_param_count(int block) const {
  std::size_t n = 0;
  for (const OpSpec& o : ops) {
    if (o.block == block) n += o.param_count();
  }
  return n;
}

std::size_t ModelGraph::decoder_param_count() const {
  std::size_t n = 0;
  for (const OpSpec& o : ops) {
    if (o.block < 1 || o.block > num_blocks) n += o.param_count();
  }
  return n;
}

std::size_t ModelGraph::prunable_param_count(const OpSpec& leader) const {
  if (!leader.prunable) return 0;
  std::size_t n = leader.param_count();
  for (const Consumer& c : leader.consumers) {
    const OpSpec& target = op(c.op);
    if (target.kind == OpKind::kAttention) continue;
    n += c.axis == kOutputAxis ? target.param_count() : target.weight.size();
  }
  return n;
}

std::size_t ModelGraph::block_prunable_param_count(int block) const {
  std::size_t n = 0;
  for (const OpSpec& o : ops) {
    if (o.block == block) n += prunable_param_count(o);
  }
  return n;
}

std::size_t ModelGraph::prunable_param_count() const {
  std::size_t n = 0;
  for (const OpSpec& o : ops) n += prunable_param_count(o);
  return n;
}

std::size_t ModelGraph::axis_extent(std::string_view id, int axis) const {
  const OpSpec& o = op(id);
  switch (o.kind) {
    case OpKind::kLinear:
      if (axis == kOutputAxis) return o.weight.dim(0);
      if (axis == kInputAxis) return o.weight.dim(1);
      break;
    case OpKind::kConv:
      if (axis == kOutputAxis) return o.weight.dim(0);
      if (axis == kInputAxis) return o.weight.dim(1) * o.groups;
      break;
    case OpKind::kLayerNorm:
      if (axis == kOutputAxis) return o.weight.size();
      break;
    case OpKind::kAttention:
      if (axis == kOutputAxis) return o.heads.qk_width();
      if (axis == kInputAxis) return o.heads.v_width();
      break;
    default:
      break;
  }
  throw ConsistencyError("op '" + o.id + "' (" + std::string(to_string(o.kind)) + ") has no consumer axis " +
                         std::to_string(axis));
}

namespace {

[[noreturn]] void shape_fail(const OpSpec& o, const std::string& what) {
  throw ConsistencyError("op '" + o.id + "': " + what);
}

}  // namespace

std::map<std::string, Shape> ModelGraph::infer_shapes() const {
  if (input_shape.size() != 3) throw ConsistencyError("model input shape must be [C,H,W]");
  std::map<std::string, Shape> shapes;
  shapes["input"] = input_shape;
  auto in_shape = [&](const OpSpec& o, std::size_t i) -> const Shape& {
    if (i >= o.inputs.size()) shape_fail(o, "missing input " + std::to_string(i));
    auto it = shapes.find(o.inputs[i]);
    if (it == shapes.end()) shape_fail(o, "input '" + o.inputs[i] + "' is not produced before this op");
    return it->second;
  };
  auto expect_inputs = [&](const OpSpec& o, std::size_t n) {
    if (o.inputs.size() != n) {
      shape_fail(o, "expects " + std::to_string(n) + " inputs, has " + std::to_string(o.inputs.size()));
    }
  };

  for (const OpSpec& o : ops) {
    if (shapes.count(o.id)) shape_fail(o, "duplicate op id");
    Shape out;
    switch (o.kind) {
      case OpKind::kConv: {
        expect_inputs(o, 1);
        const Shape& s = in_shape(o, 0);
        if (o.weight.rank() != 4) shape_fail(o, "conv weight must be rank 4");
        if (o.groups == 0 || s[0] % o.groups != 0) shape_fail(o, "groups do not divide input channels");
        if (o.weight.dim(1) * o.groups != s[0]) {
          shape_fail(o, "weight input axis expects " + std::to_string(o.weight.dim(1) * o.groups) +
                            " channels, input has " + std::to_string(s[0]));
        }
        if (o.weight.dim(0) % o.groups != 0) shape_fail(o, "groups do not divide output channels");
        if (!o.bias.empty() && o.bias.size() != o.weight.dim(0)) shape_fail(o, "bias length != output channels");
        const std::size_t kh = o.weight.dim(2), kw = o.weight.dim(3);
        if (s[1] + 2 * o.padding < kh || s[2] + 2 * o.padding < kw) shape_fail(o, "kernel larger than padded input");
        out = {o.weight.dim(0), (s[1] + 2 * o.padding - kh) / o.stride + 1, (s[2] + 2 * o.padding - kw) / o.stride + 1};
        break;
      }
      case OpKind::kLinear: {
        expect_inputs(o, 1);
        const Shape& s = in_shape(o, 0);
        if (o.weight.rank() != 2) shape_fail(o, "linear weight must be rank 2");
        if (o.weight.dim(1) != s[0]) {
          shape_fail(o, "weight input axis expects " + std::to_string(o.weight.dim(1)) + " channels, input has " +
                            std::to_string(s[0]));
        }
        if (!o.bias.empty() && o.bias.size() != o.weight.dim(0)) shape_fail(o, "bias length != output neurons");
        out = {o.weight.dim(0), s[1], s[2]};
        break;
      }
      case OpKind::kLayerNorm: {
        expect_inputs(o, 1);
        const Shape& s = in_shape(o, 0);
        if (o.weight.size() != s[0] || o.bias.size() != s[0]) shape_fail(o, "gamma/beta length != channels");
        out = s;
        break;
      }
      case OpKind::kAttention: {
        expect_inputs(o, 3);
        const Shape& q = in_shape(o, 0);
        const Shape& k = in_shape(o, 1);
        const Shape& v = in_shape(o, 2);
        const auto& h = o.heads;
        if (h.heads() == 0 || h.v_dims.size() != h.heads() || h.scales.size() != h.heads()) {
          shape_fail(o, "head layout lists disagree");
        }
        for (std::size_t i = 0; i < h.heads(); ++i) {
          if (h.qk_dims[i] == 0 || h.v_dims[i] == 0) shape_fail(o, "head " + std::to_string(i) + " is empty");
        }
        if (q[0] != h.qk_width() || k[0] != h.qk_width()) shape_fail(o, "q/k width != head layout qk width");
        if (v[0] != h.v_width()) shape_fail(o, "v width != head layout v width");
        if (k[1] != v[1] || k[2] != v[2]) shape_fail(o, "k and v spatial sizes differ");
        out = {v[0], q[1], q[2]};
        break;
      }
      case OpKind::kActivation:
        expect_inputs(o, 1);
        out = in_shape(o, 0);
        break;
      case OpKind::kAdd: {
        expect_inputs(o, 2);
        if (in_shape(o, 0) != in_shape(o, 1)) shape_fail(o, "add operands differ in shape");
        out = in_shape(o, 0);
        break;
      }
      case OpKind::kResize: {
        expect_inputs(o, 1);
        if (o.out_h == 0 || o.out_w == 0) shape_fail(o, "resize target must be >= 1");
        out = {in_shape(o, 0)[0], o.out_h, o.out_w};
        break;
      }
      case OpKind::kConcat: {
        if (o.inputs.empty()) shape_fail(o, "concat needs inputs");
        out = in_shape(o, 0);
        out[0] = 0;
        for (std::size_t i = 0; i < o.inputs.size(); ++i) {
          const Shape& s = in_shape(o, i);
          if (s[1] != out[1] || s[2] != out[2]) shape_fail(o, "concat inputs differ spatially");
          out[0] += s[0];
        }
        break;
      }
    }
    shapes[o.id] = out;
  }
  return shapes;
}

void ModelGraph::validate() const {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].id == "input") throw ConsistencyError("op id 'input' is reserved");
    if (!position.emplace(ops[i].id, i).second) throw ConsistencyError("duplicate op id '" + ops[i].id + "'");
  }

  int last_block = 0;
  std::set<int> closed;
  for (const OpSpec& o : ops) {
    if (o.block != last_block) {
      if (o.block != 0 && closed.count(o.block)) {
        throw ConsistencyError("ops of block " + std::to_string(o.block) + " are not contiguous");
      }
      closed.insert(last_block);
      last_block = o.block;
    }
    if (o.block < 0 || o.block > num_blocks) {
      throw ConsistencyError("op '" + o.id + "' has block index " + std::to_string(o.block) + " outside 0.." +
                             std::to_string(num_blocks));
    }
    if (o.prunable && o.kind != OpKind::kConv && o.kind != OpKind::kLinear) {
      throw ConsistencyError("op '" + o.id + "' is marked prunable but is a " + std::string(to_string(o.kind)));
    }
    if (o.prunable) {
      std::size_t sum = 0;
      for (std::size_t g : o.unit_groups) {
        if (g == 0) throw ConsistencyError("op '" + o.id + "' has an empty unit group");
        sum += g;
      }
      if (sum != o.unit_count()) {
        throw ConsistencyError("op '" + o.id + "' unit groups sum to " + std::to_string(sum) + " but it has " +
                               std::to_string(o.unit_count()) + " units");
      }
    } else if (!o.consumers.empty()) {
      throw ConsistencyError("op '" + o.id + "' lists consumers but is not prunable");
    }
    for (const Consumer& c : o.consumers) {
      auto it = position.find(c.op);
      if (it == position.end()) throw ConsistencyError("op '" + o.id + "' consumer '" + c.op + "' does not exist");
      if (it->second <= position.at(o.id)) {
        throw ConsistencyError("op '" + o.id + "' consumer '" + c.op + "' does not come after it");
      }
      const std::size_t extent = axis_extent(c.op, c.axis);
      if (extent != o.unit_count()) {
        throw ConsistencyError("consumer '" + c.op + "' axis " + std::to_string(c.axis) + " has extent " +
                               std::to_string(extent) + " but producer '" + o.id + "' has " +
                               std::to_string(o.unit_count()) + " units");
      }
    }
  }

  const auto shapes = infer_shapes();
  auto it = shapes.find(output);
  if (it == shapes.end()) throw ConsistencyError("model output '" + output + "' is not an op");
  const Shape want{num_classes, input_shape[1], input_shape[2]};
  if (it->second != want) {
    throw ConsistencyError("model output shape " + shape_str(it->second) + " != " + shape_str(want));
  }
}

}  // namespace kprune

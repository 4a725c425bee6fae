#include "kprune/forward.hpp"

#include <cmath>
#include <unordered_map>

#include "kprune/errors.hpp"
#include "kprune/ops.hpp"

namespace kprune {

void ActivationTrace::accumulate(const ActivationTrace& other) {
  for (const auto& [id, sums] : other.unit_abs_sums) {
    auto& dst = unit_abs_sums[id];
    if (dst.empty()) {
      dst = sums;
      continue;
    }
    if (dst.size() != sums.size()) throw DimensionError("activation trace unit count changed for op '" + id + "'");
    for (std::size_t u = 0; u < sums.size(); ++u) dst[u] += sums[u];
  }
}

namespace {

std::vector<double> unit_abs_sums(const Tensor& out) {
  const std::size_t units = out.dim(0);
  const std::size_t per_unit = out.size() / units;
  std::vector<double> sums(units, 0.0);
  const float* d = out.data().data();
  for (std::size_t u = 0; u < units; ++u) {
    double s = 0.0;
    for (std::size_t i = 0; i < per_unit; ++i) s += std::fabs(static_cast<double>(d[u * per_unit + i]));
    sums[u] = s;
  }
  return sums;
}

Tensor run_op(const OpSpec& o, const std::unordered_map<std::string, Tensor>& values) {
  auto in = [&](std::size_t i) -> const Tensor& {
    auto it = values.find(o.inputs.at(i));
    if (it == values.end()) throw ConsistencyError("op '" + o.id + "' reads missing value '" + o.inputs[i] + "'");
    return it->second;
  };
  switch (o.kind) {
    case OpKind::kConv:
      return ops::conv2d(in(0), o.weight, o.bias, o.stride, o.padding, o.groups);
    case OpKind::kLinear:
      return ops::linear_channels(in(0), o.weight, o.bias);
    case OpKind::kLayerNorm:
      return ops::layer_norm_channels(in(0), o.weight, o.bias, o.eps);
    case OpKind::kAttention: {
      const Tensor& q = in(0);
      const Tensor out = ops::attention(ops::to_tokens(q), ops::to_tokens(in(1)), ops::to_tokens(in(2)), o.heads);
      return ops::from_tokens(out, q.dim(1), q.dim(2));
    }
    case OpKind::kActivation:
      return o.activation == ActivationFn::kGelu ? ops::gelu(in(0)) : ops::relu(in(0));
    case OpKind::kAdd:
      return ops::add(in(0), in(1));
    case OpKind::kResize:
      return ops::resize_bilinear(in(0), o.out_h, o.out_w);
    case OpKind::kConcat: {
      std::vector<Tensor> parts;
      parts.reserve(o.inputs.size());
      for (std::size_t i = 0; i < o.inputs.size(); ++i) parts.push_back(in(i));
      return ops::concat_channels(parts);
    }
  }
  throw ConsistencyError("op '" + o.id + "' has an unknown kind");
}

}  // namespace

ForwardResult forward(const ModelGraph& model, const Tensor& image, Capture capture, ForwardObserver* observer) {
  if (image.shape() != model.input_shape) {
    throw DimensionError("forward: image shape " + shape_str(image.shape()) + " does not match model input " +
                         shape_str(model.input_shape));
  }
  std::unordered_map<std::string, Tensor> values;
  values.emplace("input", image);
  ForwardResult result;
  if (capture == Capture::kOn) result.trace.emplace();

  int segment = -1;
  for (const OpSpec& o : model.ops) {
    if (observer != nullptr && o.block != segment) {
      if (segment >= 0) observer->segment_end(segment);
      segment = o.block;
      observer->segment_begin(segment);
    }
    Tensor out = run_op(o, values);
    if (capture == Capture::kOn && o.prunable) result.trace->unit_abs_sums[o.id] = unit_abs_sums(out);
    values.insert_or_assign(o.id, std::move(out));
  }
  if (observer != nullptr && segment >= 0) observer->segment_end(segment);

  auto it = values.find(model.output);
  if (it == values.end()) throw ConsistencyError("model output '" + model.output + "' was never produced");
  result.logits = std::move(it->second);
  return result;
}

}  // namespace kprune

#include "kprune/toyformer.hpp"

#include <random>
#include <string>

#include "kprune/errors.hpp"

namespace kprune {
namespace {

class GraphBuilder {
 public:
  GraphBuilder(ModelGraph& graph, std::uint64_t seed, float stddev) : graph_(graph), rng_(seed), normal_(0.0f, stddev) {}

  void set_block(int block) { block_ = block; }

  OpSpec& add(std::string id, OpKind kind, std::vector<std::string> inputs) {
    OpSpec o;
    o.id = std::move(id);
    o.kind = kind;
    o.block = block_;
    o.inputs = std::move(inputs);
    graph_.ops.push_back(std::move(o));
    return graph_.ops.back();
  }

  OpSpec& conv(std::string id, const std::string& input, std::size_t c_in, std::size_t c_out, std::size_t kernel,
               std::size_t stride, std::size_t padding, std::size_t groups = 1) {
    OpSpec& o = add(std::move(id), OpKind::kConv, {input});
    o.weight = random({c_out, c_in / groups, kernel, kernel});
    o.bias = random({c_out});
    o.stride = stride;
    o.padding = padding;
    o.groups = groups;
    return o;
  }

  OpSpec& linear(std::string id, const std::string& input, std::size_t d_in, std::size_t d_out) {
    OpSpec& o = add(std::move(id), OpKind::kLinear, {input});
    o.weight = random({d_out, d_in});
    o.bias = random({d_out});
    return o;
  }

  OpSpec& norm(std::string id, const std::string& input, std::size_t dim) {
    OpSpec& o = add(std::move(id), OpKind::kLayerNorm, {input});
    o.weight = Tensor({dim}, 1.0f);
    o.bias = Tensor({dim}, 0.0f);
    o.eps = 1e-6f;
    return o;
  }

 private:
  Tensor random(Shape shape) {
    Tensor t(std::move(shape));
    for (float& v : t.data()) v = normal_(rng_);
    return t;
  }

  ModelGraph& graph_;
  std::mt19937_64 rng_;
  std::normal_distribution<float> normal_;
  int block_ = 0;
};

std::vector<std::size_t> head_groups(std::size_t width, std::size_t heads) {
  return std::vector<std::size_t>(heads, width / heads);
}

}  // namespace

void validate_config(const ArchitectureConfig& c) {
  const std::size_t stages = c.channels.size();
  if (stages == 0) throw ConfigError("architecture needs at least one stage");
  if (c.heads.size() != stages || c.sr_ratios.size() != stages || c.patch_kernels.size() != stages ||
      c.patch_strides.size() != stages) {
    throw ConfigError("per-stage lists (channels, heads, sr_ratios, patch_kernels, patch_strides) differ in length");
  }
  if (c.num_classes < 2) throw ConfigError("need at least 2 classes, got " + std::to_string(c.num_classes));
  if (c.num_classes > 256) throw ConfigError("at most 256 classes fit a mask");
  if (c.input_channels == 0 || c.mlp_ratio == 0 || c.decoder_dim == 0) throw ConfigError("zero-sized dimension");
  if (!(c.init_std > 0.0f)) throw ConfigError("init_std must be positive");
  std::size_t h = c.input_h, w = c.input_w;
  for (std::size_t s = 0; s < stages; ++s) {
    if (c.channels[s] == 0) throw ConfigError("stage " + std::to_string(s + 1) + " has zero channels");
    if (s > 0 && c.channels[s] <= c.channels[s - 1]) throw ConfigError("channel list must be strictly increasing");
    if (c.heads[s] == 0 || c.channels[s] % c.heads[s] != 0) {
      throw ConfigError("stage " + std::to_string(s + 1) + ": " + std::to_string(c.heads[s]) +
                        " heads do not divide " + std::to_string(c.channels[s]) + " channels");
    }
    const std::size_t k = c.patch_kernels[s], st = c.patch_strides[s], pad = k / 2;
    if (k == 0 || st == 0) throw ConfigError("patch kernel and stride must be >= 1");
    if (h + 2 * pad < k || w + 2 * pad < k) throw ConfigError("patch kernel larger than feature map");
    h = (h + 2 * pad - k) / st + 1;
    w = (w + 2 * pad - k) / st + 1;
    const std::size_t r = c.sr_ratios[s];
    if (r == 0 || h % r != 0 || w % r != 0) {
      throw ConfigError("stage " + std::to_string(s + 1) + ": reduction ratio " + std::to_string(r) +
                        " does not tile a " + std::to_string(h) + "x" + std::to_string(w) + " map");
    }
  }
}

ModelGraph build_toyformer(const ArchitectureConfig& c) {
  validate_config(c);
  ModelGraph g;
  g.name = "toyformer-b0";
  g.input_shape = {c.input_channels, c.input_h, c.input_w};
  g.num_classes = c.num_classes;
  g.num_blocks = static_cast<int>(c.channels.size());
  GraphBuilder gb(g, c.seed, c.init_std);

  std::string x = "input";
  std::size_t c_prev = c.input_channels;
  std::size_t h = c.input_h, w = c.input_w;
  std::size_t quarter_h = 0, quarter_w = 0;
  std::vector<std::string> stage_outputs;

  for (std::size_t s = 0; s < c.channels.size(); ++s) {
    const int b = static_cast<int>(s) + 1;
    const std::string p = "b" + std::to_string(b) + ".";
    const std::size_t ch = c.channels[s], hidden = ch * c.mlp_ratio, k = c.patch_kernels[s];
    gb.set_block(b);

    gb.conv(p + "patch_embed", x, c_prev, ch, k, c.patch_strides[s], k / 2);
    h = (h + 2 * (k / 2) - k) / c.patch_strides[s] + 1;
    w = (w + 2 * (k / 2) - k) / c.patch_strides[s] + 1;
    if (s == 0) {
      quarter_h = h;
      quarter_w = w;
    }
    gb.norm(p + "patch_norm", p + "patch_embed", ch);

    // Efficient self-attention.
    gb.norm(p + "norm1", p + "patch_norm", ch);
    OpSpec& q = gb.linear(p + "q", p + "norm1", ch, ch);
    q.prunable = true;
    q.unit_groups = head_groups(ch, c.heads[s]);
    q.consumers = {{p + "k", kOutputAxis}, {p + "attn", kOutputAxis}};

    std::string kv_src = p + "norm1";
    const std::size_t r = c.sr_ratios[s];
    if (r > 1) {
      gb.conv(p + "sr", p + "norm1", ch, ch, r, r, 0);
      gb.norm(p + "sr_norm", p + "sr", ch);
      kv_src = p + "sr_norm";
    }
    gb.linear(p + "k", kv_src, ch, ch);
    OpSpec& v = gb.linear(p + "v", kv_src, ch, ch);
    v.prunable = true;
    v.unit_groups = head_groups(ch, c.heads[s]);
    v.consumers = {{p + "attn", kInputAxis}, {p + "proj", kInputAxis}};

    OpSpec& attn = gb.add(p + "attn", OpKind::kAttention, {p + "q", p + "k", p + "v"});
    attn.heads = ops::HeadLayout::uniform(ch, c.heads[s]);
    gb.linear(p + "proj", p + "attn", ch, ch);
    gb.add(p + "res1", OpKind::kAdd, {p + "patch_norm", p + "proj"});

    // Mix-FFN.
    gb.norm(p + "norm2", p + "res1", ch);
    OpSpec& fc1 = gb.linear(p + "fc1", p + "norm2", ch, hidden);
    fc1.prunable = true;
    fc1.unit_groups = {hidden};
    fc1.consumers = {{p + "dwconv", kOutputAxis}, {p + "fc2", kInputAxis}};
    gb.conv(p + "dwconv", p + "fc1", hidden, hidden, 3, 1, 1, hidden);
    gb.add(p + "act", OpKind::kActivation, {p + "dwconv"}).activation = ActivationFn::kGelu;
    gb.linear(p + "fc2", p + "act", hidden, ch);
    gb.add(p + "res2", OpKind::kAdd, {p + "res1", p + "fc2"});
    gb.norm(p + "norm", p + "res2", ch);

    x = p + "norm";
    stage_outputs.push_back(x);
    c_prev = ch;
  }

  gb.set_block(0);
  std::vector<std::string> ups;
  for (std::size_t s = 0; s < stage_outputs.size(); ++s) {
    const std::string n = std::to_string(s + 1);
    gb.linear("dec.embed" + n, stage_outputs[s], c.channels[s], c.decoder_dim);
    OpSpec& up = gb.add("dec.up" + n, OpKind::kResize, {"dec.embed" + n});
    up.out_h = quarter_h;
    up.out_w = quarter_w;
    ups.push_back(up.id);
  }
  gb.add("dec.concat", OpKind::kConcat, ups);
  gb.linear("dec.fuse", "dec.concat", c.decoder_dim * stage_outputs.size(), c.decoder_dim);
  gb.add("dec.fuse_act", OpKind::kActivation, {"dec.fuse"}).activation = ActivationFn::kRelu;
  gb.linear("dec.classifier", "dec.fuse_act", c.decoder_dim, c.num_classes);
  OpSpec& out = gb.add("dec.upsample", OpKind::kResize, {"dec.classifier"});
  out.out_h = c.input_h;
  out.out_w = c.input_w;
  g.output = out.id;

  g.validate();
  return g;
}

}  // namespace kprune

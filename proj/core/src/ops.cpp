#include "kprune/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kprune/errors.hpp"

namespace kprune::ops {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* name) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + name + " must be rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

std::string axis_msg(const char* op, const char* axis, std::size_t got, std::size_t want) {
  return std::string(op) + ": " + axis + " has extent " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding, std::size_t groups) {
  require_rank(input, 3, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  if (stride == 0) throw DimensionError("conv2d: stride must be >= 1");
  if (groups == 0) throw DimensionError("conv2d: groups must be >= 1");
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = weight.dim(0), c_per_group = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
  if (c_in % groups != 0) {
    throw DimensionError(axis_msg("conv2d", "input channel axis (0) not divisible by groups", c_in, groups));
  }
  if (c_out % groups != 0) {
    throw DimensionError(axis_msg("conv2d", "weight output axis (0) not divisible by groups", c_out, groups));
  }
  if (c_per_group != c_in / groups) {
    throw DimensionError(axis_msg("conv2d", "weight input axis (1)", c_per_group, c_in / groups));
  }
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != c_out)) {
    throw DimensionError(axis_msg("conv2d", "bias axis (0)", bias.size(), c_out));
  }
  if (h + 2 * padding < kh) throw DimensionError(axis_msg("conv2d", "padded input height (axis 1)", h + 2 * padding, kh));
  if (w + 2 * padding < kw) throw DimensionError(axis_msg("conv2d", "padded input width (axis 2)", w + 2 * padding, kw));

  const std::size_t out_h = (h + 2 * padding - kh) / stride + 1;
  const std::size_t out_w = (w + 2 * padding - kw) / stride + 1;
  const std::size_t out_per_group = c_out / groups;
  Tensor out({c_out, out_h, out_w});
  std::vector<double> acc(out_h * out_w);
  const auto in = input.data();
  const auto wt = weight.data();

  for (std::size_t oc = 0; oc < c_out; ++oc) {
    const std::size_t g = oc / out_per_group;
    std::fill(acc.begin(), acc.end(), bias.empty() ? 0.0 : static_cast<double>(bias[oc]));
    for (std::size_t ci = 0; ci < c_per_group; ++ci) {
      const std::size_t ic = g * c_per_group + ci;
      const float* plane = in.data() + ic * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double wv = wt[((oc * c_per_group + ci) * kh + ky) * kw + kx];
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            const float* row = plane + static_cast<std::size_t>(iy) * w;
            double* arow = acc.data() + oy * out_w;
            for (std::size_t ox = 0; ox < out_w; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              arow[ox] += wv * row[ix];
            }
          }
        }
      }
    }
    float* dst = out.data().data() + oc * out_h * out_w;
    for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i]);
  }
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear", "weight");
  if (input.rank() == 0) throw DimensionError("linear: input has no axes");
  const std::size_t d_out = weight.dim(0), d_in = weight.dim(1);
  const std::size_t last = input.shape().back();
  if (last != d_in) throw DimensionError(axis_msg("linear", "input last axis", last, d_in));
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != d_out)) {
    throw DimensionError(axis_msg("linear", "bias axis (0)", bias.size(), d_out));
  }
  const std::size_t rows = input.size() / d_in;
  Shape out_shape = input.shape();
  out_shape.back() = d_out;
  Tensor out(out_shape);
  const float* x = input.data().data();
  const float* wt = weight.data().data();
  float* y = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const float* xr = x + r * d_in;
    for (std::size_t o = 0; o < d_out; ++o) {
      const float* wr = wt + o * d_in;
      double acc = bias.empty() ? 0.0 : static_cast<double>(bias[o]);
      for (std::size_t i = 0; i < d_in; ++i) acc += static_cast<double>(wr[i]) * xr[i];
      y[r * d_out + o] = static_cast<float>(acc);
    }
  }
  return out;
}

Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, float eps) {
  if (input.rank() == 0) throw DimensionError("layer_norm: input has no axes");
  const std::size_t d = input.shape().back();
  if (gamma.size() != d) throw DimensionError(axis_msg("layer_norm", "gamma axis (0)", gamma.size(), d));
  if (beta.size() != d) throw DimensionError(axis_msg("layer_norm", "beta axis (0)", beta.size(), d));
  Tensor out(input.shape());
  const std::size_t rows = input.size() / d;
  for (std::size_t r = 0; r < rows; ++r) {
    const float* x = input.data().data() + r * d;
    float* y = out.data().data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += x[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    for (std::size_t i = 0; i < d; ++i) {
      y[i] = static_cast<float>((x[i] - mean) * inv * gamma[i] + beta[i]);
    }
  }
  return out;
}

HeadLayout HeadLayout::uniform(std::size_t dim, std::size_t heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention: " + std::to_string(heads) + " heads do not divide width " + std::to_string(dim));
  }
  const std::size_t hd = dim / heads;
  HeadLayout layout;
  layout.qk_dims.assign(heads, hd);
  layout.v_dims.assign(heads, hd);
  layout.scales.assign(heads, static_cast<float>(1.0 / std::sqrt(static_cast<double>(hd))));
  return layout;
}

std::size_t HeadLayout::qk_width() const noexcept {
  std::size_t s = 0;
  for (std::size_t d : qk_dims) s += d;
  return s;
}

std::size_t HeadLayout::v_width() const noexcept {
  std::size_t s = 0;
  for (std::size_t d : v_dims) s += d;
  return s;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads) {
  require_rank(q, 2, "attention", "q");
  return attention(q, k, v, HeadLayout::uniform(q.dim(1), heads));
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const HeadLayout& layout) {
  require_rank(q, 2, "attention", "q");
  require_rank(k, 2, "attention", "k");
  require_rank(v, 2, "attention", "v");
  const std::size_t heads = layout.heads();
  if (heads == 0 || layout.v_dims.size() != heads || layout.scales.size() != heads) {
    throw ConfigError("attention: head layout lists disagree on head count");
  }
  const std::size_t n = q.dim(0), m = k.dim(0);
  const std::size_t dqk = layout.qk_width(), dv = layout.v_width();
  if (q.dim(1) != dqk) throw DimensionError(axis_msg("attention", "q feature axis (1)", q.dim(1), dqk));
  if (k.dim(1) != dqk) throw DimensionError(axis_msg("attention", "k feature axis (1)", k.dim(1), dqk));
  if (v.dim(1) != dv) throw DimensionError(axis_msg("attention", "v feature axis (1)", v.dim(1), dv));
  if (v.dim(0) != m) throw DimensionError(axis_msg("attention", "v token axis (0)", v.dim(0), m));

  Tensor out({n, dv});
  std::vector<double> scores(m);
  const float* qd = q.data().data();
  const float* kd = k.data().data();
  const float* vd = v.data().data();
  float* od = out.data().data();
  std::size_t qo = 0, vo = 0;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t hq = layout.qk_dims[h], hv = layout.v_dims[h];
    const double scale = layout.scales[h];
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -INFINITY;
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < hq; ++t) s += static_cast<double>(qd[i * dqk + qo + t]) * kd[j * dqk + qo + t];
        scores[j] = s * scale;
        mx = std::max(mx, scores[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        scores[j] = std::exp(scores[j] - mx);
        z += scores[j];
      }
      for (std::size_t t = 0; t < hv; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += scores[j] / z * vd[j * dv + vo + t];
        od[i * dv + vo + t] = static_cast<float>(acc);
      }
    }
    qo += hq;
    vo += hv;
  }
  return out;
}

Tensor resize_bilinear(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  require_rank(input, 3, "resize_bilinear", "input");
  if (out_h == 0 || out_w == 0) throw DimensionError("resize_bilinear: output size must be >= 1");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  Tensor out({c, out_h, out_w});
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);

  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  auto taps = [](std::size_t out_n, std::size_t in_n, double scale) {
    std::vector<Tap> t(out_n);
    for (std::size_t o = 0; o < out_n; ++o) {
      double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
      if (src < 0.0) src = 0.0;
      std::size_t i0 = static_cast<std::size_t>(src);
      if (i0 > in_n - 1) i0 = in_n - 1;
      const std::size_t i1 = std::min(i0 + 1, in_n - 1);
      t[o] = {i0, i1, src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(out_h, h, sy);
  const auto tx = taps(out_w, w, sx);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const Tap& a = ty[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const Tap& b = tx[ox];
        const double top = input.at(ch, a.i0, b.i0) * (1.0 - b.frac) + input.at(ch, a.i0, b.i1) * b.frac;
        const double bot = input.at(ch, a.i1, b.i0) * (1.0 - b.frac) + input.at(ch, a.i1, b.i1) * b.frac;
        out.at(ch, oy, ox) = static_cast<float>(top * (1.0 - a.frac) + bot * a.frac);
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor gelu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.data()) {
    const double x = v;
    v = static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
  }
  return out;
}

Tensor softmax(const Tensor& input) {
  if (input.rank() == 0) throw DimensionError("softmax: input has no axes");
  const std::size_t d = input.shape().back();
  Tensor out(input.shape());
  for (std::size_t r = 0; r < input.size() / d; ++r) {
    const float* x = input.data().data() + r * d;
    float* y = out.data().data() + r * d;
    double mx = x[0];
    for (std::size_t i = 1; i < d; ++i) mx = std::max(mx, static_cast<double>(x[i]));
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i) z += std::exp(x[i] - mx);
    for (std::size_t i = 0; i < d; ++i) y[i] = static_cast<float>(std::exp(x[i] - mx) / z);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
  }
  Tensor out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

Tensor to_tokens(const Tensor& map) {
  require_rank(map, 3, "to_tokens", "map");
  const std::size_t c = map.dim(0), hw = map.dim(1) * map.dim(2);
  Tensor out({hw, c});
  const float* src = map.data().data();
  float* dst = out.data().data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < hw; ++p) dst[p * c + ch] = src[ch * hw + p];
  }
  return out;
}

Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width) {
  require_rank(tokens, 2, "from_tokens", "tokens");
  const std::size_t hw = tokens.dim(0), c = tokens.dim(1);
  if (hw != height * width) throw DimensionError(axis_msg("from_tokens", "token axis (0)", hw, height * width));
  Tensor out({c, height, width});
  const float* src = tokens.data().data();
  float* dst = out.data().data();
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t ch = 0; ch < c; ++ch) dst[ch * hw + p] = src[p * c + ch];
  }
  return out;
}

Tensor concat_channels(std::span<const Tensor> maps) {
  if (maps.empty()) throw DimensionError("concat_channels: no inputs");
  const std::size_t h = maps[0].dim(1), w = maps[0].dim(2);
  std::size_t c = 0;
  for (const Tensor& m : maps) {
    require_rank(m, 3, "concat_channels", "input");
    if (m.dim(1) != h || m.dim(2) != w) {
      throw DimensionError("concat_channels: spatial shape " + shape_str(m.shape()) + " differs from first input");
    }
    c += m.dim(0);
  }
  std::vector<float> data;
  data.reserve(c * h * w);
  for (const Tensor& m : maps) data.insert(data.end(), m.data().begin(), m.data().end());
  return Tensor({c, h, w}, std::move(data));
}

Tensor linear_channels(const Tensor& map, const Tensor& weight, const Tensor& bias) {
  require_rank(map, 3, "linear", "input map");
  require_rank(weight, 2, "linear", "weight");
  const std::size_t c_in = map.dim(0), hw = map.dim(1) * map.dim(2);
  const std::size_t d_out = weight.dim(0), d_in = weight.dim(1);
  if (c_in != d_in) throw DimensionError(axis_msg("linear", "input channel axis (0)", c_in, d_in));
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != d_out)) {
    throw DimensionError(axis_msg("linear", "bias axis (0)", bias.size(), d_out));
  }
  Tensor out({d_out, map.dim(1), map.dim(2)});
  std::vector<double> acc(hw);
  const float* x = map.data().data();
  for (std::size_t o = 0; o < d_out; ++o) {
    std::fill(acc.begin(), acc.end(), bias.empty() ? 0.0 : static_cast<double>(bias[o]));
    for (std::size_t i = 0; i < d_in; ++i) {
      const double wv = weight[o * d_in + i];
      const float* xi = x + i * hw;
      for (std::size_t p = 0; p < hw; ++p) acc[p] += wv * xi[p];
    }
    float* dst = out.data().data() + o * hw;
    for (std::size_t p = 0; p < hw; ++p) dst[p] = static_cast<float>(acc[p]);
  }
  return out;
}

Tensor layer_norm_channels(const Tensor& map, const Tensor& gamma, const Tensor& beta, float eps) {
  require_rank(map, 3, "layer_norm", "input map");
  const Tensor normed = layer_norm(to_tokens(map), gamma, beta, eps);
  return from_tokens(normed, map.dim(1), map.dim(2));
}

}  // namespace kprune::ops

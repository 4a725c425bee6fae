#include "kprune/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "kprune/errors.hpp"

namespace kprune {
namespace {

using nlohmann::json;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_tensor(std::string& out, const Tensor& t) {
  for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw LoadError(LoadErrorKind::kTruncated, std::string("truncated model file while reading ") + what);
    }
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* what) {
    const auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[static_cast<std::size_t>(i)])) << (8 * i);
    return v;
  }
  std::uint16_t u16(const char* what) {
    const auto s = take(2, what);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[0]) | (static_cast<unsigned char>(s[1]) << 8));
  }
  Tensor tensor(const Shape& shape, const std::string& what) {
    const std::size_t n = shape_numel(shape);
    const auto s = take(n * 4, what.c_str());
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i * 4 + static_cast<std::size_t>(b)])) << (8 * b);
      data[i] = std::bit_cast<float>(v);
    }
    return Tensor(shape, std::move(data));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json describe_op(const OpSpec& o) {
  json j;
  j["id"] = o.id;
  j["kind"] = to_string(o.kind);
  j["block"] = o.block;
  j["inputs"] = o.inputs;
  j["weight_shape"] = o.weight.empty() ? json(nullptr) : json(o.weight.shape());
  j["bias_shape"] = o.bias.empty() ? json(nullptr) : json(o.bias.shape());
  switch (o.kind) {
    case OpKind::kConv:
      j["stride"] = o.stride;
      j["padding"] = o.padding;
      j["groups"] = o.groups;
      break;
    case OpKind::kLayerNorm:
      j["eps"] = static_cast<double>(o.eps);
      break;
    case OpKind::kActivation:
      j["activation"] = to_string(o.activation);
      break;
    case OpKind::kResize:
      j["out_h"] = o.out_h;
      j["out_w"] = o.out_w;
      break;
    case OpKind::kAttention: {
      json scales = json::array();
      for (float s : o.heads.scales) scales.push_back(static_cast<double>(s));
      j["heads"] = {{"qk_dims", o.heads.qk_dims}, {"v_dims", o.heads.v_dims}, {"scales", scales}};
      break;
    }
    default:
      break;
  }
  j["prunable"] = o.prunable;
  if (o.prunable) {
    j["unit_groups"] = o.unit_groups;
    json consumers = json::array();
    for (const Consumer& c : o.consumers) consumers.push_back({{"op", c.op}, {"axis", c.axis}});
    j["consumers"] = consumers;
  }
  return j;
}

Shape optional_shape(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return j.at(key).get<Shape>();
}

OpSpec parse_op(const json& j) {
  OpSpec o;
  o.id = j.at("id").get<std::string>();
  o.kind = op_kind_from_string(j.at("kind").get<std::string>());
  o.block = j.at("block").get<int>();
  o.inputs = j.at("inputs").get<std::vector<std::string>>();
  o.stride = j.value("stride", std::size_t{1});
  o.padding = j.value("padding", std::size_t{0});
  o.groups = j.value("groups", std::size_t{1});
  o.eps = static_cast<float>(j.value("eps", 1e-5));
  if (j.contains("activation")) o.activation = activation_from_string(j.at("activation").get<std::string>());
  o.out_h = j.value("out_h", std::size_t{0});
  o.out_w = j.value("out_w", std::size_t{0});
  if (j.contains("heads")) {
    const json& h = j.at("heads");
    o.heads.qk_dims = h.at("qk_dims").get<std::vector<std::size_t>>();
    o.heads.v_dims = h.at("v_dims").get<std::vector<std::size_t>>();
    for (double s : h.at("scales").get<std::vector<double>>()) o.heads.scales.push_back(static_cast<float>(s));
  }
  o.prunable = j.value("prunable", false);
  if (o.prunable) {
    o.unit_groups = j.at("unit_groups").get<std::vector<std::size_t>>();
    for (const json& c : j.at("consumers")) o.consumers.push_back({c.at("op").get<std::string>(), c.at("axis").get<int>()});
  }
  return o;
}

}  // namespace

std::string serialize_model(const ModelGraph& model) {
  json desc;
  desc["name"] = model.name;
  desc["input_shape"] = model.input_shape;
  desc["num_classes"] = model.num_classes;
  desc["num_blocks"] = model.num_blocks;
  desc["output"] = model.output;
  json ops = json::array();
  for (const OpSpec& o : model.ops) ops.push_back(describe_op(o));
  desc["ops"] = ops;
  const std::string text = desc.dump();

  std::string out(kModelMagic, 4);
  put_u16(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const OpSpec& o : model.ops) {
    put_tensor(out, o.weight);
    put_tensor(out, o.bias);
  }
  return out;
}

ModelGraph deserialize_model(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    if (bytes.size() < 4) throw LoadError(LoadErrorKind::kTruncated, "truncated model file while reading magic");
    throw LoadError(LoadErrorKind::kBadMagic, "bad magic: not a DSHA model file");
  }
  r.take(4, "magic");
  const std::uint16_t version = r.u16("format version");
  if (version != kModelFormatVersion) {
    throw LoadError(LoadErrorKind::kVersionMismatch, "unsupported model format version " + std::to_string(version) +
                                                         " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint32_t len = r.u32("descriptor length");
  const std::string_view text = r.take(len, "descriptor");

  ModelGraph model;
  std::vector<std::pair<Shape, Shape>> blob_shapes;
  try {
    const json desc = json::parse(text);
    model.name = desc.at("name").get<std::string>();
    model.input_shape = desc.at("input_shape").get<Shape>();
    model.num_classes = desc.at("num_classes").get<std::size_t>();
    model.num_blocks = desc.at("num_blocks").get<int>();
    model.output = desc.at("output").get<std::string>();
    for (const json& jo : desc.at("ops")) {
      model.ops.push_back(parse_op(jo));
      blob_shapes.emplace_back(optional_shape(jo, "weight_shape"), optional_shape(jo, "bias_shape"));
    }
  } catch (const json::exception& e) {
    throw LoadError(LoadErrorKind::kMalformed, std::string("malformed model descriptor: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(LoadErrorKind::kMalformed, std::string("malformed model descriptor: ") + e.what());
  }

  for (std::size_t i = 0; i < model.ops.size(); ++i) {
    OpSpec& o = model.ops[i];
    const auto& [ws, bs] = blob_shapes[i];
    try {
      if (!ws.empty()) o.weight = r.tensor(ws, "weights of '" + o.id + "'");
      if (!bs.empty()) o.bias = r.tensor(bs, "bias of '" + o.id + "'");
    } catch (const DimensionError& e) {
      throw LoadError(LoadErrorKind::kMalformed, std::string("malformed tensor shape: ") + e.what());
    }
  }
  if (!r.done()) throw LoadError(LoadErrorKind::kMalformed, "trailing bytes after the last weight blob");
  try {
    model.validate();
  } catch (const Error& e) {
    throw LoadError(LoadErrorKind::kMalformed, std::string("inconsistent model graph: ") + e.what());
  }
  return model;
}

void save_model(const ModelGraph& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw LoadError(LoadErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw LoadError(LoadErrorKind::kIo, "write to '" + path.string() + "' failed");
}

ModelGraph load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError(LoadErrorKind::kIo, "cannot open model file '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace kprune

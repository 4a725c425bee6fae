#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "kprune/model.hpp"

// Model file layout (all integers little-endian):
//   "DSHA"                      4-byte magic
//   u16  format version         kModelFormatVersion
//   u32  descriptor length N
//   N bytes UTF-8 JSON          op list with shapes, attributes, prunable flags, consumer edges
//   per op, in descriptor order: weight then bias as f32 LE, row-major
namespace kprune {

inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'D', 'S', 'H', 'A'};

std::string serialize_model(const ModelGraph& model);
ModelGraph deserialize_model(std::string_view bytes);

void save_model(const ModelGraph& model, const std::filesystem::path& path);
ModelGraph load_model(const std::filesystem::path& path);

}  // namespace kprune

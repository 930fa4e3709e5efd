#pragma once

// Binary checkpoint: magic "STFL", u16 version, u32 entry count, then per
// entry u16 name length, name bytes, u8 rank, u32 extents, float32 payload.
// An optional optimizer section (u32 count + entries of the same layout)
// follows when bytes remain. All integers little-endian.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stfl/models/network.hpp"

namespace stfl {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensorf value;
};

struct Checkpoint {
  // Network tensors in parameter order, plus "@"-prefixed metadata entries.
  std::vector<NamedTensor> entries;
  std::optional<std::vector<NamedTensor>> optimizer;

  const NamedTensor* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError with the byte offset of the first malformed field.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Every network tensor plus an "@arch/<family>" entry holding
/// (width_multiplier, C, T, H, W).
Checkpoint snapshot(Network<float>& net);
ArchSpec arch_of(const Checkpoint& ckpt);
/// Copies tensors by name; a parameter absent from the checkpoint raises
/// FormatError naming it, a shape disagreement raises DimensionError.
void load_parameters(Network<float>& net, const Checkpoint& ckpt);

void checkpoint_save(Network<float>& net, const std::filesystem::path& path,
                     const std::vector<NamedTensor>* optimizer = nullptr);

struct LoadedCheckpoint {
  Network<float> network;
  Checkpoint raw;
};
LoadedCheckpoint checkpoint_load(const std::filesystem::path& path);

}  // namespace stfl

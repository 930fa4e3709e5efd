#pragma once

// Clip container: magic "CLPT", u16 version, four u32 dims (C,T,H,W), then
// C*T*H*W little-endian float32 values. C must be 3.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stfl/tensor.hpp"

namespace stfl {

inline constexpr std::uint16_t kClipVersion = 1;
inline constexpr std::size_t kClipHeaderBytes = 4 + 2 + 4 * 4;

std::vector<std::uint8_t> encode_clip(const Tensorf& clip);
/// FormatError with the byte offset on bad magic, version, dims or length.
Tensorf decode_clip(std::span<const std::uint8_t> bytes);

void write_clip(const std::filesystem::path& path, const Tensorf& clip);
Tensorf read_clip(const std::filesystem::path& path);

}  // namespace stfl

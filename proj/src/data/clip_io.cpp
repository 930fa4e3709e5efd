#include "stfl/data/clip_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stfl/error.hpp"

namespace stfl {

static_assert(std::endian::native == std::endian::little, "clip I/O assumes a little-endian host");

namespace {

template <class U>
void put(std::vector<std::uint8_t>& out, U v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(U));
}

template <class U>
U get(std::span<const std::uint8_t> bytes, std::size_t& at, const char* field) {
  if (bytes.size() - at < sizeof(U)) {
    throw FormatError("clip: truncated " + std::string(field) + " at byte " + std::to_string(at));
  }
  U v;
  std::memcpy(&v, bytes.data() + at, sizeof(U));
  at += sizeof(U);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_clip(const Tensorf& clip) {
  if (clip.rank() != 4 || clip.dim(0) != 3) {
    throw DimensionError("clip: expected (3,T,H,W), got " + shape_str(clip.shape()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(kClipHeaderBytes + clip.numel() * 4);
  out.insert(out.end(), {'C', 'L', 'P', 'T'});
  put<std::uint16_t>(out, kClipVersion);
  for (std::size_t d : clip.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  const auto* p = reinterpret_cast<const std::uint8_t*>(clip.raw());
  out.insert(out.end(), p, p + clip.numel() * sizeof(float));
  return out;
}

Tensorf decode_clip(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "CLPT", 4) != 0) throw FormatError("clip: bad magic at byte 0");
  std::size_t at = 4;
  const auto version = get<std::uint16_t>(bytes, at, "version");
  if (version != kClipVersion) {
    throw FormatError("clip: unsupported version " + std::to_string(version) + " at byte 4");
  }
  Shape shape;
  std::uint64_t count = 1;
  for (int i = 0; i < 4; ++i) {
    const std::size_t field_at = at;
    const auto d = get<std::uint32_t>(bytes, at, "dims");
    if (d == 0) throw FormatError("clip: zero extent at byte " + std::to_string(field_at));
    if (i == 0 && d != 3) throw FormatError("clip: expected 3 channels, got " + std::to_string(d) + " at byte 6");
    shape.push_back(d);
    count *= d;
    if (count > (bytes.size() / 4) + 1) break;
  }
  const std::size_t remaining = bytes.size() - at;
  if (shape.size() != 4 || count * 4 != remaining) {
    throw FormatError("clip: payload at byte " + std::to_string(at) + " holds " + std::to_string(remaining) +
                      " bytes, header implies " + std::to_string(count * 4));
  }
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + at, remaining);
  return Tensorf(std::move(shape), std::move(data));
}

void write_clip(const std::filesystem::path& path, const Tensorf& clip) {
  const auto bytes = encode_clip(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write clip " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing clip " + path.string());
}

Tensorf read_clip(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read clip " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_clip(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace stfl

#pragma once

// Dataset index. CSV header `path,label,split,frames,fps`; label is "real" or
// "fake" (0/1 also accepted), split is "train" or "test". Relative paths are
// resolved against the manifest's directory.

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace stfl {

enum class Split { train, test };

std::string split_name(Split split);

inline constexpr int kReal = 0;
inline constexpr int kFake = 1;

struct ClipRecord {
  std::string path;
  int label = kReal;
  Split split = Split::train;
  std::size_t frames = 1;
  double fps = 30.0;
};

struct Manifest {
  std::vector<ClipRecord> records;
  std::filesystem::path base_dir;

  /// Per-label counts within one split: {real, fake}.
  std::array<std::size_t, 2> counts(Split split) const;
  std::vector<ClipRecord> select(Split split) const;
  std::filesystem::path resolve(const ClipRecord& record) const;
};

/// Throws DataError naming the 1-based line for malformed rows, duplicate
/// paths, or an empty file; IoError when unreadable.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// w_c = N / (2 N_c) over the given per-class counts; DataError if a class is absent.
std::array<double, 2> class_weights(const std::array<std::size_t, 2>& counts);
std::array<double, 2> class_weights(const Manifest& manifest, Split split = Split::train);

}  // namespace stfl

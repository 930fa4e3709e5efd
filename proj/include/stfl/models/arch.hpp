#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace stfl {

enum class Family { r3d, mc3, r2plus1d, i3d, rcn };

std::string family_name(Family family);
/// Throws ConfigError for unknown names.
Family parse_family(std::string_view name);

struct ClipShape {
  std::size_t c = 3;
  std::size_t t = 16;
  std::size_t h = 112;
  std::size_t w = 112;

  friend bool operator==(const ClipShape&, const ClipShape&) = default;
};

std::string clip_str(const ClipShape& clip);

struct ArchSpec {
  Family family = Family::r3d;
  double width_multiplier = 1.0;
  ClipShape clip;
  std::size_t num_classes = 2;

  /// Full-scale input shape for the family: (3,16,112,112), i3d (3,16,224,224),
  /// rcn (3,10,112,112).
  static ArchSpec defaults(Family family, double width_multiplier = 1.0);

  /// Channel count c scaled by the width multiplier, at least 1.
  std::size_t width(std::size_t c) const;
  void validate() const;
};

}  // namespace stfl

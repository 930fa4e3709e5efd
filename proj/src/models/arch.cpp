#include "stfl/models/arch.hpp"

#include <algorithm>
#include <cmath>

#include "stfl/error.hpp"

namespace stfl {

std::string family_name(Family family) {
  switch (family) {
    case Family::r3d: return "r3d";
    case Family::mc3: return "mc3";
    case Family::r2plus1d: return "r2plus1d";
    case Family::i3d: return "i3d";
    case Family::rcn: return "rcn";
  }
  throw ConfigError("unknown architecture family");
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::r3d, Family::mc3, Family::r2plus1d, Family::i3d, Family::rcn}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown architecture '" + std::string(name) + "' (expected r3d, mc3, r2plus1d, i3d or rcn)");
}

std::string clip_str(const ClipShape& clip) {
  return "(" + std::to_string(clip.c) + "," + std::to_string(clip.t) + "," + std::to_string(clip.h) + "," +
         std::to_string(clip.w) + ")";
}

ArchSpec ArchSpec::defaults(Family family, double width_multiplier) {
  ArchSpec spec;
  spec.family = family;
  spec.width_multiplier = width_multiplier;
  if (family == Family::i3d) spec.clip = {3, 16, 224, 224};
  if (family == Family::rcn) spec.clip = {3, 10, 112, 112};
  return spec;
}

std::size_t ArchSpec::width(std::size_t c) const {
  const double scaled = std::round(static_cast<double>(c) * width_multiplier);
  return std::max<std::size_t>(1, static_cast<std::size_t>(scaled));
}

void ArchSpec::validate() const {
  if (!(width_multiplier > 0.0) || !std::isfinite(width_multiplier)) {
    throw ConfigError("width multiplier must be positive");
  }
  if (num_classes != 2) throw ConfigError("only 2-class networks are supported");
  if (clip.c == 0 || clip.t == 0 || clip.h == 0 || clip.w == 0) {
    throw ConfigError("clip shape extents must be positive, got " + clip_str(clip));
  }
}

}  // namespace stfl

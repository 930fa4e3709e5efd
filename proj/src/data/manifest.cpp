#include "stfl/data/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "stfl/error.hpp"

namespace stfl {

namespace {

constexpr const char* kHeader = "path,label,split,frames,fps";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("manifest line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string split_name(Split split) { return split == Split::train ? "train" : "test"; }

std::array<std::size_t, 2> Manifest::counts(Split split) const {
  std::array<std::size_t, 2> c{0, 0};
  for (const auto& r : records)
    if (r.split == split) ++c[static_cast<std::size_t>(r.label)];
  return c;
}

std::vector<ClipRecord> Manifest::select(Split split) const {
  std::vector<ClipRecord> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(r);
  return out;
}

std::filesystem::path Manifest::resolve(const ClipRecord& record) const {
  const std::filesystem::path p(record.path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kHeader) fail(lineno, "expected header '" + std::string(kHeader) + "', got '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 5) fail(lineno, "expected 5 fields, got " + std::to_string(f.size()));
    ClipRecord r;
    r.path = f[0];
    if (r.path.empty()) fail(lineno, "empty path");
    if (f[1] == "real" || f[1] == "0") {
      r.label = kReal;
    } else if (f[1] == "fake" || f[1] == "1") {
      r.label = kFake;
    } else {
      fail(lineno, "bad label '" + f[1] + "' (expected real or fake)");
    }
    if (f[2] == "train") {
      r.split = Split::train;
    } else if (f[2] == "test") {
      r.split = Split::test;
    } else {
      fail(lineno, "bad split '" + f[2] + "' (expected train or test)");
    }
    try {
      std::size_t used = 0;
      const long frames = std::stol(f[3], &used);
      if (used != f[3].size() || frames < 1) throw std::invalid_argument("frames");
      r.frames = static_cast<std::size_t>(frames);
      r.fps = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument("fps");
    } catch (const std::exception&) {
      fail(lineno, "bad frames/fps fields '" + f[3] + "," + f[4] + "'");
    }
    if (!seen.insert(r.path).second) fail(lineno, "duplicate path '" + r.path + "'");
    m.records.push_back(std::move(r));
  }
  if (!header_seen) throw DataError("manifest: empty file");
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << kHeader << '\n';
  for (const auto& r : manifest.records) {
    std::ostringstream fps;
    fps << r.fps;
    out << r.path << ',' << (r.label == kFake ? "fake" : "real") << ',' << split_name(r.split) << ',' << r.frames
        << ',' << fps.str() << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

std::array<double, 2> class_weights(const std::array<std::size_t, 2>& counts) {
  if (counts[0] == 0 || counts[1] == 0) {
    throw DataError("class_weights: split has " + std::to_string(counts[0]) + " real and " +
                    std::to_string(counts[1]) + " fake samples; both classes are required");
  }
  const double n = static_cast<double>(counts[0] + counts[1]);
  return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

std::array<double, 2> class_weights(const Manifest& manifest, Split split) {
  return class_weights(manifest.counts(split));
}

}  // namespace stfl

#include "stfl/models/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace stfl {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'F', 'L'};
constexpr char kArchPrefix[] = "@arch/";

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void entries(const std::vector<NamedTensor>& list) {
    uint<std::uint32_t>(static_cast<std::uint32_t>(list.size()));
    for (const auto& e : list) {
      if (e.name.size() > 0xFFFF) throw FormatError("checkpoint: name too long: " + e.name);
      if (e.value.rank() > 0xFF) throw FormatError("checkpoint: rank too large for " + e.name);
      uint<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
      bytes(e.name.data(), e.name.size());
      uint<std::uint8_t>(static_cast<std::uint8_t>(e.value.rank()));
      for (std::size_t d : e.value.shape()) uint<std::uint32_t>(static_cast<std::uint32_t>(d));
      for (float v : e.value.data()) uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == b_.size(); }
  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) {
      throw FormatError("checkpoint: truncated at byte " + std::to_string(pos_) + " while reading " + what);
    }
  }
  template <class U>
  U uint(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<NamedTensor> entries() {
    const std::uint32_t count = uint<std::uint32_t>("entry count");
    std::vector<NamedTensor> list;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::size_t at = pos_;
      NamedTensor e;
      e.name = str(uint<std::uint16_t>("name length"), "name");
      const std::uint8_t rank = uint<std::uint8_t>("rank");
      Shape shape;
      std::size_t numel = 1;
      for (std::uint8_t r = 0; r < rank; ++r) {
        const std::uint32_t d = uint<std::uint32_t>("extent");
        if (d == 0) {
          throw FormatError("checkpoint: zero extent in entry '" + e.name + "' at byte " + std::to_string(at));
        }
        if (d > b_.size() / numel) {
          throw FormatError("checkpoint: entry '" + e.name + "' at byte " + std::to_string(at) +
                            " declares more data than the file holds");
        }
        shape.push_back(d);
        numel *= d;
      }
      need(numel * 4, "payload");
      std::vector<float> data(numel);
      for (std::size_t k = 0; k < numel; ++k) data[k] = std::bit_cast<float>(uint<std::uint32_t>("payload"));
      e.value = Tensorf(shape, std::move(data));
      list.push_back(std::move(e));
    }
    return list;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint16_t>(kCheckpointVersion);
  w.entries(ckpt.entries);
  if (ckpt.optimizer) w.entries(*ckpt.optimizer);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::string magic = r.str(4, "magic");
  if (magic != std::string(kMagic, 4)) throw FormatError("checkpoint: bad magic at byte 0");
  const std::uint16_t version = r.uint<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " at byte 4");
  }
  Checkpoint ckpt;
  ckpt.entries = r.entries();
  if (!r.done()) ckpt.optimizer = r.entries();
  if (!r.done()) throw FormatError("checkpoint: trailing bytes at byte " + std::to_string(r.offset()));
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Checkpoint snapshot(Network<float>& net) {
  Checkpoint ckpt;
  const ArchSpec& s = net.spec();
  ckpt.entries.push_back({kArchPrefix + family_name(s.family),
                          Tensorf({5}, std::vector<float>{static_cast<float>(s.width_multiplier),
                                                          static_cast<float>(s.clip.c), static_cast<float>(s.clip.t),
                                                          static_cast<float>(s.clip.h), static_cast<float>(s.clip.w)})});
  for (const auto* p : net.parameters()) ckpt.entries.push_back({p->name, p->value});
  return ckpt;
}

ArchSpec arch_of(const Checkpoint& ckpt) {
  for (const auto& e : ckpt.entries) {
    if (e.name.rfind(kArchPrefix, 0) != 0) continue;
    if (e.value.numel() != 5) throw FormatError("checkpoint: malformed architecture entry '" + e.name + "'");
    ArchSpec spec = ArchSpec::defaults(parse_family(e.name.substr(sizeof(kArchPrefix) - 1)), e.value[0]);
    spec.clip = {static_cast<std::size_t>(e.value[1]), static_cast<std::size_t>(e.value[2]),
                 static_cast<std::size_t>(e.value[3]), static_cast<std::size_t>(e.value[4])};
    return spec;
  }
  throw FormatError("checkpoint: no architecture entry");
}

void load_parameters(Network<float>& net, const Checkpoint& ckpt) {
  for (auto* p : net.parameters()) {
    const NamedTensor* e = ckpt.find(p->name);
    if (e == nullptr) throw FormatError("checkpoint: missing parameter '" + p->name + "'");
    if (e->value.shape() != p->value.shape()) {
      throw DimensionError("checkpoint: parameter '" + p->name + "' has shape " + shape_str(e->value.shape()) +
                           ", network expects " + shape_str(p->value.shape()));
    }
  }
  for (auto* p : net.parameters()) p->value = ckpt.find(p->name)->value;
}

void checkpoint_save(Network<float>& net, const std::filesystem::path& path, const std::vector<NamedTensor>* optimizer) {
  Checkpoint ckpt = snapshot(net);
  if (optimizer != nullptr) ckpt.optimizer = *optimizer;
  write_checkpoint(path, ckpt);
}

LoadedCheckpoint checkpoint_load(const std::filesystem::path& path) {
  Checkpoint raw = read_checkpoint(path);
  Network<float> net = build<float>(arch_of(raw), 0);
  load_parameters(net, raw);
  return {std::move(net), std::move(raw)};
}

}  // namespace stfl

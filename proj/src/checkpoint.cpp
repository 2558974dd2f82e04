#include "rvc/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "rvc/cloudio.hpp"
#include "rvc/common.hpp"

namespace rvc {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  out.insert(out.end(), ckpt.metadata.begin(), ckpt.metadata.end());
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    std::size_t n = 1;
    for (auto d : t.shape) n *= d;
    if (n != t.data.size()) throw ShapeError("checkpoint tensor shape does not match data");
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_u32(out, d);
    for (double v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw FormatError("not an rvbb v1 checkpoint");
  }
  Reader r(bytes.subspan(sizeof(kCheckpointMagic)));
  Checkpoint ckpt;
  const auto meta = r.take(r.u32());
  ckpt.metadata.assign(meta.begin(), meta.end());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("checkpoint tensor rank too large");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.shape.push_back(r.u32());
      n *= t.shape.back();
      if (n > (std::uint64_t{1} << 32)) throw FormatError("checkpoint tensor too large");
    }
    const auto payload = r.take(static_cast<std::size_t>(n) * 4);
    t.data.resize(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < t.data.size(); ++j) {
      std::uint32_t u = 0;
      for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(payload[4 * j + k]) << (8 * k);
      const float f = std::bit_cast<float>(u);
      if (!std::isfinite(f)) throw DataError("non-finite weight in checkpoint");
      t.data[j] = f;
    }
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  write_text_file(path, std::string(bytes.begin(), bytes.end()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  return decode_checkpoint(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

}  // namespace rvc

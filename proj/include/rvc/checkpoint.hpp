#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rvc {

// Binary weight container shared by the backbone and the classifiers.
//
//   bytes 0..7   magic "rvbb v1\n"
//   u32          metadata length, then that many UTF-8 bytes
//   u32          tensor count
//   per tensor:  u32 rank, rank x u32 dims, prod(dims) x float32
//
// All integers and floats are little-endian. Values are stored as float32,
// so a save/load cycle rounds double weights to single precision.
struct CheckpointTensor {
  std::vector<std::uint32_t> shape;
  std::vector<double> data;
};

struct Checkpoint {
  std::string metadata;
  std::vector<CheckpointTensor> tensors;
};

inline constexpr char kCheckpointMagic[8] = {'r', 'v', 'b', 'b', ' ', 'v', '1', '\n'};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on bad magic, truncation, or trailing bytes.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rvc

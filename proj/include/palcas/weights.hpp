#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace palcas {

/// One named tensor, row-major.
struct Tensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;

  std::uint64_t numel() const;
  bool operator==(const Tensor&) const = default;
};

/// A full weight set for one learner. Tensor order is part of the layout.
struct ModelWeights {
  std::string signature;
  std::vector<Tensor> tensors;

  const Tensor& at(const std::string& name) const;
  bool operator==(const ModelWeights&) const = default;
};

inline constexpr char kCheckpointMagic[] = "PALCASCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(const ModelWeights& weights);

/// Throws SchemaError on bad magic, version, or truncated data.
ModelWeights deserialize(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const ModelWeights& weights);
ModelWeights read_checkpoint(const std::filesystem::path& path);

/// Byte count of the serialized form, computed from the layout alone.
std::uint64_t serialized_size(const ModelWeights& weights);

/// FNV-1a over the serialized bytes.
std::uint64_t checksum(const ModelWeights& weights);

/// Throws SchemaError unless both sets have the same signature, names and shapes.
void check_compatible(const ModelWeights& expected, const ModelWeights& actual, const std::string& who = {});

}  // namespace palcas

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clear/numerics/tensor.hpp"

namespace clear {

inline constexpr char kCheckpointMagic[8] = {'C', 'L', 'E', 'A', 'R', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredTensor {
  std::string name;
  Shape shape;
  Matrix value;
};

/// Layout: magic, u32 version, u64-length config text, u64 count, then per
/// tensor u32-length name, u32 rank, u64 dims, u64 rows, u64 cols and the
/// row-major float64 payload. All integers and floats little-endian.
struct Checkpoint {
  std::string config_json;
  std::vector<StoredTensor> tensors;

  const StoredTensor& at(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& config_json,
                     const ParameterList& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies stored values into matching parameters; every parameter must be present with the same shape.
void restore_parameters(const Checkpoint& ckpt, const ParameterList& params);

}  // namespace clear

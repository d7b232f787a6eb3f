#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "clear/numerics/tensor.hpp"

namespace clear {

inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
// Four-dimensional unsigned-byte variant, used for multi-channel images.
inline constexpr std::uint32_t kIdxImage4Magic = 0x00000804;

/// Unsigned-byte IDX array: dims are big-endian u32 sizes on disk.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::uint32_t magic() const { return 0x00000800u | static_cast<std::uint32_t>(dims.size()); }
};

IdxArray parse_idx(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx(const IdxArray& array);

IdxArray read_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxArray& array);

/// Image files (0x803/0x804) become an (n, [C,] H, W) tensor scaled to [0, 1];
/// label files (0x801) become an n x 1 tensor of raw label values.
Tensor load_idx(const std::filesystem::path& path);
/// Like load_idx but insists on an image magic.
Tensor load_idx_images(const std::filesystem::path& path);
/// Insists on the label magic.
std::vector<int> load_idx_labels(const std::filesystem::path& path);

/// Quantizes round(255 x) and writes 0x803 for one channel, 0x804 otherwise.
void write_idx_images(const std::filesystem::path& path, const Tensor& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace clear

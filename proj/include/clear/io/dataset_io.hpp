#pragma once

#include <filesystem>

#include "clear/data/dataset.hpp"

namespace clear {

/// 8-bit grayscale (channels == 1) or RGB (channels == 3) PNG of one image row.
void write_png(const std::filesystem::path& path, const RowVector& image, const ImageDims& dims);

/// One PNG per image plus manifest.csv with columns filename,content,style.
void export_png_dir(const LabeledImageSet& set, const std::filesystem::path& dir);

/// images.idx, content.idx and style.idx under `dir`. Pixels are quantized to bytes.
void save_dataset(const LabeledImageSet& set, const std::filesystem::path& dir);
/// Inverse of save_dataset; a missing style.idx means a single style.
LabeledImageSet load_dataset(const std::filesystem::path& dir);

}  // namespace clear

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clear/data/dataset.hpp"
#include "clear/model/networks.hpp"

#include "json.hpp"

namespace clear {

inline constexpr double kSeparatorValue = 1.0;

struct Picture {
  RowVector pixels;  // planar C x H x W
  ImageDims dims;
};

/// rows x cols tiles (row-major order in `tiles`) with 1px separators between them.
Picture tile_grid(const Matrix& tiles, Index rows, Index cols, const ImageDims& tile);

/// G x G decodes: cell (i, j) = decode(mu_c of sample i, mu_s of sample j). Rows follow `indices`.
Matrix swap_tiles(const ClearModel& model, const LabeledImageSet& data, std::span<const Index> indices);

enum class Axis { content, style };
Axis parse_axis(const std::string& s);

/// `steps` decodes along the segment from src to tgt on one axis; the other axis stays at src.
Matrix interpolation_tiles(const ClearModel& model, const LabeledImageSet& data, Index src, Index tgt, Axis axis,
                           int steps);

/// Appends one entry to dir/manifest.json ({"runs": [...]}); earlier entries are kept verbatim.
void append_manifest(const std::filesystem::path& dir, const nlohmann::json& entry);
nlohmann::json read_manifest(const std::filesystem::path& dir);

/// ISO-8601 UTC timestamp.
std::string utc_now();

}  // namespace clear

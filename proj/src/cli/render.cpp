#include "clear/cli/render.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "clear/errors.hpp"
#include "clear/training/train.hpp"

namespace clear {

Picture tile_grid(const Matrix& tiles, Index rows, Index cols, const ImageDims& tile) {
  CLEAR_REQUIRE(rows >= 1 && cols >= 1 && tiles.rows() == rows * cols, "tile_grid: need rows * cols tiles");
  CLEAR_REQUIRE(tiles.cols() == tile.pixels(), "tile_grid: tile size mismatch");
  Picture p;
  p.dims = {tile.channels, rows * tile.height + rows - 1, cols * tile.width + cols - 1};
  p.pixels = RowVector::Constant(p.dims.pixels(), kSeparatorValue);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const auto src = tiles.row(r * cols + c);
      for (Index ch = 0; ch < tile.channels; ++ch) {
        for (Index y = 0; y < tile.height; ++y) {
          for (Index x = 0; x < tile.width; ++x) {
            const Index oy = r * (tile.height + 1) + y, ox = c * (tile.width + 1) + x;
            p.pixels((ch * p.dims.height + oy) * p.dims.width + ox) = src((ch * tile.height + y) * tile.width + x);
          }
        }
      }
    }
  }
  return p;
}

Matrix swap_tiles(const ClearModel& model, const LabeledImageSet& data, std::span<const Index> indices) {
  CLEAR_REQUIRE(!indices.empty(), "swap: need at least one index");
  for (Index i : indices) CLEAR_REQUIRE(i >= 0 && i < data.size(), "swap: index " + std::to_string(i) + " out of range");
  const auto [mu_c, mu_s] = encode_means(model, data, indices);
  const Index g = static_cast<Index>(indices.size());
  Matrix zc(g * g, mu_c.cols()), zs(g * g, mu_s.cols());
  for (Index i = 0; i < g; ++i) {
    for (Index j = 0; j < g; ++j) {
      zc.row(i * g + j) = mu_c.row(i);
      zs.row(i * g + j) = mu_s.row(j);
    }
  }
  const Tensor out = model.decode(Tensor::constant(zc), Tensor::constant(zs));
  return out.value();
}

Axis parse_axis(const std::string& s) {
  if (s == "content") return Axis::content;
  if (s == "style") return Axis::style;
  throw ContractViolation("unknown axis '" + s + "' (expected content or style)");
}

Matrix interpolation_tiles(const ClearModel& model, const LabeledImageSet& data, Index src, Index tgt, Axis axis,
                           int steps) {
  CLEAR_REQUIRE(steps >= 2, "interpolate: steps must be >= 2");
  CLEAR_REQUIRE(src >= 0 && src < data.size() && tgt >= 0 && tgt < data.size(), "interpolate: index out of range");
  const std::vector<Index> rows{src, tgt};
  const auto [mu_c, mu_s] = encode_means(model, data, rows);
  Matrix zc(steps, mu_c.cols()), zs(steps, mu_s.cols());
  for (int t = 0; t < steps; ++t) {
    const double lambda = static_cast<double>(t) / (steps - 1);
    if (axis == Axis::content) {
      zc.row(t) = (1 - lambda) * mu_c.row(0) + lambda * mu_c.row(1);
      zs.row(t) = mu_s.row(0);
    } else {
      zc.row(t) = mu_c.row(0);
      zs.row(t) = (1 - lambda) * mu_s.row(0) + lambda * mu_s.row(1);
    }
  }
  return model.decode(Tensor::constant(zc), Tensor::constant(zs)).value();
}

nlohmann::json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) return {{"runs", nlohmann::json::array()}};
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(path.string() + ": unreadable manifest: " + e.what());
  }
  CLEAR_REQUIRE(j.contains("runs") && j["runs"].is_array(), path.string() + ": manifest has no runs array");
  return j;
}

void append_manifest(const std::filesystem::path& dir, const nlohmann::json& entry) {
  std::filesystem::create_directories(dir);
  nlohmann::json j = read_manifest(dir);
  j["runs"].push_back(entry);
  const auto path = dir / "manifest.json", tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace clear

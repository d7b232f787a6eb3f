#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clear/numerics/rng.hpp"
#include "clear/numerics/tensor.hpp"

namespace clear {

struct ImageDims {
  Index channels = 1;
  Index height = 28;
  Index width = 28;

  Index pixels() const { return channels * height * width; }
  bool operator==(const ImageDims&) const = default;
};

/// Images with content labels (used in training) and style labels (used only
/// for splits and audits).
struct LabeledImageSet {
  Matrix images;  // n x (C*H*W), values in [0, 1]
  ImageDims dims;
  std::vector<int> content;
  std::vector<int> style;
  int num_content = 0;
  int num_style = 0;
  Eigen::MatrixXi contingency;  // num_content x num_style cell counts

  Index size() const { return images.rows(); }

  /// (b, C, H, W) constant tensor of the selected rows.
  Tensor batch(std::span<const Index> rows) const;
  std::vector<int> content_of(std::span<const Index> rows) const;
  LabeledImageSet subset(std::span<const Index> rows) const;

  /// Rebuilds the contingency table from the label arrays.
  void recount();
  /// Checks label lengths, ranges and pixel bounds; throws ContractViolation.
  void validate() const;
  /// FNV-1a over pixel bytes and labels, as 16 hex digits.
  std::string hash() const;
};

enum class StyleFamily { corruption, color };

/// Corruption styles, in id order.
enum class Style : int { identity = 0, stripe, zigzag, edge, tiny, brightness };
/// Color styles for the colored variant, in id order.
enum class Tint : int { red = 0, green, blue, yellow, cyan, magenta };

inline constexpr int kNumStyles = 6;
inline constexpr int kNumGlyphs = 10;
inline constexpr double kBrightnessLift = 0.4;

std::string style_name(StyleFamily family, int style_id);

/// One jittered glyph for content class `glyph` on a side x side canvas.
RowVector render_glyph(int glyph, Index side, Rng& rng);

/// Applies a corruption style to a single-channel side x side image in [0, 1].
/// Output stays in [0, 1]. `rng` drives the zigzag phase only.
RowVector apply_style(const RowVector& image, Index side, int style_id, Rng& rng);

/// Tints a single-channel image into three channels.
RowVector apply_tint(const RowVector& gray, int tint_id);

/// Balanced synthetic two-factor dataset, rows ordered by (content, style, index).
LabeledImageSet gen_styled_shapes(int num_content, int num_style, int per_cell, Index image_size,
                                  std::uint64_t seed, StyleFamily family = StyleFamily::corruption);

/// Styles real grayscale images (e.g. MNIST); each image gets a uniformly drawn style.
LabeledImageSet style_images(const Matrix& gray, Index side, std::span<const int> content,
                             int num_style, std::uint64_t seed,
                             StyleFamily family = StyleFamily::corruption);

}  // namespace clear

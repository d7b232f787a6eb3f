#include "clear/data/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "clear/errors.hpp"
#include "clear/numerics/hash.hpp"

namespace clear {

Tensor LabeledImageSet::batch(std::span<const Index> rows) const {
  Matrix m(static_cast<Index>(rows.size()), images.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Index>(i)) = images.row(rows[i]);
  return Tensor::constant(std::move(m),
                          {static_cast<Index>(rows.size()), dims.channels, dims.height, dims.width});
}

std::vector<int> LabeledImageSet::content_of(std::span<const Index> rows) const {
  std::vector<int> y;
  y.reserve(rows.size());
  for (Index r : rows) y.push_back(content[static_cast<std::size_t>(r)]);
  return y;
}

LabeledImageSet LabeledImageSet::subset(std::span<const Index> rows) const {
  LabeledImageSet out;
  out.dims = dims;
  out.num_content = num_content;
  out.num_style = num_style;
  out.images.resize(static_cast<Index>(rows.size()), images.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.images.row(static_cast<Index>(i)) = images.row(rows[i]);
    out.content.push_back(content[static_cast<std::size_t>(rows[i])]);
    out.style.push_back(style[static_cast<std::size_t>(rows[i])]);
  }
  out.recount();
  return out;
}

void LabeledImageSet::recount() {
  contingency = Eigen::MatrixXi::Zero(num_content, num_style);
  for (std::size_t i = 0; i < content.size(); ++i) contingency(content[i], style[i]) += 1;
}

void LabeledImageSet::validate() const {
  CLEAR_REQUIRE(images.cols() == dims.pixels(), "dataset: image width does not match dims");
  CLEAR_REQUIRE(static_cast<Index>(content.size()) == size() &&
                    static_cast<Index>(style.size()) == size(),
                "dataset: label arrays must have one entry per image");
  for (std::size_t i = 0; i < content.size(); ++i) {
    CLEAR_REQUIRE(content[i] >= 0 && content[i] < num_content, "dataset: content label out of range");
    CLEAR_REQUIRE(style[i] >= 0 && style[i] < num_style, "dataset: style label out of range");
  }
  CLEAR_REQUIRE(images.size() == 0 || (images.minCoeff() >= 0.0 && images.maxCoeff() <= 1.0),
                "dataset: pixel values must lie in [0, 1]");
}

std::string LabeledImageSet::hash() const {
  Fnv1a h;
  const Index header[3] = {dims.channels, dims.height, dims.width};
  h.feed(header, sizeof(header));
  h.feed(images.data(), sizeof(double) * static_cast<std::size_t>(images.size()));
  h.feed(content.data(), sizeof(int) * content.size());
  h.feed(style.data(), sizeof(int) * style.size());
  return h.hex();
}

std::string style_name(StyleFamily family, int style_id) {
  static const std::array<const char*, kNumStyles> corruption{"identity", "stripe",  "zigzag",
                                                              "edge",     "tiny",    "brightness"};
  static const std::array<const char*, kNumStyles> tints{"red",    "green", "blue",
                                                         "yellow", "cyan",  "magenta"};
  CLEAR_REQUIRE(style_id >= 0 && style_id < kNumStyles, "unknown style id");
  return family == StyleFamily::color ? tints[style_id] : corruption[style_id];
}

namespace {

struct Point {
  double x, y;
};

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Distance (in unit canvas coordinates) from p to the glyph's stroke.
double glyph_distance(int glyph, Point p) {
  auto seg = [&](double ax, double ay, double bx, double by) {
    return segment_distance(p, {ax, ay}, {bx, by});
  };
  const double r = std::hypot(p.x - 0.5, p.y - 0.5);
  switch (glyph) {
    case 0:  // horizontal bar
      return seg(0.2, 0.5, 0.8, 0.5);
    case 1:  // vertical bar
      return seg(0.5, 0.2, 0.5, 0.8);
    case 2:  // plus
      return std::min(seg(0.2, 0.5, 0.8, 0.5), seg(0.5, 0.2, 0.5, 0.8));
    case 3:  // diagonal cross
      return std::min(seg(0.25, 0.25, 0.75, 0.75), seg(0.75, 0.25, 0.25, 0.75));
    case 4:  // ring
      return std::abs(r - 0.28);
    case 5:  // square outline
      return std::min({seg(0.25, 0.25, 0.75, 0.25), seg(0.75, 0.25, 0.75, 0.75),
                       seg(0.75, 0.75, 0.25, 0.75), seg(0.25, 0.75, 0.25, 0.25)});
    case 6:  // triangle
      return std::min({seg(0.5, 0.2, 0.8, 0.78), seg(0.8, 0.78, 0.2, 0.78), seg(0.2, 0.78, 0.5, 0.2)});
    case 7:  // L
      return std::min(seg(0.3, 0.2, 0.3, 0.78), seg(0.3, 0.78, 0.75, 0.78));
    case 8:  // T
      return std::min(seg(0.2, 0.25, 0.8, 0.25), seg(0.5, 0.25, 0.5, 0.8));
    case 9:  // filled disc
      return std::max(0.0, r - 0.2);
    default:
      throw ContractViolation("unknown glyph id");
  }
}

RowVector sobel_magnitude(const RowVector& img, Index side) {
  auto at = [&](Index r, Index c) {
    return (r < 0 || c < 0 || r >= side || c >= side) ? 0.0 : img(r * side + c);
  };
  RowVector out(img.size());
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      const double gx = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
      out(r * side + c) = std::hypot(gx, gy);
    }
  }
  const double mx = out.maxCoeff();
  if (mx > 0) out /= mx;
  return out;
}

}  // namespace

RowVector render_glyph(int glyph, Index side, Rng& rng) {
  CLEAR_REQUIRE(glyph >= 0 && glyph < kNumGlyphs, "unknown glyph id");
  const double half_width = 0.045 * static_cast<double>(side);  // in pixels
  const Index dx = static_cast<Index>(rng.uniform_int(3)) - 1;
  const Index dy = static_cast<Index>(rng.uniform_int(3)) - 1;
  RowVector img(side * side);
  const double s = static_cast<double>(side);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) {
      const Point p{(static_cast<double>(c - dx) + 0.5) / s, (static_cast<double>(r - dy) + 0.5) / s};
      const double d = glyph_distance(glyph, p) * s;
      const double ink = std::clamp(half_width + 0.5 - d, 0.0, 1.0);
      img(r * side + c) = std::min(1.0, ink + 0.05 * rng.uniform());
    }
  }
  return img;
}

RowVector apply_style(const RowVector& image, Index side, int style_id, Rng& rng) {
  CLEAR_REQUIRE(image.size() == side * side, "apply_style: expects one side x side channel");
  switch (static_cast<Style>(style_id)) {
    case Style::identity:
      return image;
    case Style::stripe: {
      RowVector out = image;
      for (Index r = 0; r < side; ++r) {
        if (r % 3 == 2) out.segment(r * side, side).setZero();
      }
      return out;
    }
    case Style::zigzag: {
      RowVector out = image;
      const Index period = std::max<Index>(4, side / 4);
      const Index phase = static_cast<Index>(rng.uniform_int(8));
      for (Index r = 0; r < side; ++r) {
        for (Index c = 0; c < side; ++c) {
          const Index tri = std::abs((c + phase) % 8 - 4);
          if ((r + tri) % period == 0) out(r * side + c) = std::max(out(r * side + c), 0.8);
        }
      }
      return out;
    }
    case Style::edge:
      return sobel_magnitude(image, side);
    case Style::tiny: {
      const Index half = side / 2;
      const Index off = side / 4;
      RowVector out = RowVector::Zero(side * side);
      for (Index r = 0; r < half; ++r) {
        for (Index c = 0; c < half; ++c) {
          const double v = 0.25 * (image(2 * r * side + 2 * c) + image(2 * r * side + 2 * c + 1) +
                                   image((2 * r + 1) * side + 2 * c) +
                                   image((2 * r + 1) * side + 2 * c + 1));
          out((r + off) * side + c + off) = v;
        }
      }
      return out;
    }
    case Style::brightness:
      return (kBrightnessLift + (1.0 - kBrightnessLift) * image.array()).matrix();
  }
  throw ContractViolation("apply_style: unknown style id " + std::to_string(style_id));
}

RowVector apply_tint(const RowVector& gray, int tint_id) {
  static constexpr double kColors[kNumStyles][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                                    {1, 1, 0}, {0, 1, 1}, {1, 0, 1}};
  CLEAR_REQUIRE(tint_id >= 0 && tint_id < kNumStyles, "apply_tint: unknown color id");
  const Index n = gray.size();
  RowVector out(3 * n);
  for (Index c = 0; c < 3; ++c) out.segment(c * n, n) = gray * kColors[tint_id][c];
  return out;
}

namespace {

RowVector stylize(const RowVector& gray, Index side, int style_id, StyleFamily family, Rng& rng) {
  if (family == StyleFamily::color) return apply_tint(gray, style_id);
  return apply_style(gray, side, style_id, rng);
}

}  // namespace

LabeledImageSet gen_styled_shapes(int num_content, int num_style, int per_cell, Index image_size,
                                  std::uint64_t seed, StyleFamily family) {
  CLEAR_REQUIRE(num_content >= 1 && num_content <= kNumGlyphs, "gen_styled_shapes: p must be in [1, 10]");
  CLEAR_REQUIRE(num_style >= 1 && num_style <= kNumStyles, "gen_styled_shapes: m must be in [1, 6]");
  CLEAR_REQUIRE(image_size == 16 || image_size == 28, "gen_styled_shapes: image size must be 16 or 28");
  CLEAR_REQUIRE(per_cell >= 1, "gen_styled_shapes: need at least one sample per cell");

  LabeledImageSet set;
  set.dims = ImageDims{family == StyleFamily::color ? 3 : 1, image_size, image_size};
  set.num_content = num_content;
  set.num_style = num_style;
  const Index n = static_cast<Index>(num_content) * num_style * per_cell;
  set.images.resize(n, set.dims.pixels());
  set.content.reserve(static_cast<std::size_t>(n));
  set.style.reserve(static_cast<std::size_t>(n));

  Rng root(seed);
  Index row = 0;
  for (int c = 0; c < num_content; ++c) {
    for (int s = 0; s < num_style; ++s) {
      Rng cell = root.split(static_cast<std::uint64_t>(c * num_style + s));
      for (int i = 0; i < per_cell; ++i) {
        RowVector gray = render_glyph(c, image_size, cell);
        set.images.row(row++) = stylize(gray, image_size, s, family, cell);
        set.content.push_back(c);
        set.style.push_back(s);
      }
    }
  }
  set.recount();
  return set;
}

LabeledImageSet style_images(const Matrix& gray, Index side, std::span<const int> content,
                             int num_style, std::uint64_t seed, StyleFamily family) {
  CLEAR_REQUIRE(gray.cols() == side * side, "style_images: expects single-channel side x side rows");
  CLEAR_REQUIRE(static_cast<Index>(content.size()) == gray.rows(), "style_images: label count mismatch");
  CLEAR_REQUIRE(num_style >= 1 && num_style <= kNumStyles, "style_images: m must be in [1, 6]");
  LabeledImageSet set;
  set.dims = ImageDims{family == StyleFamily::color ? 3 : 1, side, side};
  set.num_style = num_style;
  set.num_content = content.empty() ? 0 : *std::max_element(content.begin(), content.end()) + 1;
  set.images.resize(gray.rows(), set.dims.pixels());
  Rng rng(seed);
  for (Index i = 0; i < gray.rows(); ++i) {
    const int s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(num_style)));
    set.images.row(i) = stylize(gray.row(i), side, s, family, rng);
    set.content.push_back(content[static_cast<std::size_t>(i)]);
    set.style.push_back(s);
  }
  set.recount();
  return set;
}

}  // namespace clear

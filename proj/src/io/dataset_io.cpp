#include "clear/io/dataset_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "clear/errors.hpp"
#include "clear/io/idx.hpp"

namespace clear {

void write_png(const std::filesystem::path& path, const RowVector& image, const ImageDims& dims) {
  CLEAR_REQUIRE(dims.channels == 1 || dims.channels == 3, "write_png: need 1 or 3 channels");
  CLEAR_REQUIRE(image.size() == dims.pixels(), "write_png: image size does not match dims");
  const Index plane = dims.height * dims.width;
  // Planar CHW -> interleaved HWC bytes.
  std::vector<png_byte> bytes(static_cast<std::size_t>(image.size()));
  for (Index c = 0; c < dims.channels; ++c) {
    for (Index p = 0; p < plane; ++p) {
      const double v = std::clamp(image(c * plane + p), 0.0, 1.0);
      bytes[static_cast<std::size_t>(p * dims.channels + c)] = static_cast<png_byte>(std::lround(v * 255.0));
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw ContractViolation("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(dims.width), static_cast<png_uint_32>(dims.height), 8,
               dims.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(dims.width * dims.channels);
  for (Index r = 0; r < dims.height; ++r) png_write_row(png, bytes.data() + static_cast<std::size_t>(r) * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void export_png_dir(const LabeledImageSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw ContractViolation("cannot write " + (dir / "manifest.csv").string());
  manifest << "filename,content,style\n";
  char name[32];
  for (Index i = 0; i < set.size(); ++i) {
    std::snprintf(name, sizeof(name), "img_%06ld.png", static_cast<long>(i));
    write_png(dir / name, set.images.row(i), set.dims);
    manifest << name << ',' << set.content[static_cast<std::size_t>(i)] << ','
             << set.style[static_cast<std::size_t>(i)] << '\n';
  }
}

void save_dataset(const LabeledImageSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Index> all(static_cast<std::size_t>(set.size()));
  for (Index i = 0; i < set.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  write_idx_images(dir / "images.idx", set.batch(all));
  write_idx_labels(dir / "content.idx", set.content);
  write_idx_labels(dir / "style.idx", set.style);
}

LabeledImageSet load_dataset(const std::filesystem::path& dir) {
  const Tensor images = load_idx_images(dir / "images.idx");
  LabeledImageSet set;
  const Shape& s = images.shape();
  set.dims = ImageDims{s[1], s[2], s[3]};
  set.images = images.value();
  set.content = load_idx_labels(dir / "content.idx");
  if (std::filesystem::exists(dir / "style.idx")) {
    set.style = load_idx_labels(dir / "style.idx");
  } else {
    set.style.assign(set.content.size(), 0);
  }
  CLEAR_REQUIRE(static_cast<Index>(set.content.size()) == set.size() &&
                    static_cast<Index>(set.style.size()) == set.size(),
                "load_dataset: label files do not match the image count");
  auto max_of = [](const std::vector<int>& v) { return v.empty() ? 0 : *std::max_element(v.begin(), v.end()) + 1; };
  set.num_content = max_of(set.content);
  set.num_style = max_of(set.style);
  set.recount();
  return set;
}

}  // namespace clear

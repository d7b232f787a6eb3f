#include "clear/io/idx.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "clear/errors.hpp"

namespace clear {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractViolation("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("idx: truncated magic", bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) throw ParseError("idx: bad magic", 0);
  if (bytes[2] != 0x08) throw ParseError("idx: only unsigned-byte payloads are supported", 2);
  const std::size_t ndims = bytes[3];
  if (ndims == 0) throw ParseError("idx: zero dimensions", 3);

  IdxArray out;
  std::size_t offset = 4;
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    if (offset + 4 > bytes.size()) throw ParseError("idx: truncated dimension header", bytes.size());
    const std::uint32_t v = (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
                            (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
    out.dims.push_back(v);
    total *= v;
    offset += 4;
  }
  if (bytes.size() < offset + total) throw ParseError("idx: truncated payload", bytes.size());
  if (bytes.size() > offset + total) throw ParseError("idx: trailing bytes after payload", offset + total);
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return out;
}

std::vector<std::uint8_t> serialize_idx(const IdxArray& array) {
  CLEAR_REQUIRE(!array.dims.empty() && array.dims.size() < 256, "idx: need 1..255 dimensions");
  std::size_t total = 1;
  for (auto d : array.dims) total *= d;
  CLEAR_REQUIRE(total == array.data.size(), "idx: payload size does not match dims");
  std::vector<std::uint8_t> out{0, 0, 0x08, static_cast<std::uint8_t>(array.dims.size())};
  for (auto d : array.dims) {
    out.push_back(static_cast<std::uint8_t>(d >> 24));
    out.push_back(static_cast<std::uint8_t>(d >> 16));
    out.push_back(static_cast<std::uint8_t>(d >> 8));
    out.push_back(static_cast<std::uint8_t>(d));
  }
  out.insert(out.end(), array.data.begin(), array.data.end());
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) { return parse_idx(read_file_bytes(path)); }

void write_idx(const std::filesystem::path& path, const IdxArray& array) {
  const auto bytes = serialize_idx(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractViolation("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

Tensor images_from(const IdxArray& a) {
  const Index n = a.dims[0];
  const Index per = n == 0 ? 0 : static_cast<Index>(a.data.size()) / n;
  Matrix m(n, per);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = a.data[static_cast<std::size_t>(i)] / 255.0;
  Shape shape;
  for (auto d : a.dims) shape.push_back(static_cast<Index>(d));
  if (shape.size() == 3) shape.insert(shape.begin() + 1, 1);
  return Tensor::constant(std::move(m), shape);
}

}  // namespace

Tensor load_idx(const std::filesystem::path& path) {
  const IdxArray a = read_idx(path);
  if (a.magic() == kIdxLabelMagic) {
    Matrix m(static_cast<Index>(a.dims[0]), 1);
    for (Index i = 0; i < m.rows(); ++i) m(i, 0) = a.data[static_cast<std::size_t>(i)];
    return Tensor::constant(std::move(m));
  }
  if (a.magic() == kIdxImageMagic || a.magic() == kIdxImage4Magic) return images_from(a);
  throw ParseError("idx: unsupported dimensionality", 3);
}

Tensor load_idx_images(const std::filesystem::path& path) {
  const IdxArray a = read_idx(path);
  if (a.magic() != kIdxImageMagic && a.magic() != kIdxImage4Magic) {
    throw ParseError("idx: expected an image file (magic 0x803 or 0x804) in " + path.string(), 3);
  }
  return images_from(a);
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const IdxArray a = read_idx(path);
  if (a.magic() != kIdxLabelMagic) {
    throw ParseError("idx: expected a label file (magic 0x801) in " + path.string(), 3);
  }
  return {a.data.begin(), a.data.end()};
}

void write_idx_images(const std::filesystem::path& path, const Tensor& images) {
  const Shape& s = images.shape();
  CLEAR_REQUIRE(s.size() == 4, "write_idx_images: expected an (n, C, H, W) tensor");
  IdxArray a;
  if (s[1] == 1) {
    a.dims = {static_cast<std::uint32_t>(s[0]), static_cast<std::uint32_t>(s[2]),
              static_cast<std::uint32_t>(s[3])};
  } else {
    for (Index d : s) a.dims.push_back(static_cast<std::uint32_t>(d));
  }
  const Matrix& v = images.value();
  a.data.resize(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) {
    const double x = v.data()[i];
    CLEAR_REQUIRE(x >= 0.0 && x <= 1.0, "write_idx_images: pixel values must lie in [0, 1]");
    a.data[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(x * 255.0));
  }
  write_idx(path, a);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
  IdxArray a;
  a.dims = {static_cast<std::uint32_t>(labels.size())};
  for (int y : labels) {
    CLEAR_REQUIRE(y >= 0 && y < 256, "write_idx_labels: labels must fit in a byte");
    a.data.push_back(static_cast<std::uint8_t>(y));
  }
  write_idx(path, a);
}

}  // namespace clear

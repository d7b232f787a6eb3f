#include "clear/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "clear/errors.hpp"
#include "clear/io/idx.hpp"

namespace clear {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T get() {
    T v;
    read(&v, sizeof(T));
    return v;
  }

  void read(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint: truncated", bytes_.size());
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::string string(std::size_t n) {
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const StoredTensor& Checkpoint::at(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw ContractViolation("checkpoint has no tensor named '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const std::string& config_json,
                     const ParameterList& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractViolation("cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config_json.size());
  out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  put<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    const Shape& shape = p.tensor.shape();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (Index d : shape) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    const Matrix& v = p.tensor.value();
    put<std::uint64_t>(out, static_cast<std::uint64_t>(v.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(v.cols()));
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file_bytes(path));
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) throw ParseError("checkpoint: bad magic", 0);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw ParseError("checkpoint: unsupported version", 8);
  Checkpoint ckpt;
  ckpt.config_json = r.string(r.get<std::uint64_t>());
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name = r.string(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(static_cast<Index>(r.get<std::uint64_t>()));
    const auto rows = static_cast<Index>(r.get<std::uint64_t>());
    const auto cols = static_cast<Index>(r.get<std::uint64_t>());
    if (shape_numel(t.shape) != rows * cols) throw ParseError("checkpoint: shape disagrees with payload", r.pos());
    t.value.resize(rows, cols);
    r.read(t.value.data(), sizeof(double) * static_cast<std::size_t>(rows * cols));
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes", r.pos());
  return ckpt;
}

void restore_parameters(const Checkpoint& ckpt, const ParameterList& params) {
  for (const auto& p : params) {
    const StoredTensor& t = ckpt.at(p.name);
    CLEAR_REQUIRE(t.shape == p.tensor.shape(), "checkpoint: shape mismatch for '" + p.name + "'");
    Tensor handle = p.tensor;
    handle.mutable_value() = t.value;
  }
}

}  // namespace clear

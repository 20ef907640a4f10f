#include "motionnet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "motionnet/errors.hpp"

namespace motionnet {
namespace {

constexpr char kMagic[8] = {'M', 'N', 'C', 'K', 'P', 'T', '0', '1'};

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw InputError("checkpoint: cannot open " + path + " for writing");
  }
  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    bytes(b, 4);
  }
  void u64(uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    bytes(b, 8);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void finish() {
    out_.flush();
    if (!out_) throw InputError("checkpoint: write to " + path_ + " failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw InputError("checkpoint: cannot open " + path);
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in_.gcount()) != n) {
      throw ParseError("checkpoint " + path_ + ": truncated at byte offset " +
                       std::to_string(offset_ + static_cast<size_t>(in_.gcount())));
    }
    offset_ += n;
  }
  uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  size_t offset_ = 0;
};

}  // namespace

void write_checkpoint(const std::string& path, const NamedTensors& tensors) {
  Writer w(path);
  w.bytes(kMagic, 8);
  w.u32(static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.u32(static_cast<uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<uint32_t>(t.ndim()));
    for (int64_t e : t.shape) w.u64(static_cast<uint64_t>(e));
    for (double v : t.data) w.f64(v);
  }
  w.finish();
}

NamedTensors read_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError("checkpoint " + path + ": bad magic at byte offset 0");
  }
  const uint32_t count = r.u32();
  NamedTensors out;
  out.reserve(count);
  for (uint32_t t = 0; t < count; ++t) {
    const uint32_t name_len = r.u32();
    if (name_len > 4096) {
      throw ParseError("checkpoint " + path + ": unreasonable name length " +
                       std::to_string(name_len) + " at byte offset " +
                       std::to_string(r.offset() - 4));
    }
    std::string name(name_len, '\0');
    if (name_len > 0) r.bytes(name.data(), name_len);
    const uint32_t ndim = r.u32();
    if (ndim > 8) {
      throw ParseError("checkpoint " + path + ": unreasonable rank " + std::to_string(ndim) +
                       " for tensor \"" + name + "\" at byte offset " +
                       std::to_string(r.offset() - 4));
    }
    std::vector<int64_t> shape(ndim);
    int64_t numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<int64_t>(r.u64());
      if (shape[d] <= 0 || numel > std::numeric_limits<int64_t>::max() / shape[d]) {
        throw ParseError("checkpoint " + path + ": bad extent for tensor \"" + name +
                         "\" at byte offset " + std::to_string(r.offset() - 8));
      }
      numel *= shape[d];
    }
    Tensor tensor = Tensor::zeros(shape);
    for (int64_t i = 0; i < numel; ++i) tensor.data[static_cast<size_t>(i)] = r.f64();
    out.emplace_back(std::move(name), std::move(tensor));
  }
  return out;
}

const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

}  // namespace motionnet

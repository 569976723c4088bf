#pragma once

// Binary checkpoint container shared by the evidence head and the probe.
//
// Layout (all integers and floats little-endian):
//   magic      8 bytes  "SAECKPT1"
//   kind       u32 length + UTF-8 bytes ("seh" or "probe")
//   count      u32      number of tensors
//   manifest   count x { u32 name length, name bytes, u32 ndim, ndim x u64 dim }
//   payload    every tensor's values as f64, in manifest order
// Scalars are stored as rank-1 tensors of length 1.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "sae/errors.hpp"

namespace sae::ckpt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint and pool I/O assume a little-endian host");

inline constexpr char kMagic[8] = {'S', 'A', 'E', 'C', 'K', 'P', 'T', '1'};

struct Tensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

namespace detail {

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void put_string(std::ofstream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
public:
  Reader(const std::string& path) : path_(path), is_(path, std::ios::binary) {
    if (!is_) throw IoError(path, "cannot open checkpoint");
  }

  template <typename T>
  T get() {
    T v{};
    read_bytes(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw LoadError(path_, offset_ - 4, "implausible string length");
    std::string s(n, '\0');
    read_bytes(s.data(), n);
    return s;
  }

  void read_bytes(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw LoadError(path_, offset_, "unexpected end of file");
    offset_ += n;
  }

  bool at_eof() { return is_.peek() == std::char_traits<char>::eof(); }
  std::uint64_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

private:
  std::string path_;
  std::ifstream is_;
  std::uint64_t offset_ = 0;
};

}  // namespace detail

inline void write(const std::string& path, const std::string& kind,
                  const std::vector<Tensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path, "cannot open checkpoint for writing");
  os.write(kMagic, sizeof(kMagic));
  detail::put_string(os, kind);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    detail::put_string(os, t.name);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) detail::put<std::uint64_t>(os, d);
  }
  for (const auto& t : tensors)
    os.write(reinterpret_cast<const char*>(t.values.data()),
             static_cast<std::streamsize>(t.values.size() * sizeof(double)));
  if (!os) throw IoError(path, "write failed");
}

inline std::vector<Tensor> read(const std::string& path, const std::string& expected_kind) {
  detail::Reader r(path);
  char magic[8];
  r.read_bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw LoadError(path, 0, "bad checkpoint magic");
  const auto kind = r.get_string();
  if (kind != expected_kind)
    throw LoadError(path, 8, "checkpoint kind '" + kind + "', expected '" + expected_kind + "'");
  const auto count = r.get<std::uint32_t>();
  std::vector<Tensor> tensors(count);
  for (auto& t : tensors) {
    t.name = r.get_string();
    const auto ndim = r.get<std::uint32_t>();
    if (ndim > 8) throw LoadError(path, r.offset() - 4, "tensor rank too large");
    t.dims.resize(ndim);
    for (auto& d : t.dims) d = r.get<std::uint64_t>();
    if (t.element_count() > (std::uint64_t{1} << 32))
      throw LoadError(path, r.offset(), "tensor '" + t.name + "' is implausibly large");
  }
  for (auto& t : tensors) {
    t.values.resize(t.element_count());
    const auto at = r.offset();
    r.read_bytes(reinterpret_cast<char*>(t.values.data()), t.values.size() * sizeof(double));
    for (std::size_t i = 0; i < t.values.size(); ++i)
      if (!std::isfinite(t.values[i]))
        throw LoadError(path, at + i * sizeof(double), "non-finite value in '" + t.name + "'");
  }
  if (!r.at_eof()) throw LoadError(path, r.offset(), "trailing bytes after payload");
  return tensors;
}

inline const Tensor& find(const std::vector<Tensor>& ts, const std::string& path,
                          const std::string& name, std::vector<std::uint64_t> dims) {
  for (const auto& t : ts) {
    if (t.name != name) continue;
    if (t.dims != dims) throw LoadError(path, 0, "tensor '" + name + "' has unexpected shape");
    return t;
  }
  throw LoadError(path, 0, "missing tensor '" + name + "'");
}

}  // namespace sae::ckpt

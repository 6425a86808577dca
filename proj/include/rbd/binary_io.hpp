#pragma once

// Little-endian byte buffers with bounds-checked reads, plus whole-file helpers
// that write through a temporary and rename into place.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "rbd/error.hpp"

namespace rbd::io {

template <typename T>
T to_little(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    const T le = to_little(v);
    const auto* p = reinterpret_cast<const char*>(&le);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  void put_magic(std::string_view magic) { bytes_.insert(bytes_.end(), magic.begin(), magic.end()); }

  void put_f64s(std::span<const double> values) {
    for (double v : values) put(v);
  }

  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const char> data) : data_(data) {}

  template <typename T>
  T get() {
    static_assert(std::is_arithmetic_v<T>);
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }

  void expect_magic(std::string_view magic) {
    if (data_.size() - pos_ < magic.size()) throw Error(Errc::truncated, "truncated before the magic");
    if (std::string_view(data_.data() + pos_, magic.size()) != magic) {
      throw Error(Errc::bad_magic, "bad magic: expected \"" + std::string(magic) + "\"");
    }
    pos_ += magic.size();
  }

  void get_f64s(std::span<double> out) {
    for (double& v : out) v = get<double>();
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(Errc::truncated, "truncated file");
  }

  std::span<const char> data_;
  std::size_t pos_ = 0;
};

/// Writes `bytes` to `path` via a temporary sibling and an atomic rename.
void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes);
std::vector<char> read_file(const std::filesystem::path& path);

}  // namespace rbd::io

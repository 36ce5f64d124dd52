#pragma once

// Little-endian primitives shared by the EGOD and EGDB readers/writers.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace egofuture::binary {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

class Writer {
 public:
  void bytes(std::string_view raw);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void f64(double v);

  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> data) : data_(std::move(data)) {}
  static Reader open(const std::filesystem::path& path) { return Reader(read_file(path)); }

  std::string bytes(std::size_t n);
  std::uint8_t u8();
  std::uint32_t u32();
  float f32();
  double f64();

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void require(std::size_t n) const;

  std::vector<std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace egofuture::binary

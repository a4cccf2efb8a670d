#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "melrag/error.hpp"

namespace melrag::detail {

// Explicit little-endian encoding so files are byte-identical across hosts.
class ByteWriter {
 public:
  void bytes(std::string_view data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> values) {
    buf_.reserve(buf_.size() + values.size() * 4);
    for (float v : values) f32(v);
  }

  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  // what names the field being read; used in the TruncatedPayload message.
  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedPayload, "file ends inside " + std::string(what) + " at byte " +
                                                   std::to_string(data_.size()));
    }
  }

  std::string bytes(std::size_t n, std::string_view what) {
    require(n, what);
    std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8(std::string_view what) { return static_cast<std::uint8_t>(le(1, what)); }
  std::uint16_t u16(std::string_view what) { return static_cast<std::uint16_t>(le(2, what)); }
  std::uint32_t u32(std::string_view what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(std::string_view what) { return le(8, what); }
  float f32_unchecked() {
    return std::bit_cast<float>(static_cast<std::uint32_t>(le_unchecked(4)));
  }

 private:
  std::uint64_t le(int width, std::string_view what) {
    require(static_cast<std::size_t>(width), what);
    return le_unchecked(width);
  }
  std::uint64_t le_unchecked(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> data);

}  // namespace melrag::detail

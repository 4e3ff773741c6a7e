#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dctdet::codec {

// MSB-first reader over JPEG entropy-coded data. Removes 0xFF00 stuffing on
// the fly and stops at any marker, after which it supplies zero bits. Consuming
// such a fill bit throws ("bit-stream exhaustion"); peeking does not.
class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}

  // Returns the next `n` (<= 16) bits without consuming them.
  std::uint32_t peek(int n) {
    if (count_ < n) fill();
    return static_cast<std::uint32_t>(buffer_ >> (64 - n));
  }

  void skip(int n);

  std::uint32_t read(int n) {
    if (n == 0) return 0;
    const std::uint32_t v = peek(n);
    skip(n);
    return v;
  }

  // Drops buffered bits up to the marker the reader stopped at and, if it is
  // RST`expected`, moves past it. Returns false if a different marker (or no
  // marker) follows.
  bool consume_restart(int expected);

  // Byte offset of the next unread input byte (the marker if one was hit).
  std::size_t position() const noexcept { return pos_; }
  bool at_marker() const noexcept { return marker_hit_; }

 private:
  void fill();

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::uint64_t buffer_ = 0;  // left-aligned
  int count_ = 0;             // valid bits in buffer_, including fill bits
  int fill_bits_ = 0;         // trailing zero bits that are not real data
  bool marker_hit_ = false;
};

// MSB-first writer producing stuffed entropy-coded bytes.
class BitWriter {
 public:
  void put(std::uint32_t bits, int n);
  // Pads the current byte with 1-bits.
  void flush();
  // Flushes, then appends the raw marker 0xFF `code`.
  void marker(std::uint8_t code);

  const std::vector<std::uint8_t>& bytes() const noexcept { return out_; }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void emit(std::uint8_t byte);

  std::vector<std::uint8_t> out_;
  std::uint32_t acc_ = 0;
  int count_ = 0;
};

}  // namespace dctdet::codec

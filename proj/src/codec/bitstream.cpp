#include "dctdet/bitstream.hpp"

#include "dctdet/error.hpp"

namespace dctdet::codec {

void BitReader::fill() {
  while (count_ <= 56) {
    std::uint8_t byte = 0;
    bool real = false;
    if (!marker_hit_ && pos_ < data_.size()) {
      const std::uint8_t b = data_[pos_];
      if (b != 0xFF) {
        byte = b;
        real = true;
        ++pos_;
      } else if (pos_ + 1 < data_.size() && data_[pos_ + 1] == 0x00) {
        byte = 0xFF;
        real = true;
        pos_ += 2;
      } else {
        marker_hit_ = true;
      }
    }
    buffer_ |= static_cast<std::uint64_t>(byte) << (56 - count_);
    count_ += 8;
    if (!real) fill_bits_ += 8;
  }
}

void BitReader::skip(int n) {
  if (count_ < n) fill();
  buffer_ <<= n;
  count_ -= n;
  if (count_ < fill_bits_) {
    const bool rst = marker_hit_ && pos_ + 1 < data_.size() && data_[pos_ + 1] >= 0xD0 &&
                     data_[pos_ + 1] <= 0xD7;
    fail(ErrorKind::kInput, rst ? "restart marker at wrong MCU index"
                                : "bit-stream exhaustion mid-block");
  }
}

bool BitReader::consume_restart(int expected) {
  buffer_ = 0;
  count_ = 0;
  fill_bits_ = 0;
  // Anything between the padded end of the interval and the marker is junk.
  while (pos_ + 1 < data_.size() &&
         !(data_[pos_] == 0xFF && data_[pos_ + 1] != 0x00 && data_[pos_ + 1] != 0xFF)) {
    ++pos_;
  }
  marker_hit_ = false;
  if (pos_ + 1 >= data_.size()) return false;
  if (data_[pos_ + 1] != 0xD0 + expected) {
    marker_hit_ = true;
    return false;
  }
  pos_ += 2;
  return true;
}

void BitWriter::emit(std::uint8_t byte) {
  out_.push_back(byte);
  if (byte == 0xFF) out_.push_back(0x00);
}

void BitWriter::put(std::uint32_t bits, int n) {
  if (n == 0) return;
  acc_ = (acc_ << n) | (bits & ((1u << n) - 1u));
  count_ += n;
  while (count_ >= 8) {
    emit(static_cast<std::uint8_t>(acc_ >> (count_ - 8)));
    count_ -= 8;
  }
  acc_ &= (1u << count_) - 1u;
}

void BitWriter::flush() {
  if (count_ > 0) put((1u << (8 - count_)) - 1u, 8 - count_);
}

void BitWriter::marker(std::uint8_t code) {
  flush();
  out_.push_back(0xFF);
  out_.push_back(code);
}

}  // namespace dctdet::codec

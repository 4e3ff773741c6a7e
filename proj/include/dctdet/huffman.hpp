#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dctdet/bitstream.hpp"

namespace dctdet::codec {

enum class HuffmanClass : std::uint8_t { kDc = 0, kAc = 1 };

struct HuffmanCode {
  std::uint16_t bits;
  std::uint8_t length;
  friend bool operator==(const HuffmanCode&, const HuffmanCode&) = default;
};

// Canonical JPEG Huffman table (DHT contents plus decode/encode structures).
class HuffmanTable {
 public:
  HuffmanTable() = default;

  // counts[i] is the number of codes of length i + 1. Throws
  // Error(kInput, "invalid code space") when the lengths over-subscribe the
  // code space or do not match the symbol count.
  static HuffmanTable build(std::span<const std::uint8_t, 16> counts,
                            std::span<const std::uint8_t> symbols);

  // Decodes one symbol. Throws if no code matches.
  std::uint8_t decode(BitReader& reader) const;

  std::optional<HuffmanCode> code_for(std::uint8_t symbol) const {
    if (!has_code_[symbol]) return std::nullopt;
    return codes_[symbol];
  }

  const std::array<std::uint8_t, 16>& counts() const noexcept { return counts_; }
  const std::vector<std::uint8_t>& symbols() const noexcept { return symbols_; }
  // Codes in symbol-list order.
  std::vector<HuffmanCode> codes_in_order() const;

  friend bool operator==(const HuffmanTable& a, const HuffmanTable& b) {
    return a.counts_ == b.counts_ && a.symbols_ == b.symbols_;
  }

 private:
  static constexpr int kLookupBits = 9;

  std::array<std::uint8_t, 16> counts_{};
  std::vector<std::uint8_t> symbols_;
  // Indexed by code length 1..16.
  std::array<std::int32_t, 17> min_code_{};
  std::array<std::int32_t, 18> max_code_{};  // -1 when no code of that length
  std::array<std::int32_t, 17> offset_{};
  // (length << 8) | symbol for codes of at most kLookupBits bits, 0 otherwise.
  std::array<std::uint16_t, 1 << kLookupBits> lookup_{};
  std::array<HuffmanCode, 256> codes_{};
  std::array<bool, 256> has_code_{};
};

// Annex K example tables (typical luminance/chrominance statistics).
HuffmanTable annex_k_dc_luma();
HuffmanTable annex_k_ac_luma();
HuffmanTable annex_k_dc_chroma();
HuffmanTable annex_k_ac_chroma();

}  // namespace dctdet::codec

#include "dctdet/huffman.hpp"

#include <string>

#include "dctdet/error.hpp"

namespace dctdet::codec {

HuffmanTable HuffmanTable::build(std::span<const std::uint8_t, 16> counts,
                                 std::span<const std::uint8_t> symbols) {
  HuffmanTable t;
  std::size_t total = 0;
  for (int i = 0; i < 16; ++i) {
    t.counts_[i] = counts[i];
    total += counts[i];
  }
  if (total > 256 || total != symbols.size()) {
    fail(ErrorKind::kInput, "invalid code space: " + std::to_string(total) +
                                " code lengths for " + std::to_string(symbols.size()) +
                                " symbols");
  }
  t.symbols_.assign(symbols.begin(), symbols.end());

  std::int32_t code = 0;
  std::int32_t k = 0;
  t.max_code_.fill(-1);
  for (int len = 1; len <= 16; ++len) {
    t.min_code_[len] = code;
    t.offset_[len] = k - code;
    for (int i = 0; i < counts[len - 1]; ++i) {
      const std::uint8_t sym = t.symbols_[k];
      if (t.has_code_[sym]) {
        fail(ErrorKind::kInput, "invalid code space: duplicate symbol " + std::to_string(sym));
      }
      t.has_code_[sym] = true;
      t.codes_[sym] = {static_cast<std::uint16_t>(code), static_cast<std::uint8_t>(len)};
      if (len <= kLookupBits) {
        const int shift = kLookupBits - len;
        const std::uint16_t entry = static_cast<std::uint16_t>((len << 8) | sym);
        for (int fillv = 0; fillv < (1 << shift); ++fillv) {
          t.lookup_[(code << shift) | fillv] = entry;
        }
      }
      ++code;
      ++k;
    }
    // Reaching 2^len means the last code is all 1-bits, which JPEG reserves.
    if (code >= (1 << len)) {
      fail(ErrorKind::kInput, "invalid code space: lengths over-subscribe " +
                                  std::to_string(len) + "-bit codes");
    }
    if (counts[len - 1] > 0) t.max_code_[len] = code - 1;
    code <<= 1;
  }
  return t;
}

std::uint8_t HuffmanTable::decode(BitReader& reader) const {
  const std::uint32_t bits = reader.peek(16);
  const std::uint16_t entry = lookup_[bits >> (16 - kLookupBits)];
  if (entry != 0) {
    reader.skip(entry >> 8);
    return static_cast<std::uint8_t>(entry & 0xFF);
  }
  for (int len = kLookupBits + 1; len <= 16; ++len) {
    const auto code = static_cast<std::int32_t>(bits >> (16 - len));
    if (code <= max_code_[len]) {
      reader.skip(len);
      return symbols_[offset_[len] + code];
    }
  }
  fail(ErrorKind::kInput, "invalid Huffman code");
}

std::vector<HuffmanCode> HuffmanTable::codes_in_order() const {
  std::vector<HuffmanCode> out;
  out.reserve(symbols_.size());
  for (std::uint8_t s : symbols_) out.push_back(codes_[s]);
  return out;
}

namespace {

HuffmanTable from_lists(std::initializer_list<std::uint8_t> counts,
                        std::initializer_list<std::uint8_t> symbols) {
  std::array<std::uint8_t, 16> c{};
  std::copy(counts.begin(), counts.end(), c.begin());
  const std::vector<std::uint8_t> s(symbols);
  return HuffmanTable::build(c, s);
}

}  // namespace

HuffmanTable annex_k_dc_luma() {
  static const HuffmanTable t = from_lists(
      {0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  return t;
}

HuffmanTable annex_k_dc_chroma() {
  static const HuffmanTable t = from_lists(
      {0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  return t;
}

HuffmanTable annex_k_ac_luma() {
  static const HuffmanTable t = from_lists(
      {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D},
      {0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51,
       0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1,
       0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18,
       0x19, 0x1A, 0x25, 0x26, 0x27, 0x28, 0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39,
       0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57,
       0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
       0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8A, 0x92,
       0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
       0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
       0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8,
       0xD9, 0xDA, 0xE1, 0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2,
       0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA});
  return t;
}

HuffmanTable annex_k_ac_chroma() {
  static const HuffmanTable t = from_lists(
      {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77},
      {0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07,
       0x61, 0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xA1, 0xB1, 0xC1, 0x09,
       0x23, 0x33, 0x52, 0xF0, 0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25,
       0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26, 0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38,
       0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56,
       0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74,
       0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
       0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
       0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA,
       0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6,
       0xD7, 0xD8, 0xD9, 0xDA, 0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF2,
       0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA});
  return t;
}

}  // namespace dctdet::codec

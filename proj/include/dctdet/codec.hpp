#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctdet/huffman.hpp"

// Baseline JPEG: marker parsing, entropy decoding to quantized coefficient
// planes, dequantization, the truncated ("partial") decode that stops before
// the inverse DCT, the full RGB decode and a baseline encoder.
namespace dctdet::codec {

// Quantization table as stored in DQT: zigzag order.
struct QuantTable {
  std::array<std::uint16_t, 64> zigzag{};
  // Entry for the coefficient at row-major position `natural`.
  std::uint16_t at_natural(int natural) const;
  static QuantTable from_natural(std::span<const std::uint16_t, 64> natural);
  friend bool operator==(const QuantTable&, const QuantTable&) = default;
};

struct FrameComponent {
  std::uint8_t id = 0;
  std::uint8_t h = 1;  // horizontal sampling factor
  std::uint8_t v = 1;  // vertical sampling factor
  std::uint8_t quant_table = 0;
};

struct FrameHeader {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t precision = 8;
  std::vector<FrameComponent> components;

  int max_h() const;
  int max_v() const;
};

struct ScanComponent {
  std::uint8_t id = 0;
  std::uint8_t dc_table = 0;
  std::uint8_t ac_table = 0;
};

struct ScanHeader {
  std::vector<ScanComponent> components;
  std::uint8_t spectral_start = 0;
  std::uint8_t spectral_end = 63;
  std::uint8_t approx_high = 0;
  std::uint8_t approx_low = 0;
};

struct MarkerRecord {
  std::uint8_t code = 0;      // second marker byte, e.g. 0xC0 for SOF0
  std::size_t offset = 0;     // offset of the 0xFF byte
  std::size_t length = 0;     // segment length field (0 for standalone markers)
};

// Parsed view of a baseline file. `entropy_data` borrows from the input
// buffer passed to parse_markers, which must outlive the structure.
struct JpegStructure {
  std::array<std::optional<QuantTable>, 4> quant_tables;
  std::array<std::optional<HuffmanTable>, 4> dc_tables;
  std::array<std::optional<HuffmanTable>, 4> ac_tables;
  FrameHeader frame;
  ScanHeader scan;
  std::uint16_t restart_interval = 0;
  std::span<const std::uint8_t> entropy_data;
  std::size_t entropy_offset = 0;
  std::vector<MarkerRecord> markers;
  // APPn and COM payloads, preserved as opaque ranges of the input.
  std::vector<MarkerRecord> opaque_segments;
};

// Block-grid dimensions of one component.
struct BlockGrid {
  int blocks_wide = 0;
  int blocks_high = 0;
  friend bool operator==(const BlockGrid&, const BlockGrid&) = default;
};

// ceil(ceil(W * h / h_max) / 8), and likewise for the height.
BlockGrid component_grid(const FrameHeader& frame, std::size_t component_index);

struct QuantizedPlane {
  std::uint8_t component_id = 0;
  int blocks_wide = 0;
  int blocks_high = 0;
  // blocks_wide * blocks_high blocks of 64, block-row-major, natural order.
  std::vector<std::int16_t> coeffs;

  std::span<std::int16_t, 64> block(int bx, int by) {
    return std::span<std::int16_t, 64>(coeffs.data() + block_offset(bx, by), 64);
  }
  std::span<const std::int16_t, 64> block(int bx, int by) const {
    return std::span<const std::int16_t, 64>(coeffs.data() + block_offset(bx, by), 64);
  }
  std::size_t block_offset(int bx, int by) const {
    return (static_cast<std::size_t>(by) * blocks_wide + bx) * 64;
  }
  friend bool operator==(const QuantizedPlane&, const QuantizedPlane&) = default;
};

// Dequantized coefficients; same geometry and ordering as QuantizedPlane.
// Block (bx, by) covers pixels [8bx, 8bx+8) x [8by, 8by+8) of the padded
// component.
struct DctPlane {
  std::uint8_t component_id = 0;
  int blocks_wide = 0;
  int blocks_high = 0;
  std::vector<float> coeffs;

  std::span<const float, 64> block(int bx, int by) const {
    return std::span<const float, 64>(
        coeffs.data() + (static_cast<std::size_t>(by) * blocks_wide + bx) * 64, 64);
  }
  friend bool operator==(const DctPlane&, const DctPlane&) = default;
};

JpegStructure parse_markers(std::span<const std::uint8_t> bytes);

// One plane per frame component, in frame order.
std::vector<QuantizedPlane> decode_scan(const JpegStructure& structure);

DctPlane dequantize_plane(const QuantizedPlane& plane, const QuantTable& table);

struct PartialDecode {
  FrameHeader frame;
  DctPlane y;
  std::optional<DctPlane> cb;
  std::optional<DctPlane> cr;
};

// parse -> entropy decode -> dequantize. No IDCT, upsampling or colour.
PartialDecode partial_decode(std::span<const std::uint8_t> bytes);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major
};

RgbImage full_decode(std::span<const std::uint8_t> bytes);

enum class Sampling { kGray, k444, k420 };

struct EncodeParams {
  int width = 0;
  int height = 0;
  Sampling sampling = Sampling::k420;
  QuantTable luma_quant;
  QuantTable chroma_quant;
  std::uint16_t restart_interval = 0;

  // Annex K tables at the given sampling and size.
  static EncodeParams defaults(int width, int height, Sampling sampling);
};

// Emits SOI, DQT, SOF0, DHT, [DRI], SOS, entropy data, EOI using the Annex K
// Huffman tables. Planes must be in component order (Y[, Cb, Cr]) with the
// grid given by component_grid. Throws when a DC difference needs more than
// 11 bits or an AC value more than 10.
std::vector<std::uint8_t> encode_baseline(std::span<const QuantizedPlane> planes,
                                          const EncodeParams& params);

// Annex K example quantization tables, natural order.
extern const std::array<std::uint16_t, 64> kAnnexKLumaQuant;
extern const std::array<std::uint16_t, 64> kAnnexKChromaQuant;

std::string marker_name(std::uint8_t code);

}  // namespace dctdet::codec

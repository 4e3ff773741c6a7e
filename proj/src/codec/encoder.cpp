#include <bit>
#include <cstdlib>

#include "dctdet/codec.hpp"
#include "dctdet/error.hpp"
#include "dctdet/transform.hpp"

namespace dctdet::codec {

const std::array<std::uint16_t, 64> kAnnexKLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

const std::array<std::uint16_t, 64> kAnnexKChromaQuant = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

EncodeParams EncodeParams::defaults(int width, int height, Sampling sampling) {
  EncodeParams p;
  p.width = width;
  p.height = height;
  p.sampling = sampling;
  p.luma_quant = QuantTable::from_natural(kAnnexKLumaQuant);
  p.chroma_quant = QuantTable::from_natural(kAnnexKChromaQuant);
  return p;
}

namespace {

int category(int v) { return std::bit_width(static_cast<unsigned>(std::abs(v))); }

std::uint32_t magnitude_bits(int v, int size) {
  return static_cast<std::uint32_t>(v >= 0 ? v : v + (1 << size) - 1);
}

void put_code(BitWriter& w, const HuffmanTable& table, std::uint8_t symbol) {
  const auto code = table.code_for(symbol);
  if (!code) fail(ErrorKind::kUsage, "symbol has no Huffman code");
  w.put(code->bits, code->length);
}

void encode_block(BitWriter& w, std::span<const std::int16_t, 64> block, int& prediction,
                  const HuffmanTable& dc, const HuffmanTable& ac) {
  const int diff = block[0] - prediction;
  prediction = block[0];
  const int dc_size = category(diff);
  if (dc_size > 11) fail(ErrorKind::kInput, "coefficient magnitude exceeds DC category 11");
  put_code(w, dc, static_cast<std::uint8_t>(dc_size));
  w.put(magnitude_bits(diff, dc_size), dc_size);

  int run = 0;
  for (int k = 1; k < 64; ++k) {
    const int v = block[transform::kZigzagToNatural[k]];
    if (v == 0) {
      ++run;
      continue;
    }
    for (; run > 15; run -= 16) put_code(w, ac, 0xF0);
    const int size = category(v);
    if (size > 10) fail(ErrorKind::kInput, "coefficient magnitude exceeds AC category 10");
    put_code(w, ac, static_cast<std::uint8_t>((run << 4) | size));
    w.put(magnitude_bits(v, size), size);
    run = 0;
  }
  if (run > 0) put_code(w, ac, 0x00);
}

void put16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_marker(std::vector<std::uint8_t>& out, std::uint8_t code) {
  out.push_back(0xFF);
  out.push_back(code);
}

void put_dqt(std::vector<std::uint8_t>& out, int id, const QuantTable& t) {
  bool wide = false;
  for (auto v : t.zigzag) {
    if (v == 0) fail(ErrorKind::kUsage, "quantization table entry is zero");
    wide = wide || v > 255;
  }
  put_marker(out, 0xDB);
  put16(out, 2 + 1 + 64 * (wide ? 2 : 1));
  out.push_back(static_cast<std::uint8_t>((wide ? 0x10 : 0x00) | id));
  for (auto v : t.zigzag) {
    if (wide) {
      put16(out, v);
    } else {
      out.push_back(static_cast<std::uint8_t>(v));
    }
  }
}

void put_dht(std::vector<std::uint8_t>& out, int cls, int id, const HuffmanTable& t) {
  put_marker(out, 0xC4);
  put16(out, 2 + 1 + 16 + static_cast<int>(t.symbols().size()));
  out.push_back(static_cast<std::uint8_t>((cls << 4) | id));
  out.insert(out.end(), t.counts().begin(), t.counts().end());
  out.insert(out.end(), t.symbols().begin(), t.symbols().end());
}

}  // namespace

std::vector<std::uint8_t> encode_baseline(std::span<const QuantizedPlane> planes,
                                          const EncodeParams& params) {
  if (params.width < 1 || params.height < 1 || params.width > 65535 || params.height > 65535) {
    fail(ErrorKind::kUsage, "image dimensions out of range");
  }
  FrameHeader frame;
  frame.width = static_cast<std::uint16_t>(params.width);
  frame.height = static_cast<std::uint16_t>(params.height);
  const std::uint8_t luma_factor = params.sampling == Sampling::k420 ? 2 : 1;
  frame.components.push_back({1, luma_factor, luma_factor, 0});
  if (params.sampling != Sampling::kGray) {
    frame.components.push_back({2, 1, 1, 1});
    frame.components.push_back({3, 1, 1, 1});
  }
  const std::size_t n = frame.components.size();
  if (planes.size() != n) fail(ErrorKind::kUsage, "plane count does not match sampling layout");
  for (std::size_t i = 0; i < n; ++i) {
    const BlockGrid g = component_grid(frame, i);
    if (planes[i].blocks_wide != g.blocks_wide || planes[i].blocks_high != g.blocks_high ||
        planes[i].coeffs.size() != static_cast<std::size_t>(g.blocks_wide) * g.blocks_high * 64) {
      fail(ErrorKind::kUsage, "plane " + std::to_string(i) + " does not match the block grid");
    }
  }

  const HuffmanTable dc_luma = annex_k_dc_luma();
  const HuffmanTable ac_luma = annex_k_ac_luma();
  const HuffmanTable dc_chroma = annex_k_dc_chroma();
  const HuffmanTable ac_chroma = annex_k_ac_chroma();

  std::vector<std::uint8_t> out;
  put_marker(out, 0xD8);
  put_dqt(out, 0, params.luma_quant);
  if (n == 3) put_dqt(out, 1, params.chroma_quant);

  put_marker(out, 0xC0);
  put16(out, 8 + 3 * static_cast<int>(n));
  out.push_back(8);
  put16(out, frame.height);
  put16(out, frame.width);
  out.push_back(static_cast<std::uint8_t>(n));
  for (const auto& c : frame.components) {
    out.push_back(c.id);
    out.push_back(static_cast<std::uint8_t>((c.h << 4) | c.v));
    out.push_back(c.quant_table);
  }

  put_dht(out, 0, 0, dc_luma);
  put_dht(out, 1, 0, ac_luma);
  if (n == 3) {
    put_dht(out, 0, 1, dc_chroma);
    put_dht(out, 1, 1, ac_chroma);
  }
  if (params.restart_interval > 0) {
    put_marker(out, 0xDD);
    put16(out, 4);
    put16(out, params.restart_interval);
  }

  put_marker(out, 0xDA);
  put16(out, 6 + 2 * static_cast<int>(n));
  out.push_back(static_cast<std::uint8_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(frame.components[i].id);
    out.push_back(i == 0 ? 0x00 : 0x11);
  }
  out.push_back(0);
  out.push_back(63);
  out.push_back(0);

  int mcus_x = 0;
  int mcus_y = 0;
  if (n == 1) {
    mcus_x = planes[0].blocks_wide;
    mcus_y = planes[0].blocks_high;
  } else {
    mcus_x = (frame.width + 8 * frame.max_h() - 1) / (8 * frame.max_h());
    mcus_y = (frame.height + 8 * frame.max_v() - 1) / (8 * frame.max_v());
  }

  BitWriter w;
  std::vector<int> predictions(n, 0);
  std::array<std::int16_t, 64> pad{};
  const long total = static_cast<long>(mcus_x) * mcus_y;
  const int interval = params.restart_interval;
  for (long m = 0; m < total; ++m) {
    if (interval > 0 && m > 0 && m % interval == 0) {
      w.marker(static_cast<std::uint8_t>(0xD0 + (m / interval - 1) % 8));
      std::fill(predictions.begin(), predictions.end(), 0);
    }
    const int mx = static_cast<int>(m % mcus_x);
    const int my = static_cast<int>(m / mcus_x);
    for (std::size_t i = 0; i < n; ++i) {
      const int h = n == 1 ? 1 : frame.components[i].h;
      const int v = n == 1 ? 1 : frame.components[i].v;
      const auto& dc = i == 0 ? dc_luma : dc_chroma;
      const auto& ac = i == 0 ? ac_luma : ac_chroma;
      for (int by = 0; by < v; ++by) {
        for (int bx = 0; bx < h; ++bx) {
          const int gx = mx * h + bx;
          const int gy = my * v + by;
          if (gx < planes[i].blocks_wide && gy < planes[i].blocks_high) {
            encode_block(w, planes[i].block(gx, gy), predictions[i], dc, ac);
          } else {
            // Beyond the component grid: repeat the DC, no AC energy.
            pad[0] = static_cast<std::int16_t>(predictions[i]);
            encode_block(w, pad, predictions[i], dc, ac);
          }
        }
      }
    }
  }
  w.flush();
  const auto& data = w.bytes();
  out.insert(out.end(), data.begin(), data.end());
  put_marker(out, 0xD9);
  return out;
}

}  // namespace dctdet::codec

#include <algorithm>
#include <cstring>

#include "dctdet/codec.hpp"
#include "dctdet/error.hpp"
#include "dctdet/transform.hpp"

namespace dctdet::codec {
namespace {

int extend(std::uint32_t bits, int size) {
  const int v = static_cast<int>(bits);
  return v < (1 << (size - 1)) ? v - (1 << size) + 1 : v;
}

struct ComponentState {
  const HuffmanTable* dc = nullptr;
  const HuffmanTable* ac = nullptr;
  int h = 1;
  int v = 1;
  std::int32_t prediction = 0;
  QuantizedPlane plane;
};

void decode_block(BitReader& reader, ComponentState& c, std::int16_t* out) {
  std::memset(out, 0, 64 * sizeof(std::int16_t));
  const int dc_size = c.dc->decode(reader);
  if (dc_size > 11) fail(ErrorKind::kInput, "invalid DC magnitude category");
  if (dc_size > 0) c.prediction += extend(reader.read(dc_size), dc_size);
  if (c.prediction < -32768 || c.prediction > 32767) {
    fail(ErrorKind::kInput, "DC prediction out of range");
  }
  out[0] = static_cast<std::int16_t>(c.prediction);
  for (int k = 1; k < 64;) {
    const int rs = c.ac->decode(reader);
    const int run = rs >> 4;
    const int size = rs & 0x0F;
    if (size == 0) {
      if (run == 0) break;  // EOB
      if (run != 15) fail(ErrorKind::kInput, "invalid run/size symbol");
      k += 16;  // ZRL
      continue;
    }
    if (size > 10) fail(ErrorKind::kInput, "invalid run/size symbol");
    k += run;
    if (k > 63) fail(ErrorKind::kInput, "invalid run/size symbol: run past end of block");
    out[transform::kZigzagToNatural[k]] = static_cast<std::int16_t>(extend(reader.read(size), size));
    ++k;
  }
}

}  // namespace

std::vector<QuantizedPlane> decode_scan(const JpegStructure& structure) {
  const FrameHeader& frame = structure.frame;
  const std::size_t n = frame.components.size();
  std::vector<ComponentState> comps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& fc = frame.components[i];
    const auto& sc = structure.scan.components.at(i);
    if (!structure.dc_tables[sc.dc_table] || !structure.ac_tables[sc.ac_table]) {
      fail(ErrorKind::kInput, "undefined table referenced by scan");
    }
    auto& c = comps[i];
    c.dc = &*structure.dc_tables[sc.dc_table];
    c.ac = &*structure.ac_tables[sc.ac_table];
    c.h = n == 1 ? 1 : fc.h;
    c.v = n == 1 ? 1 : fc.v;
    const BlockGrid grid = component_grid(frame, i);
    c.plane.component_id = fc.id;
    c.plane.blocks_wide = grid.blocks_wide;
    c.plane.blocks_high = grid.blocks_high;
    c.plane.coeffs.assign(static_cast<std::size_t>(grid.blocks_wide) * grid.blocks_high * 64, 0);
  }

  int mcus_x = 0;
  int mcus_y = 0;
  if (n == 1) {
    // Non-interleaved: one block per MCU over the component's own grid.
    mcus_x = comps[0].plane.blocks_wide;
    mcus_y = comps[0].plane.blocks_high;
  } else {
    mcus_x = (frame.width + 8 * frame.max_h() - 1) / (8 * frame.max_h());
    mcus_y = (frame.height + 8 * frame.max_v() - 1) / (8 * frame.max_v());
  }

  BitReader reader(structure.entropy_data);
  const int interval = structure.restart_interval;
  const long total = static_cast<long>(mcus_x) * mcus_y;
  std::int16_t scratch[64];
  for (long m = 0; m < total; ++m) {
    if (interval > 0 && m > 0 && m % interval == 0) {
      const int expected = static_cast<int>((m / interval - 1) % 8);
      if (!reader.consume_restart(expected)) {
        fail(ErrorKind::kInput, "restart marker at wrong MCU index: expected RST" +
                                    std::to_string(expected) + " before MCU " +
                                    std::to_string(m));
      }
      for (auto& c : comps) c.prediction = 0;
    }
    const int mx = static_cast<int>(m % mcus_x);
    const int my = static_cast<int>(m / mcus_x);
    for (auto& c : comps) {
      for (int by = 0; by < c.v; ++by) {
        for (int bx = 0; bx < c.h; ++bx) {
          const int gx = mx * c.h + bx;
          const int gy = my * c.v + by;
          const bool inside = gx < c.plane.blocks_wide && gy < c.plane.blocks_high;
          std::int16_t* dst = inside ? c.plane.block(gx, gy).data() : scratch;
          decode_block(reader, c, dst);
        }
      }
    }
  }

  std::vector<QuantizedPlane> planes;
  planes.reserve(n);
  for (auto& c : comps) planes.push_back(std::move(c.plane));
  return planes;
}

DctPlane dequantize_plane(const QuantizedPlane& plane, const QuantTable& table) {
  std::array<float, 64> steps{};
  for (int k = 0; k < 64; ++k) steps[transform::kZigzagToNatural[k]] = table.zigzag[k];
  DctPlane out;
  out.component_id = plane.component_id;
  out.blocks_wide = plane.blocks_wide;
  out.blocks_high = plane.blocks_high;
  out.coeffs.resize(plane.coeffs.size());
  for (std::size_t i = 0; i < plane.coeffs.size(); ++i) {
    out.coeffs[i] = static_cast<float>(plane.coeffs[i]) * steps[i & 63];
  }
  return out;
}

PartialDecode partial_decode(std::span<const std::uint8_t> bytes) {
  const JpegStructure s = parse_markers(bytes);
  auto planes = decode_scan(s);
  PartialDecode out;
  out.frame = s.frame;
  std::vector<DctPlane> dct;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    dct.push_back(dequantize_plane(planes[i], *s.quant_tables[s.frame.components[i].quant_table]));
  }
  out.y = std::move(dct[0]);
  if (dct.size() == 3) {
    out.cb = std::move(dct[1]);
    out.cr = std::move(dct[2]);
  }
  return out;
}

namespace {

// Inverse DCT of every block, level shift and clamp, into a padded sample grid.
std::vector<std::uint8_t> reconstruct_samples(const DctPlane& plane) {
  const int stride = plane.blocks_wide * 8;
  std::vector<std::uint8_t> samples(static_cast<std::size_t>(stride) * plane.blocks_high * 8);
  transform::Block8x8 coeffs;
  for (int by = 0; by < plane.blocks_high; ++by) {
    for (int bx = 0; bx < plane.blocks_wide; ++bx) {
      const auto block = plane.block(bx, by);
      std::copy(block.begin(), block.end(), coeffs.begin());
      const auto spatial = transform::idct8x8(coeffs);
      for (int y = 0; y < 8; ++y) {
        std::uint8_t* row = samples.data() + static_cast<std::size_t>(by * 8 + y) * stride + bx * 8;
        for (int x = 0; x < 8; ++x) row[x] = transform::to_sample(spatial[y * 8 + x] + 128.0);
      }
    }
  }
  return samples;
}

}  // namespace

RgbImage full_decode(std::span<const std::uint8_t> bytes) {
  const PartialDecode p = partial_decode(bytes);
  RgbImage img;
  img.width = p.frame.width;
  img.height = p.frame.height;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);

  const auto y_samples = reconstruct_samples(p.y);
  const int y_stride = p.y.blocks_wide * 8;
  if (!p.cb) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const std::uint8_t v = y_samples[static_cast<std::size_t>(y) * y_stride + x];
        std::uint8_t* px = img.pixels.data() + (static_cast<std::size_t>(y) * img.width + x) * 3;
        px[0] = px[1] = px[2] = v;
      }
    }
    return img;
  }

  const auto cb_samples = reconstruct_samples(*p.cb);
  const auto cr_samples = reconstruct_samples(*p.cr);
  const int c_stride = p.cb->blocks_wide * 8;
  // Chroma factors are 1; the luma factor is the replication ratio.
  const int rx = p.frame.components[0].h;
  const int ry = p.frame.components[0].v;
  for (int y = 0; y < img.height; ++y) {
    const std::size_t yrow = static_cast<std::size_t>(y) * y_stride;
    const std::size_t crow = static_cast<std::size_t>(y / ry) * c_stride;
    for (int x = 0; x < img.width; ++x) {
      const auto rgb = transform::ycbcr_to_rgb(y_samples[yrow + x], cb_samples[crow + x / rx],
                                               cr_samples[crow + x / rx]);
      std::uint8_t* px = img.pixels.data() + (static_cast<std::size_t>(y) * img.width + x) * 3;
      px[0] = rgb.r;
      px[1] = rgb.g;
      px[2] = rgb.b;
    }
  }
  return img;
}

}  // namespace dctdet::codec

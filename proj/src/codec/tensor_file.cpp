#include "dctdet/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "dctdet/error.hpp"

namespace dctdet::codec {
namespace {

constexpr char kMagic[4] = {'D', 'C', 'T', 'T'};
constexpr std::uint8_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_f32(std::ostream& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  const char b[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                     static_cast<char>((bits >> 16) & 0xFF), static_cast<char>(bits >> 24)};
  out.write(b, 4);
}

void read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) fail(ErrorKind::kInput, "truncated tensor file");
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  read_exact(in, b, 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

void write_tensor_file(std::ostream& out, std::span<const DctPlane> planes) {
  if (planes.size() > 255) fail(ErrorKind::kUsage, "too many components for tensor file");
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  out.put(static_cast<char>(planes.size()));
  for (const auto& p : planes) {
    if (p.blocks_wide > 65535 || p.blocks_high > 65535) {
      fail(ErrorKind::kUsage, "plane too large for tensor file");
    }
    out.put(static_cast<char>(p.component_id));
    put_u16(out, static_cast<std::uint16_t>(p.blocks_wide));
    put_u16(out, static_cast<std::uint16_t>(p.blocks_high));
    for (float v : p.coeffs) put_f32(out, v);
  }
}

std::vector<DctPlane> read_tensor_file(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) fail(ErrorKind::kInput, "not a DCTT tensor file");
  unsigned char header[2];
  read_exact(in, header, 2);
  if (header[0] != kVersion) {
    fail(ErrorKind::kUnsupported, "unsupported tensor file version " + std::to_string(header[0]));
  }
  std::vector<DctPlane> planes(header[1]);
  for (auto& p : planes) {
    unsigned char id;
    read_exact(in, &id, 1);
    p.component_id = id;
    p.blocks_wide = get_u16(in);
    p.blocks_high = get_u16(in);
    const std::size_t count = static_cast<std::size_t>(p.blocks_wide) * p.blocks_high * 64;
    std::vector<unsigned char> raw(count * 4);
    read_exact(in, raw.data(), raw.size());
    p.coeffs.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t bits = raw[4 * i] | (raw[4 * i + 1] << 8) | (raw[4 * i + 2] << 16) |
                                 (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
      p.coeffs[i] = std::bit_cast<float>(bits);
    }
  }
  return planes;
}

void write_ppm(std::ostream& out, const RgbImage& image) {
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace dctdet::codec

#include <algorithm>
#include <sstream>

#include "dctdet/codec.hpp"
#include "dctdet/error.hpp"
#include "dctdet/transform.hpp"

namespace dctdet::codec {
namespace {

std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

std::string hex(std::size_t v) {
  std::ostringstream s;
  s << "0x" << std::hex << v;
  return s.str();
}

[[noreturn]] void input_error(const std::string& what, std::size_t offset) {
  fail(ErrorKind::kInput, what + " at offset " + hex(offset));
}

[[noreturn]] void unsupported_frame(std::uint8_t code) {
  std::string what;
  switch (code) {
    case 0xC1: what = "extended sequential"; break;
    case 0xC2: what = "progressive"; break;
    case 0xC3: what = "lossless"; break;
    case 0xC5: case 0xC6: case 0xC7: what = "hierarchical"; break;
    default: what = "arithmetic coding"; break;
  }
  fail(ErrorKind::kUnsupported, "unsupported: " + what + " (" + marker_name(code) + ")");
}

class SegmentParser {
 public:
  explicit SegmentParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  JpegStructure run();

 private:
  std::span<const std::uint8_t> segment(std::size_t marker_offset);
  void parse_dqt(std::span<const std::uint8_t> body, std::size_t offset);
  void parse_dht(std::span<const std::uint8_t> body, std::size_t offset);
  void parse_sof(std::span<const std::uint8_t> body, std::size_t offset);
  void parse_sos(std::span<const std::uint8_t> body, std::size_t offset);
  std::size_t scan_entropy_end(std::size_t start) const;
  void check_trailer(std::size_t from);
  void validate_tables() const;

  std::span<const std::uint8_t> bytes_;
  JpegStructure out_;
  bool have_frame_ = false;
};

std::span<const std::uint8_t> SegmentParser::segment(std::size_t marker_offset) {
  if (marker_offset + 4 > bytes_.size()) input_error("truncated segment", marker_offset);
  const std::size_t length = be16(bytes_, marker_offset + 2);
  if (length < 2 || marker_offset + 2 + length > bytes_.size()) {
    input_error("truncated segment", marker_offset);
  }
  out_.markers.push_back({bytes_[marker_offset + 1], marker_offset, length});
  return bytes_.subspan(marker_offset + 4, length - 2);
}

void SegmentParser::parse_dqt(std::span<const std::uint8_t> body, std::size_t offset) {
  std::size_t at = 0;
  while (at < body.size()) {
    const int precision = body[at] >> 4;
    const int id = body[at] & 0x0F;
    if (id > 3 || precision > 1) input_error("invalid DQT table header", offset);
    const std::size_t entry = precision == 0 ? 1 : 2;
    if (at + 1 + 64 * entry > body.size()) input_error("truncated segment", offset);
    QuantTable table;
    for (int k = 0; k < 64; ++k) {
      const std::size_t p = at + 1 + k * entry;
      table.zigzag[k] = precision == 0 ? body[p] : be16(body, p);
      if (table.zigzag[k] == 0) input_error("quantization table entry is zero", offset);
    }
    if (out_.quant_tables[id] && *out_.quant_tables[id] != table) {
      input_error("duplicate incompatible table id " + std::to_string(id), offset);
    }
    out_.quant_tables[id] = table;
    at += 1 + 64 * entry;
  }
}

void SegmentParser::parse_dht(std::span<const std::uint8_t> body, std::size_t offset) {
  std::size_t at = 0;
  while (at < body.size()) {
    if (at + 17 > body.size()) input_error("truncated segment", offset);
    const int cls = body[at] >> 4;
    const int id = body[at] & 0x0F;
    if (cls > 1 || id > 3) input_error("invalid DHT table header", offset);
    std::array<std::uint8_t, 16> counts{};
    std::size_t total = 0;
    for (int i = 0; i < 16; ++i) {
      counts[i] = body[at + 1 + i];
      total += counts[i];
    }
    if (at + 17 + total > body.size()) input_error("truncated segment", offset);
    auto table = HuffmanTable::build(counts, body.subspan(at + 17, total));
    auto& slot = cls == 0 ? out_.dc_tables[id] : out_.ac_tables[id];
    if (slot && !(*slot == table)) {
      input_error("duplicate incompatible table id " + std::to_string(id), offset);
    }
    slot = std::move(table);
    at += 17 + total;
  }
}

void SegmentParser::parse_sof(std::span<const std::uint8_t> body, std::size_t offset) {
  if (have_frame_) input_error("duplicate frame header", offset);
  if (body.size() < 6) input_error("truncated segment", offset);
  FrameHeader& f = out_.frame;
  f.precision = body[0];
  f.height = be16(body, 1);
  f.width = be16(body, 3);
  const int count = body[5];
  if (f.precision == 12) fail(ErrorKind::kUnsupported, "unsupported: 12-bit precision");
  if (f.precision != 8) input_error("invalid sample precision " + std::to_string(f.precision), offset);
  if (f.height == 0) fail(ErrorKind::kUnsupported, "unsupported: DNL-defined height");
  if (f.width == 0) input_error("zero image width", offset);
  if (count != 1 && count != 3) {
    fail(ErrorKind::kUnsupported,
         "unsupported: " + std::to_string(count) + " components (1 or 3 supported)");
  }
  if (body.size() < 6 + 3 * static_cast<std::size_t>(count)) input_error("truncated segment", offset);
  for (int i = 0; i < count; ++i) {
    FrameComponent c;
    c.id = body[6 + 3 * i];
    c.h = body[7 + 3 * i] >> 4;
    c.v = body[7 + 3 * i] & 0x0F;
    c.quant_table = body[8 + 3 * i];
    if (c.quant_table > 3) input_error("invalid quantization table id", offset);
    for (const auto& prev : f.components) {
      if (prev.id == c.id) input_error("duplicate component id", offset);
    }
    f.components.push_back(c);
  }
  for (const auto& c : f.components) {
    if (c.h < 1 || c.h > 2 || c.v < 1 || c.v > 2) {
      fail(ErrorKind::kUnsupported, "unsupported sampling: factors must be 1 or 2");
    }
  }
  if (count == 3) {
    const auto& y = f.components[0];
    const auto& cb = f.components[1];
    const auto& cr = f.components[2];
    const bool chroma_unit = cb.h == 1 && cb.v == 1 && cr.h == 1 && cr.v == 1;
    const bool is444 = chroma_unit && y.h == 1 && y.v == 1;
    const bool is420 = chroma_unit && y.h == 2 && y.v == 2;
    if (!is444 && !is420) {
      std::ostringstream layout;
      layout << int(y.h) << "x" << int(y.v) << "," << int(cb.h) << "x" << int(cb.v) << ","
             << int(cr.h) << "x" << int(cr.v);
      fail(ErrorKind::kUnsupported,
           "unsupported sampling " + layout.str() + " (only 4:4:4 and 4:2:0)");
    }
  }
  have_frame_ = true;
}

void SegmentParser::parse_sos(std::span<const std::uint8_t> body, std::size_t offset) {
  if (body.empty()) input_error("truncated segment", offset);
  const std::size_t count = body[0];
  if (body.size() < 1 + 2 * count + 3) input_error("truncated segment", offset);
  ScanHeader& s = out_.scan;
  for (std::size_t i = 0; i < count; ++i) {
    ScanComponent c;
    c.id = body[1 + 2 * i];
    c.dc_table = body[2 + 2 * i] >> 4;
    c.ac_table = body[2 + 2 * i] & 0x0F;
    if (c.dc_table > 3 || c.ac_table > 3) input_error("invalid Huffman table id", offset);
    s.components.push_back(c);
  }
  s.spectral_start = body[1 + 2 * count];
  s.spectral_end = body[2 + 2 * count];
  s.approx_high = body[3 + 2 * count] >> 4;
  s.approx_low = body[3 + 2 * count] & 0x0F;
  if (s.spectral_start != 0 || s.spectral_end != 63 || s.approx_high != 0 || s.approx_low != 0) {
    input_error("invalid baseline scan parameters", offset);
  }
  const auto& comps = out_.frame.components;
  if (count != comps.size()) {
    fail(ErrorKind::kUnsupported, "unsupported: multi-scan (scan covers " +
                                      std::to_string(count) + " of " +
                                      std::to_string(comps.size()) + " components)");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (s.components[i].id != comps[i].id) input_error("scan component order mismatch", offset);
  }
}

void SegmentParser::validate_tables() const {
  for (const auto& c : out_.frame.components) {
    if (!out_.quant_tables[c.quant_table]) {
      fail(ErrorKind::kInput, "undefined table: quantization table " + std::to_string(c.quant_table));
    }
  }
  for (const auto& c : out_.scan.components) {
    if (!out_.dc_tables[c.dc_table]) {
      fail(ErrorKind::kInput, "undefined table: DC Huffman table " + std::to_string(c.dc_table));
    }
    if (!out_.ac_tables[c.ac_table]) {
      fail(ErrorKind::kInput, "undefined table: AC Huffman table " + std::to_string(c.ac_table));
    }
  }
}

// First marker after the entropy-coded segment (stuffing and RSTn belong to it).
std::size_t SegmentParser::scan_entropy_end(std::size_t start) const {
  std::size_t p = start;
  while (p + 1 < bytes_.size()) {
    if (bytes_[p] == 0xFF) {
      const std::uint8_t next = bytes_[p + 1];
      if (next == 0x00 || (next >= 0xD0 && next <= 0xD7)) {
        p += 2;
        continue;
      }
      if (next != 0xFF) return p;
    }
    ++p;
  }
  return bytes_.size();
}

void SegmentParser::check_trailer(std::size_t from) {
  std::size_t p = from;
  while (p + 1 < bytes_.size()) {
    if (bytes_[p] != 0xFF || bytes_[p + 1] == 0xFF) {
      ++p;
      continue;
    }
    const std::uint8_t code = bytes_[p + 1];
    if (code == 0xD9) {
      out_.markers.push_back({code, p, 0});
      return;
    }
    if (code == 0xDA) fail(ErrorKind::kUnsupported, "unsupported: multi-scan (second SOS)");
    if (p + 4 > bytes_.size()) return;
    const std::size_t length = be16(bytes_, p + 2);
    out_.markers.push_back({code, p, length});
    p += 2 + length;
  }
}

JpegStructure SegmentParser::run() {
  if (bytes_.size() < 2 || bytes_[0] != 0xFF || bytes_[1] != 0xD8) {
    fail(ErrorKind::kInput, "missing SOI marker");
  }
  out_.markers.push_back({0xD8, 0, 0});
  std::size_t p = 2;
  while (true) {
    while (p < bytes_.size() && bytes_[p] != 0xFF) ++p;  // tolerate garbage
    while (p + 1 < bytes_.size() && bytes_[p + 1] == 0xFF) ++p;  // fill bytes
    if (p + 1 >= bytes_.size()) {
      fail(ErrorKind::kInput, have_frame_ ? "missing scan header" : "missing frame header");
    }
    const std::uint8_t code = bytes_[p + 1];
    if (code == 0xD9) {
      fail(ErrorKind::kInput, have_frame_ ? "missing scan header" : "missing frame header");
    }
    if (code == 0xD8 || code == 0x01 || (code >= 0xD0 && code <= 0xD7)) {
      out_.markers.push_back({code, p, 0});
      p += 2;
      continue;
    }
    const auto body = segment(p);
    const std::size_t next = p + 2 + body.size() + 2;
    switch (code) {
      case 0xC0: parse_sof(body, p); break;
      case 0xC4: parse_dht(body, p); break;
      case 0xDB: parse_dqt(body, p); break;
      case 0xDD:
        if (body.size() < 2) input_error("truncated segment", p);
        out_.restart_interval = be16(body, 0);
        break;
      case 0xDA: {
        if (!have_frame_) fail(ErrorKind::kInput, "missing frame header");
        parse_sos(body, p);
        validate_tables();
        out_.entropy_offset = next;
        const std::size_t end = scan_entropy_end(next);
        out_.entropy_data = bytes_.subspan(next, end - next);
        check_trailer(end);
        return std::move(out_);
      }
      case 0xCC: unsupported_frame(code);
      default:
        if (code >= 0xC1 && code <= 0xCF && code != 0xC4 && code != 0xC8) unsupported_frame(code);
        if ((code >= 0xE0 && code <= 0xEF) || code == 0xFE) {
          out_.opaque_segments.push_back(out_.markers.back());
        }
        break;
    }
    p = next;
  }
}

}  // namespace

std::uint16_t QuantTable::at_natural(int natural) const {
  for (int k = 0; k < 64; ++k) {
    if (transform::kZigzagToNatural[k] == natural) return zigzag[k];
  }
  return 0;
}

QuantTable QuantTable::from_natural(std::span<const std::uint16_t, 64> natural) {
  QuantTable t;
  for (int k = 0; k < 64; ++k) t.zigzag[k] = natural[transform::kZigzagToNatural[k]];
  return t;
}

int FrameHeader::max_h() const {
  int m = 1;
  for (const auto& c : components) m = std::max<int>(m, c.h);
  return m;
}

int FrameHeader::max_v() const {
  int m = 1;
  for (const auto& c : components) m = std::max<int>(m, c.v);
  return m;
}

BlockGrid component_grid(const FrameHeader& frame, std::size_t component_index) {
  const auto& c = frame.components.at(component_index);
  const int hmax = frame.max_h();
  const int vmax = frame.max_v();
  const int cw = (frame.width * c.h + hmax - 1) / hmax;
  const int ch = (frame.height * c.v + vmax - 1) / vmax;
  return {(cw + 7) / 8, (ch + 7) / 8};
}

JpegStructure parse_markers(std::span<const std::uint8_t> bytes) {
  return SegmentParser(bytes).run();
}

std::string marker_name(std::uint8_t code) {
  if (code >= 0xC0 && code <= 0xCF && code != 0xC4 && code != 0xC8 && code != 0xCC) {
    return "SOF" + std::to_string(code - 0xC0);
  }
  if (code >= 0xD0 && code <= 0xD7) return "RST" + std::to_string(code - 0xD0);
  if (code >= 0xE0 && code <= 0xEF) return "APP" + std::to_string(code - 0xE0);
  switch (code) {
    case 0xC4: return "DHT";
    case 0xC8: return "JPG";
    case 0xCC: return "DAC";
    case 0xD8: return "SOI";
    case 0xD9: return "EOI";
    case 0xDA: return "SOS";
    case 0xDB: return "DQT";
    case 0xDC: return "DNL";
    case 0xDD: return "DRI";
    case 0xFE: return "COM";
    default: return hex(0xFF00 | code);
  }
}

}  // namespace dctdet::codec

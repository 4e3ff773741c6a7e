#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "dctdet/codec.hpp"

namespace dctdet::codec {

// "DCTT" container: magic, u8 version (1), u8 component count, then per
// component u8 id, u16 LE blocks_wide, u16 LE blocks_high and
// blocks_wide * blocks_high * 64 f32 LE values (block-row-major, natural
// frequency order inside each block).
void write_tensor_file(std::ostream& out, std::span<const DctPlane> planes);
std::vector<DctPlane> read_tensor_file(std::istream& in);

// Binary P6, 8-bit.
void write_ppm(std::ostream& out, const RgbImage& image);

}  // namespace dctdet::codec

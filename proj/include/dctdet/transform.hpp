#pragma once

#include <array>
#include <cstdint>

// Numeric kernel shared by the codec and the test oracles: the orthonormal
// 8x8 DCT-II pair, the JPEG zigzag permutation, quantizer rounding and the
// BT.601 full-range colour transform.
namespace dctdet::transform {

// 64 values, row-major. Spatial blocks hold level-shifted samples, frequency
// blocks hold F(u,v) with u the vertical and v the horizontal frequency.
using Block8x8 = std::array<double, 64>;

// F(u,v) = C(u)C(v)/4 * sum_xy f(x,y) cos((2x+1)u pi/16) cos((2y+1)v pi/16).
Block8x8 fdct8x8(const Block8x8& spatial);
Block8x8 idct8x8(const Block8x8& coeffs);

struct RowCol {
  int row;
  int col;
  friend bool operator==(const RowCol&, const RowCol&) = default;
};

// Throws std::out_of_range outside [0, 63].
RowCol zigzag_index(int i);
int zigzag_inverse(RowCol rc);

// kZigzagToNatural[k] is the row-major index of the k-th zigzag coefficient.
extern const std::array<std::uint8_t, 64> kZigzagToNatural;

// Round half away from zero.
double round_half_away(double v);
std::uint8_t to_sample(double v);  // round, then clamp to [0, 255]

// Quantizer index for a coefficient and step size.
int quantize(double coeff, int step);

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};
struct YCbCr {
  std::uint8_t y, cb, cr;
  friend bool operator==(const YCbCr&, const YCbCr&) = default;
};

Rgb ycbcr_to_rgb(double y, double cb, double cr);
YCbCr rgb_to_ycbcr(double r, double g, double b);

}  // namespace dctdet::transform

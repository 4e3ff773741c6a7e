#include "dctdet/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dctdet::transform {
namespace {

// basis[u][x] = C(u)/2 * cos((2x+1) u pi / 16); the 2D transform is the
// outer product of two of these, which gives the C(u)C(v)/4 normalisation.
std::array<std::array<double, 8>, 8> make_basis() {
  std::array<std::array<double, 8>, 8> basis{};
  for (int u = 0; u < 8; ++u) {
    const double cu = u == 0 ? 1.0 / std::numbers::sqrt2 : 1.0;
    for (int x = 0; x < 8; ++x) {
      basis[u][x] = 0.5 * cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
  return basis;
}

const std::array<std::array<double, 8>, 8>& basis() {
  static const auto table = make_basis();
  return table;
}

std::array<RowCol, 64> make_zigzag() {
  std::array<RowCol, 64> order{};
  int row = 0;
  int col = 0;
  for (int i = 0; i < 64; ++i) {
    order[i] = {row, col};
    if ((row + col) % 2 == 0) {  // moving up-right
      if (col == 7) {
        ++row;
      } else if (row == 0) {
        ++col;
      } else {
        --row;
        ++col;
      }
    } else {  // moving down-left
      if (row == 7) {
        ++col;
      } else if (col == 0) {
        ++row;
      } else {
        ++row;
        --col;
      }
    }
  }
  return order;
}

const std::array<RowCol, 64>& zigzag_table() {
  static const auto table = make_zigzag();
  return table;
}

}  // namespace

const std::array<std::uint8_t, 64> kZigzagToNatural = [] {
  std::array<std::uint8_t, 64> out{};
  const auto order = make_zigzag();
  for (int i = 0; i < 64; ++i) {
    out[i] = static_cast<std::uint8_t>(order[i].row * 8 + order[i].col);
  }
  return out;
}();

Block8x8 fdct8x8(const Block8x8& spatial) {
  const auto& b = basis();
  Block8x8 rows{};
  // Horizontal pass: rows[x][v] = sum_y f(x,y) basis[v][y].
  for (int x = 0; x < 8; ++x) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += spatial[x * 8 + y] * b[v][y];
      rows[x * 8 + v] = acc;
    }
  }
  Block8x8 out{};
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += rows[x * 8 + v] * b[u][x];
      out[u * 8 + v] = acc;
    }
  }
  return out;
}

Block8x8 idct8x8(const Block8x8& coeffs) {
  const auto& b = basis();
  Block8x8 cols{};
  // cols[u][y] = sum_v F(u,v) basis[v][y].
  for (int u = 0; u < 8; ++u) {
    for (int y = 0; y < 8; ++y) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += coeffs[u * 8 + v] * b[v][y];
      cols[u * 8 + y] = acc;
    }
  }
  Block8x8 out{};
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += cols[u * 8 + y] * b[u][x];
      out[x * 8 + y] = acc;
    }
  }
  return out;
}

RowCol zigzag_index(int i) {
  if (i < 0 || i > 63) {
    throw std::out_of_range("zigzag index out of range: " + std::to_string(i));
  }
  return zigzag_table()[i];
}

int zigzag_inverse(RowCol rc) {
  if (rc.row < 0 || rc.row > 7 || rc.col < 0 || rc.col > 7) {
    throw std::out_of_range("zigzag position out of range");
  }
  const int natural = rc.row * 8 + rc.col;
  for (int i = 0; i < 64; ++i) {
    if (kZigzagToNatural[i] == natural) return i;
  }
  throw std::logic_error("zigzag table is not a permutation");
}

double round_half_away(double v) { return std::round(v); }

std::uint8_t to_sample(double v) {
  return static_cast<std::uint8_t>(std::clamp(round_half_away(v), 0.0, 255.0));
}

int quantize(double coeff, int step) {
  return static_cast<int>(round_half_away(coeff / step));
}

Rgb ycbcr_to_rgb(double y, double cb, double cr) {
  const double db = cb - 128.0;
  const double dr = cr - 128.0;
  return {to_sample(y + 1.402 * dr), to_sample(y - 0.344136 * db - 0.714136 * dr),
          to_sample(y + 1.772 * db)};
}

YCbCr rgb_to_ycbcr(double r, double g, double b) {
  return {to_sample(0.299 * r + 0.587 * g + 0.114 * b),
          to_sample(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0),
          to_sample(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0)};
}

}  // namespace dctdet::transform

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctdet/codec.hpp"
#include "dctdet/detection.hpp"
#include "dctdet/graph.hpp"
#include "dctdet/zoo.hpp"

// End-to-end detection on a JPEG file: input preparation for a built model,
// forward pass and post-processing.
namespace dctdet::infer {

// Detector input side for the DCT variants, in luma blocks.
inline constexpr int kLumaBlocks = 38;

// Y becomes (38, 38, 64) with channel k holding the natural-order coefficient
// k of each block; Cb and Cr become one (19, 19, 128) tensor, Cb first. A
// larger block grid is centre-cropped when crop_blocks is set, otherwise it
// is an input error.
graph::TensorMap dct_inputs(const zoo::BuiltModel& model, const codec::PartialDecode& decoded, bool crop_blocks);

// Bilinear resize (half-pixel centres) of the full decode to the model's
// square input, minus per-channel means.
graph::TensorMap rgb_inputs(const zoo::BuiltModel& model, const codec::RgbImage& image);

graph::Tensor resize_bilinear(const codec::RgbImage& image, int out_h, int out_w);

struct Options {
  bool crop_blocks = false;
  detection::PostprocessConfig post;
};

struct Result {
  int width = 0;   // source image size, used to scale boxes to pixels
  int height = 0;
  detection::PostprocessResult post;
};

Result run(const zoo::BuiltModel& model, const graph::Weights& weights, std::span<const std::uint8_t> jpeg,
           const Options& options);

// Background first, then the twenty VOC object classes.
const std::vector<std::string>& voc_class_names();

}  // namespace dctdet::infer

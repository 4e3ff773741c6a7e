#include "dctdet/infer.hpp"

#include <algorithm>
#include <cmath>

#include "dctdet/error.hpp"

namespace dctdet::infer {
namespace {

using graph::Shape;
using graph::Tensor;

// Copies a (rows x cols) window of blocks starting at (by0, bx0) into channels
// [c0, c0 + 64) of t.
void copy_blocks(const codec::DctPlane& plane, int by0, int bx0, Tensor& t, int c0) {
  for (int y = 0; y < t.shape.h; ++y) {
    for (int x = 0; x < t.shape.w; ++x) {
      const auto block = plane.block(bx0 + x, by0 + y);
      std::copy(block.begin(), block.end(), t.data.begin() + t.shape.c * (static_cast<std::size_t>(y) * t.shape.w + x) + c0);
    }
  }
}

// Offset of a centred window of `want` blocks in a grid of `have`.
int crop_offset(int have, int want, bool crop, const char* what) {
  if (have == want) return 0;
  if (have < want || !crop) {
    fail(ErrorKind::kInput, std::string(what) + " grid has " + std::to_string(have) + " blocks, model needs " +
                                std::to_string(want) +
                                " (DCT models take 297..304 pixel images; use --crop-blocks for larger ones)");
  }
  return (have - want) / 2 / 2 * 2;  // even, so the chroma window stays aligned
}

}  // namespace

graph::TensorMap dct_inputs(const zoo::BuiltModel& model, const codec::PartialDecode& decoded, bool crop_blocks) {
  const auto& y_spec = model.inputs.at(0);
  const int n = y_spec.shape.h;
  const int oy = crop_offset(decoded.y.blocks_high, n, crop_blocks, "luma");
  const int ox = crop_offset(decoded.y.blocks_wide, n, crop_blocks, "luma");
  graph::TensorMap inputs;
  Tensor y(y_spec.shape);
  copy_blocks(decoded.y, oy, ox, y, 0);
  inputs.emplace(y_spec.name, std::move(y));
  if (model.input_kind == zoo::InputKind::kDctLumaOnly) return inputs;

  const auto& f = decoded.frame;
  const bool is_420 = f.components.size() == 3 && f.components[0].h == 2 && f.components[0].v == 2 &&
                      f.components[1].h == 1 && f.components[1].v == 1 && f.components[2].h == 1 &&
                      f.components[2].v == 1;
  if (!is_420 || !decoded.cb || !decoded.cr) {
    fail(ErrorKind::kInput, "sampling-layout mismatch: " + std::string(zoo::arch_name(model.id)) +
                                " needs a 3-component 4:2:0 JPEG");
  }
  const auto& c_spec = model.inputs.at(1);
  const int m = c_spec.shape.h;
  if (decoded.cb->blocks_high < oy / 2 + m || decoded.cb->blocks_wide < ox / 2 + m) {
    fail(ErrorKind::kInput, "chroma grid too small for the model input");
  }
  Tensor c(c_spec.shape);
  copy_blocks(*decoded.cb, oy / 2, ox / 2, c, 0);
  copy_blocks(*decoded.cr, oy / 2, ox / 2, c, 64);
  inputs.emplace(c_spec.name, std::move(c));
  return inputs;
}

graph::Tensor resize_bilinear(const codec::RgbImage& image, int out_h, int out_w) {
  Tensor t({out_h, out_w, 3});
  auto axis = [](int out, int in, int i, int& i0, int& i1, double& frac) {
    const double src = std::clamp((i + 0.5) * in / out - 0.5, 0.0, static_cast<double>(in - 1));
    i0 = static_cast<int>(std::floor(src));
    i1 = std::min(i0 + 1, in - 1);
    frac = src - i0;
  };
  auto px = [&](int y, int x, int c) {
    return static_cast<double>(image.pixels[(static_cast<std::size_t>(y) * image.width + x) * 3 + c]);
  };
  for (int y = 0; y < out_h; ++y) {
    int y0, y1;
    double fy;
    axis(out_h, image.height, y, y0, y1, fy);
    for (int x = 0; x < out_w; ++x) {
      int x0, x1;
      double fx;
      axis(out_w, image.width, x, x0, x1, fx);
      for (int c = 0; c < 3; ++c) {
        const double top = px(y0, x0, c) * (1 - fx) + px(y0, x1, c) * fx;
        const double bottom = px(y1, x0, c) * (1 - fx) + px(y1, x1, c) * fx;
        t.at(y, x, c) = static_cast<float>(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return t;
}

graph::TensorMap rgb_inputs(const zoo::BuiltModel& model, const codec::RgbImage& image) {
  static constexpr float kMean[3] = {123.0f, 117.0f, 104.0f};
  const auto& spec = model.inputs.at(0);
  Tensor t = resize_bilinear(image, spec.shape.h, spec.shape.w);
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] -= kMean[i % 3];
  graph::TensorMap inputs;
  inputs.emplace(spec.name, std::move(t));
  return inputs;
}

Result run(const zoo::BuiltModel& model, const graph::Weights& weights, std::span<const std::uint8_t> jpeg,
           const Options& options) {
  if (!model.is_detector()) {
    fail(ErrorKind::kUsage, std::string(zoo::arch_name(model.id)) + " is a classification backbone, not a detector");
  }
  Result result;
  graph::TensorMap inputs;
  if (model.input_kind == zoo::InputKind::kRgb) {
    const auto image = codec::full_decode(jpeg);
    result.width = image.width;
    result.height = image.height;
    inputs = rgb_inputs(model, image);
  } else {
    const auto decoded = codec::partial_decode(jpeg);
    result.width = decoded.frame.width;
    result.height = decoded.frame.height;
    inputs = dct_inputs(model, decoded, options.crop_blocks);
  }
  const auto outputs = graph::run_graph(model.graph, weights, inputs, model.outputs);

  // Head outputs are HWC with boxes-major channels, which flattens into
  // prior order directly.
  std::vector<float> loc, conf;
  for (const auto& head : model.heads) {
    const auto& l = outputs.at(head.loc).data;
    const auto& c = outputs.at(head.conf).data;
    loc.insert(loc.end(), l.begin(), l.end());
    conf.insert(conf.end(), c.begin(), c.end());
  }
  const auto geometry = zoo::head_geometry(model);
  const auto priors = detection::generate_priors(geometry, model.priors);
  auto post = options.post;
  post.variances = model.priors.variances;
  result.post = detection::postprocess(loc, conf, model.num_classes, priors, post);
  return result;
}

const std::vector<std::string>& voc_class_names() {
  static const std::vector<std::string> names = {
      "background", "aeroplane", "bicycle", "bird",  "boat",        "bottle", "bus",
      "car",        "cat",       "chair",   "cow",   "diningtable", "dog",    "horse",
      "motorbike",  "person",    "pottedplant", "sheep", "sofa",    "train",  "tvmonitor"};
  return names;
}

}  // namespace dctdet::infer

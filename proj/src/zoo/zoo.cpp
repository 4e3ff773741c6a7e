#include "dctdet/zoo.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "dctdet/error.hpp"

namespace dctdet::zoo {
namespace {

using graph::Graph;
using graph::Padding;
using graph::Shape;

constexpr std::array kDetectionIds = {
    ArchitectureId::kSsd300Rgb,       ArchitectureId::kSsdDct,        ArchitectureId::kSsdDctY,
    ArchitectureId::kSsdDctDeconv,    ArchitectureId::kSsdResnet50Rgb, ArchitectureId::kSsdLcrfa,
    ArchitectureId::kSsdLcrfaY,       ArchitectureId::kSsdLcrfaThinner, ArchitectureId::kSsdLcrfaThinnerY,
    ArchitectureId::kSsdDeconvRfa,
};
constexpr std::array kBackboneIds = {
    ArchitectureId::kVgg16,    ArchitectureId::kVggDct,        ArchitectureId::kVggDctY,
    ArchitectureId::kVggDctDeconv, ArchitectureId::kResnet50, ArchitectureId::kLcrfa,
    ArchitectureId::kLcrfaY,   ArchitectureId::kLcrfaThinner,  ArchitectureId::kLcrfaThinnerY,
    ArchitectureId::kDeconvRfa,
};
constexpr auto kAllIds = [] {
  std::array<ArchitectureId, kDetectionIds.size() + kBackboneIds.size()> ids{};
  std::size_t i = 0;
  for (auto id : kDetectionIds) ids[i++] = id;
  for (auto id : kBackboneIds) ids[i++] = id;
  return ids;
}();

constexpr std::array<std::pair<ArchitectureId, std::string_view>, 20> kNames = {{
    {ArchitectureId::kSsd300Rgb, "ssd300_rgb"},
    {ArchitectureId::kSsdDct, "ssd_dct"},
    {ArchitectureId::kSsdDctY, "ssd_dct_y"},
    {ArchitectureId::kSsdDctDeconv, "ssd_dct_deconv"},
    {ArchitectureId::kSsdResnet50Rgb, "ssd_resnet50_rgb"},
    {ArchitectureId::kSsdLcrfa, "ssd_lcrfa"},
    {ArchitectureId::kSsdLcrfaY, "ssd_lcrfa_y"},
    {ArchitectureId::kSsdLcrfaThinner, "ssd_lcrfa_thinner"},
    {ArchitectureId::kSsdLcrfaThinnerY, "ssd_lcrfa_thinner_y"},
    {ArchitectureId::kSsdDeconvRfa, "ssd_deconv_rfa"},
    {ArchitectureId::kVgg16, "vgg16"},
    {ArchitectureId::kVggDct, "vgg_dct"},
    {ArchitectureId::kVggDctY, "vgg_dct_y"},
    {ArchitectureId::kVggDctDeconv, "vgg_dct_deconv"},
    {ArchitectureId::kResnet50, "resnet50"},
    {ArchitectureId::kLcrfa, "lcrfa"},
    {ArchitectureId::kLcrfaY, "lcrfa_y"},
    {ArchitectureId::kLcrfaThinner, "lcrfa_thinner"},
    {ArchitectureId::kLcrfaThinnerY, "lcrfa_thinner_y"},
    {ArchitectureId::kDeconvRfa, "deconv_rfa"},
}};

// Bottleneck widths (1x1 reduce, kxk, 1x1 expand).
struct Plan {
  int reduce;
  int mid;
  int expand;
};
constexpr Plan kStage2{64, 64, 256};
constexpr Plan kStage3{128, 128, 512};
constexpr Plan kStage4{256, 256, 1024};
constexpr Plan kStage5{512, 512, 2048};
constexpr Plan thin(int expand) { return {expand / 4, expand / 4, expand}; }

// Input geometry: detectors see 300x300 images (38x38 luma blocks), the
// classification backbones 224x224 (28x28 luma blocks).
struct Geometry {
  int pixels;
  int luma_blocks;
  int chroma_blocks;
};
constexpr Geometry kDetect{300, 38, 19};
constexpr Geometry kClassify{224, 28, 14};

class Builder {
 public:
  Graph g;

  int conv_relu(const std::string& name, int in, int channels, int kernel, int stride = 1,
                Padding padding = Padding::kSame, int dilation = 1) {
    return g.relu(name + "_relu", g.conv(name, in, channels, kernel, stride, padding, dilation));
  }

  int vgg_block(const std::string& prefix, int in, int convs, int channels) {
    int x = in;
    for (int i = 1; i <= convs; ++i) x = conv_relu(prefix + "_" + std::to_string(i), x, channels, 3);
    return x;
  }

  // ResNet bottleneck: stride on the first 1x1, batchnorm after every conv.
  // A projection shortcut makes it a ConvBlock; without it, an IdentityBlock.
  int bottleneck(const std::string& prefix, int in, Plan plan, int kernel, int stride, bool projection) {
    int x = g.conv(prefix + "_2a", in, plan.reduce, 1, stride);
    x = g.relu(prefix + "_2a_relu", g.batchnorm(prefix + "_2a_bn", x));
    x = g.conv(prefix + "_2b", x, plan.mid, kernel);
    x = g.relu(prefix + "_2b_relu", g.batchnorm(prefix + "_2b_bn", x));
    x = g.batchnorm(prefix + "_2c_bn", g.conv(prefix + "_2c", x, plan.expand, 1));
    int shortcut = in;
    if (projection) shortcut = g.batchnorm(prefix + "_1_bn", g.conv(prefix + "_1", in, plan.expand, 1, stride));
    return g.relu(prefix + "_relu", g.add(prefix + "_add", x, shortcut));
  }

  int conv_block(const std::string& prefix, int in, Plan plan, int stride, int kernel = 3) {
    return bottleneck(prefix, in, plan, kernel, stride, true);
  }

  int identity_block(const std::string& prefix, int in, Plan plan, int kernel = 3) {
    return bottleneck(prefix, in, plan, kernel, 1, false);
  }

  // ConvBlock followed by IdentityBlocks named prefix + a, b, c, ...
  int stage(const std::string& prefix, int in, Plan plan, int blocks, int stride) {
    int x = conv_block(prefix + "a", in, plan, stride);
    for (int i = 1; i < blocks; ++i) x = identity_block(prefix + static_cast<char>('a' + i), x, plan);
    return x;
  }
};

struct Trunk {
  Builder b;
  std::vector<InputSpec> inputs;
  InputKind kind = InputKind::kRgb;
  std::vector<std::pair<std::string, int>> features;  // detector head attachment points
  int last = -1;
};

int add_input(Trunk& t, const std::string& name, Shape shape) {
  t.inputs.push_back({name, shape});
  return t.b.g.input(name, shape);
}

// Chroma input split into separately upsampled Cb and Cr planes.
std::pair<int, int> deconv_chroma(Trunk& t, int cbcr) {
  Graph& g = t.b.g;
  const int cb = g.deconv("cb_deconv", g.slice("cb_slice", cbcr, 0, 64), 64);
  const int cr = g.deconv("cr_deconv", g.slice("cr_slice", cbcr, 64, 128), 64);
  return {cb, cr};
}

enum class VggInput { kRgb, kDct, kDctY, kDctDeconv };

// VGG16 through conv5_3. Records the conv4_3 feature for the first head.
int vgg_trunk(Trunk& t, VggInput input, Geometry geo, bool l2norm) {
  Builder& b = t.b;
  Graph& g = b.g;
  int x = -1;
  if (input == VggInput::kRgb) {
    t.kind = InputKind::kRgb;
    x = add_input(t, "rgb", {geo.pixels, geo.pixels, 3});
    x = g.maxpool("pool1", b.vgg_block("conv1", x, 2, 64), 2, 2, Padding::kSame);
    x = g.maxpool("pool2", b.vgg_block("conv2", x, 2, 128), 2, 2, Padding::kSame);
    x = g.maxpool("pool3", b.vgg_block("conv3", x, 3, 256), 2, 2, Padding::kSame);
  } else {
    t.kind = input == VggInput::kDctY ? InputKind::kDctLumaOnly : InputKind::kDct;
    const int y = add_input(t, "y", {geo.luma_blocks, geo.luma_blocks, 64});
    if (input == VggInput::kDctDeconv) {
      const int cbcr = add_input(t, "cbcr", {geo.chroma_blocks, geo.chroma_blocks, 128});
      const auto [cb, cr] = deconv_chroma(t, cbcr);
      x = g.batchnorm("concat_bn", g.concat("concat", {y, cb, cr}));
    } else {
      x = b.conv_relu("conv_y", g.batchnorm("y_bn", y), 256, 3);
    }
  }
  x = b.vgg_block("conv4", x, 3, 512);
  t.features.emplace_back("conv4_3", l2norm ? g.l2norm("conv4_3_norm", x) : x);
  x = g.maxpool("pool4", x, 2, 2, Padding::kSame);
  if (input == VggInput::kDct) {
    const int cbcr = add_input(t, "cbcr", {geo.chroma_blocks, geo.chroma_blocks, 128});
    x = g.concat("concat", {x, g.batchnorm("cbcr_bn", cbcr)});
  }
  return b.vgg_block("conv5", x, 3, 512);
}

// ResNet-50 through stage 4, with stage-3 output recorded as the first head.
int resnet_trunk(Trunk& t, Geometry geo) {
  Builder& b = t.b;
  Graph& g = b.g;
  t.kind = InputKind::kRgb;
  int x = add_input(t, "rgb", {geo.pixels, geo.pixels, 3});
  x = g.conv("conv1", x, 64, 7, 2);
  x = g.relu("conv1_relu", g.batchnorm("conv1_bn", x));
  x = g.maxpool("pool1", x, 3, 2, Padding::kSame);
  x = b.stage("res2", x, kStage2, 3, 1);
  x = b.stage("res3", x, kStage3, 4, 2);
  t.features.emplace_back("res3d", x);
  return b.stage("res4", x, kStage4, 6, 2);
}

struct RfaWidths {
  Plan luma_first;  // stride-1 ConvBlock with 1x1 kernels and its IdentityBlocks
  Plan luma_mid;    // stride-1 ConvBlock feeding the first head
  Plan luma_last;   // stride-2 ConvBlock producing the 19x19 luma features
  Plan chroma;      // stride-1 ConvBlock on the chroma input
};

constexpr RfaWidths kRfa{kStage4, kStage3, kStage3, kStage3};
constexpr RfaWidths kRfaThinner{thin(384), thin(384), thin(768), thin(256)};

// Late-concat receptive-field-aware trunk through the stage-4 IdentityBlocks.
int lcrfa_trunk(Trunk& t, Geometry geo, RfaWidths widths, bool luma_only) {
  Builder& b = t.b;
  Graph& g = b.g;
  t.kind = luma_only ? InputKind::kDctLumaOnly : InputKind::kDct;
  int y = add_input(t, "y", {geo.luma_blocks, geo.luma_blocks, 64});
  y = g.batchnorm("y_bn", y);
  y = b.conv_block("y_res4a", y, widths.luma_first, 1, 1);
  y = b.identity_block("y_res4b", y, widths.luma_first, 2);
  y = b.identity_block("y_res4c", y, widths.luma_first);
  y = b.conv_block("y_res3a", y, widths.luma_mid, 1);
  y = b.identity_block("y_res3b", y, widths.luma_mid);
  y = b.identity_block("y_res3c", y, widths.luma_mid);
  y = b.identity_block("y_res3d", y, widths.luma_mid);
  t.features.emplace_back("y_res3d", y);
  int x = -1;
  if (luma_only) {
    // Without a chroma concat the luma branch alone must supply the 1024
    // channels the stage-4 IdentityBlocks expect.
    x = b.conv_block("y_res3e", y, kStage4, 2);
  } else {
    y = b.conv_block("y_res3e", y, widths.luma_last, 2);
    int c = add_input(t, "cbcr", {geo.chroma_blocks, geo.chroma_blocks, 128});
    c = b.conv_block("c_res3a", g.batchnorm("cbcr_bn", c), widths.chroma, 1, 1);
    x = g.concat("concat", {y, c});
  }
  for (char s = 'b'; s <= 'f'; ++s) x = b.identity_block(std::string("res4") + s, x, kStage4);
  return x;
}

// Deconvolution trunk: chroma upsampled to the luma grid at the input.
int deconv_rfa_trunk(Trunk& t, Geometry geo) {
  Builder& b = t.b;
  Graph& g = b.g;
  t.kind = InputKind::kDct;
  const int y = add_input(t, "y", {geo.luma_blocks, geo.luma_blocks, 64});
  const int cbcr = add_input(t, "cbcr", {geo.chroma_blocks, geo.chroma_blocks, 128});
  const auto [cb, cr] = deconv_chroma(t, cbcr);
  int x = g.concat("concat", {y, cb, cr});
  x = b.conv_block("stem_res4a", x, kStage4, 1, 1);
  x = b.identity_block("stem_res4b", x, kStage4, 2);
  x = b.identity_block("stem_res4c", x, kStage4);
  x = b.stage("res3", x, kStage3, 4, 1);
  t.features.emplace_back("res3d", x);
  return b.stage("res4", x, kStage4, 6, 2);
}

// Stage 5 of the ResNet family; stride 1 keeps 19x19 for detection.
int resnet_stage5(Trunk& t, int x, int stride) { return t.b.stage("res5", x, kStage5, 3, stride); }

// Extra feature layers and prediction heads shared by every detector.
void ssd_tail(Trunk& t, int x, int num_classes, BuiltModel& model) {
  Builder& b = t.b;
  x = b.conv_relu("conv6_1", x, 256, 1);
  x = b.conv_relu("conv6_2", x, 512, 3, 2);
  t.features.emplace_back("conv6_2", x);
  x = b.conv_relu("conv7_1", x, 128, 1);
  x = b.conv_relu("conv7_2", x, 256, 3, 2);
  t.features.emplace_back("conv7_2", x);
  x = b.conv_relu("conv8_1", x, 128, 1);
  x = b.conv_relu("conv8_2", x, 256, 3, 1, Padding::kValid);
  t.features.emplace_back("conv8_2", x);
  x = b.conv_relu("conv9_1", x, 128, 1);
  x = b.conv_relu("conv9_2", x, 256, 3, 1, Padding::kValid);
  t.features.emplace_back("conv9_2", x);

  constexpr std::array kBoxes = {4, 6, 6, 6, 4, 4};
  if (t.features.size() != kBoxes.size()) fail(ErrorKind::kUsage, "detector must expose six heads");
  for (std::size_t i = 0; i < kBoxes.size(); ++i) {
    const auto& [base, id] = t.features[i];
    const Shape s = b.g.shape(id);
    Head head{b.g.layer(id).name, base + "_mbox_loc", base + "_mbox_conf", s.h, s.w, kBoxes[i]};
    b.g.conv(head.loc, id, kBoxes[i] * 4, 3);
    b.g.conv(head.conf, id, kBoxes[i] * num_classes, 3);
    model.outputs.push_back(head.loc);
    model.outputs.push_back(head.conf);
    model.heads.push_back(std::move(head));
  }
}

void classifier_tail(Trunk& t, int x, BuiltModel& model) {
  Graph& g = t.b.g;
  g.conv("predictions", g.global_avg_pool("avg_pool", x), 1000, 1);
  model.outputs.push_back("predictions");
}

// fc6/fc7 as convolutions: dilated 3x3 with 1024 channels in detectors,
// 7x7 with 4096 channels in the classifiers.
int vgg_head(Trunk& t, int conv5, bool detector) {
  Builder& b = t.b;
  Graph& g = b.g;
  if (detector) {
    const int pool5 = g.maxpool("pool5", conv5, 3, 1, Padding::kSame);
    const int fc6 = b.conv_relu("fc6", pool5, 1024, 3, 1, Padding::kSame, 6);
    const int fc7 = b.conv_relu("fc7", fc6, 1024, 1);
    t.features.emplace_back("fc7", fc7);
    return fc7;
  }
  const int pool5 = g.maxpool("pool5", conv5, 2, 2, Padding::kSame);
  const int fc6 = b.conv_relu("fc6", pool5, 4096, 7, 1, Padding::kValid);
  return b.conv_relu("fc7", fc6, 4096, 1);
}

}  // namespace

std::string_view arch_name(ArchitectureId id) {
  for (const auto& [key, name] : kNames) {
    if (key == id) return name;
  }
  return "unknown";
}

std::optional<ArchitectureId> parse_arch(std::string_view name) {
  for (const auto& [key, n] : kNames) {
    if (n == name) return key;
  }
  return std::nullopt;
}

std::span<const ArchitectureId> detection_ids() { return kDetectionIds; }
std::span<const ArchitectureId> backbone_ids() { return kBackboneIds; }
std::span<const ArchitectureId> all_ids() { return kAllIds; }

std::string valid_arch_list() {
  std::string s;
  for (auto id : kAllIds) s += (s.empty() ? "" : ", ") + std::string(arch_name(id));
  return s;
}

BuiltModel build(ArchitectureId id, const BuildOptions& options) {
  BuiltModel model;
  model.id = id;
  Trunk t;
  const bool detector = std::find(kDetectionIds.begin(), kDetectionIds.end(), id) != kDetectionIds.end();
  const Geometry geo = detector ? kDetect : kClassify;
  const bool l2norm = detector && options.l2norm;
  int x = -1;
  switch (id) {
    case ArchitectureId::kSsd300Rgb:
    case ArchitectureId::kVgg16:
      x = vgg_head(t, vgg_trunk(t, VggInput::kRgb, geo, l2norm), detector);
      break;
    case ArchitectureId::kSsdDct:
    case ArchitectureId::kVggDct:
      x = vgg_head(t, vgg_trunk(t, VggInput::kDct, geo, l2norm), detector);
      break;
    case ArchitectureId::kSsdDctY:
    case ArchitectureId::kVggDctY:
      x = vgg_head(t, vgg_trunk(t, VggInput::kDctY, geo, l2norm), detector);
      break;
    case ArchitectureId::kSsdDctDeconv:
    case ArchitectureId::kVggDctDeconv:
      x = vgg_head(t, vgg_trunk(t, VggInput::kDctDeconv, geo, l2norm), detector);
      break;
    case ArchitectureId::kSsdResnet50Rgb:
    case ArchitectureId::kResnet50:
      x = resnet_stage5(t, resnet_trunk(t, geo), detector ? 1 : 2);
      break;
    case ArchitectureId::kSsdLcrfa:
    case ArchitectureId::kLcrfa:
      x = resnet_stage5(t, lcrfa_trunk(t, geo, kRfa, false), detector ? 1 : 2);
      break;
    case ArchitectureId::kSsdLcrfaY:
    case ArchitectureId::kLcrfaY:
      x = resnet_stage5(t, lcrfa_trunk(t, geo, kRfa, true), detector ? 1 : 2);
      break;
    case ArchitectureId::kSsdLcrfaThinner:
    case ArchitectureId::kLcrfaThinner:
      x = resnet_stage5(t, lcrfa_trunk(t, geo, kRfaThinner, false), detector ? 1 : 2);
      break;
    case ArchitectureId::kSsdLcrfaThinnerY:
    case ArchitectureId::kLcrfaThinnerY:
      x = resnet_stage5(t, lcrfa_trunk(t, geo, kRfaThinner, true), detector ? 1 : 2);
      break;
    case ArchitectureId::kSsdDeconvRfa:
    case ArchitectureId::kDeconvRfa:
      x = resnet_stage5(t, deconv_rfa_trunk(t, geo), detector ? 1 : 2);
      break;
  }
  if (detector) {
    // ResNet-family trunks attach the second head to the last stage-5 block;
    // VGG trunks already recorded fc7.
    if (t.features.size() == 1) t.features.emplace_back("res5c", x);
    model.num_classes = options.num_classes;
    ssd_tail(t, x, options.num_classes, model);
  } else {
    classifier_tail(t, x, model);
  }
  model.graph = std::move(t.b.g);
  model.inputs = std::move(t.inputs);
  model.input_kind = t.kind;
  return model;
}

std::vector<detection::HeadGeometry> head_geometry(const BuiltModel& model) {
  std::vector<detection::HeadGeometry> geometry;
  for (const auto& h : model.heads) geometry.push_back({h.h, h.w, h.boxes});
  return geometry;
}

std::size_t input_elements(const BuiltModel& model) {
  std::size_t n = 0;
  for (const auto& in : model.inputs) n += in.shape.elements();
  return n;
}

}  // namespace dctdet::zoo

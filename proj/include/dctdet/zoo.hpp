#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dctdet/detection.hpp"
#include "dctdet/graph.hpp"

namespace dctdet::zoo {

enum class ArchitectureId {
  kSsd300Rgb,
  kSsdDct,
  kSsdDctY,
  kSsdDctDeconv,
  kSsdResnet50Rgb,
  kSsdLcrfa,
  kSsdLcrfaY,
  kSsdLcrfaThinner,
  kSsdLcrfaThinnerY,
  kSsdDeconvRfa,
  kVgg16,
  kVggDct,
  kVggDctY,
  kVggDctDeconv,
  kResnet50,
  kLcrfa,
  kLcrfaY,
  kLcrfaThinner,
  kLcrfaThinnerY,
  kDeconvRfa,
};

std::string_view arch_name(ArchitectureId id);
std::optional<ArchitectureId> parse_arch(std::string_view name);
std::span<const ArchitectureId> detection_ids();
std::span<const ArchitectureId> backbone_ids();
std::span<const ArchitectureId> all_ids();
// Comma-separated list of every id, for error messages.
std::string valid_arch_list();

enum class InputKind { kRgb, kDct, kDctLumaOnly };

struct InputSpec {
  std::string name;
  graph::Shape shape;
};

struct Head {
  std::string feature;  // layer the predictors attach to
  std::string loc;      // boxes * 4 channels
  std::string conf;     // boxes * num_classes channels
  int h = 0;
  int w = 0;
  int boxes = 0;
};

struct BuildOptions {
  bool l2norm = true;  // L2 normalization before the first head of VGG detectors
  int num_classes = 21;
};

struct BuiltModel {
  ArchitectureId id{};
  InputKind input_kind = InputKind::kRgb;
  graph::Graph graph;
  std::vector<InputSpec> inputs;
  std::vector<Head> heads;  // empty for classification backbones
  std::vector<std::string> outputs;
  detection::PriorConfig priors;
  int num_classes = 0;

  bool is_detector() const { return !heads.empty(); }
};

BuiltModel build(ArchitectureId id, const BuildOptions& options = {});
std::vector<detection::HeadGeometry> head_geometry(const BuiltModel& model);
std::size_t input_elements(const BuiltModel& model);

}  // namespace dctdet::zoo

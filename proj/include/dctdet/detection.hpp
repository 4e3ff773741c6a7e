#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace dctdet::detection {

// Corner-form box in normalized [0,1] coordinates.
struct Box {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double area() const;
  bool operator==(const Box&) const = default;
};

struct PriorBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  bool operator==(const PriorBox&) const = default;
};

struct HeadGeometry {
  int h = 0;
  int w = 0;
  int boxes = 0;  // per cell: 2 + 2 * (number of extra aspect ratios)
};

// Scales spaced linearly from min_scale (first head) to max_scale (last head);
// extra_scale continues the sequence past the last head for its "1'" box.
struct PriorConfig {
  double min_scale = 0.2;
  double max_scale = 0.9;
  double extra_scale = 1.04;
  std::array<double, 4> variances{0.1, 0.1, 0.2, 0.2};
};

// Order: heads, then row-major cells, then per cell 1, 1', 2, 1/2, 3, 1/3, ...
std::vector<PriorBox> generate_priors(std::span<const HeadGeometry> heads, const PriorConfig& config);
std::size_t prior_count(std::span<const HeadGeometry> heads);

// loc holds 4 offsets per prior. Boxes are converted to corners and clamped.
std::vector<Box> decode_boxes(std::span<const float> loc, std::span<const PriorBox> priors,
                              const std::array<double, 4>& variances);

double iou(const Box& a, const Box& b);

// Greedy suppression: score order (ties to the lower index), keep a box iff
// its IoU with every kept box is <= iou_threshold, stop after top_k keeps.
std::vector<std::size_t> nms(std::span<const Box> boxes, std::span<const double> scores,
                             double iou_threshold, std::size_t top_k);

struct Detection {
  int class_id = 0;
  double score = 0.0;
  Box box;
};

struct PostprocessConfig {
  double score_threshold = 0.01;
  double iou_threshold = 0.45;
  std::size_t top_k = 200;       // per class
  std::size_t keep_top_k = 200;  // across classes
  std::array<double, 4> variances{0.1, 0.1, 0.2, 0.2};
};

struct PostprocessResult {
  // Grouped by ascending class id, each group sorted by descending score.
  std::vector<Detection> detections;
  std::size_t degenerate_dropped = 0;
};

// conf holds num_classes logits per prior with class 0 as background.
PostprocessResult postprocess(std::span<const float> loc, std::span<const float> conf, int num_classes,
                              std::span<const PriorBox> priors, const PostprocessConfig& config);

}  // namespace dctdet::detection

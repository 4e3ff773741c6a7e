#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dctdet/detection.hpp"

namespace dctdet::evaluation {

// Boxes here are corner form in pixels.
struct GroundTruth {
  std::string image;
  int class_id = 0;
  detection::Box box;
  bool difficult = false;
};

struct GroundTruthSet {
  std::vector<std::string> classes;  // dense ids 0..C-1, sorted by name
  std::vector<GroundTruth> boxes;

  int class_id(const std::string& name) const;  // -1 when absent
};

struct ScoredBox {
  std::string image;
  int class_id = 0;
  double score = 0.0;
  detection::Box box;
};

// One JSON object per line. Ground truth lines carry "image", "class",
// "bbox" and optionally "difficult"; detection lines carry "score" instead.
GroundTruthSet read_ground_truth(std::istream& in);
// Class names must appear in the ground-truth class table.
std::vector<ScoredBox> read_detections(std::istream& in, const GroundTruthSet& gt);
void write_detection(std::ostream& out, const std::string& image, const std::string& class_name, double score,
                     const detection::Box& box);

enum class Label { kTruePositive, kFalsePositive, kIgnored };

// dets must all be of one class and sorted by descending score. Each one
// claims the highest-IoU unclaimed ground truth of its class in its image;
// IoU >= threshold makes it a true positive, or ignored when that ground
// truth is difficult. Otherwise it is a false positive.
std::vector<Label> match_detections(const std::vector<ScoredBox>& dets, const GroundTruthSet& gt, int class_id,
                                    double iou_threshold = 0.5);

enum class ApMode { kVoc11, kArea, kCoco };

struct ApResult {
  double ap = 0.0;
  bool defined = true;  // false when there is no ground truth to recall
};

// labels in rank order; ignored entries are skipped.
ApResult average_precision(const std::vector<Label>& labels, std::size_t num_gt, ApMode mode);

struct ClassReport {
  std::string name;
  std::size_t num_gt = 0;  // non-difficult
  std::size_t num_detections = 0;
  ApResult ap;
};

struct MapReport {
  ApMode mode = ApMode::kVoc11;
  std::vector<ClassReport> classes;
  double map = 0.0;  // mean over classes with num_gt > 0
};

// kCoco averages area-mode AP over IoU thresholds 0.50, 0.55, ..., 0.95.
MapReport evaluate_map(const std::vector<ScoredBox>& dets, const GroundTruthSet& gt, ApMode mode);

std::string mode_name(ApMode mode);

}  // namespace dctdet::evaluation

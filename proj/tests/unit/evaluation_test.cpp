#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dctdet/error.hpp"
#include "dctdet/evaluation.hpp"
#include "test_support.hpp"

namespace dctdet::evaluation {
namespace {

using L = Label;
constexpr L TP = L::kTruePositive;
constexpr L FP = L::kFalsePositive;

GroundTruthSet gt_from(const std::string& text) {
  std::istringstream in(text);
  return read_ground_truth(in);
}

std::vector<ScoredBox> dets_from(const std::string& text, const GroundTruthSet& gt) {
  std::istringstream in(text);
  return read_detections(in, gt);
}

GroundTruthSet fixture_gt() {
  std::ifstream in(testing::data_dir() / "eval" / "gt.jsonl");
  return read_ground_truth(in);
}

std::vector<ScoredBox> fixture_dets(const GroundTruthSet& gt) {
  std::ifstream in(testing::data_dir() / "eval" / "dets.jsonl");
  return read_detections(in, gt);
}

nlohmann::json fixture_expected() {
  std::ifstream in(testing::data_dir() / "eval" / "expected.json");
  return nlohmann::json::parse(in);
}

TEST(Matching, Examples) {
  const auto gt = gt_from(R"({"image": "a", "class": "cat", "bbox": [0, 0, 10, 10]})");
  // Exact hit.
  auto dets = dets_from(R"({"image": "a", "class": "cat", "score": 0.9, "bbox": [0, 0, 10, 10]})", gt);
  EXPECT_EQ(match_detections(dets, gt, 0), (std::vector<L>{TP}));
  // Two detections on one object: the higher-scored one wins.
  dets = dets_from(
      "{\"image\": \"a\", \"class\": \"cat\", \"score\": 0.9, \"bbox\": [0, 0, 10, 10]}\n"
      "{\"image\": \"a\", \"class\": \"cat\", \"score\": 0.8, \"bbox\": [1, 0, 10, 10]}\n",
      gt);
  EXPECT_EQ(match_detections(dets, gt, 0), (std::vector<L>{TP, FP}));
  // IoU 0.4: [0,0,10,4] covers 40 of the 100-pixel box.
  dets = dets_from(R"({"image": "a", "class": "cat", "score": 0.9, "bbox": [0, 0, 10, 4]})", gt);
  EXPECT_DOUBLE_EQ(detection::iou(dets[0].box, gt.boxes[0].box), 0.4);
  EXPECT_EQ(match_detections(dets, gt, 0), (std::vector<L>{FP}));
  // Same box in another image.
  dets = dets_from(R"({"image": "b", "class": "cat", "score": 0.9, "bbox": [0, 0, 10, 10]})", gt);
  EXPECT_EQ(match_detections(dets, gt, 0), (std::vector<L>{FP}));
  EXPECT_THROW(match_detections(dets, gt, 3), Error);
}

TEST(Matching, DifficultObjectsAreIgnored) {
  const auto gt = gt_from(
      "{\"image\": \"a\", \"class\": \"cat\", \"bbox\": [0, 0, 10, 10], \"difficult\": true}\n"
      "{\"image\": \"a\", \"class\": \"cat\", \"bbox\": [20, 20, 30, 30]}\n");
  const auto dets = dets_from(
      "{\"image\": \"a\", \"class\": \"cat\", \"score\": 0.9, \"bbox\": [0, 0, 10, 10]}\n"
      "{\"image\": \"a\", \"class\": \"cat\", \"score\": 0.8, \"bbox\": [0, 0, 10, 10]}\n"
      "{\"image\": \"a\", \"class\": \"cat\", \"score\": 0.7, \"bbox\": [20, 20, 30, 30]}\n",
      gt);
  EXPECT_EQ(match_detections(dets, gt, 0), (std::vector<L>{L::kIgnored, L::kIgnored, TP}));
  const auto report = evaluate_map(dets, gt, ApMode::kVoc11);
  EXPECT_EQ(report.classes[0].num_gt, 1u);
  EXPECT_DOUBLE_EQ(report.map, 1.0);
}

TEST(AveragePrecision, Examples) {
  for (auto mode : {ApMode::kVoc11, ApMode::kArea}) {
    EXPECT_EQ(average_precision({TP}, 1, mode).ap, 1.0);
    EXPECT_EQ(average_precision({TP, FP}, 1, mode).ap, 1.0);
  }
  // (P, R) = (1, 1/2), (1/2, 1/2), (2/3, 1): max precision is 1 for the six
  // recall levels up to 0.5 and 2/3 for the five above, so (6 + 5 * 2/3) / 11.
  EXPECT_NEAR(average_precision({TP, FP, TP}, 2, ApMode::kVoc11).ap, 28.0 / 33.0, 1e-15);
  // Area: 1/2 * 1 + 1/2 * 2/3.
  EXPECT_NEAR(average_precision({TP, FP, TP}, 2, ApMode::kArea).ap, 5.0 / 6.0, 1e-15);

  const auto none = average_precision({}, 0, ApMode::kVoc11);
  EXPECT_EQ(none.ap, 0.0);
  EXPECT_FALSE(none.defined);
  EXPECT_EQ(average_precision({}, 3, ApMode::kArea).ap, 0.0);
  EXPECT_EQ(average_precision({FP, FP}, 3, ApMode::kVoc11).ap, 0.0);
}

std::vector<L> random_labels(std::mt19937_64& rng, std::size_t max_tp) {
  std::vector<L> labels;
  std::size_t tp = 0;
  const int n = std::uniform_int_distribution<int>(0, 40)(rng);
  for (int i = 0; i < n; ++i) {
    const bool hit = tp < max_tp && std::bernoulli_distribution(0.5)(rng);
    tp += hit;
    labels.push_back(hit ? TP : FP);
  }
  return labels;
}

TEST(AveragePrecision, BoundedAndNotImprovedByTrailingFalsePositive) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t num_gt = std::uniform_int_distribution<std::size_t>(1, 25)(rng);
    auto labels = random_labels(rng, num_gt);
    for (auto mode : {ApMode::kVoc11, ApMode::kArea}) {
      const double ap = average_precision(labels, num_gt, mode).ap;
      EXPECT_GE(ap, 0.0);
      EXPECT_LE(ap, 1.0);
      auto more = labels;
      more.push_back(FP);
      EXPECT_LE(average_precision(more, num_gt, mode).ap, ap);
    }
  }
}

TEST(EvaluateMap, FixtureMatchesOracle) {
  const auto gt = fixture_gt();
  const auto dets = fixture_dets(gt);
  const auto expected = fixture_expected();
  ASSERT_EQ(gt.classes, (std::vector<std::string>{"cat", "dog", "person"}));
  ASSERT_EQ(gt.boxes.size(), 12u);
  ASSERT_EQ(fixture_expected()["labels"].size(), 3u);

  for (auto mode : {ApMode::kVoc11, ApMode::kArea, ApMode::kCoco}) {
    SCOPED_TRACE(mode_name(mode));
    const auto report = evaluate_map(dets, gt, mode);
    const auto& want = expected[mode_name(mode)];
    for (const auto& cls : report.classes) {
      EXPECT_NEAR(cls.ap.ap, want["ap"][cls.name].get<double>(), 1e-9) << cls.name;
    }
    EXPECT_NEAR(report.map, want["map"].get<double>(), 1e-9);
  }
  for (int c = 0; c < 3; ++c) {
    std::vector<ScoredBox> ranked;
    for (const auto& d : dets) {
      if (d.class_id == c) ranked.push_back(d);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    std::vector<std::string> names;
    for (L l : match_detections(ranked, gt, c)) {
      names.push_back(l == TP ? "tp" : l == FP ? "fp" : "ignored");
    }
    EXPECT_EQ(names, expected["labels"][gt.classes[c]].get<std::vector<std::string>>());
  }
}

TEST(EvaluateMap, SelfEvaluationAndEmpty) {
  const auto gt = fixture_gt();
  std::vector<ScoredBox> self;
  for (const auto& g : gt.boxes) self.push_back({g.image, g.class_id, 1.0, g.box});
  for (auto mode : {ApMode::kVoc11, ApMode::kArea, ApMode::kCoco}) {
    EXPECT_EQ(evaluate_map(self, gt, mode).map, 1.0);
    EXPECT_EQ(evaluate_map({}, gt, mode).map, 0.0);
  }
}

TEST(EvaluateMap, RankOnlyDependence) {
  const auto gt = fixture_gt();
  const auto dets = fixture_dets(gt);
  const auto base = evaluate_map(dets, gt, ApMode::kArea);
  auto squashed = dets;
  for (auto& d : squashed) d.score = std::exp(3.0 * d.score) - 7.0;
  const auto moved = evaluate_map(squashed, gt, ApMode::kArea);
  for (std::size_t c = 0; c < base.classes.size(); ++c) EXPECT_EQ(base.classes[c].ap.ap, moved.classes[c].ap.ap);
  EXPECT_EQ(base.map, moved.map);
}

TEST(EvaluateMap, ClassesWithoutGroundTruthAreExcluded) {
  // "bird" only appears as a difficult object, so it has nothing to recall.
  const auto gt = gt_from(
      "{\"image\": \"a\", \"class\": \"cat\", \"bbox\": [0, 0, 10, 10]}\n"
      "{\"image\": \"a\", \"class\": \"bird\", \"bbox\": [20, 20, 30, 30], \"difficult\": true}\n");
  const auto dets = dets_from(R"({"image": "a", "class": "cat", "score": 0.5, "bbox": [0, 0, 10, 10]})", gt);
  const auto report = evaluate_map(dets, gt, ApMode::kVoc11);
  EXPECT_FALSE(report.classes[0].ap.defined);
  EXPECT_EQ(report.map, 1.0);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::kUsage;
}

TEST(Files, MalformedInputAndClassMismatch) {
  const auto gt = fixture_gt();
  EXPECT_EQ(kind_of([] { gt_from("{not json}\n"); }), ErrorKind::kInput);
  EXPECT_EQ(kind_of([] { gt_from(R"({"image": "a", "bbox": [0, 0, 1, 1]})"); }), ErrorKind::kInput);
  EXPECT_EQ(kind_of([] { gt_from(R"({"image": "a", "class": "x", "bbox": [0, 0, 1]})"); }), ErrorKind::kInput);
  EXPECT_EQ(kind_of([] { gt_from(R"({"image": "a", "class": "x", "bbox": [5, 0, 1, 1]})"); }), ErrorKind::kInput);
  EXPECT_EQ(kind_of([&] { dets_from(R"({"image": "a", "class": "cat", "bbox": [0, 0, 1, 1]})", gt); }),
            ErrorKind::kInput);
  try {
    dets_from("\n{\"image\": \"a\", \"class\": \"zebra\", \"score\": 1, \"bbox\": [0, 0, 1, 1]}\n", gt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
    EXPECT_NE(std::string(e.what()).find("class-table mismatch"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Files, DetectionLinesRoundTrip) {
  const auto gt = fixture_gt();
  std::ostringstream out;
  write_detection(out, "img9", "dog", 0.25, {1.5, 2.0, 3.25, 4.0});
  const auto back = dets_from(out.str(), gt);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].image, "img9");
  EXPECT_EQ(back[0].class_id, gt.class_id("dog"));
  EXPECT_EQ(back[0].score, 0.25);
  EXPECT_EQ(back[0].box, (detection::Box{1.5, 2.0, 3.25, 4.0}));
}

}  // namespace
}  // namespace dctdet::evaluation

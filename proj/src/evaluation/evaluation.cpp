#include "dctdet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "dctdet/error.hpp"

namespace dctdet::evaluation {
namespace {

using nlohmann::json;

struct Line {
  std::size_t number;
  json value;
};

std::vector<Line> read_lines(std::istream& in, const char* what) {
  std::vector<Line> lines;
  std::string text;
  for (std::size_t n = 1; std::getline(in, text); ++n) {
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      lines.push_back({n, json::parse(text)});
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kInput, std::string(what) + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return lines;
}

[[noreturn]] void bad_line(const char* what, std::size_t n, const std::string& message) {
  fail(ErrorKind::kInput, std::string(what) + " line " + std::to_string(n) + ": " + message);
}

detection::Box parse_box(const json& v, const char* what, std::size_t n) {
  if (!v.contains("bbox") || !v["bbox"].is_array() || v["bbox"].size() != 4) {
    bad_line(what, n, "\"bbox\" must be an array of 4 numbers");
  }
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v["bbox"][i].is_number()) bad_line(what, n, "\"bbox\" must be an array of 4 numbers");
    c[i] = v["bbox"][i].get<double>();
    if (!std::isfinite(c[i])) bad_line(what, n, "\"bbox\" has a non-finite coordinate");
  }
  if (c[2] < c[0] || c[3] < c[1]) bad_line(what, n, "\"bbox\" must be [xmin, ymin, xmax, ymax]");
  return {c[0], c[1], c[2], c[3]};
}

std::string string_field(const json& v, const char* key, const char* what, std::size_t n) {
  if (!v.is_object() || !v.contains(key) || !v[key].is_string()) {
    bad_line(what, n, std::string("missing string field \"") + key + "\"");
  }
  return v[key].get<std::string>();
}

// Rank order: descending score, ties keep input order.
std::vector<ScoredBox> ranked(const std::vector<ScoredBox>& dets, int class_id) {
  std::vector<ScoredBox> out;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
               [&](const ScoredBox& d) { return d.class_id == class_id; });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

}  // namespace

int GroundTruthSet::class_id(const std::string& name) const {
  const auto it = std::lower_bound(classes.begin(), classes.end(), name);
  return it != classes.end() && *it == name ? static_cast<int>(it - classes.begin()) : -1;
}

GroundTruthSet read_ground_truth(std::istream& in) {
  constexpr const char* what = "ground truth";
  const auto lines = read_lines(in, what);
  std::set<std::string> names;
  for (const auto& l : lines) names.insert(string_field(l.value, "class", what, l.number));
  GroundTruthSet gt;
  gt.classes.assign(names.begin(), names.end());
  for (const auto& l : lines) {
    GroundTruth g;
    g.image = string_field(l.value, "image", what, l.number);
    g.class_id = gt.class_id(l.value["class"].get<std::string>());
    g.box = parse_box(l.value, what, l.number);
    if (l.value.contains("difficult")) {
      if (!l.value["difficult"].is_boolean()) bad_line(what, l.number, "\"difficult\" must be a boolean");
      g.difficult = l.value["difficult"].get<bool>();
    }
    gt.boxes.push_back(std::move(g));
  }
  return gt;
}

std::vector<ScoredBox> read_detections(std::istream& in, const GroundTruthSet& gt) {
  constexpr const char* what = "detections";
  std::vector<ScoredBox> dets;
  for (const auto& l : read_lines(in, what)) {
    ScoredBox d;
    d.image = string_field(l.value, "image", what, l.number);
    const std::string name = string_field(l.value, "class", what, l.number);
    d.class_id = gt.class_id(name);
    if (d.class_id < 0) {
      bad_line(what, l.number, "class-table mismatch: \"" + name + "\" does not occur in the ground truth");
    }
    if (!l.value.contains("score") || !l.value["score"].is_number()) {
      bad_line(what, l.number, "missing numeric field \"score\"");
    }
    d.score = l.value["score"].get<double>();
    d.box = parse_box(l.value, what, l.number);
    dets.push_back(std::move(d));
  }
  return dets;
}

void write_detection(std::ostream& out, const std::string& image, const std::string& class_name, double score,
                     const detection::Box& box) {
  const nlohmann::ordered_json line = {{"image", image},
                     {"class", class_name},
                     {"score", score},
                     {"bbox", {box.xmin, box.ymin, box.xmax, box.ymax}}};
  out << line.dump() << '\n';
}

std::vector<Label> match_detections(const std::vector<ScoredBox>& dets, const GroundTruthSet& gt, int class_id,
                                    double iou_threshold) {
  if (class_id < 0 || class_id >= static_cast<int>(gt.classes.size())) {
    fail(ErrorKind::kInput, "unknown class id " + std::to_string(class_id));
  }
  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < gt.boxes.size(); ++i) {
    if (gt.boxes[i].class_id == class_id) by_image[gt.boxes[i].image].push_back(i);
  }
  std::vector<bool> claimed(gt.boxes.size(), false);
  std::vector<Label> labels;
  labels.reserve(dets.size());
  for (const auto& d : dets) {
    if (d.class_id != class_id) fail(ErrorKind::kInput, "detection of another class passed to matching");
    double best_iou = -1.0;
    std::size_t best = gt.boxes.size();
    if (const auto it = by_image.find(d.image); it != by_image.end()) {
      for (std::size_t g : it->second) {
        if (claimed[g]) continue;
        const double o = detection::iou(d.box, gt.boxes[g].box);
        if (o > best_iou) {
          best_iou = o;
          best = g;
        }
      }
    }
    if (best == gt.boxes.size() || best_iou < iou_threshold) {
      labels.push_back(Label::kFalsePositive);
    } else if (gt.boxes[best].difficult) {
      labels.push_back(Label::kIgnored);
    } else {
      claimed[best] = true;
      labels.push_back(Label::kTruePositive);
    }
  }
  return labels;
}

ApResult average_precision(const std::vector<Label>& labels, std::size_t num_gt, ApMode mode) {
  if (num_gt == 0) return {0.0, false};
  std::vector<double> precision, recall;
  std::size_t tp = 0, seen = 0;
  for (Label l : labels) {
    if (l == Label::kIgnored) continue;
    ++seen;
    if (l == Label::kTruePositive) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
  }
  if (mode == ApMode::kVoc11) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] >= r) best = std::max(best, precision[i]);
      }
      sum += best;
    }
    return {sum / 11.0, true};
  }
  // Area under the monotone precision envelope.
  std::vector<double> envelope = precision;
  for (std::size_t i = envelope.size(); i-- > 1;) envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
  double area = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    area += (recall[i] - prev_recall) * envelope[i];
    prev_recall = recall[i];
  }
  return {area, true};
}

MapReport evaluate_map(const std::vector<ScoredBox>& dets, const GroundTruthSet& gt, ApMode mode) {
  MapReport report;
  report.mode = mode;
  double sum = 0.0;
  std::size_t present = 0;
  for (int c = 0; c < static_cast<int>(gt.classes.size()); ++c) {
    ClassReport cls;
    cls.name = gt.classes[c];
    cls.num_gt = static_cast<std::size_t>(std::count_if(gt.boxes.begin(), gt.boxes.end(), [&](const GroundTruth& g) {
      return g.class_id == c && !g.difficult;
    }));
    const auto ranked_dets = ranked(dets, c);
    cls.num_detections = ranked_dets.size();
    if (mode == ApMode::kCoco) {
      double total = 0.0;
      for (int t = 0; t < 10; ++t) {
        const double threshold = 0.5 + 0.05 * t;
        const auto ap = average_precision(match_detections(ranked_dets, gt, c, threshold), cls.num_gt, ApMode::kArea);
        total += ap.ap;
        cls.ap.defined = ap.defined;
      }
      cls.ap.ap = total / 10.0;
    } else {
      cls.ap = average_precision(match_detections(ranked_dets, gt, c, 0.5), cls.num_gt, mode);
    }
    if (cls.num_gt > 0) {
      sum += cls.ap.ap;
      ++present;
    }
    report.classes.push_back(std::move(cls));
  }
  report.map = present > 0 ? sum / static_cast<double>(present) : 0.0;
  return report;
}

std::string mode_name(ApMode mode) {
  switch (mode) {
    case ApMode::kVoc11: return "voc11";
    case ApMode::kArea: return "area";
    case ApMode::kCoco: return "coco";
  }
  return "unknown";
}

}  // namespace dctdet::evaluation

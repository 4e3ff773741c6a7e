#include "dctdet/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dctdet/error.hpp"

namespace dctdet::detection {

double Box::area() const { return std::max(0.0, xmax - xmin) * std::max(0.0, ymax - ymin); }

std::size_t prior_count(std::span<const HeadGeometry> heads) {
  std::size_t n = 0;
  for (const auto& h : heads) n += static_cast<std::size_t>(h.h) * h.w * h.boxes;
  return n;
}

std::vector<PriorBox> generate_priors(std::span<const HeadGeometry> heads, const PriorConfig& config) {
  const std::size_t m = heads.size();
  std::vector<double> scales(m + 1);
  for (std::size_t k = 0; k < m; ++k) {
    scales[k] = m == 1 ? config.min_scale
                       : config.min_scale + (config.max_scale - config.min_scale) * static_cast<double>(k) /
                                                static_cast<double>(m - 1);
  }
  scales[m] = config.extra_scale;

  std::vector<PriorBox> priors;
  priors.reserve(prior_count(heads));
  for (std::size_t k = 0; k < m; ++k) {
    const auto& head = heads[k];
    if (head.boxes < 2 || head.boxes % 2 != 0) {
      fail(ErrorKind::kUsage, "boxes per cell must be an even count >= 2, got " + std::to_string(head.boxes));
    }
    const double s = scales[k];
    const double s_extra = std::sqrt(s * scales[k + 1]);
    for (int y = 0; y < head.h; ++y) {
      for (int x = 0; x < head.w; ++x) {
        const double cx = (x + 0.5) / head.w;
        const double cy = (y + 0.5) / head.h;
        priors.push_back({cx, cy, s, s});
        priors.push_back({cx, cy, s_extra, s_extra});
        for (int r = 2; r < 2 + (head.boxes - 2) / 2; ++r) {
          const double root = std::sqrt(static_cast<double>(r));
          priors.push_back({cx, cy, s * root, s / root});
          priors.push_back({cx, cy, s / root, s * root});
        }
      }
    }
  }
  return priors;
}

std::vector<Box> decode_boxes(std::span<const float> loc, std::span<const PriorBox> priors,
                              const std::array<double, 4>& variances) {
  if (loc.size() != priors.size() * 4) {
    fail(ErrorKind::kInput, "location output has " + std::to_string(loc.size() / 4) + " priors, expected " +
                                std::to_string(priors.size()));
  }
  std::vector<Box> boxes(priors.size());
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const PriorBox& p = priors[i];
    const double cx = p.cx + loc[4 * i] * variances[0] * p.w;
    const double cy = p.cy + loc[4 * i + 1] * variances[1] * p.h;
    const double w = p.w * std::exp(loc[4 * i + 2] * variances[2]);
    const double h = p.h * std::exp(loc[4 * i + 3] * variances[3]);
    boxes[i] = {std::clamp(cx - w / 2, 0.0, 1.0), std::clamp(cy - h / 2, 0.0, 1.0),
                std::clamp(cx + w / 2, 0.0, 1.0), std::clamp(cy + h / 2, 0.0, 1.0)};
  }
  return boxes;
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<std::size_t> nms(std::span<const Box> boxes, std::span<const double> scores, double iou_threshold,
                             std::size_t top_k) {
  if (boxes.size() != scores.size()) fail(ErrorKind::kUsage, "nms: box and score counts differ");
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (kept.size() >= top_k) break;
    const bool clear = std::all_of(kept.begin(), kept.end(),
                                   [&](std::size_t k) { return iou(boxes[idx], boxes[k]) <= iou_threshold; });
    if (clear) kept.push_back(idx);
  }
  return kept;
}

PostprocessResult postprocess(std::span<const float> loc, std::span<const float> conf, int num_classes,
                              std::span<const PriorBox> priors, const PostprocessConfig& config) {
  const std::size_t n = priors.size();
  if (num_classes < 2) fail(ErrorKind::kUsage, "need a background class plus at least one object class");
  if (conf.size() != n * static_cast<std::size_t>(num_classes)) {
    fail(ErrorKind::kInput, "confidence output does not match the prior count " + std::to_string(n));
  }
  const auto boxes = decode_boxes(loc, priors, config.variances);

  // Softmax per prior.
  std::vector<double> prob(conf.size());
  for (std::size_t i = 0; i < n; ++i) {
    const float* logits = conf.data() + i * num_classes;
    const double peak = *std::max_element(logits, logits + num_classes);
    double sum = 0.0;
    for (int c = 0; c < num_classes; ++c) sum += std::exp(logits[c] - peak);
    for (int c = 0; c < num_classes; ++c) prob[i * num_classes + c] = std::exp(logits[c] - peak) / sum;
  }

  PostprocessResult result;
  std::vector<Detection> all;
  for (int c = 1; c < num_classes; ++c) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (prob[i * num_classes + c] <= config.score_threshold) continue;
      if (boxes[i].xmax <= boxes[i].xmin || boxes[i].ymax <= boxes[i].ymin) {
        ++result.degenerate_dropped;
        continue;
      }
      candidates.push_back(i);
    }
    std::vector<Box> cand_boxes;
    std::vector<double> cand_scores;
    for (std::size_t i : candidates) {
      cand_boxes.push_back(boxes[i]);
      cand_scores.push_back(prob[i * num_classes + c]);
    }
    for (std::size_t k : nms(cand_boxes, cand_scores, config.iou_threshold, config.top_k)) {
      const std::size_t i = candidates[k];
      all.push_back({c, prob[i * num_classes + c], boxes[i]});
    }
  }

  // Cross-class cap: keep the highest scores, ties to the earlier entry.
  if (all.size() > config.keep_top_k) {
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return all[a].score > all[b].score; });
    order.resize(config.keep_top_k);
    std::sort(order.begin(), order.end());
    std::vector<Detection> capped;
    for (std::size_t i : order) capped.push_back(all[i]);
    all = std::move(capped);
  }
  result.detections = std::move(all);
  return result;
}

}  // namespace dctdet::detection

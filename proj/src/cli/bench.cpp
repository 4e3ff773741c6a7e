#include "dctdet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>

#include <json.hpp>

#include "dctdet/codec.hpp"
#include "dctdet/error.hpp"
#include "dctdet/parallel.hpp"

namespace dctdet::bench {
namespace {

using Clock = std::chrono::steady_clock;

// Keeps decode results observable so the work cannot be elided.
std::atomic<std::uint64_t> g_sink{0};

template <typename Decode>
double timed_run(const std::vector<CorpusFile>& corpus, const Config& config, Decode decode) {
  const auto start = Clock::now();
  for (int first = 0; first < config.per_run; first += config.batch) {
    const int n = std::min(config.batch, config.per_run - first);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      const auto& file = corpus[(static_cast<std::size_t>(first) + i) % corpus.size()];
      g_sink.fetch_add(decode(file.bytes), std::memory_order_relaxed);
    });
  }
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ModeStats summarize(std::vector<double> seconds, int per_run) {
  ModeStats s;
  s.run_seconds = std::move(seconds);
  const double n = static_cast<double>(s.run_seconds.size());
  std::vector<double> rates;
  for (double t : s.run_seconds) rates.push_back(per_run / t);
  s.mean_run_seconds = std::accumulate(s.run_seconds.begin(), s.run_seconds.end(), 0.0) / n;
  s.images_per_sec_mean = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rates) var += (r - s.images_per_sec_mean) * (r - s.images_per_sec_mean);
  s.images_per_sec_std = std::sqrt(var / (n - 1));
  return s;
}

std::uint64_t partial(const std::vector<std::uint8_t>& bytes) {
  const auto d = codec::partial_decode(bytes);
  return d.y.coeffs.size() + (d.cb ? d.cb->coeffs.size() : 0) + static_cast<std::uint64_t>(d.y.coeffs[0]);
}

std::uint64_t full(const std::vector<std::uint8_t>& bytes) {
  const auto image = codec::full_decode(bytes);
  return image.pixels.size() + image.pixels[0];
}

}  // namespace

std::vector<CorpusFile> load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::kInput, "corpus directory not found: " + dir);
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && (ext == ".jpg" || ext == ".jpeg")) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) fail(ErrorKind::kInput, "corpus directory has no .jpg files: " + dir);
  std::vector<CorpusFile> corpus;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorKind::kInput, "cannot read " + p.string());
    CorpusFile f;
    f.name = p.filename().string();
    f.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    corpus.push_back(std::move(f));
  }
  return corpus;
}

Report bench_decode(std::vector<CorpusFile> corpus, const Config& config) {
  if (config.runs < 2) fail(ErrorKind::kUsage, "--runs must be at least 2");
  if (config.batch < 1 || config.per_run < 1 || config.warmup < 0) {
    fail(ErrorKind::kUsage, "--batch and --per-run must be positive, --warmup non-negative");
  }
  if (corpus.empty()) fail(ErrorKind::kInput, "empty corpus");
  Report report;
  report.config = config;
  report.threads = thread_count();
  for (auto& f : corpus) {
    try {
      const auto s = codec::parse_markers(f.bytes);
      f.width = s.frame.width;
      f.height = s.frame.height;
    } catch (const Error& e) {
      throw Error(e.kind(), f.name + ": " + e.what());
    }
    report.total_bytes += f.bytes.size();
  }
  report.files = corpus.size();

  for (int i = 0; i < config.warmup; ++i) {
    timed_run(corpus, config, partial);
    timed_run(corpus, config, full);
  }
  std::vector<double> partial_s, full_s;
  for (int i = 0; i < config.runs; ++i) {
    partial_s.push_back(timed_run(corpus, config, partial));
    full_s.push_back(timed_run(corpus, config, full));
  }
  report.partial = summarize(std::move(partial_s), config.per_run);
  report.full = summarize(std::move(full_s), config.per_run);
  report.ratio = report.full.mean_run_seconds / report.partial.mean_run_seconds;
  for (auto& f : corpus) f.bytes.clear();
  report.corpus = std::move(corpus);
  return report;
}

std::string to_json(const Report& r) {
  using json = nlohmann::ordered_json;
  auto mode = [](const ModeStats& s) {
    return json{{"run_seconds", s.run_seconds},
                {"mean_run_seconds", s.mean_run_seconds},
                {"images_per_sec_mean", s.images_per_sec_mean},
                {"images_per_sec_std", s.images_per_sec_std}};
  };
  json images = json::array();
  for (const auto& f : r.corpus) images.push_back({{"file", f.name}, {"width", f.width}, {"height", f.height}});
  const json doc = {
      {"corpus", {{"files", r.files}, {"total_bytes", r.total_bytes}, {"images", images}}},
      {"config",
       {{"runs", r.config.runs},
        {"batch", r.config.batch},
        {"per_run", r.config.per_run},
        {"warmup", r.config.warmup},
        {"threads", r.threads}}},
      {"partial_dct", mode(r.partial)},
      {"full_rgb", mode(r.full)},
      {"ratio", r.ratio},
  };
  return doc.dump(2);
}

}  // namespace dctdet::bench

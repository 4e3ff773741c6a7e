#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dctdet::bench {

struct Config {
  int runs = 10;
  int batch = 8;
  int per_run = 200;  // decodes per run, cycling through the corpus
  int warmup = 1;     // untimed runs before measurement
};

struct CorpusFile {
  std::string name;
  std::vector<std::uint8_t> bytes;
  int width = 0;
  int height = 0;
};

struct ModeStats {
  std::vector<double> run_seconds;
  double images_per_sec_mean = 0.0;
  double images_per_sec_std = 0.0;  // sample standard deviation over runs
  double mean_run_seconds = 0.0;
};

struct Report {
  Config config;
  int threads = 1;
  std::size_t files = 0;
  std::size_t total_bytes = 0;
  std::vector<CorpusFile> corpus;  // bytes dropped after the run
  ModeStats partial;
  ModeStats full;
  double ratio = 0.0;  // full mean run time / partial mean run time
};

// Reads every *.jpg in dir (sorted by name) into memory.
std::vector<CorpusFile> load_corpus(const std::string& dir);

// Each run decodes per_run images in batches of `batch`, a batch spread over
// the worker pool, once with the partial decode and once with the full decode.
Report bench_decode(std::vector<CorpusFile> corpus, const Config& config);

std::string to_json(const Report& report);

}  // namespace dctdet::bench

#include "dctdet/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "dctdet/bench.hpp"
#include "dctdet/codec.hpp"
#include "dctdet/evaluation.hpp"
#include "dctdet/graph.hpp"
#include "dctdet/infer.hpp"
#include "dctdet/tensor_file.hpp"
#include "dctdet/zoo.hpp"

namespace dctdet::cli {
namespace {

using json = nlohmann::ordered_json;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kInput, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Prefixes codec errors with the file they came from.
template <typename F>
auto with_file(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

std::string component_name(std::size_t index, std::size_t count) {
  if (count == 1) return "Y";
  return index == 0 ? "Y" : index == 1 ? "Cb" : "Cr";
}

std::string sampling_name(const codec::FrameHeader& f) {
  if (f.components.size() == 1) return "grayscale";
  const bool all_one = std::all_of(f.components.begin(), f.components.end(),
                                   [](const auto& c) { return c.h == 1 && c.v == 1; });
  return all_one ? "4:4:4" : "4:2:0";
}

json shape_json(const graph::Shape& s) { return json::array({s.h, s.w, s.c}); }

zoo::ArchitectureId arch_or_fail(const std::string& name) {
  const auto id = zoo::parse_arch(name);
  if (!id) fail(ErrorKind::kUsage, "unknown architecture '" + name + "'; valid ids: " + zoo::valid_arch_list());
  return *id;
}

// --- inspect ---------------------------------------------------------------

struct InspectArgs {
  std::string file;
  bool json = false;
};

void cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const auto bytes = read_file(a.file);
  const auto s = with_file(a.file, [&] { return codec::parse_markers(bytes); });
  const auto& f = s.frame;
  const std::size_t nc = f.components.size();

  json markers = json::array();
  for (const auto& m : s.markers) {
    markers.push_back({{"marker", codec::marker_name(m.code)}, {"offset", m.offset}, {"length", m.length}});
  }
  json opaque = json::array();
  for (const auto& m : s.opaque_segments) {
    opaque.push_back({{"marker", codec::marker_name(m.code)}, {"offset", m.offset}, {"length", m.length}});
  }
  json components = json::array();
  json planes = json::array();
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& c = f.components[i];
    const auto& sc = s.scan.components.at(i);
    const auto grid = codec::component_grid(f, i);
    components.push_back({{"name", component_name(i, nc)},
                          {"id", c.id},
                          {"sampling", {c.h, c.v}},
                          {"quant_table", c.quant_table},
                          {"dc_table", sc.dc_table},
                          {"ac_table", sc.ac_table}});
    planes.push_back({{"name", component_name(i, nc)},
                      {"blocks_wide", grid.blocks_wide},
                      {"blocks_high", grid.blocks_high}});
  }
  json quant = json::array(), dc = json::array(), ac = json::array();
  for (int t = 0; t < 4; ++t) {
    if (s.quant_tables[t]) quant.push_back(t);
    if (s.dc_tables[t]) dc.push_back(t);
    if (s.ac_tables[t]) ac.push_back(t);
  }

  if (a.json) {
    const json doc = {{"file", a.file},
                      {"bytes", bytes.size()},
                      {"frame", {{"type", "SOF0"}, {"precision", f.precision}, {"width", f.width}, {"height", f.height}}},
                      {"sampling", sampling_name(f)},
                      {"components", components},
                      {"quant_tables", quant},
                      {"huffman_tables", {{"dc", dc}, {"ac", ac}}},
                      {"restart_interval", s.restart_interval},
                      {"entropy_offset", s.entropy_offset},
                      {"entropy_bytes", s.entropy_data.size()},
                      {"markers", markers},
                      {"opaque_segments", opaque},
                      {"dct_planes", planes}};
    out << doc.dump(2) << '\n';
    return;
  }
  auto ids = [](const json& list) {
    std::string s;
    for (const auto& v : list) s += (s.empty() ? "" : ", ") + std::to_string(v.get<int>());
    return s.empty() ? std::string("none") : s;
  };
  out << "file: " << a.file << " (" << bytes.size() << " bytes)\n";
  out << "frame: SOF0 baseline, " << int(f.precision) << "-bit, " << f.width << "x" << f.height << ", " << nc
      << (nc == 1 ? " component" : " components") << "\n";
  out << "sampling: " << sampling_name(f) << "\n";
  for (const auto& c : components) {
    out << "  " << c["name"].get<std::string>() << ": id " << c["id"] << ", sampling " << c["sampling"][0] << "x"
        << c["sampling"][1] << ", quant table " << c["quant_table"] << ", DC table " << c["dc_table"]
        << ", AC table " << c["ac_table"] << "\n";
  }
  out << "quant tables: " << ids(quant) << "\n";
  out << "huffman tables: DC " << ids(dc) << "; AC " << ids(ac) << "\n";
  out << "restart interval: " << s.restart_interval << "\n";
  out << "markers:";
  for (const auto& m : s.markers) out << " " << codec::marker_name(m.code) << "@" << m.offset;
  out << "\n";
  out << "dct planes: ";
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& p = planes[i];
    out << (i ? ", " : "") << p["name"].get<std::string>() << ": " << p["blocks_wide"] << "×" << p["blocks_high"]
        << (i == 0 ? " blocks" : "");
  }
  out << "\n";
}

// --- decode ----------------------------------------------------------------

struct DecodeArgs {
  std::string file;
  std::string mode = "partial";
  std::string out;
  bool json = false;
};

void cmd_decode(const DecodeArgs& a, std::ostream& out) {
  const auto bytes = read_file(a.file);
  std::ofstream file(a.out, std::ios::binary);
  if (!file) fail(ErrorKind::kInput, "cannot write " + a.out);
  json summary = {{"file", a.file}, {"mode", a.mode}, {"out", a.out}};
  if (a.mode == "partial") {
    const auto d = with_file(a.file, [&] { return codec::partial_decode(bytes); });
    std::vector<codec::DctPlane> planes = {d.y};
    if (d.cb) planes.push_back(*d.cb);
    if (d.cr) planes.push_back(*d.cr);
    codec::write_tensor_file(file, planes);
    json shapes = json::array();
    for (const auto& p : planes) shapes.push_back({p.blocks_high, p.blocks_wide, 64});
    summary["planes"] = shapes;
  } else {
    const auto image = with_file(a.file, [&] { return codec::full_decode(bytes); });
    codec::write_ppm(file, image);
    summary["width"] = image.width;
    summary["height"] = image.height;
  }
  file.close();
  if (!file) fail(ErrorKind::kInput, "failed writing " + a.out);
  if (a.json) out << summary.dump(2) << '\n';
}

// --- bench-decode ----------------------------------------------------------

struct BenchArgs {
  std::string dir;
  bench::Config config;
};

void cmd_bench(const BenchArgs& a, std::ostream& out) {
  out << bench::to_json(bench::bench_decode(bench::load_corpus(a.dir), a.config)) << '\n';
}

// --- infer -----------------------------------------------------------------

struct InferArgs {
  std::vector<std::string> files;
  std::string arch;
  std::string weights;
  std::optional<std::uint64_t> seed;
  infer::Options options;
  bool no_l2norm = false;
  bool json = false;
};

void cmd_infer(const InferArgs& a, std::ostream& out) {
  const auto id = arch_or_fail(a.arch);
  zoo::BuildOptions build;
  build.l2norm = !a.no_l2norm;
  const auto model = zoo::build(id, build);
  if (!model.is_detector()) {
    fail(ErrorKind::kUsage, a.arch + " is a classification backbone; infer needs a detector");
  }
  graph::Weights weights;
  if (!a.weights.empty()) {
    std::ifstream in(a.weights, std::ios::binary);
    if (!in) fail(ErrorKind::kInput, "cannot read weights " + a.weights);
    weights = graph::read_weights(in);
  } else if (a.seed) {
    weights = graph::seed_weights(model.graph, *a.seed);
  } else {
    fail(ErrorKind::kUsage, "missing weights: pass --weights <file> or --seed <n>");
  }

  const auto& names = infer::voc_class_names();
  json images = json::array();
  for (const auto& path : a.files) {
    const auto bytes = read_file(path);
    const auto result = with_file(path, [&] { return infer::run(model, weights, bytes, a.options); });
    const std::string image = std::filesystem::path(path).filename().string();
    json dets = json::array();
    for (const auto& d : result.post.detections) {
      const detection::Box px{d.box.xmin * result.width, d.box.ymin * result.height, d.box.xmax * result.width,
                              d.box.ymax * result.height};
      const std::string cls =
          d.class_id < static_cast<int>(names.size()) ? names[d.class_id] : "class" + std::to_string(d.class_id);
      if (a.json) {
        dets.push_back({{"class", cls}, {"score", d.score}, {"bbox", {px.xmin, px.ymin, px.xmax, px.ymax}}});
      } else {
        evaluation::write_detection(out, image, cls, d.score, px);
      }
    }
    if (a.json) {
      images.push_back({{"image", image},
                        {"width", result.width},
                        {"height", result.height},
                        {"degenerate_dropped", result.post.degenerate_dropped},
                        {"detections", dets}});
    }
  }
  if (a.json) out << json{{"arch", a.arch}, {"images", images}}.dump(2) << '\n';
}

// --- flops -----------------------------------------------------------------

struct FlopsArgs {
  std::vector<std::string> archs;
  bool all = false;
  bool layers = false;
};

void cmd_flops(const FlopsArgs& a, std::ostream& out) {
  std::vector<zoo::ArchitectureId> ids;
  if (a.all) {
    ids.assign(zoo::all_ids().begin(), zoo::all_ids().end());
  } else {
    for (const auto& name : a.archs) ids.push_back(arch_or_fail(name));
  }
  if (ids.empty()) fail(ErrorKind::kUsage, "flops needs --arch <id> or --all");
  json table = json::array();
  for (auto id : ids) {
    const auto model = zoo::build(id);
    const auto report = graph::flop_count(model.graph);
    json inputs = json::array();
    for (const auto& in : model.inputs) {
      inputs.push_back({{"name", in.name}, {"shape", shape_json(in.shape)}, {"elements", in.shape.elements()}});
    }
    json entry = {{"arch", zoo::arch_name(id)},
                  {"kind", model.is_detector() ? "detector" : "backbone"},
                  {"macs", report.total_macs},
                  {"elementwise", report.total_elementwise},
                  {"layers_count", model.graph.size()},
                  {"inputs", inputs},
                  {"input_elements", zoo::input_elements(model)}};
    if (a.layers) {
      json rows = json::array();
      for (std::size_t i = 0; i < report.layers.size(); ++i) {
        const auto& l = report.layers[i];
        rows.push_back({{"name", l.name},
                        {"kind", graph::kind_name(l.kind)},
                        {"shape", shape_json(model.graph.shape(static_cast<int>(i)))},
                        {"macs", l.macs},
                        {"elementwise", l.elementwise}});
      }
      entry["layers"] = rows;
    }
    table.push_back(entry);
  }
  out << json{{"architectures", table}}.dump(2) << '\n';
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string detections;
  std::string ground_truth;
  std::string mode = "voc11";
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  evaluation::ApMode mode = evaluation::ApMode::kVoc11;
  if (a.mode == "area") mode = evaluation::ApMode::kArea;
  if (a.mode == "coco") mode = evaluation::ApMode::kCoco;
  std::ifstream gt_in(a.ground_truth);
  if (!gt_in) fail(ErrorKind::kInput, "cannot read " + a.ground_truth);
  const auto gt = with_file(a.ground_truth, [&] { return evaluation::read_ground_truth(gt_in); });
  std::ifstream det_in(a.detections);
  if (!det_in) fail(ErrorKind::kInput, "cannot read " + a.detections);
  const auto dets = with_file(a.detections, [&] { return evaluation::read_detections(det_in, gt); });
  const auto report = evaluation::evaluate_map(dets, gt, mode);
  json classes = json::array();
  for (const auto& c : report.classes) {
    classes.push_back({{"class", c.name},
                       {"ap", c.ap.ap},
                       {"defined", c.ap.defined},
                       {"num_gt", c.num_gt},
                       {"num_detections", c.num_detections}});
  }
  out << json{{"mode", a.mode}, {"map", report.map}, {"classes", classes}}.dump(2) << '\n';
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 1;
    case ErrorKind::kInput: return 2;
    case ErrorKind::kUnsupported: return 3;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressed-domain JPEG detection toolkit"};
  app.name("dctdet");
  app.require_subcommand(1);

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect", "Dump the marker structure of a baseline JPEG");
  c_inspect->add_option("file", inspect.file, "JPEG file")->required();
  c_inspect->add_flag("--json", inspect.json, "Emit one JSON document");

  DecodeArgs decode;
  bool decode_json = false;
  auto* c_decode = app.add_subcommand("decode", "Decode to DCT planes (DCTT) or RGB (PPM)");
  c_decode->add_option("file", decode.file, "JPEG file")->required();
  c_decode->add_option("--mode", decode.mode, "partial or full")->check(CLI::IsMember({"partial", "full"}));
  c_decode->add_option("--out", decode.out, "Output path")->required();
  c_decode->add_flag("--json", decode_json, "Emit a JSON summary");

  BenchArgs bench_args;
  auto* c_bench = app.add_subcommand("bench-decode", "Time partial against full decoding on a corpus");
  c_bench->add_option("corpus", bench_args.dir, "Directory of .jpg files")->required();
  c_bench->add_option("--runs", bench_args.config.runs, "Timed runs")->capture_default_str();
  c_bench->add_option("--batch", bench_args.config.batch, "Images per batch")->capture_default_str();
  c_bench->add_option("--per-run", bench_args.config.per_run, "Decodes per run")->capture_default_str();
  c_bench->add_option("--warmup", bench_args.config.warmup, "Untimed runs")->capture_default_str();
  c_bench->add_flag("--json", "Accepted for uniformity; the report is always JSON");

  InferArgs infer_args;
  std::uint64_t seed = 0;
  auto* c_infer = app.add_subcommand("infer", "Run a detector on JPEG files and print detections");
  c_infer->add_option("files", infer_args.files, "JPEG files")->required();
  c_infer->add_option("--arch", infer_args.arch, "Architecture id")->required();
  auto* o_weights = c_infer->add_option("--weights", infer_args.weights, "WTS1 weight file");
  auto* o_seed = c_infer->add_option("--seed", seed, "Seed for generated weights");
  o_weights->excludes(o_seed);
  c_infer->add_option("--score-thr", infer_args.options.post.score_threshold, "Score threshold")->capture_default_str();
  c_infer->add_option("--iou-thr", infer_args.options.post.iou_threshold, "NMS IoU threshold")->capture_default_str();
  c_infer->add_option("--top-k", infer_args.options.post.top_k, "Detections kept per class")->capture_default_str();
  c_infer->add_option("--keep-top-k", infer_args.options.post.keep_top_k, "Detections kept per image")
      ->capture_default_str();
  c_infer->add_flag("--crop-blocks", infer_args.options.crop_blocks, "Centre-crop larger DCT grids to the input");
  c_infer->add_flag("--no-l2norm", infer_args.no_l2norm, "Build VGG detectors without L2 normalization");
  c_infer->add_flag("--json", infer_args.json, "Emit one JSON document instead of JSON lines");

  FlopsArgs flops;
  auto* c_flops = app.add_subcommand("flops", "Report multiply-accumulate counts per architecture");
  c_flops->add_option("--arch", flops.archs, "Architecture id (repeatable)");
  c_flops->add_flag("--all", flops.all, "Every architecture");
  c_flops->add_flag("--layers", flops.layers, "Include per-layer rows");
  c_flops->add_flag("--json", "Accepted for uniformity; the report is always JSON");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Compute per-class AP and mAP");
  c_eval->add_option("detections", eval.detections, "Detections (JSON lines)")->required();
  c_eval->add_option("ground_truth", eval.ground_truth, "Ground truth (JSON lines)")->required();
  c_eval->add_option("--mode", eval.mode, "voc11, area or coco")
      ->check(CLI::IsMember({"voc11", "area", "coco"}))
      ->capture_default_str();
  c_eval->add_flag("--json", "Accepted for uniformity; the report is always JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::kUsage);
  }

  try {
    if (c_inspect->parsed()) cmd_inspect(inspect, out);
    if (c_decode->parsed()) {
      decode.json = decode_json;
      cmd_decode(decode, out);
    }
    if (c_bench->parsed()) cmd_bench(bench_args, out);
    if (c_infer->parsed()) {
      if (o_seed->count() > 0) infer_args.seed = seed;
      cmd_infer(infer_args, out);
    }
    if (c_flops->parsed()) cmd_flops(flops, out);
    if (c_eval->parsed()) cmd_eval(eval, out);
  } catch (const Error& e) {
    err << "dctdet: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "dctdet: " << e.what() << '\n';
    return exit_code(ErrorKind::kInput);
  }
  out.flush();
  return 0;
}

}  // namespace dctdet::cli

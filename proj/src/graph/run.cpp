#include <optional>

#include "dctdet/error.hpp"
#include "dctdet/graph.hpp"

namespace dctdet::graph {
namespace {

std::span<const float> record(const Weights& w, const std::string& key) {
  const auto it = w.find(key);
  if (it == w.end()) fail(ErrorKind::kInput, "missing weight record '" + key + "'");
  return it->second.values;
}

Tensor execute(const Graph& g, const LayerSpec& l, const Weights& w, const std::vector<std::optional<Tensor>>& values) {
  const auto in = [&](std::size_t i) -> const Tensor& { return *values[static_cast<std::size_t>(l.inputs[i])]; };
  switch (l.kind) {
    case LayerKind::kConv:
      return conv2d(in(0), l, record(w, l.name + ".kernel"), record(w, l.name + ".bias"));
    case LayerKind::kDeconv:
      return deconv2d(in(0), l, record(w, l.name + ".kernel"), record(w, l.name + ".bias"));
    case LayerKind::kBatchNorm:
      return batchnorm(in(0), record(w, l.name + ".bn_gamma"), record(w, l.name + ".bn_beta"),
                       record(w, l.name + ".bn_mean"), record(w, l.name + ".bn_var"), l.epsilon);
    case LayerKind::kRelu:
      return relu(in(0));
    case LayerKind::kMaxPool:
      return maxpool(in(0), l.kernel, l.stride, l.padding);
    case LayerKind::kConcat: {
      std::vector<const Tensor*> parts;
      for (std::size_t i = 0; i < l.inputs.size(); ++i) parts.push_back(&in(i));
      return concat(parts);
    }
    case LayerKind::kL2Norm:
      return l2norm(in(0), record(w, l.name + ".scale"));
    case LayerKind::kGlobalAvgPool:
      return global_avg_pool(in(0));
    case LayerKind::kAdd:
      return add(in(0), in(1));
    case LayerKind::kSlice:
      return slice_channels(in(0), l.slice_begin, l.slice_end);
    case LayerKind::kInput:
      break;
  }
  (void)g;
  fail(ErrorKind::kUsage, "cannot execute layer '" + l.name + "'");
}

}  // namespace

TensorMap run_graph(const Graph& g, const Weights& w, const TensorMap& inputs,
                    std::span<const std::string> outputs) {
  check_weights(g, w);
  std::vector<int> wanted;
  if (outputs.empty()) {
    wanted = g.sinks();
  } else {
    for (const auto& name : outputs) wanted.push_back(g.index(name));
  }

  const std::size_t n = g.size();
  std::vector<int> uses(n, 0);
  for (const auto& l : g.layers()) {
    for (int i : l.inputs) ++uses[static_cast<std::size_t>(i)];
  }
  std::vector<bool> keep(n, false);
  for (int id : wanted) keep[static_cast<std::size_t>(id)] = true;

  std::vector<std::optional<Tensor>> values(n);
  for (std::size_t id = 0; id < n; ++id) {
    const LayerSpec& l = g.layer(static_cast<int>(id));
    if (l.kind == LayerKind::kInput) {
      const auto it = inputs.find(l.name);
      if (it == inputs.end()) fail(ErrorKind::kInput, "missing graph input '" + l.name + "'");
      if (it->second.shape != l.input_shape) {
        fail(ErrorKind::kInput, "graph input '" + l.name + "': expected shape " + to_string(l.input_shape) +
                                    ", got " + to_string(it->second.shape));
      }
      values[id] = it->second;
      continue;
    }
    Tensor out = execute(g, l, w, values);
    if (out.shape != g.shape(static_cast<int>(id))) {
      fail(ErrorKind::kInput, "layer '" + l.name + "': expected shape " + to_string(g.shape(static_cast<int>(id))) +
                                  ", got " + to_string(out.shape));
    }
    values[id] = std::move(out);
    for (int i : l.inputs) {
      const auto src = static_cast<std::size_t>(i);
      if (--uses[src] == 0 && !keep[src]) values[src].reset();
    }
  }

  TensorMap result;
  for (int id : wanted) result.emplace(g.layer(id).name, *values[static_cast<std::size_t>(id)]);
  return result;
}

FlopReport flop_count(const Graph& g) {
  FlopReport report;
  for (std::size_t id = 0; id < g.size(); ++id) {
    const LayerSpec& l = g.layer(static_cast<int>(id));
    const Shape out = g.shape(static_cast<int>(id));
    LayerCost cost{l.name, l.kind, 0, 0};
    const auto k2 = static_cast<std::uint64_t>(l.kernel) * static_cast<std::uint64_t>(l.kernel);
    switch (l.kind) {
      case LayerKind::kConv:
        cost.macs = k2 * static_cast<std::uint64_t>(g.input_shape(l).c) * out.elements();
        break;
      case LayerKind::kDeconv:
        cost.macs = k2 * g.input_shape(l).elements() * static_cast<std::uint64_t>(l.out_channels);
        break;
      case LayerKind::kBatchNorm:
      case LayerKind::kRelu:
      case LayerKind::kL2Norm:
      case LayerKind::kAdd:
        cost.elementwise = out.elements();
        break;
      case LayerKind::kMaxPool:
        cost.elementwise = out.elements() * k2;
        break;
      case LayerKind::kGlobalAvgPool:
        cost.elementwise = g.input_shape(l).elements();
        break;
      case LayerKind::kInput:
      case LayerKind::kConcat:
      case LayerKind::kSlice:
        break;
    }
    report.total_macs += cost.macs;
    report.total_elementwise += cost.elementwise;
    report.layers.push_back(std::move(cost));
  }
  return report;
}

}  // namespace dctdet::graph

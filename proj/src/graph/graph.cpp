#include <algorithm>

#include "dctdet/error.hpp"
#include "dctdet/graph.hpp"

namespace dctdet::graph {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.h) + "," + std::to_string(s.w) + "," + std::to_string(s.c) + ")";
}

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kInput: return "input";
    case LayerKind::kConv: return "conv";
    case LayerKind::kDeconv: return "deconv";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kL2Norm: return "l2norm";
    case LayerKind::kGlobalAvgPool: return "global_avg_pool";
    case LayerKind::kAdd: return "add";
    case LayerKind::kSlice: return "slice";
  }
  return "unknown";
}

int output_extent(int n, int kernel, int stride, int dilation, Padding padding) {
  if (padding == Padding::kSame) return (n + stride - 1) / stride;
  const int span = (kernel - 1) * dilation + 1;
  return n < span ? 0 : (n - span) / stride + 1;
}

int leading_pad(int n, int kernel, int stride, int dilation, Padding padding) {
  if (padding == Padding::kValid) return 0;
  const int out = output_extent(n, kernel, stride, dilation, padding);
  const int total = std::max((out - 1) * stride + (kernel - 1) * dilation + 1 - n, 0);
  return total / 2;
}

namespace {

[[noreturn]] void shape_error(const LayerSpec& spec, const std::string& what) {
  fail(ErrorKind::kInput, "shape propagation failed at layer '" + spec.name + "': " + what);
}

}  // namespace

Shape Graph::propagate(const LayerSpec& spec) const {
  const auto need_inputs = [&](std::size_t n) {
    if (spec.inputs.size() != n) {
      shape_error(spec, "expected " + std::to_string(n) + " input(s), got " +
                            std::to_string(spec.inputs.size()));
    }
  };
  switch (spec.kind) {
    case LayerKind::kInput:
      if (!spec.inputs.empty()) shape_error(spec, "input layers take no edges");
      if (spec.input_shape.elements() == 0) shape_error(spec, "empty input shape");
      return spec.input_shape;
    case LayerKind::kConv: {
      need_inputs(1);
      const Shape in = input_shape(spec);
      if (spec.out_channels <= 0 || spec.kernel <= 0 || spec.stride <= 0 || spec.dilation <= 0) {
        shape_error(spec, "non-positive convolution parameter");
      }
      const Shape out{output_extent(in.h, spec.kernel, spec.stride, spec.dilation, spec.padding),
                      output_extent(in.w, spec.kernel, spec.stride, spec.dilation, spec.padding),
                      spec.out_channels};
      if (out.h <= 0 || out.w <= 0) {
        shape_error(spec, "non-positive output dims from input " + to_string(in));
      }
      return out;
    }
    case LayerKind::kDeconv: {
      need_inputs(1);
      if (spec.kernel != 2 || spec.stride != 2) {
        shape_error(spec, "unsupported deconvolution kernel/stride (only 2/2)");
      }
      const Shape in = input_shape(spec);
      return {in.h * 2, in.w * 2, spec.out_channels};
    }
    case LayerKind::kBatchNorm:
    case LayerKind::kRelu:
    case LayerKind::kL2Norm:
      need_inputs(1);
      return input_shape(spec);
    case LayerKind::kMaxPool: {
      need_inputs(1);
      const Shape in = input_shape(spec);
      if (spec.kernel > in.h || spec.kernel > in.w) {
        shape_error(spec, "pool " + std::to_string(spec.kernel) + " larger than input " + to_string(in));
      }
      return {output_extent(in.h, spec.kernel, spec.stride, 1, spec.padding),
              output_extent(in.w, spec.kernel, spec.stride, 1, spec.padding), in.c};
    }
    case LayerKind::kConcat: {
      if (spec.inputs.empty()) shape_error(spec, "concat needs inputs");
      Shape out = input_shape(spec);
      out.c = 0;
      for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
        const Shape s = input_shape(spec, i);
        if (s.h != out.h || s.w != out.w) {
          shape_error(spec, "expected spatial " + std::to_string(out.h) + "x" + std::to_string(out.w) +
                                ", got " + to_string(s) + " from '" + layer(spec.inputs[i]).name + "'");
        }
        out.c += s.c;
      }
      return out;
    }
    case LayerKind::kGlobalAvgPool: {
      need_inputs(1);
      return {1, 1, input_shape(spec).c};
    }
    case LayerKind::kAdd: {
      need_inputs(2);
      const Shape a = input_shape(spec, 0);
      const Shape b = input_shape(spec, 1);
      if (a != b) shape_error(spec, "expected " + to_string(a) + ", got " + to_string(b));
      return a;
    }
    case LayerKind::kSlice: {
      need_inputs(1);
      Shape s = input_shape(spec);
      if (spec.slice_begin < 0 || spec.slice_end > s.c || spec.slice_begin >= spec.slice_end) {
        shape_error(spec, "channel range out of bounds for " + to_string(s));
      }
      s.c = spec.slice_end - spec.slice_begin;
      return s;
    }
  }
  shape_error(spec, "unknown layer kind");
}

int Graph::add_layer(LayerSpec spec) {
  if (spec.name.empty()) fail(ErrorKind::kUsage, "layer name must not be empty");
  if (by_name_.contains(spec.name)) fail(ErrorKind::kUsage, "duplicate layer name '" + spec.name + "'");
  for (int in : spec.inputs) {
    if (in < 0 || static_cast<std::size_t>(in) >= layers_.size()) {
      shape_error(spec, "input edge refers to a layer not yet defined");
    }
  }
  if (spec.kind != LayerKind::kInput && spec.inputs.empty()) {
    shape_error(spec, "non-input layer without input edges");
  }
  const Shape shape = propagate(spec);
  const int id = static_cast<int>(layers_.size());
  by_name_.emplace(spec.name, id);
  layers_.push_back(std::move(spec));
  shapes_.push_back(shape);
  return id;
}

int Graph::input(std::string name, Shape shape) {
  LayerSpec s;
  s.kind = LayerKind::kInput;
  s.name = std::move(name);
  s.input_shape = shape;
  return add_layer(std::move(s));
}

int Graph::conv(std::string name, int in, int out_channels, int kernel, int stride, Padding padding,
                int dilation) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.name = std::move(name);
  s.inputs = {in};
  s.out_channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  s.dilation = dilation;
  return add_layer(std::move(s));
}

int Graph::deconv(std::string name, int in, int out_channels) {
  LayerSpec s;
  s.kind = LayerKind::kDeconv;
  s.name = std::move(name);
  s.inputs = {in};
  s.out_channels = out_channels;
  s.kernel = 2;
  s.stride = 2;
  s.padding = Padding::kValid;
  return add_layer(std::move(s));
}

int Graph::batchnorm(std::string name, int in, float epsilon) {
  LayerSpec s;
  s.kind = LayerKind::kBatchNorm;
  s.name = std::move(name);
  s.inputs = {in};
  s.epsilon = epsilon;
  return add_layer(std::move(s));
}

int Graph::relu(std::string name, int in) {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  s.name = std::move(name);
  s.inputs = {in};
  return add_layer(std::move(s));
}

int Graph::maxpool(std::string name, int in, int pool, int stride, Padding padding) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool;
  s.name = std::move(name);
  s.inputs = {in};
  s.kernel = pool;
  s.stride = stride;
  s.padding = padding;
  return add_layer(std::move(s));
}

int Graph::concat(std::string name, std::vector<int> inputs) {
  LayerSpec s;
  s.kind = LayerKind::kConcat;
  s.name = std::move(name);
  s.inputs = std::move(inputs);
  return add_layer(std::move(s));
}

int Graph::l2norm(std::string name, int in) {
  LayerSpec s;
  s.kind = LayerKind::kL2Norm;
  s.name = std::move(name);
  s.inputs = {in};
  return add_layer(std::move(s));
}

int Graph::global_avg_pool(std::string name, int in) {
  LayerSpec s;
  s.kind = LayerKind::kGlobalAvgPool;
  s.name = std::move(name);
  s.inputs = {in};
  return add_layer(std::move(s));
}

int Graph::add(std::string name, int a, int b) {
  LayerSpec s;
  s.kind = LayerKind::kAdd;
  s.name = std::move(name);
  s.inputs = {a, b};
  return add_layer(std::move(s));
}

int Graph::slice(std::string name, int in, int begin, int end) {
  LayerSpec s;
  s.kind = LayerKind::kSlice;
  s.name = std::move(name);
  s.inputs = {in};
  s.slice_begin = begin;
  s.slice_end = end;
  return add_layer(std::move(s));
}

int Graph::find(std::string_view name) const {
  const auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? -1 : it->second;
}

int Graph::index(std::string_view name) const {
  const int id = find(name);
  if (id < 0) fail(ErrorKind::kUsage, "no layer named '" + std::string(name) + "'");
  return id;
}

std::vector<int> Graph::input_layers() const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::kInput) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

std::vector<int> Graph::sinks() const {
  std::vector<bool> consumed(layers_.size(), false);
  for (const auto& l : layers_) {
    for (int in : l.inputs) consumed[static_cast<std::size_t>(in)] = true;
  }
  std::vector<int> ids;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!consumed[i]) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

}  // namespace dctdet::graph

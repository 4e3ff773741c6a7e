#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dctdet::graph {

struct Shape {
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t elements() const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
  }
  auto operator<=>(const Shape&) const = default;
};

std::string to_string(const Shape& s);

// Single-image activation, row-major H x W x C.
struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f) : shape(s), data(s.elements(), fill) {}

  float& at(int y, int x, int ch) { return data[offset(y, x, ch)]; }
  float at(int y, int x, int ch) const { return data[offset(y, x, ch)]; }
  float* pixel(int y, int x) { return data.data() + offset(y, x, 0); }
  const float* pixel(int y, int x) const { return data.data() + offset(y, x, 0); }

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t offset(int y, int x, int ch) const {
    return (static_cast<std::size_t>(y) * shape.w + x) * shape.c + ch;
  }
};

enum class LayerKind {
  kInput,
  kConv,
  kDeconv,
  kBatchNorm,
  kRelu,
  kMaxPool,
  kConcat,
  kL2Norm,
  kGlobalAvgPool,
  kAdd,    // elementwise sum of two equal-shape inputs (residual shortcuts)
  kSlice,  // channel range [slice_begin, slice_end)
};

std::string_view kind_name(LayerKind kind);

enum class Padding { kSame, kValid };

struct LayerSpec {
  LayerKind kind = LayerKind::kInput;
  std::string name;
  std::vector<int> inputs;
  int kernel = 1;  // square kernels only; pool size for maxpool
  int stride = 1;
  int dilation = 1;
  Padding padding = Padding::kSame;
  int out_channels = 0;
  float epsilon = 1e-3f;
  int slice_begin = 0;
  int slice_end = 0;
  Shape input_shape;  // kInput only
};

// Output size along one axis. "Same" keeps ceil(n / stride); "valid" uses
// only fully covered windows.
int output_extent(int n, int kernel, int stride, int dilation, Padding padding);
// Leading (top/left) padding for "same"; the remainder goes bottom/right.
int leading_pad(int n, int kernel, int stride, int dilation, Padding padding);

// Directed acyclic graph built in topological order: a layer may only
// reference layers added before it. Shapes are propagated on insertion.
class Graph {
 public:
  int input(std::string name, Shape shape);
  int conv(std::string name, int in, int out_channels, int kernel, int stride = 1,
           Padding padding = Padding::kSame, int dilation = 1);
  int deconv(std::string name, int in, int out_channels);
  int batchnorm(std::string name, int in, float epsilon = 1e-3f);
  int relu(std::string name, int in);
  int maxpool(std::string name, int in, int pool, int stride, Padding padding);
  int concat(std::string name, std::vector<int> inputs);
  int l2norm(std::string name, int in);
  int global_avg_pool(std::string name, int in);
  int add(std::string name, int a, int b);
  int slice(std::string name, int in, int begin, int end);

  int add_layer(LayerSpec spec);

  std::size_t size() const { return layers_.size(); }
  const LayerSpec& layer(int id) const { return layers_.at(static_cast<std::size_t>(id)); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Shape& shape(int id) const { return shapes_.at(static_cast<std::size_t>(id)); }
  Shape input_shape(const LayerSpec& spec, std::size_t i = 0) const { return shape(spec.inputs.at(i)); }

  int find(std::string_view name) const;  // -1 when absent
  int index(std::string_view name) const;  // throws when absent
  std::vector<int> input_layers() const;
  std::vector<int> sinks() const;

 private:
  Shape propagate(const LayerSpec& spec) const;

  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::unordered_map<std::string, int> by_name_;
};

// Parameter record: dims plus row-major values.
struct WeightTensor {
  std::vector<int> dims;
  std::vector<float> values;
  bool operator==(const WeightTensor&) const = default;
};

// Keyed by "<layer>.<suffix>" with suffixes kernel, bias, bn_gamma, bn_beta,
// bn_mean, bn_var, scale.
using Weights = std::map<std::string, WeightTensor>;

struct ParamSpec {
  std::string key;
  std::vector<int> dims;
};

// Every parameter record the graph needs, in layer order.
std::vector<ParamSpec> parameter_specs(const Graph& g);
void check_weights(const Graph& g, const Weights& w);
Weights seed_weights(const Graph& g, std::uint64_t seed);

void write_weights(std::ostream& out, const Weights& w);
Weights read_weights(std::istream& in);

// Layer kernels. Kernels are (k, k, cin, cout) for conv and (2, 2, cout, cin)
// for deconv.
Tensor conv2d(const Tensor& x, const LayerSpec& spec, std::span<const float> kernel,
              std::span<const float> bias);
Tensor deconv2d(const Tensor& x, const LayerSpec& spec, std::span<const float> kernel,
                std::span<const float> bias);
Tensor batchnorm(const Tensor& x, std::span<const float> gamma, std::span<const float> beta,
                 std::span<const float> mean, std::span<const float> var, float epsilon);
Tensor relu(const Tensor& x);
Tensor maxpool(const Tensor& x, int pool, int stride, Padding padding);
Tensor concat(std::span<const Tensor* const> xs);
Tensor l2norm(const Tensor& x, std::span<const float> scale);
Tensor global_avg_pool(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, int begin, int end);

using TensorMap = std::map<std::string, Tensor>;

// Executes the graph in layer order. Returns the named outputs, or every
// sink layer when outputs is empty. Intermediate tensors are released once
// their last consumer has run.
TensorMap run_graph(const Graph& g, const Weights& w, const TensorMap& inputs,
                    std::span<const std::string> outputs = {});

struct LayerCost {
  std::string name;
  LayerKind kind = LayerKind::kInput;
  std::uint64_t macs = 0;
  std::uint64_t elementwise = 0;
};

struct FlopReport {
  std::vector<LayerCost> layers;
  std::uint64_t total_macs = 0;
  std::uint64_t total_elementwise = 0;
};

FlopReport flop_count(const Graph& g);

}  // namespace dctdet::graph

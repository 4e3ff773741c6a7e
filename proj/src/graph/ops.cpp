#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "dctdet/error.hpp"
#include "dctdet/graph.hpp"
#include "dctdet/parallel.hpp"

namespace dctdet::graph {
namespace {

#if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
#define DCTDET_MULTIVERSION __attribute__((target_clones("avx2", "default")))
#else
#define DCTDET_MULTIVERSION
#endif

using v8 = float __attribute__((vector_size(32)));

constexpr int kLanes = 8;
constexpr int kBlockChannels = 2 * kLanes;  // output channels per tile
constexpr int kTilePixels = 4;              // output pixels per tile

inline v8 load(const float* p) {
  v8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store(float* p, v8 v) { std::memcpy(p, &v, sizeof v); }

// Kernel repacked as [block][tap][cin][16] with zero-filled tail channels so
// the inner loop always works on two full vectors.
std::vector<float> pack_kernel(std::span<const float> kernel, int taps, int cin, int cout) {
  const int blocks = (cout + kBlockChannels - 1) / kBlockChannels;
  std::vector<float> packed(static_cast<std::size_t>(blocks) * taps * cin * kBlockChannels, 0.0f);
  for (int tap = 0; tap < taps; ++tap) {
    for (int ci = 0; ci < cin; ++ci) {
      const float* src = kernel.data() + (static_cast<std::size_t>(tap) * cin + ci) * cout;
      for (int co = 0; co < cout; ++co) {
        const int b = co / kBlockChannels;
        const std::size_t at =
            ((static_cast<std::size_t>(b) * taps + tap) * cin + ci) * kBlockChannels + co % kBlockChannels;
        packed[at] = src[co];
      }
    }
  }
  return packed;
}

struct ConvGeometry {
  Shape in;
  Shape out;
  int kernel;
  int stride;
  int dilation;
  int pad_top;
  int pad_left;
};

// One output row. Each output value accumulates bias, then taps in (ky, kx)
// order, then input channels in order; tiling never changes that order, which
// keeps results identical for every worker count.
DCTDET_MULTIVERSION
void conv_row(const ConvGeometry& g, int oy, const float* input, const float* packed,
              const float* bias_padded, const float* zeros, float* output) {
  const int cin = g.in.c;
  const int cout = g.out.c;
  const int taps = g.kernel * g.kernel;
  const int blocks = (cout + kBlockChannels - 1) / kBlockChannels;
  float tile[kTilePixels][kBlockChannels];
  for (int b = 0; b < blocks; ++b) {
    const v8 bias0 = load(bias_padded + b * kBlockChannels);
    const v8 bias1 = load(bias_padded + b * kBlockChannels + kLanes);
    for (int ox0 = 0; ox0 < g.out.w; ox0 += kTilePixels) {
      v8 acc[kTilePixels][2];
      for (int t = 0; t < kTilePixels; ++t) {
        acc[t][0] = bias0;
        acc[t][1] = bias1;
      }
      for (int ky = 0; ky < g.kernel; ++ky) {
        const int iy = oy * g.stride - g.pad_top + ky * g.dilation;
        const bool row_ok = iy >= 0 && iy < g.in.h;
        for (int kx = 0; kx < g.kernel; ++kx) {
          const float* src[kTilePixels];
          for (int t = 0; t < kTilePixels; ++t) {
            const int ox = ox0 + t;
            const int ix = ox * g.stride - g.pad_left + kx * g.dilation;
            const bool ok = row_ok && ox < g.out.w && ix >= 0 && ix < g.in.w;
            src[t] = ok ? input + (static_cast<std::size_t>(iy) * g.in.w + ix) * cin : zeros;
          }
          const float* w =
              packed + ((static_cast<std::size_t>(b) * taps + ky * g.kernel + kx) * cin) * kBlockChannels;
          for (int ci = 0; ci < cin; ++ci) {
            const v8 w0 = load(w + ci * kBlockChannels);
            const v8 w1 = load(w + ci * kBlockChannels + kLanes);
            for (int t = 0; t < kTilePixels; ++t) {
              const float s = src[t][ci];
              const v8 v = {s, s, s, s, s, s, s, s};
              acc[t][0] += v * w0;
              acc[t][1] += v * w1;
            }
          }
        }
      }
      for (int t = 0; t < kTilePixels; ++t) {
        store(tile[t], acc[t][0]);
        store(tile[t] + kLanes, acc[t][1]);
      }
      const int co0 = b * kBlockChannels;
      const int width = std::min(kBlockChannels, cout - co0);
      for (int t = 0; t < kTilePixels && ox0 + t < g.out.w; ++t) {
        float* dst = output + (static_cast<std::size_t>(oy) * g.out.w + ox0 + t) * cout + co0;
        std::copy(tile[t], tile[t] + width, dst);
      }
    }
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::kInput, what);
}

}  // namespace

Tensor conv2d(const Tensor& x, const LayerSpec& spec, std::span<const float> kernel,
              std::span<const float> bias) {
  const int cin = x.shape.c;
  const int cout = spec.out_channels;
  const int k = spec.kernel;
  require(kernel.size() == static_cast<std::size_t>(k) * k * cin * cout,
          "conv '" + spec.name + "': channel mismatch between input " + to_string(x.shape) +
              " and kernel of " + std::to_string(kernel.size()) + " values");
  require(bias.empty() || bias.size() == static_cast<std::size_t>(cout),
          "conv '" + spec.name + "': bias length mismatch");
  ConvGeometry g{x.shape,
                 {output_extent(x.shape.h, k, spec.stride, spec.dilation, spec.padding),
                  output_extent(x.shape.w, k, spec.stride, spec.dilation, spec.padding), cout},
                 k,
                 spec.stride,
                 spec.dilation,
                 leading_pad(x.shape.h, k, spec.stride, spec.dilation, spec.padding),
                 leading_pad(x.shape.w, k, spec.stride, spec.dilation, spec.padding)};
  require(g.out.h > 0 && g.out.w > 0, "conv '" + spec.name + "': non-positive output dims");

  const auto packed = pack_kernel(kernel, k * k, cin, cout);
  const int blocks = (cout + kBlockChannels - 1) / kBlockChannels;
  std::vector<float> bias_padded(static_cast<std::size_t>(blocks) * kBlockChannels, 0.0f);
  std::copy(bias.begin(), bias.end(), bias_padded.begin());
  const std::vector<float> zeros(static_cast<std::size_t>(cin), 0.0f);

  Tensor out(g.out);
  parallel_for(static_cast<std::size_t>(g.out.h), [&](std::size_t oy) {
    conv_row(g, static_cast<int>(oy), x.data.data(), packed.data(), bias_padded.data(), zeros.data(),
             out.data.data());
  });
  return out;
}

Tensor deconv2d(const Tensor& x, const LayerSpec& spec, std::span<const float> kernel,
                std::span<const float> bias) {
  require(spec.kernel == 2 && spec.stride == 2,
          "deconv '" + spec.name + "': unsupported kernel/stride combination");
  const int cin = x.shape.c;
  const int cout = spec.out_channels;
  require(kernel.size() == static_cast<std::size_t>(4) * cin * cout,
          "deconv '" + spec.name + "': channel mismatch");
  require(bias.empty() || bias.size() == static_cast<std::size_t>(cout),
          "deconv '" + spec.name + "': bias length mismatch");
  Tensor out({x.shape.h * 2, x.shape.w * 2, cout});
  parallel_for(static_cast<std::size_t>(x.shape.h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int xx = 0; xx < x.shape.w; ++xx) {
      const float* in = x.data.data() + (static_cast<std::size_t>(y) * x.shape.w + xx) * cin;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const float* w = kernel.data() + static_cast<std::size_t>(dy * 2 + dx) * cout * cin;
          for (int co = 0; co < cout; ++co) {
            float acc = bias.empty() ? 0.0f : bias[co];
            const float* wr = w + static_cast<std::size_t>(co) * cin;
            for (int ci = 0; ci < cin; ++ci) acc += in[ci] * wr[ci];
            out.at(2 * y + dy, 2 * xx + dx, co) = acc;
          }
        }
      }
    }
  });
  return out;
}

Tensor batchnorm(const Tensor& x, std::span<const float> gamma, std::span<const float> beta,
                 std::span<const float> mean, std::span<const float> var, float epsilon) {
  const auto c = static_cast<std::size_t>(x.shape.c);
  require(gamma.size() == c && beta.size() == c && mean.size() == c && var.size() == c,
          "batchnorm: parameter length mismatch for " + to_string(x.shape));
  std::vector<double> scale(c);
  for (std::size_t i = 0; i < c; ++i) {
    require(var[i] >= 0.0f, "batchnorm: negative variance");
    scale[i] = gamma[i] / std::sqrt(static_cast<double>(var[i]) + epsilon);
  }
  Tensor out(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const std::size_t ch = i % c;
    out.data[i] = static_cast<float>((x.data[i] - static_cast<double>(mean[ch])) * scale[ch] + beta[ch]);
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out(x.shape);
  std::transform(x.data.begin(), x.data.end(), out.data.begin(),
                 [](float v) { return v > 0.0f ? v : 0.0f; });
  return out;
}

Tensor maxpool(const Tensor& x, int pool, int stride, Padding padding) {
  require(pool <= x.shape.h && pool <= x.shape.w, "maxpool: pool larger than input " + to_string(x.shape));
  const Shape out_shape{output_extent(x.shape.h, pool, stride, 1, padding),
                        output_extent(x.shape.w, pool, stride, 1, padding), x.shape.c};
  const int pt = leading_pad(x.shape.h, pool, stride, 1, padding);
  const int pl = leading_pad(x.shape.w, pool, stride, 1, padding);
  Tensor out(out_shape, -std::numeric_limits<float>::infinity());
  for (int oy = 0; oy < out_shape.h; ++oy) {
    for (int ox = 0; ox < out_shape.w; ++ox) {
      float* dst = out.pixel(oy, ox);
      for (int ky = 0; ky < pool; ++ky) {
        const int iy = oy * stride - pt + ky;
        if (iy < 0 || iy >= x.shape.h) continue;
        for (int kx = 0; kx < pool; ++kx) {
          const int ix = ox * stride - pl + kx;
          if (ix < 0 || ix >= x.shape.w) continue;
          const float* src = x.pixel(iy, ix);
          for (int ch = 0; ch < x.shape.c; ++ch) dst[ch] = std::max(dst[ch], src[ch]);
        }
      }
    }
  }
  return out;
}

Tensor concat(std::span<const Tensor* const> xs) {
  require(!xs.empty(), "concat: no inputs");
  Shape shape = xs.front()->shape;
  shape.c = 0;
  for (const Tensor* t : xs) {
    require(t->shape.h == shape.h && t->shape.w == shape.w,
            "concat: spatial mismatch " + to_string(xs.front()->shape) + " vs " + to_string(t->shape));
    shape.c += t->shape.c;
  }
  Tensor out(shape);
  float* dst = out.data.data();
  for (std::size_t p = 0; p < static_cast<std::size_t>(shape.h) * shape.w; ++p) {
    for (const Tensor* t : xs) {
      const float* src = t->data.data() + p * t->shape.c;
      dst = std::copy(src, src + t->shape.c, dst);
    }
  }
  return out;
}

Tensor l2norm(const Tensor& x, std::span<const float> scale) {
  require(scale.size() == static_cast<std::size_t>(x.shape.c), "l2norm: scale length mismatch");
  Tensor out(x.shape);
  const auto c = static_cast<std::size_t>(x.shape.c);
  for (std::size_t p = 0; p < x.data.size(); p += c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c; ++i) sum += static_cast<double>(x.data[p + i]) * x.data[p + i];
    const double inv = 1.0 / std::sqrt(sum + 1e-10);
    for (std::size_t i = 0; i < c; ++i) out.data[p + i] = static_cast<float>(x.data[p + i] * inv * scale[i]);
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  Tensor out({1, 1, x.shape.c});
  const auto c = static_cast<std::size_t>(x.shape.c);
  std::vector<double> sum(c, 0.0);
  for (std::size_t i = 0; i < x.data.size(); ++i) sum[i % c] += x.data[i];
  const double n = static_cast<double>(x.shape.h) * x.shape.w;
  for (std::size_t i = 0; i < c; ++i) out.data[i] = static_cast<float>(sum[i] / n);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape == b.shape, "add: shape mismatch " + to_string(a.shape) + " vs " + to_string(b.shape));
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

Tensor slice_channels(const Tensor& x, int begin, int end) {
  require(begin >= 0 && end <= x.shape.c && begin < end, "slice: channel range out of bounds");
  Tensor out({x.shape.h, x.shape.w, end - begin});
  float* dst = out.data.data();
  for (std::size_t p = 0; p < static_cast<std::size_t>(x.shape.h) * x.shape.w; ++p) {
    const float* src = x.data.data() + p * x.shape.c;
    dst = std::copy(src + begin, src + end, dst);
  }
  return out;
}

}  // namespace dctdet::graph

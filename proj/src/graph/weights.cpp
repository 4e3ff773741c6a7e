#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "dctdet/error.hpp"
#include "dctdet/graph.hpp"

namespace dctdet::graph {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::size_t product(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::string dims_string(const std::vector<int>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + ")";
}

template <typename T>
void put_le(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get_le(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorKind::kInput, "weight file truncated");
  return v;
}

}  // namespace

std::vector<ParamSpec> parameter_specs(const Graph& g) {
  std::vector<ParamSpec> specs;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const LayerSpec& l = g.layer(static_cast<int>(i));
    switch (l.kind) {
      case LayerKind::kConv: {
        const int cin = g.input_shape(l).c;
        specs.push_back({l.name + ".kernel", {l.kernel, l.kernel, cin, l.out_channels}});
        specs.push_back({l.name + ".bias", {l.out_channels}});
        break;
      }
      case LayerKind::kDeconv: {
        const int cin = g.input_shape(l).c;
        specs.push_back({l.name + ".kernel", {l.kernel, l.kernel, l.out_channels, cin}});
        specs.push_back({l.name + ".bias", {l.out_channels}});
        break;
      }
      case LayerKind::kBatchNorm: {
        const int c = g.input_shape(l).c;
        for (const char* suffix : {".bn_gamma", ".bn_beta", ".bn_mean", ".bn_var"}) {
          specs.push_back({l.name + suffix, {c}});
        }
        break;
      }
      case LayerKind::kL2Norm:
        specs.push_back({l.name + ".scale", {g.input_shape(l).c}});
        break;
      default:
        break;
    }
  }
  return specs;
}

void check_weights(const Graph& g, const Weights& w) {
  for (const auto& spec : parameter_specs(g)) {
    const auto it = w.find(spec.key);
    if (it == w.end()) fail(ErrorKind::kInput, "missing weight record '" + spec.key + "'");
    if (it->second.dims != spec.dims) {
      fail(ErrorKind::kInput, "weight record '" + spec.key + "': expected shape " + dims_string(spec.dims) +
                                  ", got " + dims_string(it->second.dims));
    }
    if (it->second.values.size() != product(spec.dims)) {
      fail(ErrorKind::kInput, "weight record '" + spec.key + "': value count does not match dims");
    }
    if (spec.key.ends_with(".bn_var")) {
      for (float v : it->second.values) {
        if (!(v >= 0.0f)) fail(ErrorKind::kInput, "weight record '" + spec.key + "': negative variance");
      }
    }
  }
}

Weights seed_weights(const Graph& g, std::uint64_t seed) {
  Weights w;
  for (const auto& spec : parameter_specs(g)) {
    WeightTensor t{spec.dims, std::vector<float>(product(spec.dims), 0.0f)};
    if (spec.key.ends_with(".kernel")) {
      // He-normal: variance 2 / fan_in with fan_in = k * k * cin.
      const bool deconv = g.layer(g.index(spec.key.substr(0, spec.key.size() - 7))).kind == LayerKind::kDeconv;
      const int cin = deconv ? spec.dims[3] : spec.dims[2];
      const double fan_in = static_cast<double>(spec.dims[0]) * spec.dims[1] * cin;
      std::seed_seq sequence{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                             static_cast<std::uint32_t>(fnv1a(spec.key)),
                             static_cast<std::uint32_t>(fnv1a(spec.key) >> 32)};
      std::mt19937_64 rng(sequence);
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
      for (float& v : t.values) v = static_cast<float>(normal(rng));
    } else if (spec.key.ends_with(".bn_gamma") || spec.key.ends_with(".bn_var")) {
      std::fill(t.values.begin(), t.values.end(), 1.0f);
    } else if (spec.key.ends_with(".scale")) {
      std::fill(t.values.begin(), t.values.end(), 20.0f);
    }
    w.emplace(spec.key, std::move(t));
  }
  return w;
}

void write_weights(std::ostream& out, const Weights& w) {
  out.write("WTS1", 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.size()));
  for (const auto& [name, t] : w) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
    for (int d : t.dims) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!out) fail(ErrorKind::kInput, "failed writing weight file");
}

Weights read_weights(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "WTS1", 4) != 0) {
    fail(ErrorKind::kInput, "not a WTS1 weight file");
  }
  const auto count = get_le<std::uint32_t>(in);
  Weights w;
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = get_le<std::uint16_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) fail(ErrorKind::kInput, "weight file truncated");
    const auto rank = get_le<std::uint8_t>(in);
    WeightTensor t;
    for (int d = 0; d < rank; ++d) t.dims.push_back(static_cast<int>(get_le<std::uint32_t>(in)));
    t.values.resize(product(t.dims));
    if (!in.read(reinterpret_cast<char*>(t.values.data()),
                 static_cast<std::streamsize>(t.values.size() * sizeof(float)))) {
      fail(ErrorKind::kInput, "weight file truncated in record '" + name + "'");
    }
    if (!w.emplace(std::move(name), std::move(t)).second) {
      fail(ErrorKind::kInput, "duplicate weight record");
    }
  }
  return w;
}

}  // namespace dctdet::graph

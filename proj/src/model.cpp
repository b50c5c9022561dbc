#include "permnet/model.hpp"

#include <cmath>
#include <limits>

#include "permnet/error.hpp"
#include "permnet/rng.hpp"

namespace permnet {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_size(shape)) {
    throw Error(Errc::ShapeMismatch, "tensor of shape " + shape_string(shape) + " given " +
                                         std::to_string(values.size()) + " values");
  }
}

bool Tensor::all_finite() const noexcept {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

const char* activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::None: return "none";
  }
  return "none";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "none" || name == "linear") return Activation::None;
  throw Error(Errc::InvalidConfig, "unknown activation \"" + name + "\"");
}

double sigmoid(double z) noexcept {
  // Scores must stay strictly inside (0,1) so the loss never sees 0 or 1.
  constexpr double hi = 1.0 - 0x1.0p-53;
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  double s;
  if (z >= 0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  return s > hi ? hi : (s < lo ? lo : s);
}

double relu(double z) noexcept { return z > 0 ? z : 0.0; }

double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::ReLU: return relu(z);
    case Activation::Sigmoid: return sigmoid(z);
    case Activation::None: return z;
  }
  return z;
}

double activation_derivative(Activation a, double z, double y) noexcept {
  switch (a) {
    case Activation::ReLU: return z > 0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::None: return 1.0;
  }
  return 1.0;
}

LayerKind layer_kind(const LayerSpec& spec) noexcept {
  struct V {
    LayerKind operator()(const DenseSpec&) const { return LayerKind::Dense; }
    LayerKind operator()(const Conv1DSpec&) const { return LayerKind::Conv1D; }
    LayerKind operator()(const MaxPool1DSpec&) const { return LayerKind::MaxPool1D; }
    LayerKind operator()(const GruSpec&) const { return LayerKind::Gru; }
    LayerKind operator()(const FlattenSpec&) const { return LayerKind::Flatten; }
  };
  return std::visit(V{}, spec);
}

const char* layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1D: return "conv1d";
    case LayerKind::MaxPool1D: return "maxpool1d";
    case LayerKind::Gru: return "gru";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::LstmReserved: return "lstm";
    case LayerKind::ParallelReserved: return "parallel";
  }
  return "unknown";
}

bool uses_sequence_input(const ModelConfig& config) noexcept {
  for (const auto& l : config.layers) {
    const auto k = layer_kind(l);
    if (k == LayerKind::Flatten) continue;
    return k == LayerKind::Conv1D || k == LayerKind::Gru || k == LayerKind::MaxPool1D;
  }
  return false;
}

namespace {

[[noreturn]] void incompatible(std::size_t layer, const std::string& why) {
  throw Error(Errc::IncompatibleDims, "layer " + std::to_string(layer) + ": " + why);
}

void check_rate(std::size_t layer, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) incompatible(layer, "dropout_rate must lie in [0,1)");
}

void check_l2(std::size_t layer, double l2) {
  if (!(l2 >= 0.0) || !std::isfinite(l2)) incompatible(layer, "l2_weight must be non-negative");
}

}  // namespace

std::vector<Shape> infer_shapes(const ModelConfig& config) {
  if (config.input_dim == 0) throw Error(Errc::IncompatibleDims, "input_dim must be positive");
  if (config.layers.empty()) throw Error(Errc::InvalidConfig, "model has no layers");

  std::vector<Shape> shapes;
  shapes.push_back(uses_sequence_input(config) ? Shape{config.input_dim, 1} : Shape{config.input_dim});
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const Shape& in = shapes.back();
    Shape out;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            if (s.in_dim == 0 || s.out_dim == 0) incompatible(i, "dense dims must be positive");
            if (in.size() != 1) incompatible(i, "dense expects a flat input, got " + shape_string(in));
            if (in[0] != s.in_dim) {
              incompatible(i, "dense in_dim " + std::to_string(s.in_dim) + " but input width " +
                                  std::to_string(in[0]));
            }
            check_rate(i, s.dropout_rate);
            check_l2(i, s.l2_weight);
            out = {s.out_dim};
          } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
            if (s.in_channels == 0 || s.filters == 0 || s.kernel_size == 0) {
              incompatible(i, "conv1d dims must be positive");
            }
            if (in.size() != 2) incompatible(i, "conv1d expects [length,channels], got " + shape_string(in));
            if (in[1] != s.in_channels) incompatible(i, "conv1d in_channels mismatch");
            check_l2(i, s.l2_weight);
            out = {in[0], s.filters};
          } else if constexpr (std::is_same_v<T, MaxPool1DSpec>) {
            if (s.pool_size == 0) incompatible(i, "pool_size must be positive");
            if (in.size() != 2) incompatible(i, "maxpool1d expects [length,channels]");
            if (in[0] < s.pool_size) incompatible(i, "sequence shorter than pool_size");
            out = {in[0] / s.pool_size, in[1]};
          } else if constexpr (std::is_same_v<T, GruSpec>) {
            if (s.units == 0) incompatible(i, "gru units must be positive");
            if (in.size() != 2) incompatible(i, "gru expects [steps,features]");
            check_rate(i, s.dropout_rate);
            check_l2(i, s.l2_weight);
            out = {s.units};
          } else {
            out = {shape_size(in)};
          }
        },
        config.layers[i]);
    shapes.push_back(std::move(out));
  }

  const auto* last = std::get_if<DenseSpec>(&config.layers.back());
  if (!last || last->out_dim != 1 || last->activation != Activation::Sigmoid) {
    throw Error(Errc::InvalidConfig, "final layer must be Dense with one Sigmoid output");
  }
  return shapes;
}

std::size_t Parameters::tensor_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::size_t Parameters::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) {
    for (const auto& t : l) n += t.size();
  }
  return n;
}

Parameters zeros_like(const Parameters& params) {
  Parameters z;
  z.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    auto& out = z.layers.emplace_back();
    for (const auto& t : l) out.emplace_back(t.shape);
  }
  return z;
}

std::vector<std::vector<Shape>> parameter_shapes(const ModelConfig& config) {
  const auto shapes = infer_shapes(config);
  std::vector<std::vector<Shape>> out;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const Shape& in = shapes[i];
    auto& layer = out.emplace_back();
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            layer = {{s.in_dim, s.out_dim}, {s.out_dim}};
          } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
            layer = {{s.kernel_size, s.in_channels, s.filters}, {s.filters}};
          } else if constexpr (std::is_same_v<T, GruSpec>) {
            layer = {{in[1], 3 * s.units}, {s.units, 3 * s.units}, {3 * s.units}};
          }
        },
        config.layers[i]);
  }
  return out;
}

double tensor_l2_weight(const LayerSpec& spec, std::size_t index) noexcept {
  return std::visit(
      [index](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseSpec> || std::is_same_v<T, Conv1DSpec>) {
          return index == 0 ? s.l2_weight : 0.0;
        } else if constexpr (std::is_same_v<T, GruSpec>) {
          return index < 2 ? s.l2_weight : 0.0;
        } else {
          return 0.0;
        }
      },
      spec);
}

Parameters init_parameters(const ModelConfig& config) {
  const auto shapes = parameter_shapes(config);
  const auto acts = infer_shapes(config);
  Parameters p;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    Rng rng(derive_seed(config.seed, 1000 + i));
    auto& layer = p.layers.emplace_back();
    for (const auto& s : shapes[i]) layer.emplace_back(s);

    auto fill_uniform = [&rng](Tensor& t, double limit) {
      for (auto& v : t.values) v = uniform_real(rng, -limit, limit);
    };
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, DenseSpec>) {
            const double fan_in = static_cast<double>(s.in_dim);
            const double fan_out = static_cast<double>(s.out_dim);
            fill_uniform(layer[0], s.activation == Activation::ReLU ? std::sqrt(6.0 / fan_in)
                                                                    : std::sqrt(6.0 / (fan_in + fan_out)));
          } else if constexpr (std::is_same_v<T, Conv1DSpec>) {
            const double fan_in = static_cast<double>(s.kernel_size * s.in_channels);
            fill_uniform(layer[0], std::sqrt(6.0 / fan_in));
          } else if constexpr (std::is_same_v<T, GruSpec>) {
            const double features = static_cast<double>(acts[i][1]);
            const double units = static_cast<double>(s.units);
            fill_uniform(layer[0], std::sqrt(6.0 / (features + 3 * units)));
            fill_uniform(layer[1], std::sqrt(6.0 / (units + 3 * units)));
          }
        },
        config.layers[i]);
  }
  return p;
}

}  // namespace permnet

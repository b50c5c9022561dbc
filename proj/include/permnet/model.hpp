#pragma once

// Layer specifications, model configuration and trainable parameter storage.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "permnet/tensor.hpp"

namespace permnet {

enum class Activation { ReLU, Sigmoid, None };

const char* activation_name(Activation a) noexcept;
Activation activation_from_name(const std::string& name);

double sigmoid(double z) noexcept;
double relu(double z) noexcept;
double activate(Activation a, double z) noexcept;
/// Derivative expressed through the activation's output `y` (and input `z`
/// for ReLU, where y and z carry the same sign information).
double activation_derivative(Activation a, double z, double y) noexcept;

struct DenseSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::ReLU;
  double l2_weight = 0.0;
  double dropout_rate = 0.0;
  bool operator==(const DenseSpec&) const = default;
};

/// Same-padded 1-D convolution followed by ReLU.
struct Conv1DSpec {
  std::size_t in_channels = 0;
  std::size_t filters = 0;
  std::size_t kernel_size = 1;
  double l2_weight = 0.0;
  bool operator==(const Conv1DSpec&) const = default;
};

struct MaxPool1DSpec {
  std::size_t pool_size = 1;
  bool operator==(const MaxPool1DSpec&) const = default;
};

/// Single GRU layer returning the last hidden state. Dropout acts on the
/// input with one mask per sequence.
struct GruSpec {
  std::size_t units = 0;
  double dropout_rate = 0.0;
  double l2_weight = 0.0;
  bool operator==(const GruSpec&) const = default;
};

struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};

using LayerSpec = std::variant<DenseSpec, Conv1DSpec, MaxPool1DSpec, GruSpec, FlattenSpec>;

/// Stable numeric codes used by the checkpoint format. LSTM and parallel
/// branch codes are reserved and rejected on load.
enum class LayerKind : int {
  Dense = 1,
  Conv1D = 2,
  MaxPool1D = 3,
  Gru = 4,
  Flatten = 5,
  LstmReserved = 6,
  ParallelReserved = 7,
};

LayerKind layer_kind(const LayerSpec& spec) noexcept;
const char* layer_kind_name(LayerKind kind) noexcept;

struct ModelConfig {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
  bool operator==(const ModelConfig&) const = default;
};

/// True when the flat input is viewed as a length-P sequence with one channel.
bool uses_sequence_input(const ModelConfig& config) noexcept;

/// Per-sample activation shapes: element 0 is the input, element i+1 the
/// output of layer i. Throws IncompatibleDims / InvalidConfig.
std::vector<Shape> infer_shapes(const ModelConfig& config);

/// Trainable tensors per layer: Dense {W[in,out], b[out]}, Conv1D
/// {K[k,in,f], b[f]}, Gru {W[F,3U], U[U,3U], b[3U]} with gate blocks ordered
/// update, reset, candidate; pooling and flatten hold none.
struct Parameters {
  std::vector<std::vector<Tensor>> layers;

  std::size_t tensor_count() const noexcept;
  std::size_t scalar_count() const noexcept;
  bool operator==(const Parameters&) const = default;
};

/// Zero tensors shaped like `params`.
Parameters zeros_like(const Parameters& params);

/// Expected parameter shapes for `config`.
std::vector<std::vector<Shape>> parameter_shapes(const ModelConfig& config);

/// L2 coefficient applied to tensor `index` of a layer; biases get zero.
double tensor_l2_weight(const LayerSpec& spec, std::size_t index) noexcept;

Parameters init_parameters(const ModelConfig& config);

}  // namespace permnet

#pragma once

// Forward and reverse passes for the supported layer set. Batches are
// row-major tensors whose leading dimension is the batch size.

#include <cstdint>
#include <span>
#include <vector>

#include "permnet/model.hpp"

namespace permnet {

enum class Mode { Train, Infer };

/// Activations a layer keeps for its backward pass.
struct LayerCache {
  Tensor input;                      // layer input (GRU: after input dropout)
  Tensor pre;                        // pre-activation (dense, conv)
  Tensor output;                     // post-activation, post-dropout
  std::vector<double> mask;          // dropout multipliers (empty when inactive)
  std::vector<std::size_t> argmax;   // max-pool winners, flat input offsets
  Tensor hidden;                     // GRU h_0..h_T  [T+1,B,U]
  Tensor update_gate;                // GRU z_t       [T,B,U]
  Tensor reset_gate;                 // GRU r_t       [T,B,U]
  Tensor candidate;                  // GRU h~_t      [T,B,U]
};

struct ForwardTrace {
  std::vector<LayerCache> layers;
};

Tensor dense_forward(const Tensor& x, const DenseSpec& spec, std::span<const Tensor> params, Mode mode,
                     std::uint64_t dropout_seed, LayerCache* cache = nullptr);
Tensor conv1d_forward(const Tensor& x, const Conv1DSpec& spec, std::span<const Tensor> params,
                      LayerCache* cache = nullptr);
Tensor maxpool1d_forward(const Tensor& x, const MaxPool1DSpec& spec, LayerCache* cache = nullptr);
Tensor gru_forward(const Tensor& x, const GruSpec& spec, std::span<const Tensor> params, Mode mode,
                   std::uint64_t dropout_seed, LayerCache* cache = nullptr);

// Backward helpers accumulate into `grads` (shaped like the layer's params)
// and return the gradient with respect to the layer input.
Tensor dense_backward(const LayerCache& cache, const DenseSpec& spec, std::span<const Tensor> params,
                      const Tensor& dy, std::span<Tensor> grads);
Tensor conv1d_backward(const LayerCache& cache, const Conv1DSpec& spec, std::span<const Tensor> params,
                       const Tensor& dy, std::span<Tensor> grads);
Tensor maxpool1d_backward(const LayerCache& cache, const Tensor& dy);
Tensor gru_backward(const LayerCache& cache, const GruSpec& spec, std::span<const Tensor> params,
                    const Tensor& dy, std::span<Tensor> grads);

/// Scores in (0,1), shape [batch,1]. `batch` is [batch,input_dim]; sequence
/// models view it as [batch,input_dim,1]. Throws NonFiniteActivation if any
/// layer produces NaN/Inf.
Tensor forward(const ModelConfig& config, const Parameters& params, const Tensor& batch, Mode mode,
               std::uint64_t seed, ForwardTrace* trace = nullptr);

/// Gradient of a scalar objective with respect to every parameter, given its
/// gradient with respect to the scores of the traced forward pass.
Parameters backward_from_scores(const ModelConfig& config, const Parameters& params,
                                const ForwardTrace& trace, const Tensor& dscores);

}  // namespace permnet

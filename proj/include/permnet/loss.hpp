#pragma once

#include <cstdint>
#include <span>

#include "permnet/model.hpp"
#include "permnet/network.hpp"

namespace permnet {

inline constexpr double kScoreClamp = 1e-12;

struct LossResult {
  double loss = 0.0;        // data term + penalty
  double data_loss = 0.0;   // mean binary cross-entropy
  double penalty = 0.0;     // sum over layers of l2_weight * sum(w^2)
  Tensor dscores;           // d(data_loss)/d(scores)
};

/// Sum over layers of l2_weight * ||W||^2; biases are exempt.
double l2_penalty(const ModelConfig& config, const Parameters& params);
/// Adds 2 * l2_weight * w to every penalized gradient entry.
void add_l2_gradient(const ModelConfig& config, const Parameters& params, Parameters& grads);

/// Mean binary cross-entropy with scores clamped to [1e-12, 1-1e-12], plus
/// the L2 penalty of `params`.
LossResult bce_loss(const Tensor& scores, std::span<const double> labels, const ModelConfig& config,
                    const Parameters& params);

struct GradientBundle {
  LossResult loss;
  Tensor scores;
  Parameters gradients;
};

/// Train-mode forward pass followed by reverse-mode differentiation of
/// bce_loss. Dropout masks are a function of `seed` alone.
GradientBundle backward(const ModelConfig& config, const Parameters& params, const Tensor& batch,
                        std::span<const double> labels, std::uint64_t seed, Mode mode = Mode::Train);

}  // namespace permnet

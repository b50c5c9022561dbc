#include "permnet/loss.hpp"

#include <algorithm>
#include <cmath>

#include "permnet/error.hpp"

namespace permnet {

double l2_penalty(const ModelConfig& config, const Parameters& params) {
  double total = 0.0;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    for (std::size_t t = 0; t < params.layers[l].size(); ++t) {
      const double lambda = tensor_l2_weight(config.layers[l], t);
      if (lambda == 0.0) continue;
      double ss = 0.0;
      for (double w : params.layers[l][t].values) ss += w * w;
      total += lambda * ss;
    }
  }
  return total;
}

void add_l2_gradient(const ModelConfig& config, const Parameters& params, Parameters& grads) {
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    for (std::size_t t = 0; t < params.layers[l].size(); ++t) {
      const double lambda = tensor_l2_weight(config.layers[l], t);
      if (lambda == 0.0) continue;
      const auto& w = params.layers[l][t].values;
      auto& g = grads.layers[l][t].values;
      for (std::size_t i = 0; i < w.size(); ++i) g[i] += 2.0 * lambda * w[i];
    }
  }
}

LossResult bce_loss(const Tensor& scores, std::span<const double> labels, const ModelConfig& config,
                    const Parameters& params) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw Error(Errc::ShapeMismatch, "bce_loss: " + std::to_string(scores.size()) + " scores vs " +
                                         std::to_string(labels.size()) + " labels");
  }
  const double n = static_cast<double>(labels.size());
  LossResult r;
  r.dscores = Tensor(scores.shape);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = labels[i];
    const double raw = scores[i];
    const double p = std::clamp(raw, kScoreClamp, 1.0 - kScoreClamp);
    sum += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    // The clamp is flat outside its range, so the derivative vanishes there.
    if (raw > kScoreClamp && raw < 1.0 - kScoreClamp) {
      r.dscores[i] = (-(y / p) + (1.0 - y) / (1.0 - p)) / n;
    }
  }
  r.data_loss = sum / n;
  r.penalty = l2_penalty(config, params);
  r.loss = r.data_loss + r.penalty;
  return r;
}

GradientBundle backward(const ModelConfig& config, const Parameters& params, const Tensor& batch,
                        std::span<const double> labels, std::uint64_t seed, Mode mode) {
  GradientBundle out;
  ForwardTrace trace;
  out.scores = forward(config, params, batch, mode, seed, &trace);
  out.loss = bce_loss(out.scores, labels, config, params);
  out.gradients = backward_from_scores(config, params, trace, out.loss.dscores);
  add_l2_gradient(config, params, out.gradients);
  return out;
}

}  // namespace permnet

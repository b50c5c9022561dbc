#include "permnet/optimizer.hpp"

#include <cmath>

#include "permnet/error.hpp"

namespace permnet {

const char* algorithm_name(Algorithm a) noexcept { return a == Algorithm::Adam ? "adam" : "sgd"; }

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "adam") return Algorithm::Adam;
  if (name == "sgd") return Algorithm::Sgd;
  throw Error(Errc::InvalidConfig, "unknown optimizer \"" + name + "\"");
}

Optimizer::Optimizer(OptimizerSettings settings) : settings_(settings) {
  if (!(settings_.learning_rate > 0.0)) throw Error(Errc::InvalidConfig, "learning_rate must be positive");
  if (settings_.algorithm == Algorithm::Adam &&
      !(settings_.beta1 >= 0.0 && settings_.beta1 < 1.0 && settings_.beta2 >= 0.0 && settings_.beta2 < 1.0 &&
        settings_.epsilon > 0.0)) {
    throw Error(Errc::InvalidConfig, "Adam betas must lie in [0,1) and epsilon be positive");
  }
}

void Optimizer::step(Parameters& params, const Parameters& grads) {
  if (params.layers.size() != grads.layers.size()) {
    throw Error(Errc::ShapeMismatch, "optimizer: gradient/parameter layer count mismatch");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (params.layers[l].size() != grads.layers[l].size()) {
      throw Error(Errc::ShapeMismatch, "optimizer: tensor count mismatch in layer " + std::to_string(l));
    }
    for (std::size_t t = 0; t < params.layers[l].size(); ++t) {
      if (params.layers[l][t].shape != grads.layers[l][t].shape) {
        throw Error(Errc::ShapeMismatch, "optimizer: shape mismatch in layer " + std::to_string(l));
      }
    }
  }
  ++step_count_;
  const double lr = settings_.learning_rate;

  if (settings_.algorithm == Algorithm::Sgd) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      for (std::size_t t = 0; t < params.layers[l].size(); ++t) {
        auto& w = params.layers[l][t].values;
        const auto& g = grads.layers[l][t].values;
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
      }
    }
    return;
  }

  if (m_.layers.empty()) {
    m_ = zeros_like(params);
    v_ = zeros_like(params);
  }
  const double b1 = settings_.beta1, b2 = settings_.beta2, eps = settings_.epsilon;
  const double k = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(b1, k);
  const double c2 = 1.0 - std::pow(b2, k);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    for (std::size_t t = 0; t < params.layers[l].size(); ++t) {
      auto& w = params.layers[l][t].values;
      auto& m = m_.layers[l][t].values;
      auto& v = v_.layers[l][t].values;
      const auto& g = grads.layers[l][t].values;
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
}

}  // namespace permnet

#pragma once

#include <cstdint>
#include <string>

#include "permnet/model.hpp"

namespace permnet {

enum class Algorithm { Adam, Sgd };

const char* algorithm_name(Algorithm a) noexcept;
Algorithm algorithm_from_name(const std::string& name);

struct OptimizerSettings {
  Algorithm algorithm = Algorithm::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers mirror the parameters they update and start at zero.
class Optimizer {
 public:
  explicit Optimizer(OptimizerSettings settings = {});

  /// w <- w - lr*g (Sgd) or the bias-corrected Adam update.
  void step(Parameters& params, const Parameters& grads);

  const OptimizerSettings& settings() const noexcept { return settings_; }
  std::uint64_t step_count() const noexcept { return step_count_; }
  const Parameters& first_moment() const noexcept { return m_; }
  const Parameters& second_moment() const noexcept { return v_; }

 private:
  OptimizerSettings settings_;
  Parameters m_;
  Parameters v_;
  std::uint64_t step_count_ = 0;
};

}  // namespace permnet

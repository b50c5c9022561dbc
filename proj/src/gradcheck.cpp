#include "permnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "permnet/loss.hpp"
#include "permnet/rng.hpp"

namespace permnet {

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult gradient_check(const ModelConfig& config, const Parameters& params, const Tensor& batch,
                               std::span<const double> labels, const GradCheckOptions& options) {
  const auto analytic = backward(config, params, batch, labels, options.seed, options.mode);

  auto loss_at = [&](const Parameters& p) {
    const Tensor scores = forward(config, p, batch, options.mode, options.seed);
    return bce_loss(scores, labels, config, p).loss;
  };

  GradCheckResult result;
  Parameters probe = params;
  Rng rng(derive_seed(options.seed, 0x9c));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    for (std::size_t t = 0; t < params.layers[l].size(); ++t) {
      const std::size_t n = params.layers[l][t].size();
      std::vector<std::size_t> coords(n);
      std::iota(coords.begin(), coords.end(), std::size_t{0});
      if (n > options.max_coords_per_tensor) {
        shuffle(std::span<std::size_t>(coords), rng);
        coords.resize(options.max_coords_per_tensor);
        std::sort(coords.begin(), coords.end());
      }

      GradCheckEntry worst{l, t, 0, 0.0, 0.0, 0.0};
      for (const auto i : coords) {
        double& w = probe.layers[l][t][i];
        const double saved = w;
        w = saved + options.epsilon;
        const double up = loss_at(probe);
        w = saved - options.epsilon;
        const double down = loss_at(probe);
        w = saved;

        const double numeric = (up - down) / (2.0 * options.epsilon);
        const double a = analytic.gradients.layers[l][t][i];
        const double err = relative_error(a, numeric);
        ++result.coordinates_checked;
        if (err >= worst.relative_error) worst = {l, t, i, a, numeric, err};
      }
      result.per_tensor.push_back(worst);
      if (worst.relative_error >= result.max_relative_error) {
        result.max_relative_error = worst.relative_error;
        result.worst = worst;
      }
    }
  }
  return result;
}

}  // namespace permnet

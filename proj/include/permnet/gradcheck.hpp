#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "permnet/model.hpp"
#include "permnet/network.hpp"

namespace permnet {

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Tensors larger than this are checked on a seeded sample of this many
  /// coordinates; smaller tensors are checked exhaustively.
  std::size_t max_coords_per_tensor = 200;
  std::uint64_t seed = 0;
  /// Train keeps dropout active with masks frozen by `seed`.
  Mode mode = Mode::Train;
};

struct GradCheckEntry {
  std::size_t layer = 0;
  std::size_t tensor = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  GradCheckEntry worst;
  std::size_t coordinates_checked = 0;
  /// Worst relative error per (layer, tensor), in declaration order.
  std::vector<GradCheckEntry> per_tensor;
};

double relative_error(double analytic, double numeric) noexcept;

/// Compares backward() against central differences of the full loss
/// (data term plus L2 penalty).
GradCheckResult gradient_check(const ModelConfig& config, const Parameters& params, const Tensor& batch,
                               std::span<const double> labels, const GradCheckOptions& options = {});

}  // namespace permnet

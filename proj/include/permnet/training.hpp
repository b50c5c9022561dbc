#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "permnet/features.hpp"
#include "permnet/metrics.hpp"
#include "permnet/model.hpp"
#include "permnet/optimizer.hpp"

namespace permnet {

struct TrainSchedule {
  std::size_t max_epochs = 100;
  std::size_t patience_epochs = 20;
  /// Validation accuracy must beat the best so far by more than this to
  /// reset the patience counter.
  double min_delta = 0.001;
  std::uint64_t shuffle_seed = 0;
  std::size_t batch_size = 128;
  std::optional<double> wall_clock_budget_seconds;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;       // Infer mode, after the epoch
  double validation_accuracy = 0.0;  // Infer mode, threshold 0.5
  double epoch_wall_seconds = 0.0;
};

enum class StopReason { MaxEpochs, Patience, WallClock };

const char* stop_reason_name(StopReason r) noexcept;

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  StopReason stop_reason = StopReason::MaxEpochs;
};

struct TrainResult {
  Parameters params;  // best validation accuracy, not last
  TrainHistory history;
};

/// Epoch-patience stopping rule on validation accuracy.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience_epochs, double min_delta)
      : patience_(patience_epochs), min_delta_(min_delta) {}

  /// Records one epoch's accuracy; true when training should stop.
  bool observe(double validation_accuracy) {
    if (validation_accuracy > reference_ + min_delta_) {
      reference_ = validation_accuracy;
      stale_ = 0;
      return false;
    }
    return ++stale_ >= patience_;
  }

 private:
  std::size_t patience_;
  double min_delta_;
  double reference_ = -1.0;
  std::size_t stale_ = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Packs the feature rows selected by `rows` into a [n, P] batch.
Tensor make_batch(const Dataset& dataset, std::span<const std::size_t> rows);

TrainResult train(const ModelConfig& config, const Dataset& train_set, const Dataset& validation,
                  const TrainSchedule& schedule, const OptimizerSettings& optimizer,
                  const EpochCallback& on_epoch = {});

/// `<prefix>_history.csv` and `<prefix>_roc.csv`.
void write_history_csv(std::ostream& out, const TrainHistory& history);
void export_curves(const TrainHistory& history, const RocCurve& roc, const std::string& path_prefix);

}  // namespace permnet

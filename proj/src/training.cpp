#include "permnet/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "permnet/error.hpp"
#include "permnet/loss.hpp"
#include "permnet/rng.hpp"

namespace permnet {

const char* stop_reason_name(StopReason r) noexcept {
  switch (r) {
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::Patience: return "patience";
    case StopReason::WallClock: return "wall_clock";
  }
  return "max_epochs";
}

Tensor make_batch(const Dataset& dataset, std::span<const std::size_t> rows) {
  const std::size_t width = dataset.width();
  Tensor batch({rows.size(), width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = dataset.rows[rows[i]].features;
    std::copy(f.begin(), f.end(), batch.values.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  return batch;
}

namespace {

double accuracy_of(const ModelConfig& config, const Parameters& params, const Dataset& ds) {
  return evaluate(params, config, ds, 0.5).accuracy;
}

}  // namespace

TrainResult train(const ModelConfig& config, const Dataset& train_set, const Dataset& validation,
                  const TrainSchedule& schedule, const OptimizerSettings& optimizer_settings,
                  const EpochCallback& on_epoch) {
  infer_shapes(config);
  if (schedule.patience_epochs == 0) throw Error(Errc::InvalidConfig, "patience_epochs must be positive");
  if (schedule.batch_size == 0) throw Error(Errc::InvalidConfig, "batch_size must be positive");
  if (!(schedule.min_delta >= 0.0)) throw Error(Errc::InvalidConfig, "min_delta must be non-negative");
  for (const Dataset* ds : {&train_set, &validation}) {
    if (ds->width() != config.input_dim) {
      throw Error(Errc::ShapeMismatch, "dataset width " + std::to_string(ds->width()) +
                                           " does not match model input_dim " + std::to_string(config.input_dim));
    }
  }

  TrainResult result;
  result.params = init_parameters(config);
  if (schedule.max_epochs == 0) return result;
  if (train_set.rows.empty()) throw Error(Errc::EmptyDataset, "training set is empty");
  if (validation.rows.empty()) throw Error(Errc::EmptyDataset, "validation set is empty");

  Parameters params = result.params;
  Optimizer optimizer(optimizer_settings);
  std::vector<std::size_t> order(train_set.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_saved = -1.0;      // best validation accuracy seen, for checkpointing
  EarlyStopping stopping(schedule.patience_epochs, schedule.min_delta);
  const auto run_start = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(schedule.shuffle_seed, epoch));
    shuffle(std::span<std::size_t>(order), rng);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size, ++batch_index) {
      const std::size_t n = std::min(schedule.batch_size, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, n);
      const Tensor batch = make_batch(train_set, rows);
      std::vector<double> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = train_set.rows[rows[i]].label;

      GradientBundle g;
      try {
        g = backward(config, params, batch, labels,
                     derive_seed(derive_seed(schedule.shuffle_seed ^ 0xd20f, epoch), batch_index));
      } catch (const Error& e) {
        if (e.code() != Errc::NonFiniteActivation) throw;
        throw Error(Errc::NonFiniteActivation, "epoch " + std::to_string(epoch) + ", batch " +
                                                   std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(g.loss.loss)) {
        throw Error(Errc::NonFiniteActivation,
                    "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) + ": loss is not finite");
      }
      loss_sum += g.loss.loss * static_cast<double>(n);
      optimizer.step(params, g.gradients);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = accuracy_of(config, params, train_set);
    rec.validation_accuracy = accuracy_of(config, params, validation);
    const auto t1 = std::chrono::steady_clock::now();
    rec.epoch_wall_seconds = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.validation_accuracy > best_saved) {
      best_saved = rec.validation_accuracy;
      result.params = params;
      result.history.best_epoch = epoch;
    }
    if (stopping.observe(rec.validation_accuracy)) {
      result.history.stop_reason = StopReason::Patience;
      break;
    }
    if (schedule.wall_clock_budget_seconds &&
        std::chrono::duration<double>(t1 - run_start).count() >= *schedule.wall_clock_budget_seconds) {
      result.history.stop_reason = StopReason::WallClock;
      break;
    }
  }
  return result;
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,train_loss,train_acc,val_acc,epoch_seconds\n";
  for (const auto& e : history.epochs) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.train_accuracy) << ','
        << format_double(e.validation_accuracy) << ',' << format_double(e.epoch_wall_seconds) << '\n';
  }
}

void export_curves(const TrainHistory& history, const RocCurve& roc, const std::string& path_prefix) {
  const std::string hist_path = path_prefix + "_history.csv";
  const std::string roc_path = path_prefix + "_roc.csv";
  std::ofstream h(hist_path, std::ios::binary);
  if (!h) throw Error(Errc::Io, "cannot open " + hist_path + " for writing");
  write_history_csv(h, history);
  std::ofstream r(roc_path, std::ios::binary);
  if (!r) throw Error(Errc::Io, "cannot open " + roc_path + " for writing");
  write_roc_csv(r, roc);
  if (!h || !r) throw Error(Errc::Io, "write failed for " + path_prefix);
}

}  // namespace permnet

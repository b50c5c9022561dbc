#pragma once

// Named architectures, experiment configuration and the planted-rule corpus
// generator used by the tooling.

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "permnet/features.hpp"
#include "permnet/ingest.hpp"
#include "permnet/model.hpp"
#include "permnet/optimizer.hpp"
#include "permnet/training.hpp"

namespace permnet {

/// Overrides for shrinking a preset; empty fields keep the preset sizes.
struct PresetOverrides {
  std::vector<std::size_t> hidden_widths;  // three dense widths
  std::vector<std::size_t> conv_filters;   // three filter counts
  std::optional<std::size_t> gru_units;
};

/// `nn-1024`, `nn-4096`, `cnn` or `gru`.
ModelConfig make_preset(const std::string& name, std::size_t input_dim, std::uint64_t seed,
                        const PresetOverrides& overrides = {});
const std::vector<std::string>& preset_names();

/// Reduced-size variant of a preset used by gradient checks.
struct TinyModel {
  ModelConfig config;
  std::size_t batch_size;
};
TinyModel make_tiny_preset(const std::string& name, std::uint64_t seed);

struct SynthSpec {
  std::size_t rows = 10000;
  std::size_t permissions = 64;
  std::size_t planted = 4;
  std::size_t planted_threshold = 2;  // label 1 iff at least this many planted present
  double presence_probability = 0.5;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};

struct SynthCorpus {
  std::vector<AppRecord> records;
  std::vector<std::string> permission_names;
  std::vector<std::string> planted_names;
};

SynthCorpus generate_synthetic_corpus(const SynthSpec& spec);

struct InputSpec {
  std::string kind;  // "jsonl", "csv", "pdsv" or "manifests"
  std::string path;
  bool lenient = false;
  std::string label_column = "Result";
};

struct SplitFractions {
  double test = 0.0;
  double validation = 0.0;
};

/// Complete description of a run. Every seed derives from `seed` unless set.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::optional<InputSpec> input;
  std::optional<std::string> train_path;
  std::optional<std::string> validation_path;
  std::optional<std::string> test_path;
  FilterConfig filter;
  std::optional<SplitSpec> split;               // explicit per-class counts
  std::optional<SplitFractions> split_fractions;  // or fractions of the row count
  bool balance = true;
  std::string preset = "nn-1024";
  PresetOverrides preset_overrides;
  std::optional<nlohmann::json> explicit_model;  // layer list; overrides preset
  OptimizerSettings optimizer;
  TrainSchedule schedule;
  double threshold = 0.5;
  std::string out_dir = "out";

  /// Seeds of the individual stages.
  std::uint64_t split_seed() const;
  std::uint64_t balance_seed() const;
  std::uint64_t model_seed() const;
  std::uint64_t shuffle_seed() const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& config);

/// Per-class split counts, resolving fractions as floor(fraction * rows / 2).
SplitSpec resolve_split(const ExperimentConfig& config, const Dataset& dataset);

/// Preset or explicit layer list, sized for `input_dim`.
ModelConfig resolve_model(const ExperimentConfig& config, std::size_t input_dim);

}  // namespace permnet

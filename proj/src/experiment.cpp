#include "permnet/experiment.hpp"

#include <algorithm>
#include <cstdio>

#include "permnet/checkpoint.hpp"
#include "permnet/error.hpp"
#include "permnet/rng.hpp"

namespace permnet {

using nlohmann::json;

namespace {

struct DenseHead {
  std::array<std::size_t, 3> widths;
  std::array<double, 3> dropout;
  std::array<double, 3> l2;
  double output_l2;
};

void append_head(std::vector<LayerSpec>& layers, std::size_t in_dim, const DenseHead& head) {
  std::size_t prev = in_dim;
  for (std::size_t i = 0; i < 3; ++i) {
    layers.push_back(DenseSpec{prev, head.widths[i], Activation::ReLU, head.l2[i], head.dropout[i]});
    prev = head.widths[i];
  }
  layers.push_back(DenseSpec{prev, 1, Activation::Sigmoid, head.output_l2, 0.0});
}

std::array<std::size_t, 3> widths_or(const std::vector<std::size_t>& override_widths,
                                     std::array<std::size_t, 3> fallback, const char* what) {
  if (override_widths.empty()) return fallback;
  if (override_widths.size() != 3) {
    throw Error(Errc::InvalidConfig, std::string(what) + " override needs exactly three values");
  }
  return {override_widths[0], override_widths[1], override_widths[2]};
}

constexpr std::array<double, 3> kStaggeredDropout = {0.25, 0.5, 0.75};

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"nn-1024", "nn-4096", "cnn", "gru"};
  return names;
}

ModelConfig make_preset(const std::string& name, std::size_t input_dim, std::uint64_t seed,
                        const PresetOverrides& overrides) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.seed = seed;
  if (name == "nn-1024" || name == "nn-4096") {
    const std::array<std::size_t, 3> defaults =
        name == "nn-1024" ? std::array<std::size_t, 3>{1024, 2048, 1024} : std::array<std::size_t, 3>{4096, 8192, 4096};
    append_head(c.layers, input_dim,
                {widths_or(overrides.hidden_widths, defaults, "hidden_widths"), kStaggeredDropout,
                 {0.0005, 0.001, 0.002}, 0.0});
  } else if (name == "cnn") {
    const auto filters = widths_or(overrides.conv_filters, {5, 80, 30}, "conv_filters");
    const std::array<std::size_t, 3> kernels = {10, 5, 3};
    const std::array<std::size_t, 3> pools = {2, 3, 2};
    std::size_t channels = 1;
    std::size_t length = input_dim;
    for (std::size_t i = 0; i < 3; ++i) {
      c.layers.push_back(Conv1DSpec{channels, filters[i], kernels[i], 0.002});
      c.layers.push_back(MaxPool1DSpec{pools[i]});
      channels = filters[i];
      length /= pools[i];
    }
    c.layers.push_back(FlattenSpec{});
    append_head(c.layers, length * channels,
                {widths_or(overrides.hidden_widths, {1024, 2048, 1024}, "hidden_widths"), kStaggeredDropout,
                 {0.002, 0.002, 0.002}, 0.0});
  } else if (name == "gru") {
    const std::size_t units = overrides.gru_units.value_or(150);
    c.layers.push_back(GruSpec{units, 0.2, 0.0004});
    append_head(c.layers, units,
                {widths_or(overrides.hidden_widths, {1024, 2048, 1024}, "hidden_widths"), kStaggeredDropout,
                 {0.0004, 0.0004, 0.0004}, 0.0004});
  } else {
    throw Error(Errc::InvalidConfig, "unknown preset \"" + name + "\" (expected nn-1024, nn-4096, cnn, gru)");
  }
  infer_shapes(c);
  return c;
}

TinyModel make_tiny_preset(const std::string& name, std::uint64_t seed) {
  PresetOverrides o;
  o.hidden_widths = {6, 8, 6};
  if (name == "cnn") {
    o.conv_filters = {2, 3, 2};
    return {make_preset(name, 12, seed, o), 4};
  }
  if (name == "gru") {
    o.gru_units = 4;
    return {make_preset(name, 6, seed, o), 4};
  }
  return {make_preset(name, 10, seed, o), 5};
}

SynthCorpus generate_synthetic_corpus(const SynthSpec& spec) {
  if (spec.permissions == 0 || spec.planted == 0 || spec.planted > spec.permissions) {
    throw Error(Errc::InvalidConfig, "synth: need 0 < planted <= permissions");
  }
  if (!(spec.presence_probability > 0.0 && spec.presence_probability < 1.0)) {
    throw Error(Errc::InvalidConfig, "synth: presence_probability must lie in (0,1)");
  }
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) {
    throw Error(Errc::InvalidConfig, "synth: label_noise must lie in [0,1]");
  }
  SynthCorpus corpus;
  for (std::size_t i = 0; i < spec.permissions; ++i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "synth.permission.P%05zu", i);
    corpus.permission_names.emplace_back(buf);
  }
  Rng pick(derive_seed(spec.seed, 1));
  std::vector<std::size_t> idx(spec.permissions);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  shuffle(std::span<std::size_t>(idx), pick);
  idx.resize(spec.planted);
  std::sort(idx.begin(), idx.end());
  std::vector<bool> planted(spec.permissions, false);
  for (auto i : idx) {
    planted[i] = true;
    corpus.planted_names.push_back(corpus.permission_names[i]);
  }

  Rng rng(derive_seed(spec.seed, 2));
  corpus.records.reserve(spec.rows);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    AppRecord rec;
    char buf[32];
    std::snprintf(buf, sizeof buf, "synth%07zu", r);
    rec.id = buf;
    std::size_t hits = 0;
    for (std::size_t p = 0; p < spec.permissions; ++p) {
      if (uniform01(rng) < spec.presence_probability) {
        rec.permissions.insert(corpus.permission_names[p]);
        if (planted[p]) ++hits;
      }
    }
    bool malware = hits >= spec.planted_threshold;
    if (uniform01(rng) < spec.label_noise) malware = !malware;
    rec.label = malware ? Label::Malware : Label::Benign;
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

std::uint64_t ExperimentConfig::split_seed() const { return derive_seed(seed, 1); }
std::uint64_t ExperimentConfig::balance_seed() const { return derive_seed(seed, 2); }
std::uint64_t ExperimentConfig::model_seed() const { return derive_seed(seed, 3); }
std::uint64_t ExperimentConfig::shuffle_seed() const { return derive_seed(seed, 4); }

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& target) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    target = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("config field \"") + key + "\": " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return empty;
  if (!it->is_object()) throw Error(Errc::InvalidConfig, std::string("config section \"") + key + "\" must be an object");
  return *it;
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "experiment config must be a JSON object");
  ExperimentConfig c;
  read_opt(j, "seed", c.seed);
  read_opt(j, "out_dir", c.out_dir);
  read_opt(j, "threshold", c.threshold);
  read_opt(j, "balance", c.balance);

  if (const auto& in = section(j, "input"); !in.empty()) {
    InputSpec s;
    read_opt(in, "kind", s.kind);
    read_opt(in, "path", s.path);
    read_opt(in, "lenient", s.lenient);
    read_opt(in, "label_column", s.label_column);
    if (s.kind != "jsonl" && s.kind != "csv" && s.kind != "pdsv" && s.kind != "manifests") {
      throw Error(Errc::InvalidConfig, "input.kind must be one of jsonl, csv, pdsv, manifests");
    }
    if (s.path.empty()) throw Error(Errc::InvalidConfig, "input.path is required");
    c.input = s;
  }
  if (const auto& d = section(j, "data"); !d.empty()) {
    std::string v;
    if (v.clear(), read_opt(d, "train", v), !v.empty()) c.train_path = v;
    if (v.clear(), read_opt(d, "validation", v), !v.empty()) c.validation_path = v;
    if (v.clear(), read_opt(d, "test", v), !v.empty()) c.test_path = v;
  }
  if (const auto& f = section(j, "filter"); !f.empty()) {
    read_opt(f, "min_total_occurrences", c.filter.min_total_occurrences);
    read_opt(f, "require_both_classes", c.filter.require_both_classes);
    if (c.filter.min_total_occurrences < 1) {
      throw Error(Errc::InvalidConfig, "filter.min_total_occurrences must be at least 1");
    }
  }
  if (const auto& s = section(j, "split"); !s.empty()) {
    if (s.contains("test_fraction") || s.contains("validation_fraction")) {
      SplitFractions fr;
      read_opt(s, "test_fraction", fr.test);
      read_opt(s, "validation_fraction", fr.validation);
      if (!(fr.test >= 0 && fr.validation >= 0 && fr.test + fr.validation <= 1.0)) {
        throw Error(Errc::InvalidConfig, "split fractions must be non-negative and sum to at most 1");
      }
      c.split_fractions = fr;
    } else {
      SplitSpec sp;
      read_opt(s, "test_per_class", sp.test_per_class);
      read_opt(s, "validation_per_class", sp.validation_per_class);
      c.split = sp;
    }
  }
  if (const auto& m = section(j, "model"); !m.empty()) {
    read_opt(m, "preset", c.preset);
    read_opt(m, "hidden_widths", c.preset_overrides.hidden_widths);
    read_opt(m, "conv_filters", c.preset_overrides.conv_filters);
    if (m.contains("gru_units") && !m["gru_units"].is_null()) {
      std::size_t u = 0;
      read_opt(m, "gru_units", u);
      c.preset_overrides.gru_units = u;
    }
    if (m.contains("layers") && !m["layers"].is_null()) c.explicit_model = m["layers"];
  }
  if (const auto& o = section(j, "optimizer"); !o.empty()) {
    std::string alg = algorithm_name(c.optimizer.algorithm);
    read_opt(o, "algorithm", alg);
    c.optimizer.algorithm = algorithm_from_name(alg);
    read_opt(o, "learning_rate", c.optimizer.learning_rate);
    read_opt(o, "beta1", c.optimizer.beta1);
    read_opt(o, "beta2", c.optimizer.beta2);
    read_opt(o, "epsilon", c.optimizer.epsilon);
  }
  if (const auto& s = section(j, "schedule"); !s.empty()) {
    read_opt(s, "max_epochs", c.schedule.max_epochs);
    read_opt(s, "patience_epochs", c.schedule.patience_epochs);
    read_opt(s, "min_delta", c.schedule.min_delta);
    read_opt(s, "batch_size", c.schedule.batch_size);
    if (s.contains("wall_clock_budget_seconds") && !s["wall_clock_budget_seconds"].is_null()) {
      double b = 0;
      read_opt(s, "wall_clock_budget_seconds", b);
      c.schedule.wall_clock_budget_seconds = b;
    }
  }
  c.schedule.shuffle_seed = c.shuffle_seed();
  return c;
}

json experiment_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["threshold"] = c.threshold;
  j["balance"] = c.balance;
  if (c.input) {
    j["input"] = {{"kind", c.input->kind},
                  {"path", c.input->path},
                  {"lenient", c.input->lenient},
                  {"label_column", c.input->label_column}};
  }
  json data = json::object();
  if (c.train_path) data["train"] = *c.train_path;
  if (c.validation_path) data["validation"] = *c.validation_path;
  if (c.test_path) data["test"] = *c.test_path;
  if (!data.empty()) j["data"] = data;
  j["filter"] = {{"min_total_occurrences", c.filter.min_total_occurrences},
                 {"require_both_classes", c.filter.require_both_classes}};
  if (c.split_fractions) {
    j["split"] = {{"test_fraction", c.split_fractions->test}, {"validation_fraction", c.split_fractions->validation}};
  } else if (c.split) {
    j["split"] = {{"test_per_class", c.split->test_per_class},
                  {"validation_per_class", c.split->validation_per_class}};
  }
  json model = {{"preset", c.preset}};
  if (!c.preset_overrides.hidden_widths.empty()) model["hidden_widths"] = c.preset_overrides.hidden_widths;
  if (!c.preset_overrides.conv_filters.empty()) model["conv_filters"] = c.preset_overrides.conv_filters;
  if (c.preset_overrides.gru_units) model["gru_units"] = *c.preset_overrides.gru_units;
  if (c.explicit_model) model["layers"] = *c.explicit_model;
  j["model"] = model;
  j["optimizer"] = {{"algorithm", algorithm_name(c.optimizer.algorithm)},
                    {"learning_rate", c.optimizer.learning_rate},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"epsilon", c.optimizer.epsilon}};
  j["schedule"] = {{"max_epochs", c.schedule.max_epochs},
                   {"patience_epochs", c.schedule.patience_epochs},
                   {"min_delta", c.schedule.min_delta},
                   {"batch_size", c.schedule.batch_size}};
  if (c.schedule.wall_clock_budget_seconds) {
    j["schedule"]["wall_clock_budget_seconds"] = *c.schedule.wall_clock_budget_seconds;
  }
  return j;
}

SplitSpec resolve_split(const ExperimentConfig& config, const Dataset& dataset) {
  SplitSpec s;
  if (config.split_fractions) {
    const double n = static_cast<double>(dataset.rows.size());
    s.test_per_class = static_cast<std::uint64_t>(config.split_fractions->test * n / 2.0);
    s.validation_per_class = static_cast<std::uint64_t>(config.split_fractions->validation * n / 2.0);
  } else if (config.split) {
    s = *config.split;
  }
  s.seed = config.split_seed();
  return s;
}

ModelConfig resolve_model(const ExperimentConfig& config, std::size_t input_dim) {
  if (config.explicit_model) {
    json j = {{"input_dim", input_dim}, {"seed", config.model_seed()}, {"layers", *config.explicit_model}};
    ModelConfig m = model_config_from_json(j);
    infer_shapes(m);
    return m;
  }
  return make_preset(config.preset, input_dim, config.model_seed(), config.preset_overrides);
}

}  // namespace permnet

#include "permnet/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "permnet/checkpoint.hpp"
#include "permnet/error.hpp"
#include "permnet/experiment.hpp"
#include "permnet/features.hpp"
#include "permnet/gradcheck.hpp"
#include "permnet/ingest.hpp"
#include "permnet/metrics.hpp"
#include "permnet/rng.hpp"
#include "permnet/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace permnet {
namespace {

constexpr const char* kToolVersion = "1.0.0";

/// Thrown to leave a command with a specific exit code.
struct CommandExit {
  int code;
  std::string message;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  bool quiet;

  std::ostream& info() {
    static std::ostream null_stream(nullptr);
    return quiet ? null_stream : out;
  }
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c;
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw CommandExit{kExitInput, "cannot open config " + g.config_path};
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CommandExit{kExitInput, "config " + g.config_path + ": " + e.what()};
    }
    c = experiment_from_json(j);
  }
  if (g.seed) c.seed = *g.seed;
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  c.schedule.shuffle_seed = c.shuffle_seed();
  return c;
}

fs::path ensure_out_dir(const ExperimentConfig& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CommandExit{kExitInput, "cannot create output directory " + dir.string() + ": " + ec.message()};
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

std::string detect_kind(const std::string& path) {
  if (fs::is_directory(path)) return "manifests";
  const auto ext = fs::path(path).extension().string();
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return "jsonl";
  if (ext == ".csv") return "csv";
  if (ext == ".pdsv") return "pdsv";
  throw CommandExit{kExitInput, "cannot infer input kind of " + path + "; pass --format"};
}

std::vector<AppRecord> load_manifest_dir(const fs::path& root) {
  std::vector<AppRecord> records;
  for (const auto& [sub, label] : {std::pair{"benign", Label::Benign}, std::pair{"malware", Label::Malware},
                                   std::pair{"unlabeled", Label::Unlabeled}}) {
    const fs::path dir = root / sub;
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".xml") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      AppRecord rec;
      rec.id = fs::relative(f, dir).replace_extension().generic_string();
      rec.label = label;
      try {
        rec.permissions = parse_manifest_xml(buf.str());
      } catch (const Error& e) {
        throw CommandExit{kExitInput, f.string() + ":" + std::to_string(e.line()) + ":" +
                                          std::to_string(e.column()) + ": " + e.what()};
      }
      records.push_back(std::move(rec));
    }
  }
  if (records.empty()) {
    throw CommandExit{kExitInput, root.string() + ": no manifests under benign/, malware/ or unlabeled/"};
  }
  return records;
}

std::vector<AppRecord> load_records(const InputSpec& spec, Io& io) {
  if (spec.kind == "manifests") return load_manifest_dir(spec.path);
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw CommandExit{kExitInput, "cannot open " + spec.path};
  try {
    if (spec.kind == "jsonl") {
      auto r = parse_metadata_jsonl(in, JsonlOptions{spec.lenient});
      if (r.skipped_lines) io.err << spec.path << ": skipped " << r.skipped_lines << " malformed line(s)\n";
      return std::move(r.records);
    }
    if (spec.kind == "csv") return parse_csv_dataset(in, CsvOptions{spec.label_column});
  } catch (const Error& e) {
    throw CommandExit{kExitInput, spec.path + ":" + std::to_string(e.line()) + ": " + e.what()};
  }
  throw CommandExit{kExitInput, "input kind \"" + spec.kind + "\" does not hold app records"};
}

Dataset load_dataset(const std::string& path) {
  try {
    return load_pdsv(path);
  } catch (const Error& e) {
    throw CommandExit{kExitInput, path + ":" + std::to_string(e.line()) + ": " + e.what()};
  }
}

std::vector<std::uint8_t> labels_of(const Dataset& ds) {
  std::vector<std::uint8_t> labels;
  labels.reserve(ds.rows.size());
  for (const auto& r : ds.rows) labels.push_back(r.label);
  return labels;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SynthSpec spec;
  std::string output;
  std::string format = "jsonl";
};

int cmd_synth(const Globals& g, const SynthArgs& a, Io& io) {
  auto cfg = load_config(g);
  SynthSpec spec = a.spec;
  spec.seed = derive_seed(cfg.seed, 0x5e);
  const auto corpus = generate_synthetic_corpus(spec);
  const fs::path path = a.output.empty() ? ensure_out_dir(cfg) / ("synth." + a.format) : fs::path(a.output);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CommandExit{kExitInput, "cannot open " + path.string()};
  if (a.format == "csv") {
    write_csv_dataset(out, corpus.records, corpus.permission_names);
  } else {
    write_metadata_jsonl(out, corpus.records);
  }
  std::size_t malware = 0;
  for (const auto& r : corpus.records) malware += r.label == Label::Malware;
  io.info() << "wrote " << corpus.records.size() << " records (" << corpus.records.size() - malware << " benign, "
            << malware << " malware) to " << path.string() << "\n";
  io.info() << "planted:";
  for (const auto& p : corpus.planted_names) io.info() << ' ' << p;
  io.info() << "\n";
  return kExitOk;
}

// -------------------------------------------------------- build-dataset

struct BuildArgs {
  std::string input;
  std::string format;
  std::optional<std::uint64_t> min_occurrences;
  bool allow_single_class = false;
  bool lenient = false;
  std::string label_column;
  std::string output;
  std::string stats;
};

int cmd_build_dataset(const Globals& g, const BuildArgs& a, Io& io) {
  auto cfg = load_config(g);
  InputSpec in = cfg.input.value_or(InputSpec{});
  if (!a.input.empty()) {
    in.path = a.input;
    in.kind = a.format.empty() ? detect_kind(a.input) : a.format;
  } else if (!a.format.empty()) {
    in.kind = a.format;
  }
  if (in.path.empty()) throw CommandExit{kExitInput, "build-dataset needs --input or config input.path"};
  if (in.kind.empty()) in.kind = detect_kind(in.path);
  if (a.lenient) in.lenient = true;
  if (!a.label_column.empty()) in.label_column = a.label_column;
  if (a.min_occurrences) cfg.filter.min_total_occurrences = *a.min_occurrences;
  if (a.allow_single_class) cfg.filter.require_both_classes = false;
  if (cfg.filter.min_total_occurrences < 1) throw CommandExit{kExitInput, "--min-occurrences must be >= 1"};

  const auto records = load_records(in, io);
  PermissionStats stats;
  try {
    stats = collect_permission_stats(records);
  } catch (const Error& e) {
    throw CommandExit{kExitInput, in.path + ": " + e.what()};
  }
  const auto list = filter_permissions(stats, cfg.filter);

  const fs::path dir = ensure_out_dir(cfg);
  const fs::path stats_path = a.stats.empty() ? dir / "permission_stats.csv" : fs::path(a.stats);
  {
    std::ofstream s(stats_path, std::ios::binary);
    if (!s) throw CommandExit{kExitInput, "cannot open " + stats_path.string()};
    stats.write_csv(s);
  }
  io.info() << "permissions seen: " << stats.size() << ", kept: " << list.size() << "\n";
  if (list.size() == 0) {
    io.err << "no permission survives the filter (min_total_occurrences=" << cfg.filter.min_total_occurrences
           << ", require_both_classes=" << (cfg.filter.require_both_classes ? "true" : "false") << ")\n";
    return kExitEmptyResult;
  }

  const Dataset ds = build_dataset(records, list);
  const fs::path out_path = a.output.empty() ? dir / "dataset.pdsv" : fs::path(a.output);
  save_pdsv(out_path, ds);
  io.info() << "rows: " << ds.rows.size() << " (benign " << ds.benign_count() << ", malware "
            << ds.malware_count() << "), width " << ds.width() << " -> " << out_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string input;
  std::optional<std::uint64_t> test_per_class;
  std::optional<std::uint64_t> val_per_class;
  std::optional<double> test_fraction;
  std::optional<double> val_fraction;
};

void apply_split_flags(ExperimentConfig& cfg, const SplitArgs& a) {
  if (a.test_fraction || a.val_fraction) {
    cfg.split_fractions = SplitFractions{a.test_fraction.value_or(0.0), a.val_fraction.value_or(0.0)};
    cfg.split.reset();
  } else if (a.test_per_class || a.val_per_class) {
    cfg.split = SplitSpec{a.test_per_class.value_or(0), a.val_per_class.value_or(0), 0};
    cfg.split_fractions.reset();
  }
}

SplitResult do_split(const ExperimentConfig& cfg, const Dataset& ds) {
  try {
    return split_dataset(ds, resolve_split(cfg, ds));
  } catch (const Error& e) {
    throw CommandExit{kExitInput, std::string("split: ") + e.what()};
  }
}

int cmd_split(const Globals& g, const SplitArgs& a, Io& io) {
  auto cfg = load_config(g);
  apply_split_flags(cfg, a);
  std::string path = a.input;
  if (path.empty() && cfg.input && cfg.input->kind == "pdsv") path = cfg.input->path;
  if (path.empty()) throw CommandExit{kExitInput, "split needs --input <dataset.pdsv>"};
  const Dataset ds = load_dataset(path);
  const auto parts = do_split(cfg, ds);
  const fs::path dir = ensure_out_dir(cfg);
  save_pdsv(dir / "train.pdsv", parts.train);
  save_pdsv(dir / "validation.pdsv", parts.validation);
  save_pdsv(dir / "test.pdsv", parts.test);
  for (const auto& [name, part] : {std::pair{"train", &parts.train}, std::pair{"validation", &parts.validation},
                                   std::pair{"test", &parts.test}}) {
    io.info() << name << ": " << part->rows.size() << " rows (benign " << part->benign_count() << ", malware "
              << part->malware_count() << ")\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string train;
  std::string validation;
  std::string preset;
  std::vector<std::size_t> hidden_widths;
  std::optional<std::size_t> max_epochs;
  std::optional<std::size_t> patience;
  std::optional<double> min_delta;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::string optimizer;
  std::optional<double> wall_clock;
  bool no_balance = false;
  SplitArgs split;
};

int cmd_train(const Globals& g, const TrainArgs& a, Io& io) {
  auto cfg = load_config(g);
  apply_split_flags(cfg, a.split);
  if (!a.preset.empty()) {
    cfg.preset = a.preset;
    cfg.explicit_model.reset();
  }
  if (!a.hidden_widths.empty()) cfg.preset_overrides.hidden_widths = a.hidden_widths;
  if (a.max_epochs) cfg.schedule.max_epochs = *a.max_epochs;
  if (a.patience) cfg.schedule.patience_epochs = *a.patience;
  if (a.min_delta) cfg.schedule.min_delta = *a.min_delta;
  if (a.batch_size) cfg.schedule.batch_size = *a.batch_size;
  if (a.learning_rate) cfg.optimizer.learning_rate = *a.learning_rate;
  if (!a.optimizer.empty()) cfg.optimizer.algorithm = algorithm_from_name(a.optimizer);
  if (a.wall_clock) cfg.schedule.wall_clock_budget_seconds = *a.wall_clock;
  if (a.no_balance) cfg.balance = false;
  if (!a.train.empty()) cfg.train_path = a.train;
  if (!a.validation.empty()) cfg.validation_path = a.validation;
  if (!a.data.empty()) cfg.input = InputSpec{"pdsv", a.data, false, "Result"};

  const fs::path dir = ensure_out_dir(cfg);
  Dataset train_set, validation;
  if (cfg.train_path) {
    if (!cfg.validation_path) throw CommandExit{kExitInput, "--train needs --validation"};
    train_set = load_dataset(*cfg.train_path);
    validation = load_dataset(*cfg.validation_path);
    if (train_set.permission_list != validation.permission_list) {
      throw CommandExit{kExitInput, "train and validation sets use different permission lists"};
    }
  } else if (cfg.input && cfg.input->kind == "pdsv") {
    const Dataset ds = load_dataset(cfg.input->path);
    auto parts = do_split(cfg, ds);
    save_pdsv(dir / "train.pdsv", parts.train);
    save_pdsv(dir / "validation.pdsv", parts.validation);
    save_pdsv(dir / "test.pdsv", parts.test);
    train_set = std::move(parts.train);
    validation = std::move(parts.validation);
  } else {
    throw CommandExit{kExitInput, "train needs --data <dataset.pdsv> or --train/--validation"};
  }
  if (validation.rows.empty() && cfg.schedule.max_epochs > 0) {
    throw CommandExit{kExitInput, "validation set is empty; set a validation split"};
  }
  if (cfg.balance && cfg.schedule.max_epochs > 0) {
    try {
      train_set = balance_by_duplication(train_set, cfg.balance_seed());
    } catch (const Error& e) {
      throw CommandExit{kExitInput, std::string("balance: ") + e.what()};
    }
  }

  ModelConfig model;
  try {
    model = resolve_model(cfg, train_set.width());
  } catch (const Error& e) {
    throw CommandExit{kExitInput, std::string("model: ") + e.what()};
  }
  io.info() << "training on " << train_set.rows.size() << " rows (benign " << train_set.benign_count()
            << ", malware " << train_set.malware_count() << "), validating on " << validation.rows.size() << "\n";

  TrainResult result;
  try {
    result = train(model, train_set, validation, cfg.schedule, cfg.optimizer, [&io](const EpochRecord& e) {
      io.info() << "epoch " << e.epoch << ": loss " << e.train_loss << ", train_acc " << e.train_accuracy
                << ", val_acc " << e.validation_accuracy << ", " << e.epoch_wall_seconds << " s\n";
    });
  } catch (const Error& e) {
    if (e.code() == Errc::NonFiniteActivation) throw CommandExit{kExitNumeric, e.what()};
    throw CommandExit{kExitInput, e.what()};
  }

  save_checkpoint(dir / "model.pnnc", model, result.params);
  RocCurve roc;
  if (!validation.rows.empty()) {
    roc = roc_curve(predict_scores(model, result.params, validation), labels_of(validation));
  }
  export_curves(result.history, roc, (dir / "train").string());

  json manifest = experiment_to_json(cfg);
  manifest["run"] = {{"command", "train"},
                     {"tool_version", kToolVersion},
                     {"compiler", __VERSION__},
                     {"seeds",
                      {{"global", cfg.seed},
                       {"split", cfg.split_seed()},
                       {"balance", cfg.balance_seed()},
                       {"model", cfg.model_seed()},
                       {"shuffle", cfg.shuffle_seed()}}},
                     {"model", model_config_to_json(model)},
                     {"epochs_run", result.history.epochs.size()},
                     {"best_epoch", result.history.best_epoch},
                     {"stop_reason", stop_reason_name(result.history.stop_reason)}};
  write_text(dir / "run_manifest.json", manifest.dump(2) + "\n");
  io.info() << "best epoch " << result.history.best_epoch << " of " << result.history.epochs.size() << " ("
            << stop_reason_name(result.history.stop_reason) << "); checkpoint " << (dir / "model.pnnc").string()
            << "\n";
  return kExitOk;
}

// ------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::optional<double> threshold;
};

int cmd_evaluate(const Globals& g, const EvalArgs& a, Io& io) {
  auto cfg = load_config(g);
  if (a.threshold) cfg.threshold = *a.threshold;
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw CommandExit{kExitInput, "--threshold must lie in [0,1]"};
  std::string data = a.data;
  if (data.empty() && cfg.test_path) data = *cfg.test_path;
  if (a.checkpoint.empty() || data.empty()) throw CommandExit{kExitInput, "evaluate needs --checkpoint and --data"};

  Checkpoint ck;
  try {
    ck = load_checkpoint(a.checkpoint);
  } catch (const Error& e) {
    throw CommandExit{kExitInput, a.checkpoint + ": " + e.what()};
  }
  const Dataset ds = load_dataset(data);
  if (ds.width() != ck.config.input_dim) {
    throw CommandExit{kExitInput, "checkpoint expects " + std::to_string(ck.config.input_dim) +
                                      " features but " + data + " has " + std::to_string(ds.width())};
  }
  if (ds.rows.empty()) throw CommandExit{kExitInput, data + ": dataset is empty"};

  const auto scores = predict_scores(ck.config, ck.params, ds);
  const auto labels = labels_of(ds);
  const EvalReport report = evaluate_scores(scores, labels, cfg.threshold);
  if (!report.f1_undefined &&
      std::abs(report.f1 - 2.0 * report.precision * report.recall / (report.precision + report.recall)) > 1e-12) {
    throw CommandExit{kExitNumeric, "internal error: report violates the F1 identity"};
  }
  const RocCurve roc = roc_curve(scores, labels);

  json j = report_to_json(report);
  j["rows"] = ds.rows.size();
  j["benign"] = ds.benign_count();
  j["malware"] = ds.malware_count();
  if (roc.auc_defined) {
    j["auc"] = roc.auc;
  } else {
    j["auc"] = "undefined";
  }
  const fs::path dir = ensure_out_dir(cfg);
  write_text(dir / "report.json", j.dump(2) + "\n");
  {
    std::ofstream r(dir / "roc.csv", std::ios::binary);
    write_roc_csv(r, roc);
  }
  io.out << "threshold " << report.threshold << ": accuracy " << report.accuracy << ", recall " << report.recall
         << ", precision " << report.precision << ", f1 " << report.f1 << ", auc "
         << (roc.auc_defined ? format_double(roc.auc) : std::string("undefined")) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------ gradcheck

struct GradArgs {
  std::vector<std::string> presets;
  std::string scale = "tiny";
  double epsilon = 1e-5;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const Globals& g, const GradArgs& a, Io& io) {
  auto cfg = load_config(g);
  if (a.scale != "tiny") throw CommandExit{kExitInput, "only --scale tiny is supported"};
  std::vector<std::string> presets = a.presets;
  if (presets.empty()) presets = {"nn-1024", "cnn", "gru"};

  bool ok = true;
  for (const auto& name : presets) {
    TinyModel tiny;
    try {
      tiny = make_tiny_preset(name, derive_seed(cfg.seed, 0x6c));
    } catch (const Error& e) {
      throw CommandExit{kExitInput, e.what()};
    }
    Parameters params = init_parameters(tiny.config);
    // Non-zero biases and real-valued inputs keep ReLU and max-pool away
    // from exact kinks and ties.
    Rng rng(derive_seed(cfg.seed, 0x6d));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      if (!params.layers[l].empty()) {
        for (auto& b : params.layers[l].back().values) b = uniform_real(rng, -0.1, 0.1);
      }
    }
    Tensor batch({tiny.batch_size, tiny.config.input_dim});
    for (auto& v : batch.values) v = uniform01(rng);
    std::vector<double> labels(tiny.batch_size);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<double>(i % 2);

    GradCheckOptions opts;
    opts.epsilon = a.epsilon;
    opts.seed = derive_seed(cfg.seed, 0x6e);
    const auto r = gradient_check(tiny.config, params, batch, labels, opts);
    const bool pass = r.max_relative_error < a.tolerance;
    ok = ok && pass;
    io.out << name << ": max relative error " << format_double(r.max_relative_error) << " over "
           << r.coordinates_checked << " coordinates " << (pass ? "PASS" : "FAIL") << "\n";
    for (const auto& e : r.per_tensor) {
      io.info() << "  layer " << e.layer << " (" << layer_kind_name(layer_kind(tiny.config.layers[e.layer]))
                << ") tensor " << e.tensor << ": " << format_double(e.relative_error) << "\n";
    }
    if (!pass) {
      io.err << name << ": worst coordinate layer " << r.worst.layer << " tensor " << r.worst.tensor << " index "
             << r.worst.index << ": analytic " << format_double(r.worst.analytic) << " vs numeric "
             << format_double(r.worst.numeric) << "\n";
    }
  }
  return ok ? kExitOk : kExitGradcheck;
}

// ----------------------------------------------------- audit-duplicates

int cmd_audit(const Globals& g, const std::string& input, Io& io) {
  (void)load_config(g);
  if (input.empty()) throw CommandExit{kExitInput, "audit-duplicates needs --input <dataset.pdsv>"};
  const Dataset ds = load_dataset(input);
  const auto a = audit_duplicates(ds);
  json j = {{"rows", ds.rows.size()},
            {"distinct_feature_rows", a.distinct_feature_rows},
            {"duplicate_rows", a.duplicate_rows},
            {"conflicting_groups", a.conflicting_groups},
            {"conflicting_rows", a.conflicting_rows}};
  io.out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Permission-based Android malware classifier toolkit", "permnet"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment configuration JSON");
  app.add_option("--seed", g.seed, "Global seed (overrides config)");
  app.add_option("--out-dir", g.out_dir, "Output directory (overrides config)");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a planted-rule synthetic corpus");
  s->fallthrough();
  s->add_option("--rows", synth.spec.rows)->capture_default_str();
  s->add_option("--permissions", synth.spec.permissions)->capture_default_str();
  s->add_option("--planted", synth.spec.planted)->capture_default_str();
  s->add_option("--planted-threshold", synth.spec.planted_threshold)->capture_default_str();
  s->add_option("--presence", synth.spec.presence_probability)->capture_default_str();
  s->add_option("--noise", synth.spec.label_noise)->capture_default_str();
  s->add_option("--format", synth.format)->check(CLI::IsMember({"jsonl", "csv"}))->capture_default_str();
  s->add_option("--output", synth.output);

  BuildArgs build;
  auto* b = app.add_subcommand("build-dataset", "Collect stats, filter permissions and write a PDSV dataset");
  b->fallthrough();
  b->add_option("--input", build.input, "JSONL, CSV or manifest directory");
  b->add_option("--format", build.format)->check(CLI::IsMember({"jsonl", "csv", "manifests"}));
  b->add_option("--min-occurrences", build.min_occurrences);
  b->add_flag("--allow-single-class", build.allow_single_class, "Keep permissions seen in one class only");
  b->add_flag("--lenient", build.lenient, "Skip malformed JSONL lines");
  b->add_option("--label-column", build.label_column);
  b->add_option("--output", build.output);
  b->add_option("--stats", build.stats);

  SplitArgs split;
  auto* sp = app.add_subcommand("split", "Split a PDSV dataset into train/validation/test");
  sp->fallthrough();
  sp->add_option("--input", split.input);
  sp->add_option("--test-per-class", split.test_per_class);
  sp->add_option("--val-per-class", split.val_per_class);
  sp->add_option("--test-fraction", split.test_fraction);
  sp->add_option("--val-fraction", split.val_fraction);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write a PNNC checkpoint");
  t->fallthrough();
  t->add_option("--data", tr.data, "PDSV dataset to split");
  t->add_option("--train", tr.train, "Pre-split training PDSV");
  t->add_option("--validation", tr.validation, "Pre-split validation PDSV");
  t->add_option("--preset", tr.preset)->check(CLI::IsMember(preset_names()));
  t->add_option("--hidden-widths", tr.hidden_widths)->expected(3);
  t->add_option("--max-epochs", tr.max_epochs);
  t->add_option("--patience", tr.patience);
  t->add_option("--min-delta", tr.min_delta);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--lr", tr.learning_rate);
  t->add_option("--optimizer", tr.optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  t->add_option("--wall-clock", tr.wall_clock, "Wall-clock budget in seconds");
  t->add_flag("--no-balance", tr.no_balance);
  t->add_option("--test-per-class", tr.split.test_per_class);
  t->add_option("--val-per-class", tr.split.val_per_class);
  t->add_option("--test-fraction", tr.split.test_fraction);
  t->add_option("--val-fraction", tr.split.val_fraction);

  EvalArgs ev;
  auto* e = app.add_subcommand("evaluate", "Evaluate a checkpoint on a PDSV dataset");
  e->fallthrough();
  e->add_option("--checkpoint", ev.checkpoint);
  e->add_option("--data", ev.data);
  e->add_option("--threshold", ev.threshold);

  GradArgs gc;
  auto* gr = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  gr->fallthrough();
  gr->add_option("--preset", gc.presets)->check(CLI::IsMember(preset_names()));
  gr->add_option("--scale", gc.scale)->capture_default_str();
  gr->add_option("--epsilon", gc.epsilon)->capture_default_str();
  gr->add_option("--tolerance", gc.tolerance)->capture_default_str();

  std::string audit_input;
  auto* au = app.add_subcommand("audit-duplicates", "Count duplicate and label-conflicting feature rows");
  au->fallthrough();
  au->add_option("--input", audit_input);

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("permnet");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kExitInput;
  }

  Io io{out, err, g.quiet};
  try {
    if (s->parsed()) return cmd_synth(g, synth, io);
    if (b->parsed()) return cmd_build_dataset(g, build, io);
    if (sp->parsed()) return cmd_split(g, split, io);
    if (t->parsed()) return cmd_train(g, tr, io);
    if (e->parsed()) return cmd_evaluate(g, ev, io);
    if (gr->parsed()) return cmd_gradcheck(g, gc, io);
    if (au->parsed()) return cmd_audit(g, audit_input, io);
  } catch (const CommandExit& ex) {
    err << "error: " << ex.message << "\n";
    return ex.code;
  } catch (const Error& ex) {
    err << "error: " << errc_name(ex.code()) << ": " << ex.what() << "\n";
    return ex.code() == Errc::NonFiniteActivation ? kExitNumeric : kExitInput;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace permnet

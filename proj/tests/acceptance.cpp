// Acceptance gate: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "permnet/cli.hpp"
#include "permnet/experiment.hpp"
#include "permnet/features.hpp"
#include "permnet/metrics.hpp"
#include "permnet/rng.hpp"
#include "permnet/training.hpp"

namespace fs = std::filesystem;
using namespace permnet;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, e;
  args.insert(args.begin(), "--quiet");
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "permnet %s exited %d: %s\n", args[1].c_str(), code, e.str().c_str());
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& preset : {"nn-1024", "cnn", "gru"}) {
    std::string out;
    const int code = cli({"gradcheck", "--preset", preset, "--scale", "tiny", "--tolerance", "1e-4"}, &out);
    ok = ok && code == 0;
    const auto pos = out.find("max relative error ");
    detail += std::string(preset) + "=" + (pos == std::string::npos ? "?" : out.substr(pos + 19, out.find(' ', pos + 19) - pos - 19)) + " ";
  }
  const double secs = seconds_since(t0);
  report(ok && secs < 120.0, "gradient-fidelity", detail + "(< 1e-4), " + fmt("%.2f", secs) + " s (< 120 s)");
}

void overfit_smoke() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> names;
  for (int j = 0; j < 32; ++j) names.push_back("p" + std::to_string(10 + j));
  Dataset ds{PermissionList(names), {}};
  Rng rng(derive_seed(2024, 1));
  for (int i = 0; i < 64; ++i) {
    FeatureVector fv{static_cast<std::uint8_t>(uniform_index(rng, 2)), std::vector<std::uint8_t>(32)};
    for (auto& b : fv.features) b = static_cast<std::uint8_t>(uniform_index(rng, 2));
    ds.rows.push_back(std::move(fv));
  }
  ModelConfig cfg{32,
                  {DenseSpec{32, 64, Activation::ReLU}, DenseSpec{64, 128, Activation::ReLU},
                   DenseSpec{128, 64, Activation::ReLU}, DenseSpec{64, 1, Activation::Sigmoid}},
                  derive_seed(2024, 2)};
  TrainSchedule sched;
  sched.max_epochs = 500;
  sched.patience_epochs = 500;
  sched.batch_size = 16;
  sched.shuffle_seed = derive_seed(2024, 3);
  std::size_t first_perfect = 0;
  train(cfg, ds, ds, sched, OptimizerSettings{}, [&](const EpochRecord& e) {
    if (first_perfect == 0 && e.train_accuracy == 1.0) first_perfect = e.epoch;
  });
  const double secs = seconds_since(t0);
  report(first_perfect > 0 && secs < 60.0, "overfit-smoke",
         "train accuracy 1.0 " + (first_perfect ? "at epoch " + std::to_string(first_perfect) : std::string("never")) +
             " (<= 500), " + fmt("%.2f", secs) + " s (< 60 s)");
}

void planted_rule(const fs::path& root) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = root / "planted";
  const auto s = [&](const char* leaf) { return (dir / leaf).string(); };
  bool ok = cli({"synth", "--seed", "7", "--rows", "10000", "--permissions", "64", "--planted", "4", "--noise", "0",
                 "--output", s("corpus.jsonl")}) == 0;
  ok = ok && cli({"build-dataset", "--seed", "7", "--input", s("corpus.jsonl"), "--out-dir", s("data")}) == 0;
  ok = ok && cli({"train", "--seed", "7", "--data", s("data/dataset.pdsv"), "--test-fraction", "0.15",
                  "--val-fraction", "0.15", "--preset", "nn-1024", "--hidden-widths", "128", "256", "128",
                  "--out-dir", s("run")}) == 0;
  ok = ok && cli({"evaluate", "--checkpoint", s("run/model.pnnc"), "--data", s("run/test.pdsv"), "--out-dir",
                  s("eval")}) == 0;
  double acc = 0.0;
  std::size_t rows = 0;
  if (ok) {
    const auto j = nlohmann::json::parse(slurp(dir / "eval/report.json"));
    acc = j["accuracy"];
    rows = j["rows"];
  }
  const double secs = seconds_since(t0);
  report(ok && acc >= 0.99 && secs < 300.0, "planted-rule",
         "test accuracy " + fmt("%.4f", acc) + " on " + std::to_string(rows) + " rows (>= 0.99), " +
             fmt("%.1f", secs) + " s (< 300 s)");
}

void metric_identities() {
  struct Row {
    double recall, precision, f1;
  };
  const Row rows[] = {{0.9157, 0.9413, 0.9283}, {0.9182, 0.9375, 0.9277}, {0.9220, 0.9864, 0.9531}};
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    const double f = f1_score(r.precision, r.recall);
    ok = ok && std::abs(f - r.f1) <= 0.00005;
    detail += fmt("%.6f", f) + " vs " + fmt("%.4f", r.f1) + "; ";
  }
  report(ok, "metric-identities", detail + "tolerance 5e-5");
}

double concordance(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  std::uint64_t twice = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      twice += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

struct RandomCase {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

RandomCase random_case(Rng& rng) {
  RandomCase c;
  const std::size_t n = 2 + uniform_index(rng, 199);
  const std::size_t levels = 1 + uniform_index(rng, 64);  // few levels force ties
  for (std::size_t i = 0; i < n; ++i) {
    c.scores.push_back(static_cast<double>(uniform_index(rng, levels)) / static_cast<double>(levels));
    c.labels.push_back(static_cast<std::uint8_t>(uniform_index(rng, 2)));
  }
  c.labels[0] = 0;
  c.labels[1] = 1;
  shuffle(std::span<std::uint8_t>(c.labels), rng);
  return c;
}

void auc_oracle() {
  Rng rng(derive_seed(2024, 10));
  double worst = 0.0;
  std::size_t tied = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto c = random_case(rng);
    const auto roc = roc_curve(c.scores, c.labels);
    worst = std::max(worst, roc.auc_defined ? std::abs(roc.auc - concordance(c.scores, c.labels)) : 1.0);
    auto sorted = c.scores;
    std::sort(sorted.begin(), sorted.end());
    tied += std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  }
  report(worst <= 1e-12, "auc-oracle",
         "max |auc - concordance| = " + fmt("%.3g", worst) + " over 1000 sets (" + std::to_string(tied) +
             " with ties), tolerance 1e-12");
}

void filter_fidelity() {
  struct Row {
    const char* name;
    std::uint64_t benign, malware;
  };
  const Row table[] = {
      {"android.permission.INTERNET", 1420018, 1392491},
      {"com.android.launcher.permission.READ_SETTINGS", 17360, 207213},
      {"com.kiosgame.fruitblaster.permission.C2D_MESSAGE", 0, 1},
      {"android.permission.CHANGE_WIFI_STATE", 108094, 565942},
      {"com.xgbuy.xg.permission.JPUSH_MESSAGE", 0, 2666},
      {"com.htc.launcher.permission.READ_SETTINGS", 126134, 54464},
      {"android.permission.SET_ACTIVITY_WATCHER", 127, 2360},
      {"com.tencent.qqlauncher.permission.READ_SETTINGS", 1286, 21684},
      {"android.permission.USE_BIOMETRIC", 12389, 232},
      {"dianxin.permission.ACCESS_LAUNCHER_DATA", 752, 18434},
      {"com.webcraftbd.flickr.permission.C2D_MESSAGE", 3, 19},
  };
  // App i of a class requests p iff i < count(p, class); streamed, never stored.
  PermissionStats stats;
  for (const auto label : {Label::Benign, Label::Malware}) {
    std::uint64_t apps = 0;
    for (const auto& r : table) apps = std::max(apps, label == Label::Benign ? r.benign : r.malware);
    AppRecord rec{"", label, {}};
    for (std::uint64_t i = 0; i < apps; ++i) {
      rec.permissions.clear();
      for (const auto& r : table) {
        if (i < (label == Label::Benign ? r.benign : r.malware)) rec.permissions.insert(r.name);
      }
      stats.add(rec);
    }
  }
  bool counts_ok = true;
  for (const auto& r : table) counts_ok = counts_ok && stats.at(r.name) == ClassCounts{r.benign, r.malware};

  const auto kept = filter_permissions(stats, FilterConfig{});
  std::vector<std::string> expected;
  for (const auto& r : table) {
    if (r.benign + r.malware >= 26 && r.benign >= 1 && r.malware >= 1) expected.push_back(r.name);
  }
  std::sort(expected.begin(), expected.end());
  const bool internet = kept.index_of("android.permission.INTERNET") < kept.size();
  const bool jpush = kept.index_of("com.xgbuy.xg.permission.JPUSH_MESSAGE") < kept.size();
  const bool fruit = kept.index_of("com.kiosgame.fruitblaster.permission.C2D_MESSAGE") < kept.size();
  const bool webcraft = kept.index_of("com.webcraftbd.flickr.permission.C2D_MESSAGE") < kept.size();
  report(counts_ok && kept.names() == expected && internet && !jpush && !fruit, "filter-fidelity",
         std::to_string(kept.size()) + " of 11 kept by the two rules; INTERNET kept, JPUSH_MESSAGE and fruitblaster "
         "C2D_MESSAGE dropped; webcraftbd C2D_MESSAGE (3+19=22 < 26) " + (webcraft ? "kept" : "dropped"));
}

void pipeline_determinism(const fs::path& root) {
  std::string history[2], pdsv[2], report_json[2], roc[2];
  bool ok = true;
  for (int k = 0; k < 2; ++k) {
    const auto dir = root / ("det" + std::to_string(k));
    const auto s = [&](const char* leaf) { return (dir / leaf).string(); };
    ok = ok && cli({"synth", "--seed", "11", "--rows", "3000", "--permissions", "40", "--noise", "0.05", "--output",
                    s("corpus.jsonl")}) == 0;
    ok = ok && cli({"build-dataset", "--seed", "11", "--input", s("corpus.jsonl"), "--out-dir", s("data")}) == 0;
    ok = ok && cli({"train", "--seed", "11", "--data", s("data/dataset.pdsv"), "--test-fraction", "0.2",
                    "--val-fraction", "0.2", "--hidden-widths", "32", "64", "32", "--max-epochs", "8", "--out-dir",
                    s("run")}) == 0;
    ok = ok && cli({"evaluate", "--checkpoint", s("run/model.pnnc"), "--data", s("run/test.pdsv"), "--out-dir",
                    s("eval")}) == 0;
    pdsv[k] = slurp(dir / "data/dataset.pdsv");
    report_json[k] = slurp(dir / "eval/report.json");
    roc[k] = slurp(dir / "eval/roc.csv");
    std::istringstream h(slurp(dir / "run/train_history.csv"));
    for (std::string line; std::getline(h, line);) {
      // wall-clock seconds are the only nondeterministic column
      history[k] += line.substr(0, line.rfind(',')) + "\n";
    }
  }
  const bool same = pdsv[0] == pdsv[1] && history[0] == history[1] && report_json[0] == report_json[1] &&
                    roc[0] == roc[1] && !pdsv[0].empty() && !report_json[0].empty();
  report(ok && same, "pipeline-determinism",
         std::string("PDSV ") + (pdsv[0] == pdsv[1] ? "identical" : "differs") + ", history accuracy columns " +
             (history[0] == history[1] ? "identical" : "differ") + ", EvalReport " +
             (report_json[0] == report_json[1] ? "identical" : "differs") + ", ROC " +
             (roc[0] == roc[1] ? "identical" : "differs"));
}

void roc_properties() {
  Rng rng(derive_seed(2024, 20));
  const std::vector<std::function<double(double)>> transforms = {
      [](double x) { return 3.0 * x + 1.0; },
      [](double x) { return std::exp(4.0 * x); },
      [](double x) { return x * x * x - 0.5; },
      [](double x) { return std::atan(10.0 * x - 5.0); },
  };
  std::size_t bad_mono = 0, bad_ends = 0, bad_invariance = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto c = random_case(rng);
    const auto roc = roc_curve(c.scores, c.labels);
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      if (roc.points[i].fpr < roc.points[i - 1].fpr || roc.points[i].tpr < roc.points[i - 1].tpr ||
          !(roc.points[i].threshold < roc.points[i - 1].threshold)) {
        ++bad_mono;
        break;
      }
    }
    const auto& f = roc.points.front();
    const auto& b = roc.points.back();
    if (!(f.fpr == 0.0 && f.tpr == 0.0 && b.fpr == 1.0 && b.tpr == 1.0)) ++bad_ends;
    const auto& g = transforms[static_cast<std::size_t>(t) % transforms.size()];
    std::vector<double> moved;
    for (double v : c.scores) moved.push_back(g(v));
    if (roc_curve(moved, c.labels).auc != roc.auc) ++bad_invariance;
  }
  report(bad_mono + bad_ends + bad_invariance == 0, "roc-properties",
         "1000 cases: " + std::to_string(bad_mono) + " non-monotone, " + std::to_string(bad_ends) +
             " missing endpoints, " + std::to_string(bad_invariance) + " AUC changes under increasing transforms");
}

void optional_android_csv(const fs::path& root) {
  const char* path = std::getenv("PERMNET_ANDROID_CSV");
  if (!path || !*path) {
    std::printf("INFO android-csv: skipped (set PERMNET_ANDROID_CSV to a 398-permission CSV to run; informational)\n");
    return;
  }
  const auto dir = root / "android";
  const auto s = [&](const char* leaf) { return (dir / leaf).string(); };
  bool ok = cli({"build-dataset", "--input", path, "--format", "csv", "--min-occurrences", "1",
                 "--allow-single-class", "--out-dir", s("data")}) == 0;
  ok = ok && cli({"train", "--data", s("data/dataset.pdsv"), "--test-per-class", "1500", "--val-per-class", "1500",
                  "--preset", "nn-1024", "--out-dir", s("run")}) == 0;
  ok = ok && cli({"evaluate", "--checkpoint", s("run/model.pnnc"), "--data", s("run/test.pdsv"), "--out-dir",
                  s("eval")}) == 0;
  if (!ok) {
    std::printf("INFO android-csv: pipeline failed; informational only\n");
    return;
  }
  const double acc = nlohmann::json::parse(slurp(dir / "eval/report.json"))["accuracy"];
  std::printf("INFO android-csv: nn-1024 test accuracy %.4f (expected band 0.92-0.97; informational)\n", acc);
}

}  // namespace

int main() {
  const auto root = fs::temp_directory_path() / "permnet_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  gradient_fidelity();
  overfit_smoke();
  planted_rule(root);
  metric_identities();
  auc_oracle();
  filter_fidelity();
  pipeline_determinism(root);
  roc_properties();
  optional_android_csv(root);

  fs::remove_all(root);
  std::printf("%s: %d primary criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "permnet/cli.hpp"
#include "permnet/features.hpp"

namespace fs = std::filesystem;
using namespace permnet;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("permnet_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

/// Small labeled corpus where p0..p3 appear in both classes often enough.
std::string corpus_jsonl(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    const bool mal = i % 3 == 0;
    s += "{\"id\":\"a" + std::to_string(i) + "\",\"label\":\"" + (mal ? "malware" : "benign") +
         "\",\"permissions\":[";
    std::string perms;
    for (std::size_t j = 0; j < 4; ++j) {
      if ((i >> j) & 1U) perms += std::string(perms.empty() ? "" : ",") + "\"p" + std::to_string(j) + "\"";
    }
    if (mal) perms += std::string(perms.empty() ? "" : ",") + "\"only.malware\"";
    s += perms + "]}\n";
  }
  return s;
}

}  // namespace

TEST_CASE("cli: usage errors") {
  CHECK(run({}).code == kExitInput);
  CHECK(run({"bogus"}).code == kExitInput);
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"train", "--preset", "resnet"}).code == kExitInput);
}

TEST_CASE("cli: build-dataset filters and is deterministic") {
  TempDir dir("build");
  spit(dir / "c.jsonl", corpus_jsonl(90));
  auto r = run({"build-dataset", "--input", dir / "c.jsonl", "--out-dir", dir / "a", "--min-occurrences", "10"});
  REQUIRE(r.code == kExitOk);
  const auto ds = load_pdsv(dir / "a/dataset.pdsv");
  CHECK(ds.permission_list.names() == std::vector<std::string>{"p0", "p1", "p2", "p3"});
  CHECK(ds.rows.size() == 90);
  CHECK(slurp(dir / "a/permission_stats.csv").rfind("permission,benign,malware,total\n", 0) == 0);

  r = run({"--quiet", "build-dataset", "--input", dir / "c.jsonl", "--out-dir", dir / "b", "--min-occurrences", "10"});
  CHECK(r.out.empty());
  CHECK(slurp(dir / "a/dataset.pdsv") == slurp(dir / "b/dataset.pdsv"));

  r = run({"build-dataset", "--input", dir / "c.jsonl", "--out-dir", dir / "c", "--allow-single-class",
           "--min-occurrences", "10"});
  CHECK(load_pdsv(dir / "c/dataset.pdsv").width() == 5);
}

TEST_CASE("cli: build-dataset exit codes") {
  TempDir dir("codes");
  spit(dir / "once.jsonl",
       "{\"id\":\"a\",\"label\":\"benign\",\"permissions\":[\"x\"]}\n"
       "{\"id\":\"b\",\"label\":\"malware\",\"permissions\":[\"y\"]}\n");
  CHECK(run({"build-dataset", "--input", dir / "once.jsonl", "--out-dir", dir / "o"}).code == kExitEmptyResult);

  spit(dir / "bad.jsonl", "{\"id\":\"a\",\"label\":\"benign\",\"permissions\":[]}\n{oops\n");
  auto r = run({"build-dataset", "--input", dir / "bad.jsonl", "--out-dir", dir / "o"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("bad.jsonl:2") != std::string::npos);

  spit(dir / "bad.csv", "p,Result\n3,1\n");
  CHECK(run({"build-dataset", "--input", dir / "bad.csv", "--out-dir", dir / "o"}).code == kExitInput);
  CHECK(run({"build-dataset", "--input", dir / "missing.jsonl", "--out-dir", dir / "o"}).code == kExitInput);
}

TEST_CASE("cli: manifest directory input") {
  TempDir dir("manifests");
  fs::create_directories(dir.path / "m/benign");
  fs::create_directories(dir.path / "m/malware");
  for (int i = 0; i < 30; ++i) {
    const std::string sub = i % 2 ? "malware" : "benign";
    spit(dir.path / "m" / sub / ("app" + std::to_string(i) + ".xml"),
         "<manifest><uses-permission android:name=\"android.permission.INTERNET\"/></manifest>");
  }
  REQUIRE(run({"build-dataset", "--input", dir / "m", "--out-dir", dir / "o"}).code == kExitOk);
  CHECK(load_pdsv(dir / "o/dataset.pdsv").permission_list.names() ==
        std::vector<std::string>{"android.permission.INTERNET"});

  spit(dir.path / "m/benign/broken.xml", "<manifest>\n<uses-permission>\n</manifest>");
  const auto r = run({"build-dataset", "--input", dir / "m", "--out-dir", dir / "o"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("broken.xml:3") != std::string::npos);
}

TEST_CASE("cli: split, train, evaluate and replay") {
  TempDir dir("flow");
  REQUIRE(run({"synth", "--rows", "600", "--permissions", "12", "--output", dir / "s.jsonl", "--seed", "3"}).code ==
          kExitOk);
  REQUIRE(run({"build-dataset", "--input", dir / "s.jsonl", "--out-dir", dir / "d"}).code == kExitOk);
  REQUIRE(run({"split", "--input", dir / "d/dataset.pdsv", "--test-per-class", "40", "--val-per-class", "40",
               "--out-dir", dir / "s"})
              .code == kExitOk);
  CHECK(load_pdsv(dir / "s/test.pdsv").rows.size() == 80);

  const std::vector<std::string> train_args = {
      "train", "--train", dir / "s/train.pdsv", "--validation", dir / "s/validation.pdsv", "--hidden-widths", "8",
      "8",     "8",       "--max-epochs",      "3",         "--seed",       "5",        "--out-dir", dir / "t"};
  REQUIRE(run(train_args).code == kExitOk);
  const auto hist = slurp(dir / "t/train_history.csv");
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 4);
  CHECK(slurp(dir / "t/train_roc.csv").find("# auc=") != std::string::npos);

  // replay from the manifest reproduces the checkpoint bytes
  REQUIRE(run({"train", "--config", dir / "t/run_manifest.json", "--out-dir", dir / "t2"}).code == kExitOk);
  CHECK(slurp(dir / "t/model.pnnc") == slurp(dir / "t2/model.pnnc"));

  auto r = run({"evaluate", "--checkpoint", dir / "t/model.pnnc", "--data", dir / "s/test.pdsv", "--out-dir",
                dir / "e"});
  REQUIRE(r.code == kExitOk);
  const auto report = nlohmann::json::parse(slurp(dir / "e/report.json"));
  CHECK(report["rows"] == 80);
  CHECK(report["auc"].is_number());
  REQUIRE(run({"evaluate", "--checkpoint", dir / "t/model.pnnc", "--data", dir / "s/test.pdsv", "--out-dir",
               dir / "e2"})
              .code == kExitOk);
  CHECK(slurp(dir / "e/report.json") == slurp(dir / "e2/report.json"));
  CHECK(slurp(dir / "e/roc.csv") == slurp(dir / "e2/roc.csv"));

  r = run({"evaluate", "--checkpoint", dir / "t/model.pnnc", "--data", dir / "s/test.pdsv", "--threshold", "0",
           "--out-dir", dir / "e3"});
  CHECK(nlohmann::json::parse(slurp(dir / "e3/report.json"))["recall"] == 1.0);
}

TEST_CASE("cli: evaluate edge cases") {
  TempDir dir("eval");
  REQUIRE(run({"synth", "--rows", "300", "--permissions", "8", "--output", dir / "s.jsonl"}).code == kExitOk);
  REQUIRE(run({"build-dataset", "--input", dir / "s.jsonl", "--out-dir", dir / "d"}).code == kExitOk);
  REQUIRE(run({"train", "--data", dir / "d/dataset.pdsv", "--test-per-class", "10", "--val-per-class", "10",
               "--max-epochs", "0", "--hidden-widths", "4", "4", "4", "--out-dir", dir / "t"})
              .code == kExitOk);
  CHECK(slurp(dir / "t/train_history.csv") == "epoch,train_loss,train_acc,val_acc,epoch_seconds\n");

  // single-class test set
  auto ds = load_pdsv(dir / "t/test.pdsv");
  std::erase_if(ds.rows, [](const FeatureVector& r) { return r.label == 0; });
  save_pdsv(dir / "mal.pdsv", ds);
  REQUIRE(run({"evaluate", "--checkpoint", dir / "t/model.pnnc", "--data", dir / "mal.pdsv", "--out-dir",
               dir / "e"})
              .code == kExitOk);
  CHECK(nlohmann::json::parse(slurp(dir / "e/report.json"))["auc"] == "undefined");

  // width mismatch
  Dataset narrow{PermissionList({"a"}), {{1, {1}}, {0, {0}}}};
  save_pdsv(dir / "narrow.pdsv", narrow);
  CHECK(run({"evaluate", "--checkpoint", dir / "t/model.pnnc", "--data", dir / "narrow.pdsv", "--out-dir",
             dir / "e"})
            .code == kExitInput);
}

TEST_CASE("cli: gradcheck and audit") {
  for (const auto& p : {"nn-1024", "cnn", "gru"}) {
    const auto r = run({"gradcheck", "--preset", p, "--scale", "tiny"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("PASS") != std::string::npos);
  }
  const auto strict = run({"gradcheck", "--preset", "gru", "--tolerance", "1e-30"});
  CHECK(strict.code == kExitGradcheck);
  CHECK(strict.err.find("worst coordinate") != std::string::npos);

  TempDir dir("audit");
  Dataset ds{PermissionList({"a"}), {{1, {1}}, {0, {1}}, {0, {0}}}};
  save_pdsv(dir / "d.pdsv", ds);
  const auto r = run({"audit-duplicates", "--input", dir / "d.pdsv"});
  REQUIRE(r.code == kExitOk);
  CHECK(nlohmann::json::parse(r.out)["conflicting_groups"] == 1);
}

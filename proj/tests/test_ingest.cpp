#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "permnet/error.hpp"
#include "permnet/features.hpp"
#include "permnet/ingest.hpp"
#include "permnet/rng.hpp"

using namespace permnet;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::Io;
}

std::string manifest(const std::vector<std::string>& body) {
  std::string s =
      "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n"
      "<manifest xmlns:android=\"http://schemas.android.com/apk/res/android\" package=\"x.y\">\n";
  for (const auto& b : body) s += "  " + b + "\n";
  return s + "</manifest>\n";
}

std::string uses(const std::string& name) { return "<uses-permission android:name=\"" + name + "\" />"; }

}  // namespace

TEST_CASE("manifest: two uses-permission elements") {
  const auto set = parse_manifest_xml(
      manifest({uses("android.permission.INTERNET"), uses("android.permission.CHANGE_WIFI_STATE")}));
  CHECK(set == PermissionSet{"android.permission.CHANGE_WIFI_STATE", "android.permission.INTERNET"});
}

TEST_CASE("manifest: no permissions and duplicates") {
  CHECK(parse_manifest_xml(manifest({"<application android:label=\"a\"/>"})).empty());
  const auto set = parse_manifest_xml(manifest({uses("android.permission.INTERNET"), uses("android.permission.INTERNET")}));
  CHECK(set.size() == 1);
}

TEST_CASE("manifest: names trimmed, case kept, other elements ignored") {
  const auto set = parse_manifest_xml(manifest({
      "<!-- <uses-permission android:name=\"commented.OUT\"/> -->",
      "<uses-permission android:name=\"  com.Vendor.permission.Read \"/>",
      "<permission android:name=\"declared.not.used\"/>",
      "<uses-permission-sdk-23 android:name=\"sdk.variant\"/>",
      "<application><activity android:name=\".Main\"><intent-filter/></activity></application>",
      "<uses-permission android:name='single.quoted' android:maxSdkVersion=\"18\"></uses-permission>",
  }));
  CHECK(set == PermissionSet{"com.Vendor.permission.Read", "single.quoted"});
}

TEST_CASE("manifest: entities decoded") {
  const auto set = parse_manifest_xml(manifest({uses("a&amp;b&#46;c&#x41;")}));
  CHECK(set == PermissionSet{"a&b.cA"});
}

TEST_CASE("manifest: malformed documents report position") {
  const std::vector<std::string> bad = {
      "",
      "<manifest>",
      "<manifest></application>",
      "<manifest><uses-permission android:name=\"x\"></manifest>",
      "<manifest a=\"1\" a=\"2\"/>",
      "<manifest a=1/>",
      "<manifest/><other/>",
      "<manifest>&bogus;</manifest>",
      "<manifest><!-- open",
      "text<manifest/>",
  };
  for (const auto& doc : bad) {
    CAPTURE(doc);
    CHECK(code_of([&] { parse_manifest_xml(doc); }) == Errc::MalformedXml);
  }
  try {
    parse_manifest_xml("<manifest>\n  <a>\n  </b>\n</manifest>");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() > 0);
  }
}

TEST_CASE("manifest: result invariant under element reordering") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> body;
    for (int i = 0; i < 12; ++i) {
      body.push_back(uses("perm." + std::to_string(uniform_index(rng, 8))));
      if (uniform01(rng) < 0.3) body.push_back("<meta-data android:name=\"m" + std::to_string(i) + "\"/>");
    }
    const auto ref = parse_manifest_xml(manifest(body));
    shuffle(std::span<std::string>(body), rng);
    CHECK(parse_manifest_xml(manifest(body)) == ref);
  }
}

TEST_CASE("jsonl: examples") {
  auto r = parse_metadata_jsonl(std::string_view(R"({"id":"a1","label":"malware","permissions":["p","p","q"]})"));
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0] == AppRecord{"a1", Label::Malware, {"p", "q"}});

  r = parse_metadata_jsonl(std::string_view(R"({"id":"a2","permissions":[]})"));
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0] == AppRecord{"a2", Label::Unlabeled, {}});

  CHECK(code_of([] {
          parse_metadata_jsonl(std::string_view(R"({"id":"a3","label":"trojan","permissions":[]})"));
        }) == Errc::UnknownLabel);
}

TEST_CASE("jsonl: strict vs lenient") {
  const std::string text =
      "{\"id\":\"a\",\"label\":\"benign\",\"permissions\":[\"x\"]}\n"
      "not json\n"
      "\n"
      "{\"id\":\"b\",\"label\":\"malware\"}\n"
      "{\"id\":\"c\",\"label\":\"malware\",\"permissions\":[\"y\"]}\n";
  try {
    parse_metadata_jsonl(std::string_view(text));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedLine);
    CHECK(e.line() == 2);
  }
  const auto r = parse_metadata_jsonl(std::string_view(text), JsonlOptions{true});
  CHECK(r.records.size() == 2);
  CHECK(r.skipped_lines == 2);
  CHECK(r.skipped_line_numbers == std::vector<std::size_t>{2, 4});
  // unknown labels abort even in lenient mode
  CHECK(code_of([] {
          parse_metadata_jsonl(std::string_view("{\"id\":\"z\",\"label\":\"adware\",\"permissions\":[]}"),
                               JsonlOptions{true});
        }) == Errc::UnknownLabel);
}

TEST_CASE("jsonl: round trip over random records") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AppRecord> recs;
    const auto n = uniform_index(rng, 20);
    for (std::size_t i = 0; i < n; ++i) {
      AppRecord r;
      r.id = "app\"" + std::to_string(trial) + "\\" + std::to_string(i) + "\xc3\xa9";
      r.label = static_cast<Label>(uniform_index(rng, 3));
      const auto k = uniform_index(rng, 6);
      for (std::size_t j = 0; j < k; ++j) r.permissions.insert("p." + std::to_string(uniform_index(rng, 10)));
      recs.push_back(std::move(r));
    }
    std::ostringstream out;
    write_metadata_jsonl(out, recs);
    const auto back = parse_metadata_jsonl(std::string_view(out.str()));
    CHECK(back.records == recs);
    CHECK(back.skipped_lines == 0);
  }
}

TEST_CASE("csv: examples") {
  auto recs = parse_csv_dataset(std::string_view("p1,p2,Result\n1,0,1\n0,0,0\n"));
  REQUIRE(recs.size() == 2);
  CHECK(recs[0] == AppRecord{"row1", Label::Malware, {"p1"}});
  CHECK(recs[1] == AppRecord{"row2", Label::Benign, {}});
  CHECK(code_of([] { parse_csv_dataset(std::string_view("p1,p2,Result\n2,0,1\n")); }) == Errc::NonBinaryCell);
  CHECK(code_of([] { parse_csv_dataset(std::string_view("p1,p2,Label\n1,0,1\n")); }) ==
        Errc::LabelColumnMissing);
  CHECK(code_of([] { parse_csv_dataset(std::string_view("")); }) == Errc::HeaderMissing);
  CHECK(code_of([] { parse_csv_dataset(std::string_view("p1,Result\n1\n")); }) == Errc::InvalidFormat);
}

TEST_CASE("csv: label column position and name are configurable") {
  const auto recs = parse_csv_dataset(std::string_view("class,a,b\r\n1,0,1\r\n"), CsvOptions{"class"});
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].label == Label::Malware);
  CHECK(recs[0].permissions == PermissionSet{"b"});
}

TEST_CASE("csv: writer rejects names with commas") {
  std::ostringstream out;
  CHECK(code_of([&] { write_csv_dataset(out, {}, {"a,b"}); }) == Errc::InvalidFormat);
}

TEST_CASE("csv: parse then vectorize reproduces the rows") {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t p = 1 + uniform_index(rng, 12);
    std::vector<std::string> header;
    for (std::size_t j = 0; j < p; ++j) header.push_back("perm" + std::to_string((j * 7919) % 101) + "_" + std::to_string(j));
    std::string text;
    for (const auto& h : header) text += h + ",";
    text += "Result\n";
    std::vector<std::vector<int>> rows;
    const std::size_t n = 1 + uniform_index(rng, 15);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> row;
      for (std::size_t j = 0; j <= p; ++j) row.push_back(static_cast<int>(uniform_index(rng, 2)));
      for (std::size_t j = 0; j <= p; ++j) text += std::to_string(row[j]) + (j == p ? "\n" : ",");
      rows.push_back(row);
    }
    const auto recs = parse_csv_dataset(std::string_view(text));
    REQUIRE(recs.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto fv = vectorize_columns(recs[i], header);
      CHECK(fv.label == rows[i][p]);
      for (std::size_t j = 0; j < p; ++j) CHECK(fv.features[j] == rows[i][j]);
    }
  }
}

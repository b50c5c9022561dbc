#pragma once

// App metadata ingestion: plain-text AndroidManifest.xml, JSONL metadata
// dumps and the 0/1 permission-matrix CSV layout.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace permnet {

enum class Label { Benign, Malware, Unlabeled };

const char* label_name(Label label) noexcept;

using PermissionSet = std::set<std::string>;

struct AppRecord {
  std::string id;
  Label label = Label::Unlabeled;
  PermissionSet permissions;

  bool operator==(const AppRecord&) const = default;
};

/// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view s) noexcept;

/// Returns the android:name of every <uses-permission> element. Throws
/// Error{MalformedXml} with the offending line/column.
PermissionSet parse_manifest_xml(std::string_view document);

struct JsonlOptions {
  bool lenient = false;
};

struct JsonlResult {
  std::vector<AppRecord> records;
  std::size_t skipped_lines = 0;
  std::vector<std::size_t> skipped_line_numbers;
};

JsonlResult parse_metadata_jsonl(std::istream& in, const JsonlOptions& options = {});
JsonlResult parse_metadata_jsonl(std::string_view text, const JsonlOptions& options = {});

void write_metadata_jsonl(std::ostream& out, const std::vector<AppRecord>& records);

struct CsvOptions {
  std::string label_column = "Result";
};

std::vector<AppRecord> parse_csv_dataset(std::istream& in, const CsvOptions& options = {});
std::vector<AppRecord> parse_csv_dataset(std::string_view text, const CsvOptions& options = {});

/// Writes the matrix layout with `permission_names` as columns followed by the
/// label column. Records must be labeled; names containing commas are rejected.
void write_csv_dataset(std::ostream& out, const std::vector<AppRecord>& records,
                       const std::vector<std::string>& permission_names,
                       const CsvOptions& options = {});

}  // namespace permnet

#include "permnet/ingest.hpp"

#include <json.hpp>
#include <sstream>

#include "permnet/error.hpp"

namespace permnet {

using nlohmann::json;

const char* label_name(Label label) noexcept {
  switch (label) {
    case Label::Benign: return "benign";
    case Label::Malware: return "malware";
    case Label::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::string_view trim(std::string_view s) noexcept {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

namespace {

AppRecord record_from_json(const json& obj, std::size_t line_no) {
  auto malformed = [line_no](const std::string& why) {
    return Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": " + why, line_no);
  };
  if (!obj.is_object()) throw malformed("not a JSON object");

  AppRecord rec;
  const auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) throw malformed("missing string field \"id\"");
  rec.id = std::string(trim(id->get_ref<const std::string&>()));
  if (rec.id.empty()) throw malformed("empty \"id\"");

  if (const auto lab = obj.find("label"); lab != obj.end() && !lab->is_null()) {
    if (!lab->is_string()) throw malformed("\"label\" is not a string");
    const auto& s = lab->get_ref<const std::string&>();
    if (s == "benign") {
      rec.label = Label::Benign;
    } else if (s == "malware") {
      rec.label = Label::Malware;
    } else {
      throw Error(Errc::UnknownLabel,
                  "line " + std::to_string(line_no) + ": unknown label \"" + s + "\"", line_no);
    }
  }

  const auto perms = obj.find("permissions");
  if (perms == obj.end() || !perms->is_array()) throw malformed("missing array field \"permissions\"");
  for (const auto& p : *perms) {
    if (!p.is_string()) throw malformed("non-string permission");
    const auto name = trim(p.get_ref<const std::string&>());
    if (!name.empty()) rec.permissions.emplace(name);
  }
  return rec;
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

JsonlResult parse_metadata_jsonl(std::istream& in, const JsonlOptions& options) {
  JsonlResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
      result.records.push_back(record_from_json(obj, line_no));
    } catch (const json::parse_error& e) {
      if (!options.lenient) {
        throw Error(Errc::MalformedLine, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
      }
      ++result.skipped_lines;
      result.skipped_line_numbers.push_back(line_no);
    } catch (const Error& e) {
      if (e.code() != Errc::MalformedLine || !options.lenient) throw;
      ++result.skipped_lines;
      result.skipped_line_numbers.push_back(line_no);
    }
  }
  return result;
}

JsonlResult parse_metadata_jsonl(std::string_view text, const JsonlOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_metadata_jsonl(in, options);
}

void write_metadata_jsonl(std::ostream& out, const std::vector<AppRecord>& records) {
  for (const auto& rec : records) {
    json obj;
    obj["id"] = rec.id;
    if (rec.label != Label::Unlabeled) obj["label"] = label_name(rec.label);
    obj["permissions"] = json::array();
    for (const auto& p : rec.permissions) obj["permissions"].push_back(p);
    out << obj.dump() << '\n';
  }
}

std::vector<AppRecord> parse_csv_dataset(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_commas(line);
      break;
    }
  }
  if (header.empty()) throw Error(Errc::HeaderMissing, "CSV input has no header row");

  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) {
      label_col = c;
      break;
    }
  }
  if (label_col == header.size()) {
    throw Error(Errc::LabelColumnMissing, "label column \"" + options.label_column + "\" not in header");
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col && header[c].empty()) {
      throw Error(Errc::HeaderMissing, "empty permission name in header column " + std::to_string(c + 1));
    }
  }

  std::vector<AppRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::InvalidFormat,
                  "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()),
                  line_no);
    }
    AppRecord rec;
    rec.id = "row" + std::to_string(row);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c] != "0" && cells[c] != "1") {
        throw Error(Errc::NonBinaryCell,
                    "row " + std::to_string(row) + ", column " + std::to_string(c + 1) + " (" +
                        header[c] + "): \"" + cells[c] + "\" is not 0/1",
                    line_no, c + 1);
      }
      const bool one = cells[c] == "1";
      if (c == label_col) {
        rec.label = one ? Label::Malware : Label::Benign;
      } else if (one) {
        rec.permissions.insert(header[c]);
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<AppRecord> parse_csv_dataset(std::string_view text, const CsvOptions& options) {
  std::istringstream in{std::string(text)};
  return parse_csv_dataset(in, options);
}

void write_csv_dataset(std::ostream& out, const std::vector<AppRecord>& records,
                       const std::vector<std::string>& permission_names, const CsvOptions& options) {
  for (const auto& name : permission_names) {
    if (name.find(',') != std::string::npos) {
      throw Error(Errc::InvalidFormat, "permission name contains a comma: " + name);
    }
  }
  for (const auto& name : permission_names) out << name << ',';
  out << options.label_column << '\n';
  for (const auto& rec : records) {
    if (rec.label == Label::Unlabeled) {
      throw Error(Errc::UnlabeledRecord, "record " + rec.id + " is unlabeled");
    }
    for (const auto& name : permission_names) out << (rec.permissions.contains(name) ? "1," : "0,");
    out << (rec.label == Label::Malware ? '1' : '0') << '\n';
  }
}

}  // namespace permnet

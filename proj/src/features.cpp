#include "permnet/features.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_map>

#include "permnet/error.hpp"
#include "permnet/rng.hpp"

namespace permnet {

void PermissionStats::add(const AppRecord& record) {
  if (record.label == Label::Unlabeled) {
    throw Error(Errc::UnlabeledRecord, "record " + record.id + " is unlabeled");
  }
  for (const auto& p : record.permissions) {
    auto& c = entries_[p];
    if (record.label == Label::Malware) {
      ++c.malware;
    } else {
      ++c.benign;
    }
  }
}

void PermissionStats::merge(const PermissionStats& other) {
  for (const auto& [name, counts] : other.entries_) {
    auto& c = entries_[name];
    c.benign += counts.benign;
    c.malware += counts.malware;
  }
}

ClassCounts PermissionStats::at(const std::string& permission) const {
  const auto it = entries_.find(permission);
  return it == entries_.end() ? ClassCounts{} : it->second;
}

void PermissionStats::write_csv(std::ostream& out) const {
  std::vector<const std::pair<const std::string, ClassCounts>*> order;
  order.reserve(entries_.size());
  for (const auto& e : entries_) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [](auto a, auto b) { return a->second.total() > b->second.total(); });
  out << "permission,benign,malware,total\n";
  for (const auto* e : order) {
    out << e->first << ',' << e->second.benign << ',' << e->second.malware << ','
        << e->second.total() << '\n';
  }
}

PermissionStats collect_permission_stats(std::span<const AppRecord> records) {
  PermissionStats stats;
  for (const auto& r : records) stats.add(r);
  return stats;
}

PermissionList::PermissionList(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw Error(Errc::InvalidFormat, "empty permission name");
    if (i > 0 && !(names_[i - 1] < names_[i])) {
      throw Error(Errc::InvalidFormat,
                  "permission list not strictly increasing at \"" + names_[i] + "\"");
    }
  }
}

std::size_t PermissionList::index_of(const std::string& name) const noexcept {
  const auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it == names_.end() || *it != name) return names_.size();
  return static_cast<std::size_t>(it - names_.begin());
}

PermissionList filter_permissions(const PermissionStats& stats, const FilterConfig& config) {
  if (config.min_total_occurrences < 1) {
    throw Error(Errc::InvalidConfig, "min_total_occurrences must be at least 1");
  }
  std::vector<std::string> kept;
  // std::map iterates in byte order, so the result is already canonical.
  for (const auto& [name, c] : stats.entries()) {
    if (c.total() < config.min_total_occurrences) continue;
    if (config.require_both_classes && (c.benign == 0 || c.malware == 0)) continue;
    kept.push_back(name);
  }
  return PermissionList(std::move(kept));
}

namespace {

std::uint8_t label_bit(const AppRecord& record) {
  switch (record.label) {
    case Label::Benign: return 0;
    case Label::Malware: return 1;
    case Label::Unlabeled: break;
  }
  throw Error(Errc::UnlabeledRecord, "record " + record.id + " is unlabeled");
}

}  // namespace

FeatureVector vectorize(const AppRecord& record, const PermissionList& list) {
  FeatureVector fv;
  fv.label = label_bit(record);
  fv.features.assign(list.size(), 0);
  for (const auto& p : record.permissions) {
    const auto i = list.index_of(p);
    if (i < list.size()) fv.features[i] = 1;
  }
  return fv;
}

FeatureVector vectorize_columns(const AppRecord& record, std::span<const std::string> columns) {
  FeatureVector fv;
  fv.label = label_bit(record);
  fv.features.resize(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    fv.features[i] = record.permissions.contains(columns[i]) ? 1 : 0;
  }
  return fv;
}

std::size_t Dataset::count(std::uint8_t label) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [label](const auto& r) { return r.label == label; }));
}

void Dataset::validate() const {
  const auto p = width();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.features.size() != p) {
      throw Error(Errc::InvalidFormat, "row " + std::to_string(i + 1) + " has width " +
                                           std::to_string(r.features.size()) + ", expected " +
                                           std::to_string(p));
    }
    if (r.label > 1) throw Error(Errc::InvalidFormat, "row " + std::to_string(i + 1) + ": label not 0/1");
    for (auto b : r.features) {
      if (b > 1) throw Error(Errc::InvalidFormat, "row " + std::to_string(i + 1) + ": feature not 0/1");
    }
  }
}

Dataset build_dataset(std::span<const AppRecord> records, const PermissionList& list) {
  Dataset ds;
  ds.permission_list = list;
  ds.rows.reserve(records.size());
  for (const auto& r : records) ds.rows.push_back(vectorize(r, list));
  return ds;
}

SplitResult split_dataset(const Dataset& dataset, const SplitSpec& spec) {
  SplitResult out;
  out.train.permission_list = dataset.permission_list;
  out.validation.permission_list = dataset.permission_list;
  out.test.permission_list = dataset.permission_list;

  const std::uint64_t need = spec.test_per_class + spec.validation_per_class;
  std::vector<std::uint8_t> assignment(dataset.rows.size(), 0);  // 0 train, 1 val, 2 test
  for (std::uint8_t label : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
      if (dataset.rows[i].label == label) idx.push_back(i);
    }
    if (idx.size() < need) {
      throw Error(Errc::InsufficientClassCount,
                  std::string("class ") + (label ? "malware" : "benign") + " has " +
                      std::to_string(idx.size()) + " rows, split needs " + std::to_string(need));
    }
    Rng rng(derive_seed(spec.seed, label));
    shuffle(std::span<std::size_t>(idx), rng);
    for (std::size_t k = 0; k < need; ++k) {
      assignment[idx[k]] = k < spec.test_per_class ? 2 : 1;
    }
  }
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    auto& target = assignment[i] == 2 ? out.test : assignment[i] == 1 ? out.validation : out.train;
    target.rows.push_back(dataset.rows[i]);
  }
  return out;
}

Dataset balance_by_duplication(const Dataset& train, std::uint64_t seed) {
  const std::size_t benign = train.benign_count();
  const std::size_t malware = train.malware_count();
  if (benign == 0 || malware == 0) {
    throw Error(Errc::EmptyClass, std::string("cannot balance: no ") +
                                      (benign == 0 ? "benign" : "malware") + " rows");
  }
  Dataset out = train;
  if (benign == malware) return out;

  const std::uint8_t minority = benign < malware ? 0 : 1;
  const std::size_t big = std::max(benign, malware);
  const std::size_t small = std::min(benign, malware);

  std::vector<std::size_t> minority_idx;
  for (std::size_t i = 0; i < train.rows.size(); ++i) {
    if (train.rows[i].label == minority) minority_idx.push_back(i);
  }
  out.rows.reserve(train.rows.size() + big - small);
  for (std::size_t copy = 1; copy < big / small; ++copy) {
    for (auto i : minority_idx) out.rows.push_back(train.rows[i]);
  }
  Rng rng(derive_seed(seed, 0xba1a));
  std::vector<std::size_t> sample = minority_idx;
  shuffle(std::span<std::size_t>(sample), rng);
  sample.resize(big % small);
  std::sort(sample.begin(), sample.end());
  for (auto i : sample) out.rows.push_back(train.rows[i]);
  return out;
}

DuplicateAudit audit_duplicates(const Dataset& dataset) {
  struct Group {
    std::size_t rows = 0;
    bool has[2] = {false, false};
  };
  std::unordered_map<std::string, Group> groups;
  for (const auto& r : dataset.rows) {
    std::string key(r.features.begin(), r.features.end());
    auto& g = groups[key];
    ++g.rows;
    g.has[r.label & 1] = true;
  }
  DuplicateAudit a;
  a.distinct_feature_rows = groups.size();
  a.duplicate_rows = dataset.rows.size() - groups.size();
  for (const auto& [key, g] : groups) {
    if (g.has[0] && g.has[1]) {
      ++a.conflicting_groups;
      a.conflicting_rows += g.rows;
    }
  }
  return a;
}

void write_pdsv(std::ostream& out, const Dataset& dataset) {
  const auto& names = dataset.permission_list.names();
  out << names.size() << '\n';
  for (const auto& n : names) out << n << '\n';
  std::string line;
  for (const auto& r : dataset.rows) {
    if (r.features.size() != names.size()) {
      throw Error(Errc::InvalidFormat, "row width does not match permission list");
    }
    line.clear();
    line += static_cast<char>('0' + r.label);
    for (auto b : r.features) {
      line += ',';
      line += static_cast<char>('0' + b);
    }
    line += '\n';
    out << line;
  }
}

Dataset read_pdsv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw Error(Errc::InvalidFormat, "PDSV: missing permission count", 1);
  const auto head = trim(line);
  std::size_t p = 0;
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), p);
  if (ec != std::errc{} || ptr != head.data() + head.size()) {
    throw Error(Errc::InvalidFormat, "PDSV: line 1 is not an integer", 1);
  }
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    ++line_no;
    if (!std::getline(in, line)) {
      throw Error(Errc::InvalidFormat, "PDSV: truncated permission list", line_no);
    }
    names.emplace_back(trim(line));
  }
  Dataset ds;
  ds.permission_list = PermissionList(std::move(names));
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (body.size() != 2 * p + 1) {
      throw Error(Errc::InvalidFormat,
                  "PDSV: row at line " + std::to_string(line_no) + " does not have " +
                      std::to_string(p + 1) + " fields",
                  line_no);
    }
    FeatureVector fv;
    fv.features.resize(p);
    for (std::size_t k = 0; k <= p; ++k) {
      const char c = body[2 * k];
      if ((c != '0' && c != '1') || (k < p && body[2 * k + 1] != ',')) {
        throw Error(Errc::InvalidFormat,
                    "PDSV: bad field " + std::to_string(k + 1) + " at line " + std::to_string(line_no),
                    line_no, 2 * k + 1);
      }
      const auto bit = static_cast<std::uint8_t>(c - '0');
      if (k == 0) {
        fv.label = bit;
      } else {
        fv.features[k - 1] = bit;
      }
    }
    ds.rows.push_back(std::move(fv));
  }
  return ds;
}

void save_pdsv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  write_pdsv(out, dataset);
  if (!out) throw Error(Errc::Io, "write failed: " + path.string());
}

Dataset load_pdsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_pdsv(in);
}

}  // namespace permnet

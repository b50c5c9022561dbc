#pragma once

// Permission statistics, filtering, 0/1 vectorization, splitting and
// class balancing.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "permnet/ingest.hpp"

namespace permnet {

struct ClassCounts {
  std::uint64_t benign = 0;
  std::uint64_t malware = 0;

  std::uint64_t total() const noexcept { return benign + malware; }
  bool operator==(const ClassCounts&) const = default;
};

/// Per-permission occurrence counts. Counts add, so shards can be merged.
class PermissionStats {
 public:
  void add(const AppRecord& record);
  void merge(const PermissionStats& other);

  const std::map<std::string, ClassCounts>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  ClassCounts at(const std::string& permission) const;

  /// CSV `permission,benign,malware,total`, total descending, ties by name.
  void write_csv(std::ostream& out) const;

 private:
  std::map<std::string, ClassCounts> entries_;
};

PermissionStats collect_permission_stats(std::span<const AppRecord> records);

struct FilterConfig {
  std::uint64_t min_total_occurrences = 26;
  bool require_both_classes = true;
};

/// Strictly increasing (byte order) list of retained permission names.
class PermissionList {
 public:
  PermissionList() = default;
  explicit PermissionList(std::vector<std::string> names);

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  /// Position of `name`, or size() when absent.
  std::size_t index_of(const std::string& name) const noexcept;

  bool operator==(const PermissionList&) const = default;

 private:
  std::vector<std::string> names_;
};

PermissionList filter_permissions(const PermissionStats& stats, const FilterConfig& config);

struct FeatureVector {
  std::uint8_t label = 0;
  std::vector<std::uint8_t> features;

  bool operator==(const FeatureVector&) const = default;
};

FeatureVector vectorize(const AppRecord& record, const PermissionList& list);
/// Same as vectorize, against an arbitrary (not necessarily sorted) column order.
FeatureVector vectorize_columns(const AppRecord& record, std::span<const std::string> columns);

struct Dataset {
  PermissionList permission_list;
  std::vector<FeatureVector> rows;

  std::size_t width() const noexcept { return permission_list.size(); }
  std::size_t count(std::uint8_t label) const noexcept;
  std::size_t benign_count() const noexcept { return count(0); }
  std::size_t malware_count() const noexcept { return count(1); }
  /// Throws InvalidFormat when a row's width or bit values are wrong.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

Dataset build_dataset(std::span<const AppRecord> records, const PermissionList& list);

struct SplitSpec {
  std::uint64_t test_per_class = 0;
  std::uint64_t validation_per_class = 0;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset validation;
  Dataset test;
};

SplitResult split_dataset(const Dataset& dataset, const SplitSpec& spec);

Dataset balance_by_duplication(const Dataset& train, std::uint64_t seed);

struct DuplicateAudit {
  std::size_t distinct_feature_rows = 0;
  std::size_t duplicate_rows = 0;       // rows whose features appeared earlier
  std::size_t conflicting_groups = 0;   // feature patterns seen with both labels
  std::size_t conflicting_rows = 0;     // rows inside such groups
};

DuplicateAudit audit_duplicates(const Dataset& dataset);

// PDSV text format: P, then P names, then rows "label,f1,...,fP".
void write_pdsv(std::ostream& out, const Dataset& dataset);
Dataset read_pdsv(std::istream& in);
void save_pdsv(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_pdsv(const std::filesystem::path& path);

}  // namespace permnet

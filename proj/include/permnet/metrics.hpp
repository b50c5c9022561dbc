#pragma once

// Threshold metrics, ROC sweep and AUC.

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "permnet/features.hpp"
#include "permnet/model.hpp"

namespace permnet {

/// Positive class is malware; a score >= threshold predicts malware.
struct EvalReport {
  double threshold = 0.5;
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  // Zero denominators report 0 with the matching flag set.
  bool recall_undefined = false;
  bool precision_undefined = false;
  bool f1_undefined = false;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const EvalReport&) const = default;
};

double f1_score(double precision, double recall) noexcept;

EvalReport report_from_confusion(double threshold, std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
                                 std::uint64_t fn);

EvalReport evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           double threshold);

/// Infer-mode scores for every dataset row, computed in batches.
std::vector<double> predict_scores(const ModelConfig& config, const Parameters& params, const Dataset& dataset,
                                   std::size_t batch_size = 256);

EvalReport evaluate(const Parameters& params, const ModelConfig& config, const Dataset& dataset,
                    double threshold = 0.5);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
  bool auc_defined = false;  // false when only one class is present
};

/// Thresholds are the distinct scores in decreasing order, preceded by a
/// sentinel just above the maximum. AUC is the trapezoidal area.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

std::string format_double(double v);

nlohmann::json report_to_json(const EvalReport& report);
void write_roc_csv(std::ostream& out, const RocCurve& roc);

}  // namespace permnet

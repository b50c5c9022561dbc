#include "permnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "permnet/error.hpp"
#include "permnet/network.hpp"

namespace permnet {

double f1_score(double precision, double recall) noexcept {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

EvalReport report_from_confusion(double threshold, std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
                                 std::uint64_t fn) {
  EvalReport r;
  r.threshold = threshold;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  const auto total = r.total();
  if (total == 0) throw Error(Errc::EmptyDataset, "cannot evaluate an empty dataset");
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
  r.recall_undefined = tp + fn == 0;
  r.recall = r.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.precision_undefined = tp + fp == 0;
  r.precision = r.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.f1_undefined = r.recall_undefined || r.precision_undefined || r.precision + r.recall == 0.0;
  r.f1 = r.f1_undefined ? 0.0 : f1_score(r.precision, r.recall);
  return r;
}

EvalReport evaluate_scores(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           double threshold) {
  if (scores.size() != labels.size()) {
    throw Error(Errc::ShapeMismatch, "evaluate: score/label count mismatch");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(Errc::InvalidConfig, "threshold must lie in [0,1]");
  }
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      predicted ? ++tp : ++fn;
    } else {
      predicted ? ++fp : ++tn;
    }
  }
  return report_from_confusion(threshold, tp, fp, tn, fn);
}

std::vector<double> predict_scores(const ModelConfig& config, const Parameters& params, const Dataset& dataset,
                                   std::size_t batch_size) {
  const std::size_t width = config.input_dim;
  if (dataset.width() != width) {
    throw Error(Errc::ShapeMismatch, "dataset width " + std::to_string(dataset.width()) +
                                         " does not match model input_dim " + std::to_string(width));
  }
  batch_size = std::max<std::size_t>(batch_size, 1);
  std::vector<double> scores;
  scores.reserve(dataset.rows.size());
  for (std::size_t start = 0; start < dataset.rows.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, dataset.rows.size() - start);
    Tensor batch({n, width});
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = dataset.rows[start + i].features;
      std::copy(f.begin(), f.end(), batch.values.begin() + static_cast<std::ptrdiff_t>(i * width));
    }
    const Tensor out = forward(config, params, batch, Mode::Infer, 0);
    scores.insert(scores.end(), out.values.begin(), out.values.end());
  }
  return scores;
}

EvalReport evaluate(const Parameters& params, const ModelConfig& config, const Dataset& dataset,
                    double threshold) {
  if (dataset.rows.empty()) throw Error(Errc::EmptyDataset, "cannot evaluate an empty dataset");
  const auto scores = predict_scores(config, params, dataset);
  std::vector<std::uint8_t> labels;
  labels.reserve(dataset.rows.size());
  for (const auto& r : dataset.rows) labels.push_back(r.label);
  return evaluate_scores(scores, labels, threshold);
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error(Errc::ShapeMismatch, "roc_curve: need equally many (>= 1) scores and labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  std::uint64_t pos = 0;
  for (auto l : labels) pos += l ? 1 : 0;
  const std::uint64_t neg = labels.size() - pos;
  const std::uint64_t total = labels.size();

  auto rate = [total](std::uint64_t hits, std::uint64_t denom, std::uint64_t predicted) {
    // With an absent class the rate is 1 exactly when everything is flagged.
    if (denom == 0) return predicted == total ? 1.0 : 0.0;
    return static_cast<double>(hits) / static_cast<double>(denom);
  };

  RocCurve roc;
  const double top = scores[order.front()];
  roc.points.push_back({std::nextafter(top, std::numeric_limits<double>::infinity()), 0.0, 0.0});

  std::uint64_t tp = 0, fp = 0;
  // Twice the trapezoid area in units of (1/neg)*(1/pos), kept integral.
  unsigned __int128 area2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    const std::uint64_t tp0 = tp, fp0 = fp;
    while (i < order.size() && scores[order[i]] == thr) {
      labels[order[i]] ? ++tp : ++fp;
      ++i;
    }
    area2 += static_cast<unsigned __int128>(fp - fp0) * (tp + tp0);
    roc.points.push_back({thr, rate(fp, neg, tp + fp), rate(tp, pos, tp + fp)});
  }
  roc.auc_defined = pos > 0 && neg > 0;
  roc.auc = roc.auc_defined
                ? static_cast<double>(area2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg))
                : 0.0;
  return roc;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["threshold"] = r.threshold;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["tn"] = r.tn;
  j["fn"] = r.fn;
  j["accuracy"] = r.accuracy;
  j["recall"] = r.recall;
  j["precision"] = r.precision;
  j["f1"] = r.f1;
  j["recall_undefined"] = r.recall_undefined;
  j["precision_undefined"] = r.precision_undefined;
  j["f1_undefined"] = r.f1_undefined;
  return j;
}

void write_roc_csv(std::ostream& out, const RocCurve& roc) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : roc.points) {
    out << format_double(p.threshold) << ',' << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
  }
  out << "# auc=" << (roc.auc_defined ? format_double(roc.auc) : std::string("undefined")) << '\n';
}

}  // namespace permnet

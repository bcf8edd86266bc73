#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kusuri/checkpoint.hpp"
#include "kusuri/pipeline.hpp"

namespace kusuri {

struct IdLabel {
  std::string id;
  int label = 0;
};

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Percentages in [0, 100]. A zero denominator gives 0 for that metric.
struct PrfMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
};

struct McNemarResult {
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // A wrong, B correct
  double p_value = 1.0;
};

// Predictions and gold must list the same ids in the same order.
ConfusionCounts confusion(const std::vector<IdLabel>& predictions, const std::vector<IdLabel>& gold);
ConfusionCounts confusion(const std::vector<int>& predictions, const std::vector<int>& gold);

PrfMetrics prf(const ConfusionCounts& counts);
double f1_from_pr(double precision, double recall);

// Two-rater binary kappa; expected agreement from the marginal product.
// When both raters use a single identical label (p_e = 1) kappa is 1.
KappaResult cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

// Exact two-sided binomial test on the discordant pairs.
McNemarResult mcnemar(const std::vector<int>& preds_a, const std::vector<int>& preds_b,
                      const std::vector<int>& gold);

struct ErrorItem {
  std::string id;
  std::string text;
  FilterVerdict verdict;
  std::optional<double> probability;
};

struct ErrorReport {
  std::vector<ErrorItem> false_positives;
  std::vector<ErrorItem> false_negatives;
};

ErrorReport error_report(const std::vector<Classification>& predictions,
                         const std::vector<IdLabel>& gold, const Corpus& corpus);

std::vector<IdLabel> gold_labels(const Corpus& corpus);
std::vector<IdLabel> predicted_labels(const std::vector<Classification>& rows);

double round1(double x);

// {tp, fp, fn, tn, precision, recall, f1}; P/R/F1 rounded to one decimal.
Json metrics_report(const ConfusionCounts& counts);
Json comparison_report(const McNemarResult& r);
Json to_json(const ErrorReport& r);

}  // namespace kusuri

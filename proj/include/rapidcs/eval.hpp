#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rapidcs/core.hpp"

namespace rapidcs {

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  // No positive predictions: precision is reported as 1.0.
  bool no_predictions = false;
  // No actual positives among decided items: recall is reported as 1.0.
  bool no_actual_positives = false;
};

// Throws Error(kMissingTruth) when a decided item has no truth entry.
PrecisionRecall precision_recall(const std::map<ItemId, bool>& decisions,
                                 const TruthMap& truth);

// Decisions from estimates (undecided counts as negative).
std::map<ItemId, bool> decisions_of(std::span<const LabelEstimate> estimates);

struct VoteOutcome {
  bool label = false;
  bool tie = false;
};

// Strict majority; even splits go negative and are flagged.
std::map<ItemId, VoteOutcome> majority_vote(
    const std::map<ItemId, std::vector<bool>>& labels);

struct CostModel {
  double conventional_seconds_per_item = 1.7;
  int conventional_redundancy = 3;
  double rapid_display_seconds = 0.1;
  int rapid_redundancy = 5;
};

// Total worker-seconds per item, conventional over rapid.
double speedup(const CostModel& cost);

// "10.20" style, two decimals.
std::string format_speedup(double value);

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

// One point per distinct posterior, descending thresholds.
std::vector<PrPoint> precision_recall_curve(std::span<const LabelEstimate> estimates,
                                            const TruthMap& truth);

// Largest recall over thresholds whose precision reaches `min_precision`
// (0 if none does).
double recall_at_precision(std::span<const LabelEstimate> estimates,
                           const TruthMap& truth, double min_precision);

struct ApproachMetrics {
  double seconds_per_item = 0.0;
  int redundancy = 0;
  std::optional<double> precision;
  std::optional<double> recall;
};

struct Table1Row {
  std::string task;
  std::string variant;
  ApproachMetrics conventional;
  ApproachMetrics rapid;
};

struct Table1Report {
  struct Line {
    Table1Row row;
    double speedup = 0.0;
  };
  std::vector<Line> lines;

  std::string text() const;
  std::string csv() const;
};

// Throws Error(kInvalidArgument) for rows missing timing, redundancy,
// precision or recall.
Table1Report table1_report(std::span<const Table1Row> rows);

// Conventional labeling of a multi-class set as one binary question per
// (item, class), each answered by `redundancy` workers.
struct MulticlassCostReport {
  double naive_seconds = 0.0;
  double rapid_seconds = 0.0;
  double speedup = 0.0;
  double reduction_factor = 1.0;
  double combined_speedup = 0.0;
};

MulticlassCostReport multiclass_cost(std::size_t items, std::size_t classes,
                                     double conventional_seconds_per_label,
                                     int conventional_redundancy,
                                     std::size_t total_displays,
                                     double display_seconds,
                                     double reduction_factor = 1.0);

}  // namespace rapidcs

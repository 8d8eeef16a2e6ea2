#include "rapidcs/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace rapidcs {

PrecisionRecall precision_recall(const std::map<ItemId, bool>& decisions,
                                 const TruthMap& truth) {
  PrecisionRecall pr;
  for (const auto& [id, predicted] : decisions) {
    auto t = truth.find(id);
    if (t == truth.end()) {
      throw Error(ErrorCode::kMissingTruth, "no truth for decided item '" + id + "'");
    }
    if (predicted && t->second) ++pr.tp;
    else if (predicted) ++pr.fp;
    else if (t->second) ++pr.fn;
    else ++pr.tn;
  }
  pr.no_predictions = pr.tp + pr.fp == 0;
  pr.precision = pr.no_predictions
                     ? 1.0
                     : static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fp);
  pr.no_actual_positives = pr.tp + pr.fn == 0;
  pr.recall = pr.no_actual_positives
                  ? 1.0
                  : static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fn);
  return pr;
}

std::map<ItemId, bool> decisions_of(std::span<const LabelEstimate> estimates) {
  std::map<ItemId, bool> out;
  for (const auto& e : estimates) out[e.item_id] = e.decision == Decision::kPositive;
  return out;
}

std::map<ItemId, VoteOutcome> majority_vote(
    const std::map<ItemId, std::vector<bool>>& labels) {
  std::map<ItemId, VoteOutcome> out;
  for (const auto& [id, votes] : labels) {
    if (votes.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "item '" + id + "' has no labels");
    }
    const auto yes = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), true));
    const std::size_t no = votes.size() - yes;
    out[id] = {yes > no, yes == no};
  }
  return out;
}

double speedup(const CostModel& c) {
  if (!(c.conventional_seconds_per_item > 0.0) || !(c.rapid_display_seconds > 0.0) ||
      c.conventional_redundancy < 1 || c.rapid_redundancy < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cost model fields must be positive");
  }
  return (c.conventional_seconds_per_item * c.conventional_redundancy) /
         (c.rapid_display_seconds * c.rapid_redundancy);
}

std::string format_speedup(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::vector<PrPoint> precision_recall_curve(std::span<const LabelEstimate> estimates,
                                            const TruthMap& truth) {
  std::vector<std::pair<double, bool>> scored;
  std::size_t positives = 0;
  for (const auto& e : estimates) {
    auto t = truth.find(e.item_id);
    if (t == truth.end()) continue;
    scored.emplace_back(e.posterior, t->second);
    if (t->second) ++positives;
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<PrPoint> curve;
  std::size_t tp = 0, taken = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    ++taken;
    if (scored[i].second) ++tp;
    // Emit once per distinct threshold (ties are all on the positive side).
    if (i + 1 < scored.size() && scored[i + 1].first == scored[i].first) continue;
    curve.push_back({scored[i].first,
                     static_cast<double>(tp) / static_cast<double>(taken),
                     positives ? static_cast<double>(tp) / static_cast<double>(positives) : 1.0});
  }
  return curve;
}

double recall_at_precision(std::span<const LabelEstimate> estimates,
                           const TruthMap& truth, double min_precision) {
  double best = 0.0;
  for (const auto& p : precision_recall_curve(estimates, truth)) {
    if (p.precision >= min_precision) best = std::max(best, p.recall);
  }
  return best;
}

Table1Report table1_report(std::span<const Table1Row> rows) {
  Table1Report report;
  for (const auto& row : rows) {
    auto require = [&](const ApproachMetrics& m, const char* side) {
      if (!(m.seconds_per_item > 0.0) || m.redundancy < 1 || !m.precision || !m.recall) {
        throw Error(ErrorCode::kInvalidArgument,
                    "row '" + row.task + "' missing " + side + " inputs");
      }
    };
    require(row.conventional, "conventional");
    require(row.rapid, "rapid");
    CostModel cost{row.conventional.seconds_per_item, row.conventional.redundancy,
                   row.rapid.seconds_per_item, row.rapid.redundancy};
    report.lines.push_back({row, speedup(cost)});
  }
  return report;
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string Table1Report::text() const {
  std::ostringstream os;
  os << "# conventional = self-paced labeling aggregated by majority vote\n";
  os << "# rapid time counts display time only (countdown and instructions excluded)\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %-8s | %7s %5s %5s | %7s %5s %5s | %8s\n", "task",
                "variant", "conv_s", "P", "R", "rapid_s", "P", "R", "speedup");
  os << line;
  for (const auto& l : lines) {
    const auto& r = l.row;
    std::snprintf(line, sizeof line,
                  "%-20s %-8s | %7.2f %5.2f %5.2f | %7.2f %5.2f %5.2f | %7sx\n",
                  r.task.c_str(), r.variant.c_str(), r.conventional.seconds_per_item,
                  *r.conventional.precision, *r.conventional.recall,
                  r.rapid.seconds_per_item, *r.rapid.precision, *r.rapid.recall,
                  format_speedup(l.speedup).c_str());
    os << line;
  }
  return os.str();
}

std::string Table1Report::csv() const {
  std::ostringstream os;
  os << "task,variant,conventional_seconds,conventional_redundancy,conventional_precision,"
        "conventional_recall,rapid_seconds,rapid_redundancy,rapid_precision,rapid_recall,"
        "speedup\n";
  for (const auto& l : lines) {
    const auto& r = l.row;
    os << r.task << ',' << r.variant << ',' << fixed2(r.conventional.seconds_per_item) << ','
       << r.conventional.redundancy << ',' << fixed2(*r.conventional.precision) << ','
       << fixed2(*r.conventional.recall) << ',' << fixed2(r.rapid.seconds_per_item) << ','
       << r.rapid.redundancy << ',' << fixed2(*r.rapid.precision) << ','
       << fixed2(*r.rapid.recall) << ',' << format_speedup(l.speedup) << '\n';
  }
  return os.str();
}

MulticlassCostReport multiclass_cost(std::size_t items, std::size_t classes,
                                     double conventional_seconds_per_label,
                                     int conventional_redundancy,
                                     std::size_t total_displays,
                                     double display_seconds,
                                     double reduction_factor) {
  if (!(reduction_factor > 0.0) || !(display_seconds > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cost inputs must be positive");
  }
  MulticlassCostReport r;
  r.naive_seconds = static_cast<double>(items) * static_cast<double>(classes) *
                    conventional_seconds_per_label * conventional_redundancy;
  r.rapid_seconds = static_cast<double>(total_displays) * display_seconds;
  r.speedup = r.rapid_seconds > 0.0 ? r.naive_seconds / r.rapid_seconds : 0.0;
  r.reduction_factor = reduction_factor;
  r.combined_speedup = r.speedup * reduction_factor;
  return r;
}

}  // namespace rapidcs

#include "rapidcs/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace rapidcs {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kNoItems: return "no items";
    case ErrorCode::kValidationFailed: return "validation failed";
    case ErrorCode::kEmptyGoldPool: return "empty gold pool";
    case ErrorCode::kInsufficientCalibration: return "insufficient calibration data";
    case ErrorCode::kInsufficientGold: return "insufficient gold";
    case ErrorCode::kUniverseMismatch: return "schedule/universe mismatch";
    case ErrorCode::kMissingTruth: return "missing truth";
    case ErrorCode::kNoGoldPositives: return "no gold positives";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kQualificationRequired: return "qualification required";
    case ErrorCode::kFullyAssigned: return "task fully assigned";
    case ErrorCode::kMalformedEvents: return "malformed events";
    case ErrorCode::kDuplicateSubmission: return "duplicate submission";
    case ErrorCode::kInsufficientSessions: return "insufficient sessions";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIo: return "io error";
  }
  return "unknown";
}

const char* to_string(Modality m) {
  switch (m) {
    case Modality::kImage: return "image";
    case Modality::kText: return "text";
    case Modality::kWordPair: return "word_pair";
    case Modality::kArticle: return "article";
    case Modality::kOther: return "other";
  }
  return "other";
}

Modality modality_from_string(const std::string& s) {
  if (s == "image") return Modality::kImage;
  if (s == "text") return Modality::kText;
  if (s == "word_pair") return Modality::kWordPair;
  if (s == "article") return Modality::kArticle;
  if (s == "other") return Modality::kOther;
  throw Error(ErrorCode::kParse, "unknown modality '" + s + "'");
}

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kPending: return "pending";
    case SessionStatus::kSubmitted: return "submitted";
    case SessionStatus::kRejected: return "rejected";
  }
  return "pending";
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::kPositive: return "positive";
    case Decision::kNegative: return "negative";
    case Decision::kUndecided: return "undecided";
  }
  return "undecided";
}

void check_delay_model(const DelayModel& model) {
  if (!(model.std_ms > 0.0) || !std::isfinite(model.std_ms)) {
    throw Error(ErrorCode::kInvalidArgument, "delay std_ms must be > 0");
  }
  if (!(model.mean_ms >= 100.0 && model.mean_ms <= 2000.0)) {
    std::ostringstream os;
    os << "delay mean_ms " << model.mean_ms << " outside [100, 2000]";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
}

double TaskConfig::effective_lookback_ms(const DelayModel& delay) const {
  if (lookback_ms) return *lookback_ms;
  return std::max(delay.default_lookback_ms(),
                  static_cast<double>(display_interval_ms));
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

namespace {

std::optional<double> gold_positive_rate(std::span<const Item> items) {
  std::size_t gold = 0, positive = 0;
  for (const auto& item : items) {
    if (!item.gold_label) continue;
    ++gold;
    if (*item.gold_label) ++positive;
  }
  if (gold == 0) return std::nullopt;
  return static_cast<double>(positive) / static_cast<double>(gold);
}

}  // namespace

PriorMap resolve_priors(std::span<const Item> items, const TaskConfig& config) {
  double fallback = 1.0;
  if (config.default_prior) {
    fallback = *config.default_prior;
  } else if (auto rate = gold_positive_rate(items)) {
    fallback = *rate;
  }
  PriorMap priors;
  priors.reserve(items.size());
  for (const auto& item : items) {
    priors[item.item_id] = item.prior.value_or(fallback);
  }
  return priors;
}

TruthMap gold_labels(std::span<const Item> items) {
  TruthMap gold;
  for (const auto& item : items) {
    if (item.gold_label) gold[item.item_id] = *item.gold_label;
  }
  return gold;
}

ValidationReport validate_task(std::span<const Item> items,
                               const TaskConfig& config) {
  if (items.empty()) throw Error(ErrorCode::kNoItems, "no items");

  ValidationReport report;
  auto flag = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };

  std::unordered_set<ItemId> seen;
  std::size_t gold_count = 0, gold_positive = 0;
  for (const auto& item : items) {
    if (item.item_id.empty()) flag("empty id", "item with empty item_id");
    if (!seen.insert(item.item_id).second) {
      flag("duplicate id", "duplicate item_id '" + item.item_id + "'");
    }
    if (item.prior && !(*item.prior >= 0.0 && *item.prior <= 1.0)) {
      flag("prior out of range", "prior of '" + item.item_id + "' not in [0,1]");
    }
    if (item.gold_label) {
      ++gold_count;
      if (*item.gold_label) ++gold_positive;
    }
  }

  if (config.display_interval_ms < 50) {
    flag("display interval", "display_interval_ms must be >= 50");
  }
  if (config.redundancy < 1) flag("redundancy", "redundancy must be >= 1");
  if (config.stream_length < 1) flag("stream length", "stream_length must be >= 1");
  if (!(config.gold_fraction >= 0.0 && config.gold_fraction < 1.0)) {
    flag("gold fraction", "gold_fraction must be in [0,1)");
  }
  if (!(config.target_positive_rate_cap > 0.0 &&
        config.target_positive_rate_cap <= 1.0)) {
    flag("rate cap", "target_positive_rate_cap must be in (0,1]");
  }
  if (!(config.threshold.value >= 0.0 && config.threshold.value <= 1.0)) {
    flag("threshold", "threshold must be in [0,1]");
  }
  if (config.lookback_ms &&
      !(*config.lookback_ms >= config.display_interval_ms)) {
    flag("lookback", "lookback_ms must be >= display_interval_ms");
  }
  if (config.default_prior &&
      !(*config.default_prior >= 0.0 && *config.default_prior <= 1.0)) {
    flag("prior out of range", "default_prior not in [0,1]");
  }

  if (config.mode == TaskMode::kQualification) {
    if (gold_count != items.size()) {
      flag("gold budget", "qualification tasks must contain only gold items");
    }
    if (gold_positive == 0) {
      flag("gold budget", "qualification task has no gold positives");
    }
  } else if (config.gold_fraction > 0.0) {
    if (config.gold_fraction * config.stream_length < 1.0) {
      flag("gold budget", "gold_fraction * stream_length < 1");
    }
    if (gold_count == 0) flag("gold budget", "gold_fraction > 0 but no gold items");
  }

  // Expected positive spacing: gold items count at their label, the rest at
  // their prior. Skipped when no rate information is available at all.
  bool have_rate_info = config.default_prior.has_value() || gold_count > 0;
  for (const auto& item : items) {
    if (item.prior) have_rate_info = true;
  }
  if (have_rate_info) {
    PriorMap priors = resolve_priors(items, config);
    double mass = 0.0;
    for (const auto& item : items) {
      mass += item.gold_label ? (*item.gold_label ? 1.0 : 0.0)
                              : priors[item.item_id];
    }
    double mean_rate = mass / static_cast<double>(items.size());
    report.expected_positive_spacing_ms =
        mean_rate > 0.0 ? config.display_interval_ms / mean_rate
                        : std::numeric_limits<double>::infinity();
    if (report.expected_positive_spacing_ms < kMinPositiveSpacingMs) {
      std::ostringstream os;
      os << "expected one positive every " << report.expected_positive_spacing_ms
         << "ms, below " << kMinPositiveSpacingMs << "ms";
      flag("positive rate", os.str());
    }
    if (mean_rate > config.target_positive_rate_cap) {
      flag("positive rate cap", "expected positive fraction exceeds cap");
    }
  } else {
    report.expected_positive_spacing_ms = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace rapidcs

#pragma once

// Recovers item labels from delayed keypresses.
//
// Each keypress is treated as one unit of "intent" aimed at exactly one of
// the items displayed within the lookback window before it. The intent is
// split across those candidates in proportion to the Gaussian reaction-delay
// likelihood of the gap. Per worker, an item's evidence is the intent mass it
// received (clamped to 1); across workers the evidence is averaged and
// multiplied by the item prior.
//
// Misses carry no negative evidence: an item without nearby keypresses is
// scored by its prior alone (times zero evidence).

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rapidcs/core.hpp"

namespace rapidcs {

// Keypresses whose best candidate likelihood is below this are unattributed.
inline constexpr double kMinAttributionLikelihood = 1e-12;
// Lower bound on a fitted delay standard deviation.
inline constexpr double kDelayStdFloorMs = 10.0;
// Matches required to fit a delay model (globally or per worker).
inline constexpr std::size_t kMinCalibrationMatches = 10;
inline constexpr double kDefaultMatchWindowMs = 1000.0;
inline constexpr double kQualificationWindowMs = 500.0;
inline constexpr double kQualificationMinRecall = 0.6;
inline constexpr double kQualificationMinPrecision = 0.9;

double gaussian_pdf(double x, double mean, double sd);

// Sample mean and n-1 standard deviation (floored) of observed delays.
// Needs at least two delays.
DelayModel delay_model_from_delays(std::span<const double> delays_ms);

// For each gold-positive slot, the delay to the first keypress at or after
// its onset and no later than match_window_ms.
std::vector<double> matched_delays(const WorkerSession& session,
                                   const TruthMap& gold,
                                   double match_window_ms);

// Throws Error(kInsufficientCalibration) with fewer than 10 matches.
DelayModel fit_delay_model(std::span<const WorkerSession> sessions,
                           const TruthMap& gold,
                           double match_window_ms = kDefaultMatchWindowMs);

struct DelayModelSet {
  DelayModel global;
  std::map<WorkerId, DelayModel> per_worker;

  DelayModelSet() = default;
  DelayModelSet(DelayModel g) : global(std::move(g)) {}  // NOLINT implicit

  const DelayModel& for_worker(const WorkerId& w) const {
    auto it = per_worker.find(w);
    return it == per_worker.end() ? global : it->second;
  }
};

// Per-worker models for workers with at least 10 gold matches.
std::map<WorkerId, DelayModel> fit_worker_delay_models(
    std::span<const WorkerSession> sessions, const TruthMap& gold,
    double match_window_ms = kDefaultMatchWindowMs);

struct AttributionWeight {
  std::size_t keypress = 0;
  std::size_t slot = 0;
  ItemId item_id;
  double weight = 0.0;
};

struct Attribution {
  // Grouped by keypress, slots ascending within a keypress.
  std::vector<AttributionWeight> weights;
  std::vector<std::size_t> unattributed;
};

Attribution attribute_keypresses(const WorkerSession& session,
                                 const DelayModel& delay, double lookback_ms);

struct ScoreOptions {
  double lookback_ms = 746.0;
  // Also emit estimates for items that appear as gold slots.
  bool include_gold = false;
};

// Estimates for every item in `priors` (minus gold unless include_gold),
// sorted by score descending, then prior descending, then id. Decisions are
// left undecided. Sessions are reduced in session_id order, so the result
// does not depend on the order of `sessions`.
//
// OpenMP-parallel over sessions; bit-identical to
// reference::score_items_serial.
std::vector<LabelEstimate> score_items(std::span<const WorkerSession> sessions,
                                       const DelayModelSet& delay,
                                       const PriorMap& priors,
                                       const ScoreOptions& options);

namespace reference {

// Straight-line serial implementation kept for testing and benchmarking.
std::vector<LabelEstimate> score_items_serial(
    std::span<const WorkerSession> sessions, const DelayModelSet& delay,
    const PriorMap& priors, const ScoreOptions& options);

}  // namespace reference

void apply_threshold(std::vector<LabelEstimate>& estimates, double threshold);

struct ThresholdTuning {
  double threshold = 0.0;
  bool attainable = true;
  bool separable = false;
  double gold_precision = 0.0;
  double gold_recall = 0.0;
  std::size_t gold_positives = 0;
  std::size_t gold_negatives = 0;
};

// Threshold on the normalized posterior. Perfectly separable gold gives the
// midpoint between the lowest positive and highest negative; otherwise the
// smallest gold posterior t with precision(posterior >= t) >= target; if none
// reaches the target, max posterior + epsilon with attainable = false.
// Needs at least 5 gold positives and 5 gold negatives among the estimates.
ThresholdTuning tune_threshold(std::span<const LabelEstimate> estimates,
                               const TruthMap& gold, double target_precision);

struct QualificationResult {
  double recall = 0.0;
  double precision = 0.0;
  bool passed = false;
  std::size_t gold_positives = 0;
  std::size_t hits = 0;
  std::size_t keypresses = 0;
  std::size_t keypresses_in_window = 0;
  std::string reason;
  // Gold-positive slots that got no reaction, for per-miss feedback.
  std::vector<std::size_t> missed_slots;
};

// Delays are matched on the closed interval [0, window_ms].
QualificationResult qualify(const WorkerSession& session, const TruthMap& gold,
                            double window_ms = kQualificationWindowMs);

struct WorkerDiagnostics {
  std::string session_id;
  WorkerId worker_id;
  std::size_t keypresses = 0;
  std::size_t unattributed = 0;
  std::size_t gold_hits = 0;
  std::size_t gold_positives = 0;
};

struct DecodeOptions {
  std::optional<double> threshold;
  std::optional<double> target_precision;
  std::optional<double> lookback_ms;
  std::optional<double> delay_mean_ms;
  std::optional<double> delay_std_ms;
  double match_window_ms = kDefaultMatchWindowMs;
  bool per_worker_models = true;
};

struct DecodeResult {
  std::vector<LabelEstimate> estimates;
  double threshold_used = 0.0;
  std::optional<ThresholdTuning> tuning;
  DelayModel delay_model_used;
  std::map<WorkerId, DelayModel> worker_models;
  double lookback_ms = 0.0;
  std::vector<WorkerDiagnostics> diagnostics;
  std::vector<std::string> flags;

  bool operator==(const DecodeResult& o) const {
    return estimates == o.estimates && threshold_used == o.threshold_used &&
           delay_model_used == o.delay_model_used &&
           worker_models == o.worker_models && lookback_ms == o.lookback_ms &&
           flags == o.flags;
  }
};

// Full pipeline: delay model (explicit, fitted from gold when there are
// enough matches, else the default 378/92 ms), scoring, threshold (explicit,
// tuned on gold, or from the task config), decisions and diagnostics.
DecodeResult decode(std::span<const Item> items, const TaskConfig& config,
                    std::span<const WorkerSession> sessions,
                    const DecodeOptions& options = {});

}  // namespace rapidcs

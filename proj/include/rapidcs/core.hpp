#pragma once

// Domain types shared by every rapidcs module: items, task configuration,
// reaction-delay model, stream schedules, worker sessions and label
// estimates. All types are plain values.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace rapidcs {

enum class ErrorCode {
  kInvalidArgument,
  kNoItems,
  kValidationFailed,
  kEmptyGoldPool,
  kInsufficientCalibration,
  kInsufficientGold,
  kUniverseMismatch,
  kMissingTruth,
  kNoGoldPositives,
  kNotFound,
  kConflict,
  kQualificationRequired,
  kFullyAssigned,
  kMalformedEvents,
  kDuplicateSubmission,
  kInsufficientSessions,
  kParse,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using ItemId = std::string;
using WorkerId = std::string;
using PriorMap = std::unordered_map<ItemId, double>;
using TruthMap = std::unordered_map<ItemId, bool>;

enum class Modality { kImage, kText, kWordPair, kArticle, kOther };

const char* to_string(Modality m);
Modality modality_from_string(const std::string& s);

struct PayloadRef {
  std::string ref;
  Modality modality = Modality::kOther;

  bool operator==(const PayloadRef&) const = default;
};

struct Item {
  ItemId item_id;
  PayloadRef payload;
  // Prior probability of being positive. Unset means "use the task default".
  std::optional<double> prior;
  // Known ground truth; an item with a gold label belongs to the gold pool.
  std::optional<bool> gold_label;
  // Hidden ground truth used only by the simulator and offline evaluation.
  std::optional<bool> truth;
  // Multi-class inputs for the cascade.
  std::map<std::string, double> class_priors;
  std::optional<std::string> truth_class;

  bool is_gold() const { return gold_label.has_value(); }
  bool operator==(const Item&) const = default;
};

struct ThresholdSpec {
  enum class Kind { kFixed, kAuto };
  Kind kind = Kind::kAuto;
  // Fixed threshold on the normalized posterior, or the target precision
  // for kAuto.
  double value = 0.97;

  static ThresholdSpec fixed(double t) { return {Kind::kFixed, t}; }
  static ThresholdSpec target(double p) { return {Kind::kAuto, p}; }
  bool operator==(const ThresholdSpec&) const = default;
};

enum class TaskMode { kStandard, kQualification };

struct DelayModel {
  double mean_ms = 378.0;
  double std_ms = 92.0;
  // Empty for the global model.
  std::optional<WorkerId> worker_id;

  double default_lookback_ms() const { return mean_ms + 4.0 * std_ms; }
  bool operator==(const DelayModel&) const = default;
};

// Throws Error(kInvalidArgument) unless std_ms > 0 and mean_ms in [100, 2000].
void check_delay_model(const DelayModel& model);

struct TaskConfig {
  int display_interval_ms = 100;
  int redundancy = 5;
  ThresholdSpec threshold;
  int stream_length = 100;
  double gold_fraction = 0.0;
  double target_positive_rate_cap = 1.0;
  // Unset: max(mu + 4 sigma, display interval) of the delay model in use.
  std::optional<double> lookback_ms;
  std::uint64_t rng_seed = 0;
  TaskMode mode = TaskMode::kStandard;
  // Prior for items without one. Unset: the gold positive rate, else 1.
  std::optional<double> default_prior;

  double effective_lookback_ms(const DelayModel& delay) const;
  bool operator==(const TaskConfig&) const = default;
};

// Minimum expected spacing between positive cues.
inline constexpr double kMinPositiveSpacingMs = 400.0;

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  double expected_positive_spacing_ms = 0.0;

  bool valid() const { return violations.empty(); }
  bool has(const std::string& code) const;
};

// Pure. Throws Error(kNoItems) on an empty list.
ValidationReport validate_task(std::span<const Item> items,
                               const TaskConfig& config);

// Resolved prior per item, applying the default-prior rule.
PriorMap resolve_priors(std::span<const Item> items, const TaskConfig& config);

TruthMap gold_labels(std::span<const Item> items);

struct StreamSlot {
  ItemId item_id;
  double onset_ms = 0.0;
  bool is_gold = false;

  bool operator==(const StreamSlot&) const = default;
};

struct StreamSchedule {
  std::string schedule_id;
  int chunk = 0;
  int replica = 0;
  std::vector<StreamSlot> slots;
  int countdown_frames = 0;
  int display_interval_ms = 100;
  std::uint64_t rng_seed_used = 0;

  double end_ms() const {
    return static_cast<double>(slots.size()) * display_interval_ms;
  }
  bool operator==(const StreamSchedule&) const = default;
};

enum class EventSource { kHuman, kSimulated };

struct KeypressEvent {
  double t_ms = 0.0;
  EventSource source = EventSource::kHuman;

  bool operator==(const KeypressEvent&) const = default;
};

enum class SessionStatus { kPending, kSubmitted, kRejected };

const char* to_string(SessionStatus s);

struct WorkerSession {
  std::string session_id;
  WorkerId worker_id;
  std::string task_id;
  StreamSchedule stream;
  std::vector<KeypressEvent> events;
  SessionStatus status = SessionStatus::kPending;
  // Client-measured display onsets, one per slot; empty means "as scheduled".
  std::vector<double> actual_onsets_ms;

  double onset_ms(std::size_t slot) const {
    return actual_onsets_ms.empty() ? stream.slots[slot].onset_ms
                                    : actual_onsets_ms[slot];
  }
  bool operator==(const WorkerSession&) const = default;
};

enum class Decision { kPositive, kNegative, kUndecided };

const char* to_string(Decision d);

struct LabelEstimate {
  ItemId item_id;
  double score = 0.0;
  double posterior = 0.0;
  double prior = 0.0;
  Decision decision = Decision::kUndecided;

  bool operator==(const LabelEstimate&) const = default;
};

// Ties at the threshold classify positive.
inline Decision decide(double posterior, double threshold) {
  return posterior >= threshold ? Decision::kPositive : Decision::kNegative;
}

}  // namespace rapidcs

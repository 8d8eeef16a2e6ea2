#pragma once

// Synthetic workers for desk-scale experiments. A worker reacts to each
// positive slot with some probability and presses a key after a Gaussian
// reaction delay; negatives occasionally draw a stray press.

#include <cstdint>
#include <span>
#include <vector>

#include "rapidcs/core.hpp"

namespace rapidcs {

struct WorkerProfile {
  double delay_mean_ms = 378.0;
  double delay_std_ms = 92.0;
  double base_detect = 0.8;
  double false_alarm_rate = 0.002;
  double refractory_ms = 150.0;

  bool operator==(const WorkerProfile&) const = default;
};

// Throws Error(kInvalidArgument) on out-of-range fields.
void check_profile(const WorkerProfile& profile);

// Detection multiplier as a function of display speed and the local
// fraction of positives. Below a speed-dependent drop threshold the
// multiplier is 1; above it, it falls linearly to `floor` at fraction 1.
struct RateRecallCurve {
  struct Knot {
    double display_interval_ms;
    double drop_fraction;
  };
  // Sorted by display interval; the drop threshold is interpolated linearly
  // between knots and held constant beyond the ends.
  std::vector<Knot> knots;
  double floor = 0.3;

  double drop_threshold(double display_interval_ms) const;
  double multiplier(double display_interval_ms, double positive_fraction) const;
};

// Drop at 35% positives for 100 ms items and at 85% for 500 ms items.
RateRecallCurve default_rate_recall_curve();

// Slots in the trailing window (including the current one) used for the
// local positive fraction.
inline constexpr std::size_t kLocalRateWindow = 20;

WorkerSession generate_session(const StreamSchedule& schedule,
                               const TruthMap& truth,
                               const WorkerProfile& profile,
                               const RateRecallCurve& curve,
                               std::uint64_t seed);

// Truth for every item: gold label when present, else the hidden truth.
// Throws Error(kMissingTruth) for items with neither.
TruthMap truth_from_items(std::span<const Item> items);

// Schedules via build_streams; replica r of every chunk is played by
// profiles[r]. Session ids are the schedule ids and worker ids "sim-w<r>", so
// one simulated worker plays the same replica of every chunk.
std::vector<WorkerSession> simulate_experiment(std::span<const Item> items,
                                               const TruthMap& truth,
                                               const TaskConfig& config,
                                               std::span<const WorkerProfile> profiles,
                                               std::uint64_t seed,
                                               const RateRecallCurve& curve =
                                                   default_rate_recall_curve());

// Sessions for already-built schedules (OpenMP-parallel, seed per schedule).
std::vector<WorkerSession> simulate_schedules(std::span<const StreamSchedule> schedules,
                                              const TruthMap& truth,
                                              std::span<const WorkerProfile> profiles,
                                              std::uint64_t seed,
                                              const RateRecallCurve& curve);

}  // namespace rapidcs

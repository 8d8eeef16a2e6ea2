#include "rapidcs/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "rapidcs/rng.hpp"
#include "rapidcs/scheduler.hpp"

namespace rapidcs {

void check_profile(const WorkerProfile& p) {
  auto bad = [](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, std::string("worker profile: ") + what);
  };
  if (!(p.delay_mean_ms >= 0.0)) bad("delay_mean_ms must be >= 0");
  if (!(p.delay_std_ms >= 0.0)) bad("delay_std_ms must be >= 0");
  if (!(p.base_detect >= 0.0 && p.base_detect <= 1.0)) bad("base_detect not in [0,1]");
  if (!(p.false_alarm_rate >= 0.0 && p.false_alarm_rate <= 1.0)) {
    bad("false_alarm_rate not in [0,1]");
  }
  if (!(p.refractory_ms >= 0.0 && p.refractory_ms < 2000.0)) {
    bad("refractory_ms not in [0,2000)");
  }
}

double RateRecallCurve::drop_threshold(double display_interval_ms) const {
  if (knots.empty()) return 1.0;
  if (display_interval_ms <= knots.front().display_interval_ms) {
    return knots.front().drop_fraction;
  }
  if (display_interval_ms >= knots.back().display_interval_ms) {
    return knots.back().drop_fraction;
  }
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const auto& a = knots[k - 1];
    const auto& b = knots[k];
    if (display_interval_ms <= b.display_interval_ms) {
      const double u = (display_interval_ms - a.display_interval_ms) /
                       (b.display_interval_ms - a.display_interval_ms);
      return a.drop_fraction + u * (b.drop_fraction - a.drop_fraction);
    }
  }
  return knots.back().drop_fraction;
}

double RateRecallCurve::multiplier(double display_interval_ms,
                                   double positive_fraction) const {
  const double threshold = drop_threshold(display_interval_ms);
  if (positive_fraction <= threshold || threshold >= 1.0) return 1.0;
  const double u = (positive_fraction - threshold) / (1.0 - threshold);
  return 1.0 - (1.0 - floor) * std::min(1.0, u);
}

RateRecallCurve default_rate_recall_curve() {
  RateRecallCurve curve;
  curve.knots = {{100.0, 0.35}, {500.0, 0.85}};
  curve.floor = 0.3;
  return curve;
}

WorkerSession generate_session(const StreamSchedule& schedule,
                               const TruthMap& truth,
                               const WorkerProfile& profile,
                               const RateRecallCurve& curve,
                               std::uint64_t seed) {
  check_profile(profile);
  const auto& slots = schedule.slots;
  std::vector<char> positive(slots.size(), 0);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    auto it = truth.find(slots[j].item_id);
    if (it == truth.end()) {
      throw Error(ErrorCode::kMissingTruth,
                  "missing truth for item '" + slots[j].item_id + "'");
    }
    positive[j] = it->second ? 1 : 0;
  }

  Rng rng(seed);
  const double interval = schedule.display_interval_ms;
  std::vector<double> presses;
  std::size_t window_positives = 0;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    window_positives += static_cast<std::size_t>(positive[j]);
    if (j >= kLocalRateWindow) {
      window_positives -= static_cast<std::size_t>(positive[j - kLocalRateWindow]);
    }
    const std::size_t window = std::min(j + 1, kLocalRateWindow);
    const double onset = slots[j].onset_ms;

    if (positive[j]) {
      const double fraction =
          static_cast<double>(window_positives) / static_cast<double>(window);
      const double p = profile.base_detect * curve.multiplier(interval, fraction);
      if (rng.bernoulli(p)) {
        const double delay = profile.delay_std_ms > 0.0
                                 ? rng.normal(profile.delay_mean_ms, profile.delay_std_ms)
                                 : profile.delay_mean_ms;
        presses.push_back(onset + std::max(0.0, delay));
      }
    } else if (rng.bernoulli(profile.false_alarm_rate)) {
      presses.push_back(onset + rng.uniform01() * interval);
    }
  }

  std::sort(presses.begin(), presses.end());
  WorkerSession session;
  session.session_id = schedule.schedule_id;
  session.stream = schedule;
  session.status = SessionStatus::kSubmitted;
  double last = -1e300;
  for (double t : presses) {
    if (t - last < profile.refractory_ms) continue;
    session.events.push_back({t, EventSource::kSimulated});
    last = t;
  }
  return session;
}

TruthMap truth_from_items(std::span<const Item> items) {
  TruthMap truth;
  for (const auto& item : items) {
    if (item.gold_label) {
      truth[item.item_id] = *item.gold_label;
    } else if (item.truth) {
      truth[item.item_id] = *item.truth;
    } else {
      throw Error(ErrorCode::kMissingTruth,
                  "missing truth for item '" + item.item_id + "'");
    }
  }
  return truth;
}

std::vector<WorkerSession> simulate_schedules(std::span<const StreamSchedule> schedules,
                                              const TruthMap& truth,
                                              std::span<const WorkerProfile> profiles,
                                              std::uint64_t seed,
                                              const RateRecallCurve& curve) {
  for (const auto& s : schedules) {
    if (static_cast<std::size_t>(s.replica) >= profiles.size()) {
      throw Error(ErrorCode::kInvalidArgument, "fewer profiles than redundancy");
    }
    for (const auto& slot : s.slots) {
      if (!truth.contains(slot.item_id)) {
        throw Error(ErrorCode::kMissingTruth,
                    "missing truth for item '" + slot.item_id + "'");
      }
    }
  }
  for (const auto& p : profiles) check_profile(p);

  std::vector<WorkerSession> sessions(schedules.size());
  const auto count = static_cast<long>(schedules.size());
#pragma omp parallel for schedule(dynamic, 2)
  for (long k = 0; k < count; ++k) {
    const auto& s = schedules[static_cast<std::size_t>(k)];
    const auto session_seed = derive_seed(
        seed, {static_cast<std::uint64_t>(s.chunk), static_cast<std::uint64_t>(s.replica),
               0x5e55ULL});
    WorkerSession session = generate_session(
        s, truth, profiles[static_cast<std::size_t>(s.replica)], curve, session_seed);
    session.worker_id = "sim-w" + std::to_string(s.replica);
    sessions[static_cast<std::size_t>(k)] = std::move(session);
  }
  return sessions;
}

std::vector<WorkerSession> simulate_experiment(std::span<const Item> items,
                                               const TruthMap& truth,
                                               const TaskConfig& config,
                                               std::span<const WorkerProfile> profiles,
                                               std::uint64_t seed,
                                               const RateRecallCurve& curve) {
  if (profiles.size() < static_cast<std::size_t>(config.redundancy)) {
    throw Error(ErrorCode::kInvalidArgument, "fewer profiles than redundancy");
  }
  const auto schedules = build_streams(items, config);
  return simulate_schedules(schedules, truth, profiles, seed, curve);
}

}  // namespace rapidcs

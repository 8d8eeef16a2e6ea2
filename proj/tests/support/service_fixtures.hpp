#pragma once

// Task builders and a scripted worker for service tests. Payload refs are
// "img/<item_id>" so a test can see what the manifest shows without the
// manifest exposing ids.

#include <map>
#include <string>
#include <vector>

#include "rapidcs/json_io.hpp"
#include "rapidcs/service.hpp"

namespace fixtures {

using namespace rapidcs;

struct Task {
  std::vector<Item> items;
  TaskConfig config;
  std::map<std::string, bool> positive_by_ref;
};

inline Item item(const std::string& id, std::optional<double> prior, std::optional<bool> gold,
                 bool truth) {
  Item it;
  it.item_id = id;
  it.payload = {"img/" + id, Modality::kImage};
  it.prior = prior;
  it.gold_label = gold;
  it.truth = truth;
  return it;
}

// `n` items at 5% positives plus five positive gold items.
inline Task standard_task(int n = 100, int redundancy = 5, std::uint64_t seed = 1) {
  Task t;
  for (int i = 0; i < n; ++i) t.items.push_back(item("i" + std::to_string(i), 0.05, std::nullopt, i % 20 == 0));
  for (int i = 0; i < 5; ++i) t.items.push_back(item("g" + std::to_string(i), 0.05, true, true));
  t.config.redundancy = redundancy;
  t.config.gold_fraction = 0.05;
  t.config.threshold = ThresholdSpec::fixed(0.5);
  t.config.rng_seed = seed;
  for (const auto& it : t.items) t.positive_by_ref[it.payload.ref] = *it.truth;
  return t;
}

inline Task qualification_task() {
  Task t;
  for (int i = 0; i < 200; ++i) {
    const bool pos = i < 25;
    t.items.push_back(item("q" + std::to_string(i), std::nullopt, pos, pos));
  }
  t.config.mode = TaskMode::kQualification;
  t.config.stream_length = 200;
  t.config.redundancy = 1;
  for (const auto& it : t.items) t.positive_by_ref[it.payload.ref] = *it.truth;
  return t;
}

// A press `delay` after every positive slot in the manifest, `skip` of them
// missed (every k-th).
inline SubmitRequest scripted_submission(const json& manifest, const Task& task,
                                         const std::string& submission_id,
                                         double delay = 378.0, int miss_every = 0) {
  SubmitRequest r;
  r.session_id = manifest.at("session_id").get<std::string>();
  r.submission_id = submission_id;
  int k = 0;
  for (const auto& slot : manifest.at("slots")) {
    if (!task.positive_by_ref.at(slot.at("payload").at("ref").get<std::string>())) continue;
    ++k;
    if (miss_every > 0 && k % miss_every == 0) continue;
    r.events.push_back({slot.at("onset_ms").get<double>() + delay, EventSource::kHuman});
  }
  std::sort(r.events.begin(), r.events.end(),
            [](const KeypressEvent& a, const KeypressEvent& b) { return a.t_ms < b.t_ms; });
  // Drop presses closer than 150ms, as a real key would.
  std::vector<KeypressEvent> kept;
  for (const auto& e : r.events) {
    if (kept.empty() || e.t_ms - kept.back().t_ms >= 150.0) kept.push_back(e);
  }
  r.events = kept;
  return r;
}

inline void qualify_worker(Service& svc, const std::string& qual_task, const Task& q,
                           const std::string& worker) {
  auto opened = svc.start_qualification(worker, qual_task);
  svc.submit_events(scripted_submission(opened.manifest, q, worker + "-qual"));
}

}  // namespace fixtures

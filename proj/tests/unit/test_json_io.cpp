#include <doctest.h>

#include <random>
#include <sstream>

#include "oracle/generators.hpp"
#include "rapidcs/json_io.hpp"
#include "rapidcs/scheduler.hpp"

using namespace rapidcs;

namespace {

template <typename T>
T round_trip(const T& v) {
  return json::parse(json(v).dump()).get<T>();
}

Item random_item(gen::Engine& g, int i) {
  Item it;
  it.item_id = "id-" + std::to_string(i) + (i % 3 == 0 ? " \"quoted\" \xc3\xa9" : "");
  it.payload = {"https://example.org/" + std::to_string(i) + ".jpg",
                static_cast<Modality>(gen::integer(g, 0, 4))};
  if (gen::integer(g, 0, 1)) it.prior = gen::uniform(g, 0.0, 1.0);
  if (gen::integer(g, 0, 2) == 0) it.gold_label = gen::integer(g, 0, 1) == 1;
  if (gen::integer(g, 0, 1)) it.truth = gen::integer(g, 0, 1) == 1;
  if (gen::integer(g, 0, 3) == 0) {
    it.class_priors["cat"] = gen::uniform(g, 0.0, 1.0);
    it.class_priors["dog"] = gen::uniform(g, 0.0, 1.0);
    it.truth_class = "cat";
  }
  return it;
}

}  // namespace

TEST_CASE("items and configs round-trip") {
  gen::Engine g(7);
  for (int i = 0; i < 200; ++i) {
    Item it = random_item(g, i);
    CHECK(round_trip(it) == it);
  }
  TaskConfig c;
  c.display_interval_ms = 250;
  c.redundancy = 3;
  c.threshold = ThresholdSpec::fixed(0.42);
  c.lookback_ms = 900.5;
  c.default_prior = 0.05;
  c.rng_seed = 0xfedcba9876543210ULL;
  c.mode = TaskMode::kQualification;
  CHECK(round_trip(c) == c);
  c.threshold = ThresholdSpec::target(0.97);
  CHECK(json(c)["threshold"] == "auto(0.97)");
  CHECK(round_trip(c) == c);
}

TEST_CASE("sessions and results round-trip") {
  gen::Engine g(11);
  auto m = gen::micro_instance(g);
  for (auto& s : m.sessions) {
    s.task_id = "t1";
    s.status = SessionStatus::kSubmitted;
    s.actual_onsets_ms.clear();
    for (const auto& slot : s.stream.slots) s.actual_onsets_ms.push_back(slot.onset_ms + 1.25);
    CHECK(round_trip(s) == s);
  }

  DecodeResult r;
  r.estimates.push_back({"a", 0.3, 1.0, 0.3, Decision::kPositive});
  r.estimates.push_back({"b", 0.1, 1.0 / 3.0, 0.5, Decision::kNegative});
  r.threshold_used = 0.123456789012345;
  r.delay_model_used = {380.25, 91.5, {}};
  r.worker_models["w1"] = {400.0, 80.0, std::string("w1")};
  r.lookback_ms = 746.0;
  r.flags = {"default delay model"};
  r.tuning = ThresholdTuning{0.5, true, true, 1.0, 1.0, 5, 5};
  const DecodeResult back = round_trip(r);
  CHECK(back == r);
  REQUIRE(back.tuning);
  CHECK(back.tuning->gold_negatives == 5);
}

TEST_CASE("task file round-trip") {
  gen::Engine g(3);
  TaskFile t;
  t.task_id = "demo";
  t.config.stream_length = 20;
  for (int i = 0; i < 30; ++i) t.items.push_back(random_item(g, i));
  std::stringstream ss;
  write_task_file(ss, t);
  CHECK(parse_task_file(ss) == t);
}

TEST_CASE("task file errors") {
  std::stringstream no_config(R"({"record":"item","item_id":"a"})");
  CHECK_THROWS_AS(parse_task_file(no_config), Error);
  std::stringstream bad(R"({"record":"config"}
{"record":"item","item_id":"a","prior":"high"})");
  try {
    parse_task_file(bad);
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
  std::stringstream bad_threshold(R"j({"record":"config","threshold":"auto(x)"})j");
  CHECK_THROWS_AS(parse_task_file(bad_threshold), Error);
}

TEST_CASE("sessions file round-trip and schedules file") {
  gen::Engine g(5);
  auto m = gen::micro_instance(g, 8, 3, 3);
  std::stringstream ss;
  write_sessions_file(ss, m.sessions);
  CHECK(parse_sessions_file(ss) == m.sessions);

  std::vector<Item> items;
  for (int i = 0; i < 30; ++i) items.push_back(Item{"i" + std::to_string(i), {}, 0.05});
  TaskConfig c;
  c.stream_length = 30;
  c.redundancy = 2;
  std::stringstream sched;
  write_schedules_file(sched, build_streams(items, c));
  std::string line;
  int n = 0;
  while (std::getline(sched, line)) {
    json j = json::parse(line);
    CHECK(j["record"] == "schedule");
    CHECK(j["countdown"].size() == 20);
    CHECK(j.get<StreamSchedule>().slots.size() == 30);
    ++n;
  }
  CHECK(n == 2);
}

#include <doctest.h>

#include <map>

#include "oracle/generators.hpp"
#include "oracle/reference_oracles.hpp"
#include "rapidcs/json_io.hpp"
#include "rapidcs/scheduler.hpp"

using namespace rapidcs;

namespace {

std::vector<Item> make_items(std::size_t n, std::size_t gold_pos = 0, std::size_t gold_neg = 0) {
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back(Item{"i" + std::to_string(i), {}, 0.05});
  for (std::size_t i = 0; i < gold_pos; ++i) {
    Item g{"gp" + std::to_string(i), {}, std::nullopt};
    g.gold_label = true;
    items.push_back(g);
  }
  for (std::size_t i = 0; i < gold_neg; ++i) {
    Item g{"gn" + std::to_string(i), {}, std::nullopt};
    g.gold_label = false;
    items.push_back(g);
  }
  return items;
}

}  // namespace

TEST_CASE("countdown") {
  TaskConfig c;
  auto f = countdown_plan(c);
  REQUIRE(f.size() == 20);
  for (int k = 0; k < 20; ++k) {
    CHECK(f[k].label == 19 - k);
    CHECK(f[k].onset_ms == 100.0 * k);
  }
  c.display_interval_ms = 2000;
  CHECK(countdown_plan(c).size() == 1);
  c.display_interval_ms = 500;
  f = countdown_plan(c);
  REQUIRE(f.size() == 4);
  CHECK(f[3].onset_ms == 1500.0);
  CHECK(f[3].label == 0);
  c.display_interval_ms = 300;
  CHECK(countdown_frames(300) == 7);
  CHECK(countdown_plan(c).size() * 300 >= 2000);
}

TEST_CASE("200 items, stream 100, R=5 gives 10 schedules") {
  auto items = make_items(200);
  TaskConfig c;
  auto s = build_streams(items, c);
  CHECK(s.size() == 10);
  CHECK(s[0].schedule_id == "c0-r0");
  CHECK(s[9].schedule_id == "c1-r4");
}

TEST_CASE("same seed gives byte-identical schedules") {
  auto items = make_items(250, 10, 10);
  TaskConfig c;
  c.gold_fraction = 0.1;
  c.rng_seed = 99;
  const auto a = json(build_streams(items, c)).dump();
  const auto b = json(build_streams(items, c)).dump();
  CHECK(a == b);
  c.rng_seed = 100;
  CHECK(json(build_streams(items, c)).dump() != a);
}

TEST_CASE("parallel build equals per-pair build") {
  auto items = make_items(530, 4, 6);
  TaskConfig c;
  c.gold_fraction = 0.05;
  c.rng_seed = 5;
  const auto all = build_streams(items, c);
  const auto chunks = chunk_items(items, c.stream_length);
  std::vector<ItemId> gold{"gp0", "gp1", "gp2", "gp3", "gn0", "gn1", "gn2", "gn3", "gn4", "gn5"};
  std::size_t k = 0;
  for (std::size_t ch = 0; ch < chunks.size(); ++ch) {
    for (int r = 0; r < c.redundancy; ++r) {
      CHECK(all[k++] == build_stream(chunks[ch], gold, c, static_cast<int>(ch), r));
    }
  }
}

TEST_CASE("chunk tail rule") {
  CHECK(chunk_items(make_items(219), 100).size() == 2);
  CHECK(chunk_items(make_items(219), 100).back().size() == 119);
  CHECK(chunk_items(make_items(220), 100).size() == 3);
  CHECK(chunk_items(make_items(220), 100).back().size() == 20);
  CHECK(chunk_items(make_items(5), 100).size() == 1);
}

TEST_CASE("gold slots are added, not substituted") {
  auto items = make_items(100, 3, 7);
  TaskConfig c;
  c.gold_fraction = 0.05;
  for (const auto& s : build_streams(items, c)) {
    CHECK(s.slots.size() == 105);
    std::size_t gold = 0;
    std::map<ItemId, int> seen;
    for (const auto& slot : s.slots) {
      gold += slot.is_gold;
      ++seen[slot.item_id];
    }
    CHECK(gold == 5);
    for (int i = 0; i < 100; ++i) CHECK(seen["i" + std::to_string(i)] == 1);
  }
  // Pool smaller than the gold budget: reused after a reshuffle.
  c.gold_fraction = 0.2;
  auto s = build_streams(items, c).front();
  CHECK(s.slots.size() == 120);
}

TEST_CASE("empty gold pool with gold fraction is an error") {
  TaskConfig c;
  c.gold_fraction = 0.05;
  try {
    build_streams(make_items(100), c);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyGoldPool);
  }
}

TEST_CASE("qualification preset: 200 gold slots with 25 positives") {
  auto items = make_items(0, 25, 175);
  TaskConfig c;
  c.mode = TaskMode::kQualification;
  c.stream_length = 200;
  c.redundancy = 3;
  auto s = build_streams(items, c);
  REQUIRE(s.size() == 3);
  for (const auto& sched : s) {
    CHECK(sched.slots.size() == 200);
    std::size_t pos = 0;
    for (const auto& slot : sched.slots) {
      CHECK(slot.is_gold);
      pos += slot.item_id.starts_with("gp");
    }
    CHECK(static_cast<double>(pos) / 200.0 == doctest::Approx(0.125));
  }
}

TEST_CASE("property: exact R coverage and arithmetic onsets") {
  gen::Engine g(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = static_cast<std::size_t>(gen::integer(g, 1, 400));
    auto items = make_items(n, static_cast<std::size_t>(gen::integer(g, 1, 5)), 3);
    TaskConfig c;
    c.redundancy = gen::integer(g, 1, 6);
    c.stream_length = gen::integer(g, 10, 150);
    c.display_interval_ms = 50 * gen::integer(g, 1, 10);
    c.gold_fraction = gen::integer(g, 0, 1) ? 0.1 : 0.0;
    c.rng_seed = g();
    std::map<ItemId, int> count;
    for (const auto& s : build_streams(items, c)) {
      for (std::size_t j = 0; j < s.slots.size(); ++j) {
        CHECK(s.slots[j].onset_ms == static_cast<double>(j) * c.display_interval_ms);
        if (!s.slots[j].is_gold) ++count[s.slots[j].item_id];
      }
    }
    CHECK(count.size() == n);
    for (const auto& [id, k] : count) CHECK(k == c.redundancy);
  }
}

TEST_CASE("property: replicas are independent permutations") {
  auto items = make_items(30);
  TaskConfig c;
  c.redundancy = 2;
  double sum = 0.0;
  const int builds = 1000;
  for (int b = 0; b < builds; ++b) {
    c.rng_seed = static_cast<std::uint64_t>(b);
    auto s = build_streams(items, c);
    std::vector<std::string> a, z;
    for (const auto& slot : s[0].slots) a.push_back(slot.item_id);
    for (const auto& slot : s[1].slots) z.push_back(slot.item_id);
    sum += oracle::kendall_tau(a, z);
  }
  CHECK(std::abs(sum / builds) <= 0.05);
}

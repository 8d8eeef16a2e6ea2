#include <doctest.h>

#include <cmath>

#include "rapidcs/core.hpp"

using namespace rapidcs;

namespace {

std::vector<Item> uniform_items(std::size_t n, double prior) {
  std::vector<Item> items;
  for (std::size_t i = 0; i < n; ++i) {
    Item it;
    it.item_id = "item" + std::to_string(i);
    it.prior = prior;
    items.push_back(it);
  }
  return items;
}

}  // namespace

TEST_CASE("sparse positives are valid") {
  auto items = uniform_items(100, 0.05);
  TaskConfig c;
  auto r = validate_task(items, c);
  CHECK(r.valid());
  CHECK(r.expected_positive_spacing_ms == doctest::Approx(2000.0));
}

TEST_CASE("dense positives violate the spacing rule") {
  auto items = uniform_items(100, 0.5);
  auto r = validate_task(items, TaskConfig{});
  CHECK_FALSE(r.valid());
  CHECK(r.has("positive rate"));
  CHECK(r.expected_positive_spacing_ms == doctest::Approx(200.0));
}

TEST_CASE("spacing boundary at exactly 400ms is allowed") {
  auto items = uniform_items(10, 0.25);
  auto r = validate_task(items, TaskConfig{});
  CHECK(r.expected_positive_spacing_ms == doctest::Approx(400.0));
  CHECK_FALSE(r.has("positive rate"));
}

TEST_CASE("duplicate ids and bad priors are reported") {
  auto items = uniform_items(3, 0.05);
  items[2].item_id = items[0].item_id;
  items[1].prior = 1.5;
  auto r = validate_task(items, TaskConfig{});
  CHECK(r.has("duplicate id"));
  CHECK(r.has("prior out of range"));
}

TEST_CASE("config bounds") {
  auto items = uniform_items(10, 0.05);
  TaskConfig c;
  c.display_interval_ms = 10;
  CHECK(validate_task(items, c).has("display interval"));
  c = TaskConfig{};
  c.lookback_ms = 50.0;
  CHECK(validate_task(items, c).has("lookback"));
  c = TaskConfig{};
  c.gold_fraction = 0.005;
  CHECK(validate_task(items, c).has("gold budget"));
  c = TaskConfig{};
  c.redundancy = 0;
  CHECK(validate_task(items, c).has("redundancy"));
}

TEST_CASE("empty item list is an error") {
  std::vector<Item> none;
  try {
    validate_task(none, TaskConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoItems);
    CHECK(std::string(e.what()) == "no items");
  }
}

TEST_CASE("validation is deterministic") {
  auto items = uniform_items(50, 0.3);
  items[4].item_id = items[5].item_id;
  auto a = validate_task(items, TaskConfig{});
  auto b = validate_task(items, TaskConfig{});
  REQUIRE(a.violations.size() == b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    CHECK(a.violations[i].code == b.violations[i].code);
    CHECK(a.violations[i].message == b.violations[i].message);
  }
}

TEST_CASE("prior defaults") {
  std::vector<Item> items(4);
  for (int i = 0; i < 4; ++i) items[i].item_id = "x" + std::to_string(i);
  TaskConfig c;
  CHECK(resolve_priors(items, c).at("x0") == 1.0);

  items[0].gold_label = true;
  items[1].gold_label = false;
  items[2].gold_label = false;
  items[3].gold_label = false;
  items.push_back(Item{"y", {}, std::nullopt});
  CHECK(resolve_priors(items, c).at("y") == doctest::Approx(0.25));

  c.default_prior = 0.1;
  CHECK(resolve_priors(items, c).at("y") == doctest::Approx(0.1));
  items.back().prior = 0.7;
  CHECK(resolve_priors(items, c).at("y") == doctest::Approx(0.7));
}

TEST_CASE("lookback default") {
  TaskConfig c;
  CHECK(c.effective_lookback_ms(DelayModel{}) == doctest::Approx(746.0));
  c.display_interval_ms = 2000;
  CHECK(c.effective_lookback_ms(DelayModel{}) == doctest::Approx(2000.0));
  c.lookback_ms = 3000.0;
  CHECK(c.effective_lookback_ms(DelayModel{}) == doctest::Approx(3000.0));
}

TEST_CASE("delay model bounds") {
  CHECK_NOTHROW(check_delay_model(DelayModel{}));
  CHECK_THROWS_AS(check_delay_model(DelayModel{378.0, 0.0, {}}), Error);
  CHECK_THROWS_AS(check_delay_model(DelayModel{50.0, 90.0, {}}), Error);
  CHECK_THROWS_AS(check_delay_model(DelayModel{2500.0, 90.0, {}}), Error);
}

TEST_CASE("threshold ties go positive") {
  CHECK(decide(0.5, 0.5) == Decision::kPositive);
  CHECK(decide(std::nextafter(0.5, 0.0), 0.5) == Decision::kNegative);
}

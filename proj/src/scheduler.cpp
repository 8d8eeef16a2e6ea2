#include "rapidcs/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "rapidcs/rng.hpp"

namespace rapidcs {

int countdown_frames(int display_interval_ms) {
  if (display_interval_ms <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "display interval must be positive");
  }
  return std::max(1, (kCountdownMinMs + display_interval_ms - 1) /
                         display_interval_ms);
}

std::vector<CountdownFrame> countdown_plan(const TaskConfig& config) {
  const int n = countdown_frames(config.display_interval_ms);
  std::vector<CountdownFrame> frames;
  frames.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    frames.push_back({n - 1 - k,
                      static_cast<double>(k) * config.display_interval_ms});
  }
  return frames;
}

std::vector<std::vector<ItemId>> chunk_items(std::span<const Item> items,
                                             int stream_length) {
  if (stream_length < 1) {
    throw Error(ErrorCode::kInvalidArgument, "stream_length must be >= 1");
  }
  const auto len = static_cast<std::size_t>(stream_length);
  std::vector<std::vector<ItemId>> chunks;
  for (const auto& item : items) {
    if (item.is_gold()) continue;
    if (chunks.empty() || chunks.back().size() == len) chunks.emplace_back();
    chunks.back().push_back(item.item_id);
  }
  if (chunks.size() >= 2 && chunks.back().size() < kMinTailChunk) {
    auto tail = std::move(chunks.back());
    chunks.pop_back();
    chunks.back().insert(chunks.back().end(), tail.begin(), tail.end());
  }
  return chunks;
}

std::size_t gold_slots_for(std::size_t chunk_size, double gold_fraction) {
  if (gold_fraction <= 0.0 || chunk_size == 0) return 0;
  auto n = static_cast<std::size_t>(
      std::llround(gold_fraction * static_cast<double>(chunk_size)));
  return std::max<std::size_t>(1, n);
}

StreamSchedule build_stream(std::span<const ItemId> chunk,
                            std::span<const ItemId> gold_pool,
                            const TaskConfig& config, int chunk_index,
                            int replica, bool all_gold) {
  StreamSchedule s;
  s.schedule_id = "c" + std::to_string(chunk_index) + "-r" + std::to_string(replica);
  s.chunk = chunk_index;
  s.replica = replica;
  s.display_interval_ms = config.display_interval_ms;
  s.countdown_frames = countdown_frames(config.display_interval_ms);
  s.rng_seed_used = derive_seed(config.rng_seed,
                                {static_cast<std::uint64_t>(chunk_index),
                                 static_cast<std::uint64_t>(replica)});
  Rng rng(s.rng_seed_used);

  std::vector<StreamSlot> slots;
  slots.reserve(chunk.size() + gold_pool.size());
  for (const auto& id : chunk) slots.push_back({id, 0.0, all_gold});

  if (!all_gold) {
    const std::size_t n_gold = gold_slots_for(chunk.size(), config.gold_fraction);
    if (n_gold > 0 && gold_pool.empty()) {
      throw Error(ErrorCode::kEmptyGoldPool,
                  "gold pool empty while gold_fraction > 0");
    }
    // Without replacement; reshuffle and continue if the pool runs out.
    std::vector<ItemId> pool(gold_pool.begin(), gold_pool.end());
    std::size_t cursor = pool.size();
    for (std::size_t g = 0; g < n_gold; ++g) {
      if (cursor == pool.size()) {
        rng.shuffle(pool);
        cursor = 0;
      }
      slots.push_back({pool[cursor++], 0.0, true});
    }
  }

  rng.shuffle(slots);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    slots[j].onset_ms = static_cast<double>(j) * config.display_interval_ms;
  }
  s.slots = std::move(slots);
  return s;
}

std::vector<StreamSchedule> build_streams(std::span<const Item> items,
                                          const TaskConfig& config) {
  if (items.empty()) throw Error(ErrorCode::kNoItems, "no items");
  if (config.redundancy < 1) {
    throw Error(ErrorCode::kInvalidArgument, "redundancy must be >= 1");
  }

  std::vector<ItemId> gold_pool;
  for (const auto& item : items) {
    if (item.is_gold()) gold_pool.push_back(item.item_id);
  }

  const bool qualification = config.mode == TaskMode::kQualification;
  std::vector<std::vector<ItemId>> chunks;
  if (qualification) {
    if (gold_pool.empty()) {
      throw Error(ErrorCode::kEmptyGoldPool, "qualification task without gold");
    }
    chunks.push_back(gold_pool);
  } else {
    chunks = chunk_items(items, config.stream_length);
    if (config.gold_fraction > 0.0 && gold_pool.empty()) {
      throw Error(ErrorCode::kEmptyGoldPool,
                  "gold pool empty while gold_fraction > 0");
    }
  }

  countdown_frames(config.display_interval_ms);  // throws before the parallel region
  const int replicas = config.redundancy;
  const auto total = static_cast<long>(chunks.size()) * replicas;
  std::vector<StreamSchedule> out(static_cast<std::size_t>(total));

#pragma omp parallel for schedule(static)
  for (long k = 0; k < total; ++k) {
    const auto c = static_cast<int>(k / replicas);
    const auto r = static_cast<int>(k % replicas);
    out[static_cast<std::size_t>(k)] =
        build_stream(chunks[static_cast<std::size_t>(c)],
                     qualification ? std::span<const ItemId>{} : gold_pool,
                     config, c, r, qualification);
  }
  return out;
}

}  // namespace rapidcs

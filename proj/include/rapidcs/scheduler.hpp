#pragma once

#include <span>
#include <string>
#include <vector>

#include "rapidcs/core.hpp"

namespace rapidcs {

// Minimum countdown length before the first item.
inline constexpr int kCountdownMinMs = 2000;
// A trailing chunk shorter than this is merged into the previous one.
inline constexpr std::size_t kMinTailChunk = 20;

struct CountdownFrame {
  int label = 0;
  double onset_ms = 0.0;

  bool operator==(const CountdownFrame&) const = default;
};

// ceil(2000 / display interval), at least one.
int countdown_frames(int display_interval_ms);

// Frames labeled N-1 ... 0 at the display interval, onsets relative to the
// countdown start.
std::vector<CountdownFrame> countdown_plan(const TaskConfig& config);

// Splits non-gold item ids into consecutive chunks of stream_length. A
// remainder of at least kMinTailChunk items forms its own chunk; a shorter
// one joins the previous chunk.
std::vector<std::vector<ItemId>> chunk_items(std::span<const Item> items,
                                             int stream_length);

// Number of gold slots added to a stream of `chunk_size` real items.
std::size_t gold_slots_for(std::size_t chunk_size, double gold_fraction);

// Per-chunk, per-replica randomized schedules, ordered chunk-major. Standard
// tasks: each chunk gets `redundancy` independent permutations of its items
// plus gold slots drawn from the gold pool. Qualification tasks: each
// replica is a permutation of the whole gold set.
//
// Replica (c, r) is seeded with derive_seed(rng_seed, {c, r}), so output is
// independent of evaluation order.
std::vector<StreamSchedule> build_streams(std::span<const Item> items,
                                          const TaskConfig& config);

// Schedule for a single (chunk, replica) pair; build_streams is this applied
// to every pair.
StreamSchedule build_stream(std::span<const ItemId> chunk,
                            std::span<const ItemId> gold_pool,
                            const TaskConfig& config, int chunk_index,
                            int replica, bool all_gold = false);

}  // namespace rapidcs

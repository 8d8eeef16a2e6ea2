#pragma once

// Multi-class labeling as a sequence of binary verification passes. Each
// pass asks "is this item of class c?" over the remaining pool, and the
// positives leave the pool before the next pass.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rapidcs/core.hpp"

namespace rapidcs {

enum class CountSource { kPriorEstimate, kPilot, kExact };

struct ClassStats {
  std::string class_id;
  std::size_t estimated_count = 0;
  CountSource source = CountSource::kPriorEstimate;
};

enum class CascadeMode {
  kBaseline,        // seeded random class order
  kClassOptimized,  // largest estimated class first
  kWorstCase,       // smallest class first; the baseline's worst draw
};

const char* to_string(CascadeMode m);
CascadeMode cascade_mode_from_string(const std::string& s);

// Class order for a mode. Ties in count are broken by class id (ascending
// for class-optimized, descending for worst case).
std::vector<std::string> plan_cascade(std::span<const ClassStats> classes,
                                      CascadeMode mode, std::uint64_t seed = 0);

// Counts from per-item class priors: round(sum of priors) per class.
std::vector<ClassStats> estimate_class_counts(std::span<const Item> items);

// Binary verification of one class over the current pool; returns the ids
// judged positive.
using BinaryDecodeFn = std::function<std::vector<ItemId>(
    const std::string& class_id, std::span<const ItemId> pool)>;

struct CascadePass {
  std::string class_id;
  std::size_t pool_size = 0;
  std::size_t positives = 0;
  std::size_t displays = 0;
};

struct CascadeResult {
  CascadeMode mode = CascadeMode::kClassOptimized;
  std::vector<std::string> order;
  std::vector<CascadePass> passes;
  std::map<ItemId, std::string> assignments;
  std::vector<ItemId> unclassified;
  std::size_t total_displays = 0;
  // Set when decode_fn threw; passes/assignments hold the work done so far.
  std::optional<std::string> error;
};

// total_displays accumulates pool size x redundancy over passes.
CascadeResult run_cascade(std::span<const ItemId> items,
                          std::span<const ClassStats> classes,
                          const BinaryDecodeFn& decode_fn, CascadeMode mode,
                          std::uint64_t seed, int redundancy = 1);

// Decoder that answers from known class membership.
BinaryDecodeFn perfect_decoder(std::map<ItemId, std::string> truth_class);

}  // namespace rapidcs

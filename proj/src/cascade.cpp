#include "rapidcs/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rapidcs/rng.hpp"

namespace rapidcs {

const char* to_string(CascadeMode m) {
  switch (m) {
    case CascadeMode::kBaseline: return "baseline";
    case CascadeMode::kClassOptimized: return "optimized";
    case CascadeMode::kWorstCase: return "worst-case";
  }
  return "baseline";
}

CascadeMode cascade_mode_from_string(const std::string& s) {
  if (s == "baseline") return CascadeMode::kBaseline;
  if (s == "optimized" || s == "class-optimized") return CascadeMode::kClassOptimized;
  if (s == "worst-case") return CascadeMode::kWorstCase;
  throw Error(ErrorCode::kInvalidArgument, "unknown cascade mode '" + s + "'");
}

std::vector<std::string> plan_cascade(std::span<const ClassStats> classes,
                                      CascadeMode mode, std::uint64_t seed) {
  if (classes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cascade needs at least one class");
  }
  std::vector<ClassStats> sorted(classes.begin(), classes.end());
  switch (mode) {
    case CascadeMode::kClassOptimized:
      std::sort(sorted.begin(), sorted.end(), [](const ClassStats& a, const ClassStats& b) {
        if (a.estimated_count != b.estimated_count) return a.estimated_count > b.estimated_count;
        return a.class_id < b.class_id;
      });
      break;
    case CascadeMode::kWorstCase:
      std::sort(sorted.begin(), sorted.end(), [](const ClassStats& a, const ClassStats& b) {
        if (a.estimated_count != b.estimated_count) return a.estimated_count < b.estimated_count;
        return a.class_id > b.class_id;
      });
      break;
    case CascadeMode::kBaseline: {
      // Canonical order first so the draw does not depend on input order.
      std::sort(sorted.begin(), sorted.end(), [](const ClassStats& a, const ClassStats& b) {
        return a.class_id < b.class_id;
      });
      Rng rng(derive_seed(seed, {0xca5cadeULL}));
      rng.shuffle(sorted);
      break;
    }
  }
  std::vector<std::string> order;
  order.reserve(sorted.size());
  for (const auto& c : sorted) order.push_back(c.class_id);
  return order;
}

std::vector<ClassStats> estimate_class_counts(std::span<const Item> items) {
  std::map<std::string, double> mass;
  for (const auto& item : items) {
    for (const auto& [cls, p] : item.class_priors) mass[cls] += p;
  }
  std::vector<ClassStats> out;
  for (const auto& [cls, m] : mass) {
    out.push_back({cls, static_cast<std::size_t>(std::llround(std::max(0.0, m))),
                   CountSource::kPriorEstimate});
  }
  return out;
}

CascadeResult run_cascade(std::span<const ItemId> items,
                          std::span<const ClassStats> classes,
                          const BinaryDecodeFn& decode_fn, CascadeMode mode,
                          std::uint64_t seed, int redundancy) {
  if (redundancy < 1) {
    throw Error(ErrorCode::kInvalidArgument, "redundancy must be >= 1");
  }
  CascadeResult result;
  result.mode = mode;
  result.order = plan_cascade(classes, mode, seed);

  std::vector<ItemId> pool(items.begin(), items.end());
  for (const auto& cls : result.order) {
    if (pool.empty()) break;
    CascadePass pass;
    pass.class_id = cls;
    pass.pool_size = pool.size();
    pass.displays = pool.size() * static_cast<std::size_t>(redundancy);

    std::vector<ItemId> positives;
    try {
      positives = decode_fn(cls, pool);
    } catch (const std::exception& e) {
      result.error = "pass '" + cls + "' failed: " + e.what();
      break;
    }
    result.total_displays += pass.displays;

    std::unordered_set<ItemId> hit(positives.begin(), positives.end());
    std::vector<ItemId> remaining;
    remaining.reserve(pool.size());
    for (auto& id : pool) {
      if (hit.contains(id)) {
        result.assignments.emplace(id, cls);
        ++pass.positives;
      } else {
        remaining.push_back(std::move(id));
      }
    }
    pool = std::move(remaining);
    result.passes.push_back(pass);
  }
  result.unclassified = std::move(pool);
  return result;
}

BinaryDecodeFn perfect_decoder(std::map<ItemId, std::string> truth_class) {
  return [truth = std::move(truth_class)](const std::string& cls,
                                          std::span<const ItemId> pool) {
    std::vector<ItemId> out;
    for (const auto& id : pool) {
      auto it = truth.find(id);
      if (it != truth.end() && it->second == cls) out.push_back(id);
    }
    return out;
  };
}

}  // namespace rapidcs

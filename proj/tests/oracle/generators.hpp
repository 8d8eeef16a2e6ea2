#pragma once

// Hand-rolled generators for property tests. Each draws from a plain
// std::mt19937_64 seeded by the caller.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "oracle/enumeration_oracle.hpp"
#include "rapidcs/core.hpp"

namespace gen {

using Engine = std::mt19937_64;

inline double uniform(Engine& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int integer(Engine& g, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

// A micro decoding instance, both as library sessions and as the oracle's
// own representation.
struct Micro {
  oracle::MicroInstance inst;
  std::vector<rapidcs::WorkerSession> sessions;
  rapidcs::PriorMap priors;
};

inline Micro micro_instance(Engine& g, int max_items = 8, int max_workers = 3,
                            int max_presses = 3) {
  Micro m;
  const int items = integer(g, 1, max_items);
  const int workers = integer(g, 1, max_workers);
  const double delta = 50.0 * integer(g, 1, 6);
  m.inst.mean_ms = uniform(g, 250.0, 500.0);
  m.inst.std_ms = uniform(g, 30.0, 150.0);
  m.inst.lookback_ms = uniform(g, delta, 900.0);
  std::vector<std::string> ids;
  for (int i = 0; i < items; ++i) {
    ids.push_back("i" + std::to_string(i));
    const double p = integer(g, 0, 9) == 0 ? 0.0 : uniform(g, 0.01, 1.0);
    m.inst.priors[ids.back()] = p;
    m.priors[ids.back()] = p;
  }
  for (int w = 0; w < workers; ++w) {
    std::vector<std::string> order = ids;
    std::shuffle(order.begin(), order.end(), g);
    // Some workers see only part of the set.
    if (integer(g, 0, 3) == 0 && order.size() > 1) order.resize(static_cast<std::size_t>(integer(g, 1, items)));
    oracle::MicroWorker ow;
    ow.session_id = "s" + std::to_string(w);
    rapidcs::WorkerSession s;
    s.session_id = ow.session_id;
    s.worker_id = "w" + std::to_string(w);
    s.stream.display_interval_ms = static_cast<int>(delta);
    for (std::size_t j = 0; j < order.size(); ++j) {
      const double onset = static_cast<double>(j) * delta;
      ow.slots.push_back({order[j], onset});
      s.stream.slots.push_back({order[j], onset, false});
    }
    const int presses = integer(g, 0, max_presses);
    const double end = static_cast<double>(order.size()) * delta + m.inst.lookback_ms;
    std::vector<double> ts;
    for (int k = 0; k < presses; ++k) ts.push_back(uniform(g, 0.0, end));
    std::sort(ts.begin(), ts.end());
    for (double t : ts) s.events.push_back({t, rapidcs::EventSource::kSimulated});
    ow.presses_ms = ts;
    m.inst.workers.push_back(ow);
    m.sessions.push_back(std::move(s));
  }
  return m;
}

}  // namespace gen

#pragma once

// Brute-force scorer for tiny instances. For every worker it walks all joint
// assignments of keypresses to candidate items, weighs each assignment by
// the product of its Gaussian likelihoods, and takes the expected number of
// keypresses landing on each item. Shares no code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct MicroSlot {
  std::string item;
  double onset_ms;
};

struct MicroWorker {
  std::string session_id;
  std::vector<MicroSlot> slots;
  std::vector<double> presses_ms;
};

struct MicroInstance {
  std::vector<MicroWorker> workers;
  std::map<std::string, double> priors;
  double mean_ms = 378.0;
  double std_ms = 92.0;
  double lookback_ms = 746.0;
};

struct OracleScore {
  double score = 0.0;
  double posterior = 0.0;
};

inline double normal_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
}

// Expected keypress count per item for one worker.
inline std::map<std::string, double> expected_hits(const MicroWorker& w, const MicroInstance& inst) {
  // Candidate (item, likelihood) lists per press; presses without a usable
  // candidate are dropped.
  std::vector<std::vector<std::pair<std::string, double>>> cands;
  for (double c : w.presses_ms) {
    std::vector<std::pair<std::string, double>> cs;
    double best = 0.0;
    for (const auto& s : w.slots) {
      const double d = c - s.onset_ms;
      if (d < 0.0 || d > inst.lookback_ms) continue;
      const double l = normal_density(d, inst.mean_ms, inst.std_ms);
      cs.emplace_back(s.item, l);
      best = std::max(best, l);
    }
    if (!cs.empty() && best >= 1e-12) cands.push_back(std::move(cs));
  }

  std::map<std::string, double> expected;
  if (cands.empty()) return expected;
  std::vector<std::size_t> pick(cands.size(), 0);
  double z = 0.0;
  std::map<std::string, double> mass;
  while (true) {
    double p = 1.0;
    for (std::size_t k = 0; k < cands.size(); ++k) p *= cands[k][pick[k]].second;
    z += p;
    for (std::size_t k = 0; k < cands.size(); ++k) mass[cands[k][pick[k]].first] += p;
    std::size_t k = 0;
    while (k < cands.size() && ++pick[k] == cands[k].size()) pick[k++] = 0;
    if (k == cands.size()) break;
  }
  for (auto& [item, m] : mass) expected[item] = m / z;
  return expected;
}

inline std::map<std::string, OracleScore> enumerate_scores(const MicroInstance& inst) {
  std::map<std::string, double> sum;
  std::map<std::string, int> shown;
  for (const auto& w : inst.workers) {
    std::map<std::string, bool> in_stream;
    for (const auto& s : w.slots) in_stream[s.item] = true;
    for (const auto& [item, yes] : in_stream) ++shown[item];
    for (const auto& [item, e] : expected_hits(w, inst)) sum[item] += std::min(1.0, e);
  }
  std::map<std::string, OracleScore> out;
  double top = 0.0;
  for (const auto& [item, prior] : inst.priors) {
    const int n = shown[item];
    const double s = n > 0 ? prior * sum[item] / n : 0.0;
    out[item].score = s;
    top = std::max(top, s);
  }
  for (auto& [item, o] : out) o.posterior = top > 0.0 ? o.score / top : 0.0;
  return out;
}

}  // namespace oracle

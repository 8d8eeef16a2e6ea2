#pragma once

// Small independent recomputations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace oracle {

// Cascade display count by direct pool shrinkage: every pass shows the
// whole remaining pool `redundancy` times, then the class leaves the pool.
inline std::size_t pool_shrinkage(const std::vector<std::size_t>& sizes_in_order,
                                  std::size_t redundancy = 1) {
  std::size_t pool = 0;
  for (auto s : sizes_in_order) pool += s;
  std::size_t displays = 0;
  for (auto s : sizes_in_order) {
    displays += pool * redundancy;
    pool -= s;
  }
  return displays;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Confusion confusion(const std::vector<std::pair<bool, bool>>& predicted_actual) {
  Confusion c;
  for (auto [p, a] : predicted_actual) {
    if (p) {
      if (a) ++c.tp; else ++c.fp;
    } else {
      if (a) ++c.fn; else ++c.tn;
    }
  }
  return c;
}

struct QualificationCounts {
  std::size_t hits = 0;
  std::size_t in_window = 0;
  double recall = 0.0;
  double precision = 0.0;
  bool passed = false;
};

// Recomputed from the definitions: a gold positive is hit if some press
// falls in [onset, onset + window]; a press is good if it falls in such a
// window for some gold positive.
inline QualificationCounts qualification(const std::vector<double>& positive_onsets,
                                         const std::vector<double>& presses,
                                         double window = 500.0) {
  QualificationCounts q;
  for (double o : positive_onsets) {
    for (double p : presses) {
      if (p >= o && p <= o + window) {
        ++q.hits;
        break;
      }
    }
  }
  for (double p : presses) {
    for (double o : positive_onsets) {
      if (p >= o && p <= o + window) {
        ++q.in_window;
        break;
      }
    }
  }
  q.recall = positive_onsets.empty() ? 0.0 : double(q.hits) / double(positive_onsets.size());
  q.precision = presses.empty() ? 0.0 : double(q.in_window) / double(presses.size());
  q.passed = !presses.empty() && q.recall >= 0.6 && q.precision >= 0.9;
  return q;
}

// Kendall tau-a between two orderings of the same items.
inline double kendall_tau(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < b.size(); ++i) pos[b[i]] = i;
  long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (pos.at(a[i]) < pos.at(a[j])) ++concordant; else ++discordant;
    }
  }
  const double pairs = double(a.size()) * double(a.size() - 1) / 2.0;
  return double(concordant - discordant) / pairs;
}

// P(strict majority correct) for n i.i.d. labels of accuracy p.
inline double binomial_majority(int n, double p) {
  double total = 0.0;
  for (int k = n / 2 + 1; k <= n; ++k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * double(n - i) / double(i + 1);
    total += c * std::pow(p, k) * std::pow(1.0 - p, n - k);
  }
  return total;
}

}  // namespace oracle

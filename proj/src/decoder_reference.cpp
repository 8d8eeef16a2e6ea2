#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "rapidcs/decoder.hpp"

namespace rapidcs::reference {

std::vector<LabelEstimate> score_items_serial(
    std::span<const WorkerSession> sessions, const DelayModelSet& delay,
    const PriorMap& priors, const ScoreOptions& options) {
  std::vector<const WorkerSession*> ordered;
  for (const auto& s : sessions) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const WorkerSession* a, const WorkerSession* b) {
                     return a->session_id < b->session_id;
                   });

  std::map<ItemId, double> evidence;
  std::map<ItemId, std::size_t> coverage;
  std::set<ItemId> gold;

  for (const WorkerSession* s : ordered) {
    const DelayModel& model = delay.for_worker(s->worker_id);
    const auto& slots = s->stream.slots;

    // Normalizer of each keypress over its candidate window.
    std::vector<double> total(s->events.size(), 0.0);
    std::vector<bool> attributed(s->events.size(), false);
    for (std::size_t k = 0; k < s->events.size(); ++k) {
      double best = 0.0;
      bool any = false;
      for (std::size_t j = 0; j < slots.size(); ++j) {
        const double d = s->events[k].t_ms - s->onset_ms(j);
        if (d < 0.0 || d > options.lookback_ms) continue;
        const double l = gaussian_pdf(d, model.mean_ms, model.std_ms);
        total[k] += l;
        best = std::max(best, l);
        any = true;
      }
      attributed[k] = any && best >= kMinAttributionLikelihood;
    }

    std::map<ItemId, double> p_worker;
    std::vector<ItemId> seen_order;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      const ItemId& id = slots[j].item_id;
      if (!priors.contains(id)) {
        throw Error(ErrorCode::kUniverseMismatch,
                    "schedule/universe mismatch: unknown item '" + id + "'");
      }
      if (slots[j].is_gold) gold.insert(id);
      double slot_mass = 0.0;
      for (std::size_t k = 0; k < s->events.size(); ++k) {
        if (!attributed[k]) continue;
        const double d = s->events[k].t_ms - s->onset_ms(j);
        if (d < 0.0 || d > options.lookback_ms) continue;
        slot_mass += gaussian_pdf(d, model.mean_ms, model.std_ms) / total[k];
      }
      auto [it, fresh] = p_worker.emplace(id, slot_mass);
      if (fresh) seen_order.push_back(id);
      else it->second += slot_mass;
    }
    for (const auto& id : seen_order) {
      evidence[id] += std::clamp(p_worker[id], 0.0, 1.0);
      coverage[id] += 1;
    }
  }

  std::map<ItemId, double> score;
  double max_score = 0.0;
  for (const auto& [id, prior] : priors) {
    double s = 0.0;
    auto c = coverage.find(id);
    if (c != coverage.end()) {
      s = prior * (evidence[id] / static_cast<double>(c->second));
    }
    score[id] = s;
    max_score = std::max(max_score, s);
  }

  std::vector<LabelEstimate> out;
  for (const auto& [id, s] : score) {
    if (gold.contains(id) && !options.include_gold) continue;
    out.push_back({id, s, max_score > 0.0 ? s / max_score : 0.0, priors.at(id),
                   Decision::kUndecided});
  }
  std::sort(out.begin(), out.end(), [](const LabelEstimate& a, const LabelEstimate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.prior != b.prior) return a.prior > b.prior;
    return a.item_id < b.item_id;
  });
  return out;
}

}  // namespace rapidcs::reference

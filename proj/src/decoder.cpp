#include "rapidcs/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace rapidcs {

double gaussian_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

DelayModel delay_model_from_delays(std::span<const double> delays_ms) {
  if (delays_ms.size() < 2) {
    throw Error(ErrorCode::kInsufficientCalibration,
                "insufficient calibration data");
  }
  const double n = static_cast<double>(delays_ms.size());
  const double mean = std::accumulate(delays_ms.begin(), delays_ms.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : delays_ms) ss += (d - mean) * (d - mean);
  DelayModel model;
  model.mean_ms = mean;
  model.std_ms = std::max(kDelayStdFloorMs, std::sqrt(ss / (n - 1.0)));
  return model;
}

std::vector<double> matched_delays(const WorkerSession& session,
                                   const TruthMap& gold,
                                   double match_window_ms) {
  std::vector<double> out;
  const auto& events = session.events;
  for (std::size_t j = 0; j < session.stream.slots.size(); ++j) {
    auto g = gold.find(session.stream.slots[j].item_id);
    if (g == gold.end() || !g->second) continue;
    const double onset = session.onset_ms(j);
    auto it = std::lower_bound(
        events.begin(), events.end(), onset,
        [](const KeypressEvent& e, double t) { return e.t_ms < t; });
    if (it != events.end() && it->t_ms - onset <= match_window_ms) {
      out.push_back(it->t_ms - onset);
    }
  }
  return out;
}

DelayModel fit_delay_model(std::span<const WorkerSession> sessions,
                           const TruthMap& gold, double match_window_ms) {
  std::vector<double> delays;
  for (const auto& s : sessions) {
    auto d = matched_delays(s, gold, match_window_ms);
    delays.insert(delays.end(), d.begin(), d.end());
  }
  if (delays.size() < kMinCalibrationMatches) {
    throw Error(ErrorCode::kInsufficientCalibration,
                "insufficient calibration data: " +
                    std::to_string(delays.size()) + " matches");
  }
  DelayModel model = delay_model_from_delays(delays);
  check_delay_model(model);
  return model;
}

std::map<WorkerId, DelayModel> fit_worker_delay_models(
    std::span<const WorkerSession> sessions, const TruthMap& gold,
    double match_window_ms) {
  std::map<WorkerId, std::vector<double>> by_worker;
  for (const auto& s : sessions) {
    auto d = matched_delays(s, gold, match_window_ms);
    auto& acc = by_worker[s.worker_id];
    acc.insert(acc.end(), d.begin(), d.end());
  }
  std::map<WorkerId, DelayModel> out;
  for (auto& [worker, delays] : by_worker) {
    if (delays.size() < kMinCalibrationMatches) continue;
    DelayModel m = delay_model_from_delays(delays);
    if (m.mean_ms < 100.0 || m.mean_ms > 2000.0) continue;
    m.worker_id = worker;
    out.emplace(worker, m);
  }
  return out;
}

Attribution attribute_keypresses(const WorkerSession& session,
                                 const DelayModel& delay, double lookback_ms) {
  Attribution out;
  const auto& slots = session.stream.slots;
  std::vector<std::pair<std::size_t, double>> candidates;
  for (std::size_t k = 0; k < session.events.size(); ++k) {
    const double c = session.events[k].t_ms;
    candidates.clear();
    double total = 0.0;
    double best = 0.0;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      const double d = c - session.onset_ms(j);
      if (d < 0.0 || d > lookback_ms) continue;
      const double l = gaussian_pdf(d, delay.mean_ms, delay.std_ms);
      candidates.emplace_back(j, l);
      total += l;
      best = std::max(best, l);
    }
    if (candidates.empty() || best < kMinAttributionLikelihood) {
      out.unattributed.push_back(k);
      continue;
    }
    for (const auto& [j, l] : candidates) {
      out.weights.push_back({k, j, slots[j].item_id, l / total});
    }
  }
  return out;
}

namespace {

struct Universe {
  std::vector<ItemId> ids;
  std::vector<double> priors;
  std::unordered_map<ItemId, std::size_t> index;
};

Universe make_universe(const PriorMap& priors) {
  Universe u;
  u.ids.reserve(priors.size());
  for (const auto& [id, p] : priors) u.ids.push_back(id);
  std::sort(u.ids.begin(), u.ids.end());
  u.priors.reserve(u.ids.size());
  for (std::size_t i = 0; i < u.ids.size(); ++i) {
    u.index.emplace(u.ids[i], i);
    u.priors.push_back(priors.at(u.ids[i]));
  }
  return u;
}

std::vector<std::size_t> canonical_order(std::span<const WorkerSession> sessions) {
  std::vector<std::size_t> order(sessions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sessions[a].session_id < sessions[b].session_id;
  });
  return order;
}

// Per-item evidence p_w(i) of one session, items in first-slot order.
struct SessionEvidence {
  std::vector<std::pair<std::size_t, double>> items;
  std::vector<std::size_t> gold_items;
  bool mismatch = false;
  ItemId mismatch_id;
};

SessionEvidence session_evidence(const WorkerSession& session,
                                 const DelayModel& delay, double lookback_ms,
                                 const Universe& u) {
  SessionEvidence ev;
  const auto& slots = session.stream.slots;
  std::vector<double> per_slot(slots.size(), 0.0);
  const Attribution attribution = attribute_keypresses(session, delay, lookback_ms);
  for (const auto& w : attribution.weights) per_slot[w.slot] += w.weight;

  std::unordered_map<std::size_t, std::size_t> position;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    auto it = u.index.find(slots[j].item_id);
    if (it == u.index.end()) {
      ev.mismatch = true;
      ev.mismatch_id = slots[j].item_id;
      return ev;
    }
    if (slots[j].is_gold) ev.gold_items.push_back(it->second);
    auto [pos, fresh] = position.emplace(it->second, ev.items.size());
    if (fresh) {
      ev.items.emplace_back(it->second, per_slot[j]);
    } else {
      ev.items[pos->second].second += per_slot[j];
    }
  }
  return ev;
}

std::vector<LabelEstimate> finalize(const Universe& u,
                                    const std::vector<double>& evidence_sum,
                                    const std::vector<std::size_t>& coverage,
                                    const std::vector<char>& is_gold,
                                    bool include_gold) {
  const std::size_t n = u.ids.size();
  std::vector<double> score(n, 0.0);
  double max_score = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (coverage[i] > 0) {
      score[i] = u.priors[i] * (evidence_sum[i] / static_cast<double>(coverage[i]));
    }
    max_score = std::max(max_score, score[i]);
  }
  std::vector<LabelEstimate> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_gold[i] && !include_gold) continue;
    LabelEstimate e;
    e.item_id = u.ids[i];
    e.score = score[i];
    e.prior = u.priors[i];
    e.posterior = max_score > 0.0 ? score[i] / max_score : 0.0;
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const LabelEstimate& a, const LabelEstimate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.prior != b.prior) return a.prior > b.prior;
    return a.item_id < b.item_id;
  });
  return out;
}

}  // namespace

std::vector<LabelEstimate> score_items(std::span<const WorkerSession> sessions,
                                       const DelayModelSet& delay,
                                       const PriorMap& priors,
                                       const ScoreOptions& options) {
  const Universe u = make_universe(priors);
  const std::vector<std::size_t> order = canonical_order(sessions);
  std::vector<SessionEvidence> evidence(sessions.size());

  const auto count = static_cast<long>(sessions.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long s = 0; s < count; ++s) {
    const auto& session = sessions[static_cast<std::size_t>(s)];
    evidence[static_cast<std::size_t>(s)] = session_evidence(
        session, delay.for_worker(session.worker_id), options.lookback_ms, u);
  }

  // Deterministic reduction in canonical session order.
  const std::size_t n = u.ids.size();
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> coverage(n, 0);
  std::vector<char> is_gold(n, 0);
  for (std::size_t s : order) {
    const auto& ev = evidence[s];
    if (ev.mismatch) {
      throw Error(ErrorCode::kUniverseMismatch,
                  "schedule/universe mismatch: unknown item '" + ev.mismatch_id +
                      "' in session '" + sessions[s].session_id + "'");
    }
    for (const auto& [i, p] : ev.items) {
      sum[i] += std::clamp(p, 0.0, 1.0);
      ++coverage[i];
    }
    for (std::size_t i : ev.gold_items) is_gold[i] = 1;
  }
  return finalize(u, sum, coverage, is_gold, options.include_gold);
}

void apply_threshold(std::vector<LabelEstimate>& estimates, double threshold) {
  for (auto& e : estimates) e.decision = decide(e.posterior, threshold);
}

ThresholdTuning tune_threshold(std::span<const LabelEstimate> estimates,
                               const TruthMap& gold, double target_precision) {
  std::vector<std::pair<double, bool>> labeled;
  for (const auto& e : estimates) {
    auto g = gold.find(e.item_id);
    if (g != gold.end()) labeled.emplace_back(e.posterior, g->second);
  }
  ThresholdTuning t;
  for (const auto& [p, y] : labeled) (y ? t.gold_positives : t.gold_negatives)++;
  if (t.gold_positives < 5 || t.gold_negatives < 5) {
    throw Error(ErrorCode::kInsufficientGold,
                "threshold tuning needs >= 5 gold positives and >= 5 gold negatives");
  }

  double min_pos = 1e300, max_neg = -1e300, max_all = -1e300;
  for (const auto& [p, y] : labeled) {
    if (y) min_pos = std::min(min_pos, p);
    else max_neg = std::max(max_neg, p);
    max_all = std::max(max_all, p);
  }

  auto evaluate = [&](double threshold) {
    std::size_t tp = 0, fp = 0;
    for (const auto& [p, y] : labeled) {
      if (p >= threshold) (y ? tp : fp)++;
    }
    t.gold_precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    t.gold_recall = static_cast<double>(tp) / static_cast<double>(t.gold_positives);
  };

  if (min_pos > max_neg) {
    t.separable = true;
    t.threshold = 0.5 * (min_pos + max_neg);
    evaluate(t.threshold);
    return t;
  }

  std::vector<double> candidates;
  for (const auto& [p, y] : labeled) candidates.push_back(p);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (double c : candidates) {
    evaluate(c);
    if (t.gold_precision >= target_precision) {
      t.threshold = c;
      return t;
    }
  }
  t.attainable = false;
  t.threshold = max_all + 1e-9;
  evaluate(t.threshold);
  return t;
}

QualificationResult qualify(const WorkerSession& session, const TruthMap& gold,
                            double window_ms) {
  QualificationResult r;
  std::vector<double> positive_onsets;
  std::vector<std::size_t> positive_slots;
  for (std::size_t j = 0; j < session.stream.slots.size(); ++j) {
    auto g = gold.find(session.stream.slots[j].item_id);
    if (g != gold.end() && g->second) {
      positive_onsets.push_back(session.onset_ms(j));
      positive_slots.push_back(j);
    }
  }
  r.gold_positives = positive_onsets.size();
  if (r.gold_positives == 0) {
    throw Error(ErrorCode::kNoGoldPositives, "stream contains no gold positives");
  }
  r.keypresses = session.events.size();
  if (r.keypresses == 0) {
    r.reason = "no reactions";
    r.missed_slots = positive_slots;
    return r;
  }

  auto within = [&](double onset, double t) {
    const double d = t - onset;
    return d >= 0.0 && d <= window_ms;
  };
  for (std::size_t g = 0; g < positive_onsets.size(); ++g) {
    bool hit = std::any_of(session.events.begin(), session.events.end(),
                           [&](const KeypressEvent& e) { return within(positive_onsets[g], e.t_ms); });
    if (hit) ++r.hits;
    else r.missed_slots.push_back(positive_slots[g]);
  }
  for (const auto& e : session.events) {
    if (std::any_of(positive_onsets.begin(), positive_onsets.end(),
                    [&](double onset) { return within(onset, e.t_ms); })) {
      ++r.keypresses_in_window;
    }
  }
  r.recall = static_cast<double>(r.hits) / static_cast<double>(r.gold_positives);
  r.precision = static_cast<double>(r.keypresses_in_window) /
                static_cast<double>(r.keypresses);
  r.passed = r.recall >= kQualificationMinRecall &&
             r.precision >= kQualificationMinPrecision;
  if (!r.passed) {
    r.reason = r.recall < kQualificationMinRecall ? "recall below 0.6"
                                                  : "precision below 0.9";
  }
  return r;
}

DecodeResult decode(std::span<const Item> items, const TaskConfig& config,
                    std::span<const WorkerSession> sessions,
                    const DecodeOptions& options) {
  if (items.empty()) throw Error(ErrorCode::kNoItems, "no items");
  if (sessions.empty()) {
    throw Error(ErrorCode::kInsufficientSessions, "decode needs at least one session");
  }
  const TruthMap gold = gold_labels(items);
  const PriorMap priors = resolve_priors(items, config);

  DecodeResult result;
  DelayModelSet models;
  if (options.delay_mean_ms || options.delay_std_ms) {
    models.global.mean_ms = options.delay_mean_ms.value_or(models.global.mean_ms);
    models.global.std_ms = options.delay_std_ms.value_or(models.global.std_ms);
    check_delay_model(models.global);
  } else {
    try {
      models.global = fit_delay_model(sessions, gold, options.match_window_ms);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientCalibration &&
          e.code() != ErrorCode::kInvalidArgument) {
        throw;
      }
      result.flags.push_back("default delay model");
    }
    if (options.per_worker_models) {
      models.per_worker = fit_worker_delay_models(sessions, gold, options.match_window_ms);
    }
  }
  result.delay_model_used = models.global;
  result.worker_models = models.per_worker;
  result.lookback_ms = options.lookback_ms.value_or(config.effective_lookback_ms(models.global));

  ScoreOptions so;
  so.lookback_ms = result.lookback_ms;
  so.include_gold = true;
  std::vector<LabelEstimate> all = score_items(sessions, models, priors, so);

  std::optional<double> target;
  if (options.threshold) {
    result.threshold_used = *options.threshold;
  } else if (options.target_precision) {
    target = options.target_precision;
  } else if (config.threshold.kind == ThresholdSpec::Kind::kFixed) {
    result.threshold_used = config.threshold.value;
  } else {
    target = config.threshold.value;
  }
  if (target) {
    result.tuning = tune_threshold(all, gold, *target);
    result.threshold_used = result.tuning->threshold;
    if (!result.tuning->attainable) result.flags.push_back("precision target unattainable");
  }
  apply_threshold(all, result.threshold_used);

  std::unordered_set<ItemId> gold_ids;
  for (const auto& item : items) {
    if (item.is_gold()) gold_ids.insert(item.item_id);
  }
  for (auto& e : all) {
    if (!gold_ids.contains(e.item_id)) result.estimates.push_back(std::move(e));
  }

  for (const auto& s : sessions) {
    WorkerDiagnostics d;
    d.session_id = s.session_id;
    d.worker_id = s.worker_id;
    d.keypresses = s.events.size();
    d.unattributed =
        attribute_keypresses(s, models.for_worker(s.worker_id), result.lookback_ms)
            .unattributed.size();
    for (std::size_t j = 0; j < s.stream.slots.size(); ++j) {
      auto g = gold.find(s.stream.slots[j].item_id);
      if (g == gold.end() || !g->second) continue;
      ++d.gold_positives;
      const double onset = s.onset_ms(j);
      if (std::any_of(s.events.begin(), s.events.end(), [&](const KeypressEvent& e) {
            return e.t_ms >= onset && e.t_ms - onset <= result.lookback_ms;
          })) {
        ++d.gold_hits;
      }
    }
    result.diagnostics.push_back(std::move(d));
  }
  std::sort(result.diagnostics.begin(), result.diagnostics.end(),
            [](const WorkerDiagnostics& a, const WorkerDiagnostics& b) {
              return a.session_id < b.session_id;
            });
  return result;
}

}  // namespace rapidcs

#include "rapidcs/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rapidcs {

namespace {

template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <class T>
void get_opt(const json& j, const char* key, std::optional<T>& v) {
  auto it = j.find(key);
  if (it != j.end() && !it->is_null()) v = it->template get<T>();
  else v.reset();
}

template <class T>
void get_or(const json& j, const char* key, T& v) {
  auto it = j.find(key);
  if (it != j.end() && !it->is_null()) v = it->template get<T>();
}

EventSource source_from_string(const std::string& s) {
  if (s == "human") return EventSource::kHuman;
  if (s == "simulated") return EventSource::kSimulated;
  throw Error(ErrorCode::kParse, "unknown event source '" + s + "'");
}

SessionStatus status_from_string(const std::string& s) {
  if (s == "pending") return SessionStatus::kPending;
  if (s == "submitted") return SessionStatus::kSubmitted;
  if (s == "rejected") return SessionStatus::kRejected;
  throw Error(ErrorCode::kParse, "unknown session status '" + s + "'");
}

Decision decision_from_string(const std::string& s) {
  if (s == "positive") return Decision::kPositive;
  if (s == "negative") return Decision::kNegative;
  if (s == "undecided") return Decision::kUndecided;
  throw Error(ErrorCode::kParse, "unknown decision '" + s + "'");
}

template <class F>
auto parse_guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  return out;
}

}  // namespace

void to_json(json& j, const PayloadRef& p) {
  j = json{{"ref", p.ref}, {"modality", to_string(p.modality)}};
}

void from_json(const json& j, PayloadRef& p) {
  p.ref = j.value("ref", std::string{});
  p.modality = modality_from_string(j.value("modality", std::string{"other"}));
}

void to_json(json& j, const Item& item) {
  j = json{{"item_id", item.item_id}, {"payload", item.payload}};
  put_opt(j, "prior", item.prior);
  put_opt(j, "gold_label", item.gold_label);
  put_opt(j, "truth", item.truth);
  if (!item.class_priors.empty()) j["class_priors"] = item.class_priors;
  put_opt(j, "truth_class", item.truth_class);
}

void from_json(const json& j, Item& item) {
  item.item_id = j.at("item_id").get<std::string>();
  if (j.contains("payload")) item.payload = j.at("payload").get<PayloadRef>();
  get_opt(j, "prior", item.prior);
  get_opt(j, "gold_label", item.gold_label);
  get_opt(j, "truth", item.truth);
  item.class_priors.clear();
  get_or(j, "class_priors", item.class_priors);
  get_opt(j, "truth_class", item.truth_class);
}

void to_json(json& j, const ThresholdSpec& t) {
  if (t.kind == ThresholdSpec::Kind::kFixed) {
    j = t.value;
  } else {
    // Shortest round-trip form of the number.
    j = "auto(" + json(t.value).dump() + ")";
  }
}

void from_json(const json& j, ThresholdSpec& t) {
  if (j.is_number()) {
    t = ThresholdSpec::fixed(j.get<double>());
    return;
  }
  const auto s = j.get<std::string>();
  if (s.rfind("auto(", 0) == 0 && s.back() == ')') {
    try {
      t = ThresholdSpec::target(std::stod(s.substr(5, s.size() - 6)));
      return;
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kParse, "threshold must be a number or \"auto(p)\", got '" + s + "'");
}

void to_json(json& j, const TaskConfig& c) {
  j = json{{"display_interval_ms", c.display_interval_ms},
           {"redundancy", c.redundancy},
           {"threshold", c.threshold},
           {"stream_length", c.stream_length},
           {"gold_fraction", c.gold_fraction},
           {"target_positive_rate_cap", c.target_positive_rate_cap},
           {"rng_seed", c.rng_seed},
           {"mode", c.mode == TaskMode::kQualification ? "qualification" : "standard"}};
  put_opt(j, "lookback_ms", c.lookback_ms);
  put_opt(j, "default_prior", c.default_prior);
}

void from_json(const json& j, TaskConfig& c) {
  c = TaskConfig{};
  get_or(j, "display_interval_ms", c.display_interval_ms);
  get_or(j, "redundancy", c.redundancy);
  get_or(j, "threshold", c.threshold);
  get_or(j, "stream_length", c.stream_length);
  get_or(j, "gold_fraction", c.gold_fraction);
  get_or(j, "target_positive_rate_cap", c.target_positive_rate_cap);
  get_or(j, "rng_seed", c.rng_seed);
  get_opt(j, "lookback_ms", c.lookback_ms);
  get_opt(j, "default_prior", c.default_prior);
  const auto mode = j.value("mode", std::string{"standard"});
  if (mode == "qualification") c.mode = TaskMode::kQualification;
  else if (mode == "standard") c.mode = TaskMode::kStandard;
  else throw Error(ErrorCode::kParse, "unknown task mode '" + mode + "'");
}

void to_json(json& j, const DelayModel& d) {
  j = json{{"mean_ms", d.mean_ms}, {"std_ms", d.std_ms},
           {"scope", d.worker_id ? "per-worker" : "global"}};
  put_opt(j, "worker_id", d.worker_id);
}

void from_json(const json& j, DelayModel& d) {
  d.mean_ms = j.at("mean_ms").get<double>();
  d.std_ms = j.at("std_ms").get<double>();
  get_opt(j, "worker_id", d.worker_id);
}

void to_json(json& j, const StreamSlot& s) {
  j = json{{"item_id", s.item_id}, {"onset_ms", s.onset_ms}, {"is_gold", s.is_gold}};
}

void from_json(const json& j, StreamSlot& s) {
  s.item_id = j.at("item_id").get<std::string>();
  s.onset_ms = j.at("onset_ms").get<double>();
  s.is_gold = j.value("is_gold", false);
}

void to_json(json& j, const StreamSchedule& s) {
  j = json{{"schedule_id", s.schedule_id},
           {"chunk", s.chunk},
           {"replica", s.replica},
           {"display_interval_ms", s.display_interval_ms},
           {"countdown_frames", s.countdown_frames},
           {"rng_seed_used", s.rng_seed_used},
           {"slots", s.slots}};
}

void from_json(const json& j, StreamSchedule& s) {
  s.schedule_id = j.value("schedule_id", std::string{});
  s.chunk = j.value("chunk", 0);
  s.replica = j.value("replica", 0);
  s.display_interval_ms = j.at("display_interval_ms").get<int>();
  s.countdown_frames = j.value("countdown_frames", 0);
  s.rng_seed_used = j.value("rng_seed_used", std::uint64_t{0});
  s.slots = j.at("slots").get<std::vector<StreamSlot>>();
}

void to_json(json& j, const KeypressEvent& e) {
  j = json{{"t_ms", e.t_ms},
           {"source", e.source == EventSource::kHuman ? "human" : "simulated"}};
}

void from_json(const json& j, KeypressEvent& e) {
  e.t_ms = j.at("t_ms").get<double>();
  e.source = source_from_string(j.value("source", std::string{"human"}));
}

void to_json(json& j, const WorkerSession& s) {
  j = json{{"session_id", s.session_id}, {"worker_id", s.worker_id},
           {"task_id", s.task_id},       {"status", to_string(s.status)},
           {"stream", s.stream},         {"events", s.events}};
  if (!s.actual_onsets_ms.empty()) j["actual_onsets_ms"] = s.actual_onsets_ms;
}

void from_json(const json& j, WorkerSession& s) {
  s.session_id = j.at("session_id").get<std::string>();
  s.worker_id = j.value("worker_id", std::string{});
  s.task_id = j.value("task_id", std::string{});
  s.status = status_from_string(j.value("status", std::string{"pending"}));
  s.stream = j.at("stream").get<StreamSchedule>();
  s.events = j.value("events", std::vector<KeypressEvent>{});
  s.actual_onsets_ms = j.value("actual_onsets_ms", std::vector<double>{});
}

void to_json(json& j, const LabelEstimate& e) {
  j = json{{"item_id", e.item_id}, {"score", e.score}, {"posterior", e.posterior},
           {"prior", e.prior}, {"decision", to_string(e.decision)}};
}

void from_json(const json& j, LabelEstimate& e) {
  e.item_id = j.at("item_id").get<std::string>();
  e.score = j.at("score").get<double>();
  e.posterior = j.at("posterior").get<double>();
  e.prior = j.value("prior", 0.0);
  e.decision = decision_from_string(j.value("decision", std::string{"undecided"}));
}

void to_json(json& j, const ThresholdTuning& t) {
  j = json{{"threshold", t.threshold},           {"attainable", t.attainable},
           {"separable", t.separable},           {"gold_precision", t.gold_precision},
           {"gold_recall", t.gold_recall},       {"gold_positives", t.gold_positives},
           {"gold_negatives", t.gold_negatives}};
}

void from_json(const json& j, ThresholdTuning& t) {
  t.threshold = j.at("threshold").get<double>();
  t.attainable = j.at("attainable").get<bool>();
  t.separable = j.at("separable").get<bool>();
  t.gold_precision = j.at("gold_precision").get<double>();
  t.gold_recall = j.at("gold_recall").get<double>();
  t.gold_positives = j.at("gold_positives").get<std::size_t>();
  t.gold_negatives = j.at("gold_negatives").get<std::size_t>();
}

void to_json(json& j, const WorkerDiagnostics& d) {
  j = json{{"session_id", d.session_id},     {"worker_id", d.worker_id},
           {"keypresses", d.keypresses},     {"unattributed", d.unattributed},
           {"gold_hits", d.gold_hits},       {"gold_positives", d.gold_positives}};
}

void from_json(const json& j, WorkerDiagnostics& d) {
  d.session_id = j.at("session_id").get<std::string>();
  d.worker_id = j.at("worker_id").get<std::string>();
  d.keypresses = j.at("keypresses").get<std::size_t>();
  d.unattributed = j.at("unattributed").get<std::size_t>();
  d.gold_hits = j.at("gold_hits").get<std::size_t>();
  d.gold_positives = j.at("gold_positives").get<std::size_t>();
}

void to_json(json& j, const DecodeResult& r) {
  j = json{{"schema_version", kSchemaVersion},
           {"threshold_used", r.threshold_used},
           {"delay_model_used", r.delay_model_used},
           {"lookback_ms", r.lookback_ms},
           {"estimates", r.estimates},
           {"diagnostics", r.diagnostics},
           {"flags", r.flags}};
  json workers = json::object();
  for (const auto& [w, m] : r.worker_models) workers[w] = m;
  j["worker_models"] = workers;
  if (r.tuning) j["tuning"] = *r.tuning;
}

void from_json(const json& j, DecodeResult& r) {
  r.threshold_used = j.at("threshold_used").get<double>();
  r.delay_model_used = j.at("delay_model_used").get<DelayModel>();
  r.lookback_ms = j.at("lookback_ms").get<double>();
  r.estimates = j.at("estimates").get<std::vector<LabelEstimate>>();
  r.diagnostics = j.value("diagnostics", std::vector<WorkerDiagnostics>{});
  r.flags = j.value("flags", std::vector<std::string>{});
  r.worker_models.clear();
  if (j.contains("worker_models")) {
    for (const auto& [w, m] : j.at("worker_models").items()) {
      r.worker_models[w] = m.get<DelayModel>();
    }
  }
  get_opt(j, "tuning", r.tuning);
}

void to_json(json& j, const QualificationResult& q) {
  j = json{{"recall", q.recall},
           {"precision", q.precision},
           {"passed", q.passed},
           {"gold_positives", q.gold_positives},
           {"hits", q.hits},
           {"keypresses", q.keypresses},
           {"keypresses_in_window", q.keypresses_in_window},
           {"reason", q.reason},
           {"missed_slots", q.missed_slots}};
}

void to_json(json& j, const WorkerProfile& p) {
  j = json{{"delay_mean_ms", p.delay_mean_ms},
           {"delay_std_ms", p.delay_std_ms},
           {"base_detect", p.base_detect},
           {"false_alarm_rate", p.false_alarm_rate},
           {"refractory_ms", p.refractory_ms}};
}

void from_json(const json& j, WorkerProfile& p) {
  p = WorkerProfile{};
  get_or(j, "delay_mean_ms", p.delay_mean_ms);
  get_or(j, "delay_std_ms", p.delay_std_ms);
  get_or(j, "base_detect", p.base_detect);
  get_or(j, "false_alarm_rate", p.false_alarm_rate);
  get_or(j, "refractory_ms", p.refractory_ms);
}

void to_json(json& j, const CountdownFrame& f) {
  j = json{{"label", f.label}, {"onset_ms", f.onset_ms}};
}

void to_json(json& j, const CascadeResult& r) {
  j = json{{"mode", to_string(r.mode)},
           {"order", r.order},
           {"assignments", r.assignments},
           {"unclassified", r.unclassified},
           {"total_displays", r.total_displays}};
  json passes = json::array();
  for (const auto& p : r.passes) {
    passes.push_back({{"class_id", p.class_id},
                      {"pool_size", p.pool_size},
                      {"positives", p.positives},
                      {"displays", p.displays}});
  }
  j["passes"] = passes;
  if (r.error) j["error"] = *r.error;
}

void to_json(json& j, const ValidationReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"code", x.code}, {"message", x.message}});
  j = json{{"valid", r.valid()}, {"violations", v}};
  if (std::isfinite(r.expected_positive_spacing_ms)) {
    j["expected_positive_spacing_ms"] = r.expected_positive_spacing_ms;
  }
}

TaskFile parse_task_file(std::istream& in) {
  TaskFile task;
  bool have_config = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "task file line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto kind = rec.value("record", std::string{});
    parse_guarded([&] {
      if (kind == "config") {
        if (have_config) throw Error(ErrorCode::kParse, "duplicate config record");
        task.config = rec.get<TaskConfig>();
        get_opt(rec, "task_id", task.task_id);
        have_config = true;
      } else if (kind == "item") {
        task.items.push_back(rec.get<Item>());
      } else {
        throw Error(ErrorCode::kParse, "task file line " + std::to_string(lineno) +
                                           ": unknown record '" + kind + "'");
      }
      return 0;
    });
  }
  if (!have_config) throw Error(ErrorCode::kParse, "task file has no config record");
  return task;
}

void write_task_file(std::ostream& out, const TaskFile& task) {
  json cfg = task.config;
  cfg["record"] = "config";
  cfg["schema_version"] = kSchemaVersion;
  if (task.task_id) cfg["task_id"] = *task.task_id;
  out << cfg.dump() << '\n';
  for (const auto& item : task.items) {
    json rec = item;
    rec["record"] = "item";
    out << rec.dump() << '\n';
  }
}

TaskFile read_task_file(const std::string& path) {
  auto in = open_in(path);
  return parse_task_file(in);
}

void write_task_file(const std::string& path, const TaskFile& task) {
  auto out = open_out(path);
  write_task_file(out, task);
}

std::vector<WorkerSession> parse_sessions_file(std::istream& in) {
  std::vector<WorkerSession> sessions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    sessions.push_back(parse_guarded([&] {
      json rec = json::parse(line);
      if (rec.value("record", std::string{"session"}) != "session") {
        throw Error(ErrorCode::kParse,
                    "sessions file line " + std::to_string(lineno) + ": not a session record");
      }
      return rec.get<WorkerSession>();
    }));
  }
  return sessions;
}

void write_sessions_file(std::ostream& out, const std::vector<WorkerSession>& sessions) {
  for (const auto& s : sessions) {
    json rec = s;
    rec["record"] = "session";
    rec["schema_version"] = kSchemaVersion;
    out << rec.dump() << '\n';
  }
}

std::vector<WorkerSession> read_sessions_file(const std::string& path) {
  auto in = open_in(path);
  return parse_sessions_file(in);
}

void write_sessions_file(const std::string& path, const std::vector<WorkerSession>& sessions) {
  auto out = open_out(path);
  write_sessions_file(out, sessions);
}

void write_schedules_file(std::ostream& out, const std::vector<StreamSchedule>& schedules) {
  for (const auto& s : schedules) {
    json rec = s;
    rec["record"] = "schedule";
    rec["schema_version"] = kSchemaVersion;
    TaskConfig cfg;
    cfg.display_interval_ms = s.display_interval_ms;
    rec["countdown"] = countdown_plan(cfg);
    out << rec.dump() << '\n';
  }
}

}  // namespace rapidcs

#include "rapidcs/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rapidcs/rng.hpp"
#include "rapidcs/scheduler.hpp"

namespace fs = std::filesystem;

namespace rapidcs {

const char* to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::kDraft: return "draft";
    case TaskStatus::kCollecting: return "collecting";
    case TaskStatus::kDecoding: return "decoding";
    case TaskStatus::kComplete: return "complete";
  }
  return "draft";
}

json to_json_value(const EventLogEntry& e) {
  return json{{"seq", e.sequence}, {"ts", e.timestamp_ms}, {"kind", e.kind},
              {"payload", e.payload}};
}

EventLogEntry entry_from_json(const json& j) {
  EventLogEntry e;
  e.sequence = j.at("seq").get<std::uint64_t>();
  e.timestamp_ms = j.at("ts").get<double>();
  e.kind = j.at("kind").get<std::string>();
  e.payload = j.at("payload");
  return e;
}

EventLog::EventLog(std::string path) : path_(std::move(path)) {}

void EventLog::append(const EventLogEntry& entry) {
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot append to '" + path_ + "'");
  out << to_json_value(entry).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path_ + "' failed");
}

std::vector<EventLogEntry> EventLog::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::vector<std::string> lines;
  std::istringstream ss(text);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  // Every complete entry ends with a newline; a missing one marks a torn write.
  const bool torn_tail = !text.empty() && text.back() != '\n';

  std::vector<EventLogEntry> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.push_back(entry_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size() && torn_tail) break;
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].sequence != i + 1) {
      throw Error(ErrorCode::kParse, path + ": sequence gap at entry " + std::to_string(i + 1));
    }
  }
  return out;
}

struct SessionRecord {
  WorkerSession session;
  std::size_t replica = 0;
  std::string submission_id;
  SubmitOutcome outcome;
  bool submitted = false;
};

struct Service::TaskState {
  std::string task_id;
  std::vector<Item> items;
  TaskConfig config;
  TaskStatus status = TaskStatus::kDraft;
  double created_at = 0.0;
  std::vector<StreamSchedule> schedules;
  std::vector<char> served;
  std::map<std::string, SessionRecord> sessions;
  std::optional<DecodeResult> result;
  std::vector<EventLogEntry> entries;
  EventLog log;
  mutable std::mutex mu;
};

namespace {

constexpr const char* kInstructions =
    "Items will flash by quickly, one at a time. Press the spacebar whenever you "
    "see an item that matches the target. Reacting to every match on time is not "
    "possible and not expected: we expect you to make mistakes, and a late press "
    "is fine. A few items are known matches that we use to calibrate your "
    "reaction speed. When you press, the last four items are shown so you can "
    "see what was on screen.";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double stream_lookback(const TaskConfig& config) {
  return config.effective_lookback_ms(DelayModel{});
}

json outcome_json(const SubmitOutcome& o) {
  json j{{"accepted", o.accepted}, {"status", to_string(o.status)}, {"reason", o.reason}};
  if (o.qualification) j["qualification"] = *o.qualification;
  return j;
}

QualificationResult qualification_from_json(const json& j) {
  QualificationResult q;
  q.recall = j.at("recall").get<double>();
  q.precision = j.at("precision").get<double>();
  q.passed = j.at("passed").get<bool>();
  q.gold_positives = j.at("gold_positives").get<std::size_t>();
  q.hits = j.at("hits").get<std::size_t>();
  q.keypresses = j.at("keypresses").get<std::size_t>();
  q.keypresses_in_window = j.at("keypresses_in_window").get<std::size_t>();
  q.reason = j.at("reason").get<std::string>();
  q.missed_slots = j.at("missed_slots").get<std::vector<std::size_t>>();
  return q;
}

SubmitOutcome outcome_from_json(const json& j) {
  SubmitOutcome o;
  o.accepted = j.at("accepted").get<bool>();
  const auto s = j.at("status").get<std::string>();
  o.status = s == "submitted" ? SessionStatus::kSubmitted
             : s == "rejected" ? SessionStatus::kRejected
                               : SessionStatus::kPending;
  o.reason = j.value("reason", std::string{});
  if (j.contains("qualification")) o.qualification = qualification_from_json(j.at("qualification"));
  return o;
}

void check_events(const SubmitRequest& r, const WorkerSession& s, double lookback) {
  auto malformed = [](const std::string& what) {
    throw Error(ErrorCode::kMalformedEvents, "malformed events: " + what);
  };
  if (r.schema_version != kSchemaVersion) malformed("unsupported schema_version");
  const double limit = s.stream.end_ms() + lookback;
  double prev = 0.0;
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    const double t = r.events[k].t_ms;
    if (!std::isfinite(t) || t < 0.0) malformed("timestamp " + std::to_string(k) + " is negative or not finite");
    if (k > 0 && t < prev) malformed("timestamps out of order at " + std::to_string(k));
    if (t > limit) malformed("timestamp " + std::to_string(k) + " after stream end + lookback");
    prev = t;
  }
  if (!r.client_onsets_ms.empty()) {
    if (r.client_onsets_ms.size() != s.stream.slots.size()) {
      malformed("client onsets must have one entry per slot");
    }
    for (std::size_t j = 0; j < r.client_onsets_ms.size(); ++j) {
      const double t = r.client_onsets_ms[j];
      if (!std::isfinite(t) || t < 0.0 || (j > 0 && t < r.client_onsets_ms[j - 1])) {
        malformed("client onsets must be finite, non-negative and ascending");
      }
    }
  }
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.data_dir.empty()) {
    fs::create_directories(fs::path(options_.data_dir) / "tasks");
    recover();
  }
}

Service::~Service() = default;

double Service::now() const {
  if (options_.clock) return options_.clock();
  using namespace std::chrono;
  return static_cast<double>(
      duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

Service::TaskState& Service::task(const std::string& task_id) const {
  std::shared_lock lock(registry_mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(ErrorCode::kNotFound, "unknown task '" + task_id + "'");
  return *it->second;
}

Service::TaskState& Service::task_of_session(const std::string& session_id) const {
  const auto pos = session_id.rfind("-s");
  if (pos == std::string::npos) {
    throw Error(ErrorCode::kNotFound, "unknown session '" + session_id + "'");
  }
  try {
    return task(session_id.substr(0, pos));
  } catch (const Error&) {
    throw Error(ErrorCode::kNotFound, "unknown session '" + session_id + "'");
  }
}

void Service::append_and_apply(TaskState& t, std::string kind, json payload) {
  EventLogEntry e;
  e.sequence = t.entries.size() + 1;
  e.timestamp_ms = now();
  e.kind = std::move(kind);
  e.payload = std::move(payload);
  t.log.append(e);
  apply(t, e);
  ++appended_;
}

void Service::apply(TaskState& t, const EventLogEntry& e) {
  const json& p = e.payload;
  if (e.kind == "task-created") {
    t.task_id = p.at("task_id").get<std::string>();
    t.items = p.at("items").get<std::vector<Item>>();
    t.config = p.at("config").get<TaskConfig>();
    t.created_at = e.timestamp_ms;
    t.status = TaskStatus::kDraft;
    t.schedules = build_streams(t.items, t.config);
    t.served.assign(t.schedules.size(), 0);
  } else if (e.kind == "session-opened") {
    SessionRecord rec;
    rec.replica = p.at("replica").get<std::size_t>();
    rec.session.session_id = p.at("session_id").get<std::string>();
    rec.session.worker_id = p.at("worker_id").get<std::string>();
    rec.session.task_id = t.task_id;
    rec.session.stream = t.schedules.at(rec.replica);
    rec.session.status = SessionStatus::kPending;
    if (t.config.mode == TaskMode::kStandard) t.served.at(rec.replica) = 1;
    t.sessions.emplace(rec.session.session_id, std::move(rec));
    if (t.status == TaskStatus::kDraft) t.status = TaskStatus::kCollecting;
  } else if (e.kind == "events-submitted" || e.kind == "session-rejected") {
    auto& rec = t.sessions.at(p.at("session_id").get<std::string>());
    rec.submission_id = p.at("submission_id").get<std::string>();
    rec.session.events = p.at("events").get<std::vector<KeypressEvent>>();
    rec.session.actual_onsets_ms = p.at("client_onsets_ms").get<std::vector<double>>();
    rec.outcome = outcome_from_json(p.at("outcome"));
    rec.session.status = rec.outcome.status;
    rec.submitted = true;
    if (e.kind == "session-rejected" && t.config.mode == TaskMode::kStandard) {
      t.served.at(rec.replica) = 0;  // re-queue the replica
    }
    if (rec.outcome.qualification && rec.outcome.qualification->passed) {
      std::lock_guard lock(qualified_mu_);
      qualified_.insert(rec.session.worker_id);
    }
  } else if (e.kind == "decode-completed") {
    t.result = p.at("result").get<DecodeResult>();
    t.status = TaskStatus::kComplete;
  } else {
    throw Error(ErrorCode::kParse, "unknown log entry kind '" + e.kind + "'");
  }
  t.entries.push_back(e);
}

void Service::recover() {
  const fs::path dir = fs::path(options_.data_dir) / "tasks";
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 10 && name.ends_with(".log.jsonl")) logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) {
    auto entries = EventLog::read(path.string());
    if (entries.empty()) continue;
    auto t = std::make_unique<TaskState>();
    t->log = EventLog(path.string());
    for (const auto& e : entries) apply(*t, e);
    if (t->config.mode == TaskMode::kQualification) qualification_tasks_.push_back(t->task_id);
    const auto id = t->task_id;
    tasks_.emplace(id, std::move(t));
  }
  sort_qualification_tasks();
}

// Creation order, ties by id, so a replayed service lists them identically.
void Service::sort_qualification_tasks() {
  std::sort(qualification_tasks_.begin(), qualification_tasks_.end(),
            [this](const std::string& a, const std::string& b) {
              const double ta = tasks_.at(a)->created_at, tb = tasks_.at(b)->created_at;
              return ta != tb ? ta < tb : a < b;
            });
}

std::string Service::create_task(std::vector<Item> items, TaskConfig config) {
  ValidationReport report = validate_task(items, config);
  if (!report.valid()) {
    std::string msg = "validation failed:";
    for (const auto& v : report.violations) msg += " [" + v.code + "] " + v.message + ";";
    throw Error(ErrorCode::kValidationFailed, msg);
  }
  json payload{{"items", items}, {"config", config}};
  const std::string id = "t" + hex64(fnv1a64(payload.dump()));
  payload["task_id"] = id;

  std::unique_lock lock(registry_mu_);
  if (tasks_.contains(id)) return id;
  auto t = std::make_unique<TaskState>();
  if (!options_.data_dir.empty()) {
    t->log = EventLog((fs::path(options_.data_dir) / "tasks" / (id + ".log.jsonl")).string());
  }
  {
    std::lock_guard task_lock(t->mu);
    append_and_apply(*t, "task-created", std::move(payload));
  }
  const bool qualification = t->config.mode == TaskMode::kQualification;
  tasks_.emplace(id, std::move(t));
  if (qualification) {
    qualification_tasks_.push_back(id);
    sort_qualification_tasks();
  }
  lock.unlock();
  maybe_snapshot();
  return id;
}

OpenedSession Service::open_session(const std::string& task_id, const WorkerId& worker_id) {
  if (worker_id.empty()) throw Error(ErrorCode::kInvalidArgument, "worker_id required");
  TaskState& t = task(task_id);
  OpenedSession opened;
  {
    std::lock_guard lock(t.mu);
    const bool qualification = t.config.mode == TaskMode::kQualification;
    if (!qualification && options_.require_qualification && !is_qualified(worker_id)) {
      throw Error(ErrorCode::kQualificationRequired, "qualification required");
    }
    if (t.status == TaskStatus::kComplete || t.status == TaskStatus::kDecoding) {
      throw Error(ErrorCode::kConflict, "task is no longer collecting");
    }

    std::size_t replica = 0;
    if (qualification) {
      replica = t.sessions.size() % t.schedules.size();
    } else {
      std::set<int> worker_chunks;
      for (const auto& [sid, rec] : t.sessions) {
        if (rec.session.worker_id == worker_id) worker_chunks.insert(rec.session.stream.chunk);
      }
      bool found = false;
      bool chunk_blocked = false;
      for (std::size_t k = 0; k < t.schedules.size(); ++k) {
        if (t.served[k]) continue;
        if (worker_chunks.contains(t.schedules[k].chunk)) {
          chunk_blocked = true;
          continue;
        }
        replica = k;
        found = true;
        break;
      }
      if (!found) {
        throw Error(chunk_blocked ? ErrorCode::kConflict : ErrorCode::kFullyAssigned,
                    chunk_blocked ? "no replica left that this worker has not seen"
                                  : "task fully assigned");
      }
    }
    opened.session_id = t.task_id + "-s" + std::to_string(t.sessions.size());
    append_and_apply(t, "session-opened",
                     json{{"session_id", opened.session_id},
                          {"worker_id", worker_id},
                          {"replica", replica}});
    opened.manifest = manifest_of(t, opened.session_id);
  }
  maybe_snapshot();
  return opened;
}

json Service::manifest_of(const TaskState& t, const std::string& session_id) const {
  auto it = t.sessions.find(session_id);
  if (it == t.sessions.end()) throw Error(ErrorCode::kNotFound, "unknown session '" + session_id + "'");
  const auto& s = it->second.session;
  std::map<ItemId, const Item*> by_id;
  for (const auto& item : t.items) by_id[item.item_id] = &item;

  json slots = json::array();
  for (std::size_t j = 0; j < s.stream.slots.size(); ++j) {
    const auto& slot = s.stream.slots[j];
    slots.push_back({{"index", j},
                     {"onset_ms", slot.onset_ms},
                     {"payload", by_id.at(slot.item_id)->payload}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"session_id", session_id},
              {"task_id", t.task_id},
              {"worker_id", s.worker_id},
              {"qualification", t.config.mode == TaskMode::kQualification},
              {"display_interval_ms", t.config.display_interval_ms},
              {"countdown", countdown_plan(t.config)},
              {"slots", slots},
              {"stream_end_ms", s.stream.end_ms()},
              {"lookback_ms", stream_lookback(t.config)},
              {"feedback_strip", 4},
              {"key", "space"},
              {"instructions", kInstructions}};
}

json Service::manifest(const std::string& session_id) const {
  TaskState& t = task_of_session(session_id);
  std::lock_guard lock(t.mu);
  return manifest_of(t, session_id);
}

SubmitOutcome Service::submit_events(const SubmitRequest& r) {
  if (r.submission_id.empty()) {
    throw Error(ErrorCode::kMalformedEvents, "submission_id required");
  }
  TaskState& t = task_of_session(r.session_id);
  SubmitOutcome outcome;
  {
    std::lock_guard lock(t.mu);
    auto it = t.sessions.find(r.session_id);
    if (it == t.sessions.end()) throw Error(ErrorCode::kNotFound, "unknown session '" + r.session_id + "'");
    SessionRecord& rec = it->second;
    if (rec.submitted) {
      if (rec.submission_id == r.submission_id) return rec.outcome;
      throw Error(ErrorCode::kDuplicateSubmission, "duplicate submission");
    }
    const double lookback = stream_lookback(t.config);
    check_events(r, rec.session, lookback);

    WorkerSession candidate = rec.session;
    candidate.events = r.events;
    candidate.actual_onsets_ms = r.client_onsets_ms;
    const TruthMap gold = gold_labels(t.items);

    std::string kind = "events-submitted";
    if (t.config.mode == TaskMode::kQualification) {
      outcome.qualification = qualify(candidate, gold);
      outcome.accepted = true;
      outcome.status = SessionStatus::kSubmitted;
      outcome.reason = outcome.qualification->passed ? "qualified" : outcome.qualification->reason;
    } else {
      bool has_gold_positive = false;
      bool reacted = false;
      for (std::size_t j = 0; j < candidate.stream.slots.size(); ++j) {
        auto g = gold.find(candidate.stream.slots[j].item_id);
        if (g == gold.end() || !g->second) continue;
        has_gold_positive = true;
        const double onset = candidate.onset_ms(j);
        for (const auto& e : candidate.events) {
          if (e.t_ms >= onset && e.t_ms - onset <= lookback) reacted = true;
        }
      }
      if (has_gold_positive && !reacted) {
        kind = "session-rejected";
        outcome.accepted = false;
        outcome.status = SessionStatus::kRejected;
        outcome.reason = "no reactions to gold items";
      } else {
        outcome.accepted = true;
        outcome.status = SessionStatus::kSubmitted;
      }
    }
    append_and_apply(t, kind,
                     json{{"session_id", r.session_id},
                          {"submission_id", r.submission_id},
                          {"events", r.events},
                          {"client_onsets_ms", r.client_onsets_ms},
                          {"outcome", outcome_json(outcome)}});
  }
  maybe_snapshot();
  return outcome;
}

DecodeResult Service::decode_task(const std::string& task_id, const DecodeRequest& request) {
  TaskState& t = task(task_id);
  DecodeResult result;
  {
    std::lock_guard lock(t.mu);
    if (t.config.mode == TaskMode::kQualification) {
      throw Error(ErrorCode::kConflict, "qualification tasks are not decoded");
    }
    if (t.result) return *t.result;

    std::vector<WorkerSession> sessions;
    std::set<std::size_t> covered;
    for (const auto& [sid, rec] : t.sessions) {
      if (rec.session.status != SessionStatus::kSubmitted) continue;
      sessions.push_back(rec.session);
      covered.insert(rec.replica);
    }
    const bool complete = covered.size() == t.schedules.size();
    if (sessions.empty()) {
      throw Error(ErrorCode::kInsufficientSessions, "no submitted sessions");
    }
    if (!complete && !request.force) {
      throw Error(ErrorCode::kInsufficientSessions,
                  std::to_string(covered.size()) + " of " + std::to_string(t.schedules.size()) +
                      " replicas submitted; pass force to decode anyway");
    }
    const TaskStatus previous = t.status;
    t.status = TaskStatus::kDecoding;
    try {
      result = decode(t.items, t.config, sessions, request.options);
    } catch (...) {
      t.status = previous;
      throw;
    }
    if (!complete) result.flags.push_back("reduced redundancy");
    append_and_apply(t, "decode-completed",
                     json{{"result", result},
                          {"forced", request.force},
                          {"sessions_used", sessions.size()}});
    result = *t.result;
  }
  maybe_snapshot();
  return result;
}

std::optional<DecodeResult> Service::results(const std::string& task_id) const {
  TaskState& t = task(task_id);
  std::lock_guard lock(t.mu);
  return t.result;
}

OpenedSession Service::start_qualification(const WorkerId& worker_id,
                                           const std::string& task_id) {
  std::string id = task_id;
  if (id.empty()) {
    std::shared_lock lock(registry_mu_);
    if (qualification_tasks_.empty()) {
      throw Error(ErrorCode::kNotFound, "no qualification task configured");
    }
    id = qualification_tasks_.back();
  }
  {
    TaskState& t = task(id);
    std::lock_guard lock(t.mu);
    if (t.config.mode != TaskMode::kQualification) {
      throw Error(ErrorCode::kInvalidArgument, "task '" + id + "' is not a qualification task");
    }
  }
  return open_session(id, worker_id);
}

bool Service::is_qualified(const WorkerId& worker_id) const {
  std::lock_guard lock(qualified_mu_);
  return qualified_.contains(worker_id);
}

TaskStatus Service::status(const std::string& task_id) const {
  TaskState& t = task(task_id);
  std::lock_guard lock(t.mu);
  return t.status;
}

std::vector<EventLogEntry> Service::log(const std::string& task_id) const {
  TaskState& t = task(task_id);
  std::lock_guard lock(t.mu);
  return t.entries;
}

std::vector<std::string> Service::task_ids() const {
  std::shared_lock lock(registry_mu_);
  std::vector<std::string> ids;
  for (const auto& [id, t] : tasks_) ids.push_back(id);
  return ids;
}

std::string Service::snapshot() const {
  json tasks = json::array();
  std::shared_lock lock(registry_mu_);
  for (const auto& [id, tp] : tasks_) {
    const TaskState& t = *tp;
    std::lock_guard task_lock(t.mu);
    json sessions = json::array();
    for (const auto& [sid, rec] : t.sessions) {
      sessions.push_back({{"session", rec.session},
                          {"replica", rec.replica},
                          {"submission_id", rec.submission_id},
                          {"submitted", rec.submitted},
                          {"outcome", outcome_json(rec.outcome)}});
    }
    json served = json::array();
    for (char s : t.served) served.push_back(s != 0);
    json jt{{"task_id", t.task_id},
            {"status", to_string(t.status)},
            {"created_at", t.created_at},
            {"config", t.config},
            {"items", t.items},
            {"served", served},
            {"sessions", sessions},
            {"last_sequence", t.entries.size()}};
    if (t.result) jt["result"] = *t.result;
    tasks.push_back(std::move(jt));
  }
  json qualified = json::array();
  {
    std::lock_guard q(qualified_mu_);
    for (const auto& w : qualified_) qualified.push_back(w);
  }
  return json{{"schema_version", kSchemaVersion},
              {"tasks", tasks},
              {"qualification_tasks", qualification_tasks_},
              {"qualified_workers", qualified}}
      .dump();
}

void Service::maybe_snapshot() {
  if (options_.data_dir.empty() || options_.snapshot_every == 0) return;
  if (appended_.load() % options_.snapshot_every != 0) return;
  const fs::path dir(options_.data_dir);
  const fs::path tmp = dir / "snapshot.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) return;
    out << snapshot();
  }
  std::error_code ec;
  fs::rename(tmp, dir / "snapshot.json", ec);
}

}  // namespace rapidcs

#pragma once

// Task-hosting backend. Every state change is first written to an
// append-only, line-delimited log per task and then applied to memory by the
// same routine that replays the log on startup, so a restarted service
// reaches exactly the state it had before.

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "rapidcs/core.hpp"
#include "rapidcs/decoder.hpp"
#include "rapidcs/json_io.hpp"

namespace rapidcs {

enum class TaskStatus { kDraft, kCollecting, kDecoding, kComplete };

const char* to_string(TaskStatus s);

struct EventLogEntry {
  std::uint64_t sequence = 0;
  double timestamp_ms = 0.0;
  std::string kind;
  json payload;
};

json to_json_value(const EventLogEntry& e);
EventLogEntry entry_from_json(const json& j);

// Append-only line-delimited log file. In-memory when path is empty.
class EventLog {
 public:
  explicit EventLog(std::string path = {});

  void append(const EventLogEntry& entry);
  const std::string& path() const { return path_; }

  // Entries from a log file. A torn trailing line (crash mid-write) is
  // ignored; corruption anywhere else throws Error(kParse).
  static std::vector<EventLogEntry> read(const std::string& path);

 private:
  std::string path_;
};

struct ServiceOptions {
  // Directory for logs and snapshots; empty keeps everything in memory.
  std::string data_dir;
  bool require_qualification = true;
  // Write a full-state snapshot after every this many log entries (0: never).
  std::size_t snapshot_every = 64;
  // Milliseconds; defaults to the system clock.
  std::function<double()> clock;
};

struct OpenedSession {
  std::string session_id;
  json manifest;
};

struct SubmitRequest {
  std::string session_id;
  // Idempotency key; resubmitting the same key returns the stored outcome.
  std::string submission_id;
  int schema_version = kSchemaVersion;
  std::vector<KeypressEvent> events;
  // Measured display onsets, one per slot (optional).
  std::vector<double> client_onsets_ms;
};

struct SubmitOutcome {
  bool accepted = false;
  SessionStatus status = SessionStatus::kPending;
  std::string reason;
  std::optional<QualificationResult> qualification;
};

struct DecodeRequest {
  DecodeOptions options;
  bool force = false;
};

class Service {
 public:
  // Replays any logs found in options.data_dir.
  explicit Service(ServiceOptions options = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Idempotent: an identical payload returns the existing task id.
  // Throws Error(kValidationFailed) with the violation list in the message.
  std::string create_task(std::vector<Item> items, TaskConfig config);

  OpenedSession open_session(const std::string& task_id, const WorkerId& worker_id);
  json manifest(const std::string& session_id) const;
  SubmitOutcome submit_events(const SubmitRequest& request);
  DecodeResult decode_task(const std::string& task_id, const DecodeRequest& request = {});
  std::optional<DecodeResult> results(const std::string& task_id) const;

  // Opens a session on a qualification task (the most recently created one
  // when task_id is empty).
  OpenedSession start_qualification(const WorkerId& worker_id,
                                    const std::string& task_id = {});
  bool is_qualified(const WorkerId& worker_id) const;

  TaskStatus status(const std::string& task_id) const;
  std::vector<EventLogEntry> log(const std::string& task_id) const;
  std::vector<std::string> task_ids() const;

  // Canonical serialization of the full state; equal states give
  // byte-identical strings.
  std::string snapshot() const;

 private:
  struct TaskState;

  TaskState& task(const std::string& task_id) const;
  TaskState& task_of_session(const std::string& session_id) const;
  void append_and_apply(TaskState& t, std::string kind, json payload);
  void apply(TaskState& t, const EventLogEntry& entry);
  void maybe_snapshot();
  void recover();
  void sort_qualification_tasks();
  json manifest_of(const TaskState& t, const std::string& session_id) const;
  double now() const;

  ServiceOptions options_;
  mutable std::shared_mutex registry_mu_;
  std::map<std::string, std::unique_ptr<TaskState>> tasks_;
  std::vector<std::string> qualification_tasks_;
  mutable std::mutex qualified_mu_;
  std::set<WorkerId> qualified_;
  std::atomic<std::size_t> appended_{0};
};

}  // namespace rapidcs

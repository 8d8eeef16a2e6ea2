#pragma once

// JSON encodings and the line-delimited file formats (task, sessions,
// schedules) plus the decode results document. See docs/file_formats.md.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rapidcs/cascade.hpp"
#include "rapidcs/core.hpp"
#include "rapidcs/decoder.hpp"
#include "rapidcs/scheduler.hpp"
#include "rapidcs/simulator.hpp"

namespace rapidcs {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

void to_json(json& j, const PayloadRef& p);
void from_json(const json& j, PayloadRef& p);
void to_json(json& j, const Item& item);
void from_json(const json& j, Item& item);
void to_json(json& j, const ThresholdSpec& t);
void from_json(const json& j, ThresholdSpec& t);
void to_json(json& j, const TaskConfig& c);
void from_json(const json& j, TaskConfig& c);
void to_json(json& j, const DelayModel& d);
void from_json(const json& j, DelayModel& d);
void to_json(json& j, const StreamSlot& s);
void from_json(const json& j, StreamSlot& s);
void to_json(json& j, const StreamSchedule& s);
void from_json(const json& j, StreamSchedule& s);
void to_json(json& j, const KeypressEvent& e);
void from_json(const json& j, KeypressEvent& e);
void to_json(json& j, const WorkerSession& s);
void from_json(const json& j, WorkerSession& s);
void to_json(json& j, const LabelEstimate& e);
void from_json(const json& j, LabelEstimate& e);
void to_json(json& j, const ThresholdTuning& t);
void from_json(const json& j, ThresholdTuning& t);
void to_json(json& j, const WorkerDiagnostics& d);
void from_json(const json& j, WorkerDiagnostics& d);
void to_json(json& j, const DecodeResult& r);
void from_json(const json& j, DecodeResult& r);
void to_json(json& j, const QualificationResult& q);
void to_json(json& j, const WorkerProfile& p);
void from_json(const json& j, WorkerProfile& p);
void to_json(json& j, const CountdownFrame& f);
void to_json(json& j, const CascadeResult& r);
void to_json(json& j, const ValidationReport& r);

struct TaskFile {
  std::optional<std::string> task_id;
  TaskConfig config;
  std::vector<Item> items;

  bool operator==(const TaskFile&) const = default;
};

// Line-delimited records: one {"record":"config",...} line and one
// {"record":"item",...} line per item. Blank lines are skipped.
TaskFile parse_task_file(std::istream& in);
void write_task_file(std::ostream& out, const TaskFile& task);
TaskFile read_task_file(const std::string& path);
void write_task_file(const std::string& path, const TaskFile& task);

// One {"record":"session",...} per line.
std::vector<WorkerSession> parse_sessions_file(std::istream& in);
void write_sessions_file(std::ostream& out, const std::vector<WorkerSession>& sessions);
std::vector<WorkerSession> read_sessions_file(const std::string& path);
void write_sessions_file(const std::string& path, const std::vector<WorkerSession>& sessions);

// One {"record":"schedule",...} per line, each carrying its countdown plan.
void write_schedules_file(std::ostream& out, const std::vector<StreamSchedule>& schedules);

}  // namespace rapidcs

// rapidcs command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "rapidcs/cascade.hpp"
#include "rapidcs/decoder.hpp"
#include "rapidcs/eval.hpp"
#include "rapidcs/http_api.hpp"
#include "rapidcs/json_io.hpp"
#include "rapidcs/rng.hpp"
#include "rapidcs/scheduler.hpp"
#include "rapidcs/service.hpp"
#include "rapidcs/simulator.hpp"

using namespace rapidcs;

namespace {

// Writes to `path`, or stdout for "" and "-".
template <typename F>
void with_output(const std::string& path, F write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  write(out);
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

struct ProfileFlags {
  WorkerProfile profile;
  std::string file;

  void add(CLI::App* app) {
    app->add_option("--worker-delay-mean-ms", profile.delay_mean_ms, "Simulated reaction delay mean");
    app->add_option("--worker-delay-std-ms", profile.delay_std_ms, "Simulated reaction delay std");
    app->add_option("--base-detect", profile.base_detect, "Detection probability at low positive rate");
    app->add_option("--false-alarm-rate", profile.false_alarm_rate, "Stray press probability per negative slot");
    app->add_option("--refractory-ms", profile.refractory_ms, "Minimum gap between presses");
    app->add_option("--profiles", file, "JSON array of worker profiles, one per replica")
        ->check(CLI::ExistingFile);
  }

  std::vector<WorkerProfile> resolve(int redundancy) const {
    std::vector<WorkerProfile> out;
    if (!file.empty()) {
      out = read_json(file).get<std::vector<WorkerProfile>>();
    } else {
      out.assign(static_cast<std::size_t>(std::max(redundancy, 1)), profile);
    }
    for (const auto& p : out) check_profile(p);
    return out;
  }
};

Table1Row row_from_json(const json& j) {
  auto side = [](const json& s) {
    ApproachMetrics m;
    m.seconds_per_item = s.at("seconds_per_item").get<double>();
    m.redundancy = s.at("redundancy").get<int>();
    if (s.contains("precision")) m.precision = s.at("precision").get<double>();
    if (s.contains("recall")) m.recall = s.at("recall").get<double>();
    return m;
  };
  Table1Row r;
  r.task = j.at("task").get<std::string>();
  r.variant = j.value("variant", std::string{});
  r.conventional = side(j.at("conventional"));
  r.rapid = side(j.at("rapid"));
  return r;
}

int run(int argc, char** argv) {
  CLI::App app{"rapidcs: rapid error-embracing crowdsourcing toolkit"};
  app.require_subcommand(1);

  // validate
  auto* validate = app.add_subcommand("validate", "Check a task file");
  std::string validate_task_path;
  validate->add_option("task", validate_task_path, "Task file")->required()->check(CLI::ExistingFile);

  // schedule export
  auto* schedule = app.add_subcommand("schedule", "Stream schedules");
  schedule->require_subcommand(1);
  auto* schedule_export = schedule->add_subcommand("export", "Write the schedules of a task");
  std::string schedule_task, schedule_out;
  schedule_export->add_option("task", schedule_task, "Task file")->required()->check(CLI::ExistingFile);
  schedule_export->add_option("-o,--output", schedule_out, "Output file (default stdout)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate simulated worker sessions");
  std::string sim_task, sim_out;
  std::uint64_t sim_seed = 1;
  ProfileFlags sim_profile;
  simulate->add_option("task", sim_task, "Task file (items need truth or gold labels)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("-o,--output", sim_out, "Sessions file (default stdout)");
  simulate->add_option("--seed", sim_seed, "Simulation seed");
  sim_profile.add(simulate);

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Recover labels from sessions");
  std::string dec_task, dec_sessions, dec_out;
  std::optional<double> dec_threshold, dec_target, dec_lookback, dec_mean, dec_std;
  std::uint64_t dec_seed = 0;
  bool dec_global_only = false;
  decode_cmd->add_option("task", dec_task, "Task file")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("sessions", dec_sessions, "Sessions file")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("-o,--output", dec_out, "Results file (default stdout)");
  auto* thr = decode_cmd->add_option("--threshold", dec_threshold, "Fixed posterior threshold");
  decode_cmd->add_option("--target-precision", dec_target, "Tune the threshold on gold to this precision")
      ->excludes(thr);
  decode_cmd->add_option("--lookback-ms", dec_lookback, "Attribution window");
  decode_cmd->add_option("--delay-mean-ms", dec_mean, "Fixed delay mean (skips fitting)");
  decode_cmd->add_option("--delay-std-ms", dec_std, "Fixed delay std (skips fitting)");
  decode_cmd->add_option("--seed", dec_seed, "Accepted for symmetry; decoding is deterministic");
  decode_cmd->add_flag("--global-delay-only", dec_global_only, "Do not fit per-worker delay models");

  // cascade
  auto* cascade = app.add_subcommand("cascade", "Multi-class labeling as binary passes");
  std::string cas_task, cas_out, cas_mode = "optimized", cas_decoder = "perfect";
  std::uint64_t cas_seed = 1;
  int cas_redundancy = 0;
  double cas_reduction = 1.0, cas_conv_seconds = 1.7, cas_threshold = 0.5;
  int cas_conv_redundancy = 3;
  ProfileFlags cas_profile;
  cascade->add_option("task", cas_task, "Task file with per-class priors")->required()->check(CLI::ExistingFile);
  cascade->add_option("-o,--output", cas_out, "Assignments file (default stdout)");
  cascade->add_option("--mode", cas_mode, "Class order")
      ->check(CLI::IsMember({"baseline", "optimized", "worst-case"}));
  cascade->add_option("--decoder", cas_decoder, "Binary verifier for each pass")
      ->check(CLI::IsMember({"perfect", "simulated"}));
  cascade->add_option("--seed", cas_seed, "Seed for baseline order and simulation");
  cascade->add_option("--redundancy", cas_redundancy, "Workers per pass (default: task redundancy)");
  cascade->add_option("--threshold", cas_threshold, "Posterior threshold for the simulated decoder");
  cascade->add_option("--reduction-factor", cas_reduction, "External label-count reduction in the cost report");
  cascade->add_option("--conventional-seconds", cas_conv_seconds, "Conventional seconds per binary label");
  cascade->add_option("--conventional-redundancy", cas_conv_redundancy, "Conventional workers per label");
  cas_profile.add(cascade);

  // report
  auto* report = app.add_subcommand("report", "Evaluation reports");
  report->require_subcommand(1);
  auto* table1 = report->add_subcommand("table1", "Speedup table from a timing grid");
  std::string grid_path, table_csv;
  table1->add_option("--grid", grid_path, "Grid JSON")->required()->check(CLI::ExistingFile);
  table1->add_option("--csv", table_csv, "Also write the table as CSV");
  auto* pr = report->add_subcommand("pr", "Precision/recall of a results file against truth");
  std::string pr_task, pr_results, pr_csv;
  pr->add_option("task", pr_task, "Task file with truth")->required()->check(CLI::ExistingFile);
  pr->add_option("results", pr_results, "Results file")->required()->check(CLI::ExistingFile);
  pr->add_option("--csv", pr_csv, "Write the precision/recall curve as CSV");

  // qualify
  auto* qualify_cmd = app.add_subcommand("qualify", "Score qualification sessions");
  std::string q_task, q_sessions;
  double q_window = kQualificationWindowMs;
  qualify_cmd->add_option("task", q_task, "Task file")->required()->check(CLI::ExistingFile);
  qualify_cmd->add_option("sessions", q_sessions, "Sessions file")->required()->check(CLI::ExistingFile);
  qualify_cmd->add_option("--window-ms", q_window, "Matching window");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1", data_dir = "rapidcs-data";
  int port = 8080;
  bool open_access = false;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--data-dir", data_dir, "Log and snapshot directory");
  serve->add_flag("--no-qualification", open_access, "Do not require qualification");

  CLI11_PARSE(app, argc, argv);

  if (*validate) {
    const TaskFile task = read_task_file(validate_task_path);
    const ValidationReport r = validate_task(task.items, task.config);
    std::cout << json(r).dump(2) << '\n';
    return r.valid() ? 0 : 1;
  }

  if (*schedule_export) {
    const TaskFile task = read_task_file(schedule_task);
    const ValidationReport r = validate_task(task.items, task.config);
    if (!r.valid()) throw Error(ErrorCode::kValidationFailed, json(r).dump());
    const auto schedules = build_streams(task.items, task.config);
    with_output(schedule_out, [&](std::ostream& os) { write_schedules_file(os, schedules); });
    return 0;
  }

  if (*simulate) {
    const TaskFile task = read_task_file(sim_task);
    const TruthMap truth = truth_from_items(task.items);
    const auto profiles = sim_profile.resolve(task.config.redundancy);
    auto sessions = simulate_experiment(task.items, truth, task.config, profiles, sim_seed);
    for (auto& s : sessions) s.task_id = task.task_id.value_or("");
    with_output(sim_out, [&](std::ostream& os) { write_sessions_file(os, sessions); });
    return 0;
  }

  if (*decode_cmd) {
    const TaskFile task = read_task_file(dec_task);
    const auto sessions = read_sessions_file(dec_sessions);
    DecodeOptions o;
    o.threshold = dec_threshold;
    o.target_precision = dec_target;
    o.lookback_ms = dec_lookback;
    o.delay_mean_ms = dec_mean;
    o.delay_std_ms = dec_std;
    o.per_worker_models = !dec_global_only;
    const DecodeResult result = decode(task.items, task.config, sessions, o);
    with_output(dec_out, [&](std::ostream& os) { os << json(result).dump(2) << '\n'; });
    for (const auto& f : result.flags) std::cerr << "warning: " << f << '\n';
    return 0;
  }

  if (*cascade) {
    const TaskFile task = read_task_file(cas_task);
    const int redundancy = cas_redundancy > 0 ? cas_redundancy : task.config.redundancy;
    std::vector<ItemId> ids;
    std::set<std::string> class_ids;
    for (const auto& item : task.items) {
      ids.push_back(item.item_id);
      for (const auto& [c, p] : item.class_priors) class_ids.insert(c);
    }
    const auto classes = estimate_class_counts(task.items);
    BinaryDecodeFn fn;
    std::map<ItemId, std::string> truth_class;
    for (const auto& item : task.items) {
      if (item.truth_class) truth_class[item.item_id] = *item.truth_class;
    }
    if (cas_decoder == "perfect") {
      if (truth_class.size() != task.items.size()) {
        throw Error(ErrorCode::kMissingTruth, "perfect decoder needs truth_class on every item");
      }
      fn = perfect_decoder(truth_class);
    } else {
      const auto profiles = cas_profile.resolve(redundancy);
      std::map<ItemId, const Item*> by_id;
      for (const auto& item : task.items) by_id[item.item_id] = &item;
      int pass = 0;
      fn = [&, profiles](const std::string& class_id, std::span<const ItemId> pool) {
        std::vector<Item> binary;
        TruthMap truth;
        for (const auto& id : pool) {
          const Item& src = *by_id.at(id);
          Item b;
          b.item_id = id;
          b.payload = src.payload;
          auto p = src.class_priors.find(class_id);
          b.prior = p == src.class_priors.end() ? 0.0 : p->second;
          auto t = truth_class.find(id);
          if (t == truth_class.end()) {
            throw Error(ErrorCode::kMissingTruth, "simulated decoder needs truth_class on '" + id + "'");
          }
          truth[id] = t->second == class_id;
          binary.push_back(std::move(b));
        }
        TaskConfig config = task.config;
        config.redundancy = redundancy;
        config.gold_fraction = 0.0;
        config.rng_seed = derive_seed(cas_seed, {static_cast<std::uint64_t>(pass)});
        const auto sessions = simulate_experiment(
            binary, truth, config, profiles, derive_seed(cas_seed, {static_cast<std::uint64_t>(pass), 1}));
        ++pass;
        DecodeOptions o;
        o.threshold = cas_threshold;
        o.delay_mean_ms = profiles.front().delay_mean_ms;
        o.delay_std_ms = profiles.front().delay_std_ms;
        std::vector<ItemId> positives;
        for (const auto& e : decode(binary, config, sessions, o).estimates) {
          if (e.decision == Decision::kPositive) positives.push_back(e.item_id);
        }
        return positives;
      };
    }
    const CascadeResult result =
        run_cascade(ids, classes, fn, cascade_mode_from_string(cas_mode), cas_seed, redundancy);
    const auto cost = multiclass_cost(ids.size(), class_ids.size(), cas_conv_seconds,
                                      cas_conv_redundancy, result.total_displays,
                                      task.config.display_interval_ms / 1000.0, cas_reduction);
    json out = result;
    out["cost"] = {{"naive_seconds", cost.naive_seconds},
                   {"rapid_seconds", cost.rapid_seconds},
                   {"speedup", cost.speedup},
                   {"reduction_factor", cost.reduction_factor},
                   {"combined_speedup", cost.combined_speedup}};
    with_output(cas_out, [&](std::ostream& os) { os << out.dump(2) << '\n'; });
    std::fprintf(stderr, "mode %s: %zu displays, rapid %.1fs vs naive %.1fs (%sx)\n",
                 to_string(result.mode), result.total_displays, cost.rapid_seconds,
                 cost.naive_seconds, format_speedup(cost.combined_speedup).c_str());
    if (result.error) {
      std::cerr << "error: cascade stopped early: " << *result.error << '\n';
      return 1;
    }
    return 0;
  }

  if (*table1) {
    const json grid = read_json(grid_path);
    std::vector<Table1Row> rows;
    for (const auto& r : grid.at("rows")) rows.push_back(row_from_json(r));
    const Table1Report rep = table1_report(rows);
    std::cout << rep.text();
    if (!table_csv.empty()) with_output(table_csv, [&](std::ostream& os) { os << rep.csv(); });
    return 0;
  }

  if (*pr) {
    const TaskFile task = read_task_file(pr_task);
    const TruthMap truth = truth_from_items(task.items);
    const auto result = read_json(pr_results).get<DecodeResult>();
    const auto m = precision_recall(decisions_of(result.estimates), truth);
    std::printf("precision %.4f recall %.4f tp %zu fp %zu fn %zu tn %zu threshold %.6g\n",
                m.precision, m.recall, m.tp, m.fp, m.fn, m.tn, result.threshold_used);
    if (m.no_predictions) std::printf("note: no positive predictions\n");
    if (!pr_csv.empty()) {
      with_output(pr_csv, [&](std::ostream& os) {
        os << "threshold,precision,recall\n";
        char line[96];
        for (const auto& p : precision_recall_curve(result.estimates, truth)) {
          std::snprintf(line, sizeof line, "%.9g,%.6f,%.6f\n", p.threshold, p.precision, p.recall);
          os << line;
        }
      });
    }
    return 0;
  }

  if (*qualify_cmd) {
    const TaskFile task = read_task_file(q_task);
    const TruthMap gold = gold_labels(task.items);
    bool all_passed = true;
    for (const auto& s : read_sessions_file(q_sessions)) {
      const auto q = qualify(s, gold, q_window);
      all_passed = all_passed && q.passed;
      json j = q;
      j["session_id"] = s.session_id;
      j["worker_id"] = s.worker_id;
      std::cout << j.dump() << '\n';
    }
    return all_passed ? 0 : 1;
  }

  if (*serve) {
    ServiceOptions so;
    so.data_dir = data_dir;
    so.require_qualification = !open_access;
    Service service(so);
    HttpApi api(service);
    std::fprintf(stderr, "listening on %s:%d (data in %s)\n", host.c_str(), port, data_dir.c_str());
    return api.listen(host, port) ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

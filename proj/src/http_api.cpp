#include "rapidcs/http_api.hpp"

#include <httplib.h>

namespace rapidcs {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kFullyAssigned:
    case ErrorCode::kDuplicateSubmission:
    case ErrorCode::kInsufficientSessions: return 409;
    case ErrorCode::kQualificationRequired: return 403;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, status, json{{"error", {{"code", code}, {"message", message}}}});
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

SubmitRequest submit_request(const json& b, std::string session_id) {
  SubmitRequest r;
  r.session_id = std::move(session_id);
  r.submission_id = b.at("submission_id").get<std::string>();
  r.schema_version = b.value("schema_version", kSchemaVersion);
  r.events = b.value("events", std::vector<KeypressEvent>{});
  r.client_onsets_ms = b.value("client_onsets_ms", std::vector<double>{});
  return r;
}

json outcome_body(const SubmitOutcome& o) {
  json j{{"accepted", o.accepted}, {"status", to_string(o.status)}, {"reason", o.reason}};
  if (o.qualification) j["qualification"] = *o.qualification;
  return j;
}

}  // namespace

HttpApi::HttpApi(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpApi::~HttpApi() { stop(); }

void HttpApi::install_routes() {
  auto& s = *server_;
  Service& svc = service_;

  s.Post("/v1/tasks", guarded([&svc](const auto& req, auto& res) {
    const json b = body_of(req);
    auto items = b.at("items").get<std::vector<Item>>();
    auto config = b.at("config").get<TaskConfig>();
    const auto id = svc.create_task(std::move(items), std::move(config));
    send_json(res, 201, json{{"task_id", id}, {"status", to_string(svc.status(id))}});
  }));

  s.Get(R"(/v1/tasks/([^/]+))", guarded([&svc](const auto& req, auto& res) {
    const std::string id = req.matches[1];
    send_json(res, 200, json{{"task_id", id}, {"status", to_string(svc.status(id))}});
  }));

  s.Post(R"(/v1/tasks/([^/]+)/sessions)", guarded([&svc](const auto& req, auto& res) {
    const json b = body_of(req);
    auto opened = svc.open_session(req.matches[1], b.at("worker_id").get<std::string>());
    send_json(res, 201, json{{"session_id", opened.session_id}, {"manifest", opened.manifest}});
  }));

  s.Get(R"(/v1/sessions/([^/]+)/manifest)", guarded([&svc](const auto& req, auto& res) {
    send_json(res, 200, svc.manifest(req.matches[1]));
  }));

  s.Post(R"(/v1/sessions/([^/]+)/events)", guarded([&svc](const auto& req, auto& res) {
    const auto outcome = svc.submit_events(submit_request(body_of(req), req.matches[1]));
    send_json(res, 200, outcome_body(outcome));
  }));

  s.Post(R"(/v1/tasks/([^/]+)/decode)", guarded([&svc](const auto& req, auto& res) {
    const json b = body_of(req);
    DecodeRequest r;
    r.force = b.value("force", false);
    if (b.contains("threshold")) r.options.threshold = b.at("threshold").get<double>();
    if (b.contains("target_precision")) {
      r.options.target_precision = b.at("target_precision").get<double>();
    }
    if (b.contains("lookback_ms")) r.options.lookback_ms = b.at("lookback_ms").get<double>();
    send_json(res, 200, json(svc.decode_task(req.matches[1], r)));
  }));

  s.Get(R"(/v1/tasks/([^/]+)/results)", guarded([&svc](const auto& req, auto& res) {
    const std::string id = req.matches[1];
    const auto result = svc.results(id);
    if (!result) {
      send_error(res, 409, "not_decoded", "task '" + id + "' has not been decoded");
      return;
    }
    send_json(res, 200, json(*result));
  }));

  s.Post("/v1/qualification/start", guarded([&svc](const auto& req, auto& res) {
    const json b = body_of(req);
    auto opened = svc.start_qualification(b.at("worker_id").get<std::string>(),
                                          b.value("task_id", std::string{}));
    send_json(res, 201, json{{"session_id", opened.session_id}, {"manifest", opened.manifest}});
  }));

  s.Post("/v1/qualification/submit", guarded([&svc](const auto& req, auto& res) {
    const json b = body_of(req);
    const auto outcome = svc.submit_events(submit_request(b, b.at("session_id").get<std::string>()));
    send_json(res, 200, outcome_body(outcome));
  }));

  s.Get(R"(/v1/workers/([^/]+)/qualified)", guarded([&svc](const auto& req, auto& res) {
    const std::string w = req.matches[1];
    send_json(res, 200, json{{"worker_id", w}, {"qualified", svc.is_qualified(w)}});
  }));
}

bool HttpApi::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpApi::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpApi::listen_after_bind() { return server_->listen_after_bind(); }

void HttpApi::stop() {
  if (server_) server_->stop();
}

void HttpApi::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace rapidcs

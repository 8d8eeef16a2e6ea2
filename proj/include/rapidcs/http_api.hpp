#pragma once

// JSON-over-HTTP front end for Service.
//
//   POST /v1/tasks                        {"config":{...},"items":[...]}
//   POST /v1/tasks/{id}/sessions          {"worker_id":"..."}
//   GET  /v1/sessions/{sid}/manifest
//   POST /v1/sessions/{sid}/events        {"submission_id","schema_version","events","client_onsets_ms"}
//   POST /v1/tasks/{id}/decode            {"force":bool,"threshold":...,"target_precision":...}
//   GET  /v1/tasks/{id}/results
//   GET  /v1/tasks/{id}
//   POST /v1/qualification/start          {"worker_id":"...","task_id":"..."}
//   POST /v1/qualification/submit         same body as events plus "session_id"
//
// Errors come back as {"error":{"code":"...","message":"..."}}.

#include <memory>
#include <string>

#include "rapidcs/service.hpp"

namespace httplib {
class Server;
}

namespace rapidcs {

int http_status(ErrorCode code);

class HttpApi {
 public:
  explicit HttpApi(Service& service);
  ~HttpApi();

  // Binds and serves until stop(); returns false when the bind fails.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (or -1); call listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace rapidcs

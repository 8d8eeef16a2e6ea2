#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "rapidcs/http_api.hpp"
#include "support/service_fixtures.hpp"

using namespace rapidcs;
using namespace fixtures;

namespace {

struct Server {
  Service service;
  HttpApi api{service};
  int port = -1;
  std::thread thread;

  explicit Server(ServiceOptions o) : service(std::move(o)) {
    port = api.bind_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { api.listen_after_bind(); });
    api.wait_until_ready();
  }
  ~Server() {
    api.stop();
    thread.join();
  }
};

json body(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

json task_body(const Task& t) { return json{{"items", t.items}, {"config", t.config}}; }

}  // namespace

TEST_CASE("end-to-end over HTTP") {
  Server server{ServiceOptions{}};
  httplib::Client cli("127.0.0.1", server.port);
  const auto t = standard_task(100, 2);
  const auto q = qualification_task();

  auto created = cli.Post("/v1/tasks", task_body(t).dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string task = body(created)["task_id"];
  CHECK(body(cli.Post("/v1/tasks", task_body(t).dump(), "application/json"))["task_id"] == task);
  const std::string qual = body(cli.Post("/v1/tasks", task_body(q).dump(), "application/json"))["task_id"];

  auto denied = cli.Post("/v1/tasks/" + task + "/sessions", R"({"worker_id":"ann"})", "application/json");
  CHECK(denied->status == 403);
  CHECK(body(denied)["error"]["code"] == "qualification required");

  auto qs = body(cli.Post("/v1/qualification/start", R"({"worker_id":"ann"})", "application/json"));
  auto qsub = scripted_submission(qs["manifest"], q, "ann-q");
  json qreq{{"session_id", qsub.session_id}, {"submission_id", qsub.submission_id},
            {"schema_version", kSchemaVersion}, {"events", qsub.events}};
  auto qres = cli.Post("/v1/qualification/submit", qreq.dump(), "application/json");
  CHECK(qres->status == 200);
  CHECK(body(qres)["qualification"]["passed"] == true);
  CHECK(body(cli.Get("/v1/workers/ann/qualified"))["qualified"] == true);
  CHECK(qual.size() > 1);

  for (const std::string worker : {"ann", "ben"}) {
    if (worker == "ben") {
      auto s = body(cli.Post("/v1/qualification/start", R"({"worker_id":"ben"})", "application/json"));
      auto sub = scripted_submission(s["manifest"], q, "ben-q");
      cli.Post("/v1/qualification/submit",
               json{{"session_id", sub.session_id}, {"submission_id", "ben-q"}, {"events", sub.events}}.dump(),
               "application/json");
    }
    auto opened = cli.Post("/v1/tasks/" + task + "/sessions", json{{"worker_id", worker}}.dump(), "application/json");
    REQUIRE(opened->status == 201);
    const json o = body(opened);
    const std::string sid = o["session_id"];
    CHECK(body(cli.Get("/v1/sessions/" + sid + "/manifest")) == o["manifest"]);
    auto sub = scripted_submission(o["manifest"], t, worker + "-1");
    json req{{"submission_id", sub.submission_id}, {"schema_version", kSchemaVersion}, {"events", sub.events}};
    auto res = cli.Post("/v1/sessions/" + sid + "/events", req.dump(), "application/json");
    CHECK(res->status == 200);
    CHECK(body(res)["accepted"] == true);
    req["submission_id"] = "other";
    CHECK(cli.Post("/v1/sessions/" + sid + "/events", req.dump(), "application/json")->status == 409);
  }

  auto none = cli.Get("/v1/tasks/" + task + "/results");
  CHECK(none->status == 409);
  auto decoded = cli.Post("/v1/tasks/" + task + "/decode", "{}", "application/json");
  REQUIRE(decoded->status == 200);
  const json result = body(decoded);
  CHECK(result["estimates"].size() == 100);
  CHECK(body(cli.Get("/v1/tasks/" + task + "/results")) == result);
  CHECK(body(cli.Get("/v1/tasks/" + task))["status"] == "complete");
}

TEST_CASE("error mapping") {
  ServiceOptions o;
  o.require_qualification = false;
  Server server{o};
  httplib::Client cli("127.0.0.1", server.port);
  CHECK(cli.Get("/v1/sessions/tmissing-s0/manifest")->status == 404);
  CHECK(cli.Post("/v1/tasks", "{not json", "application/json")->status == 400);
  auto t = standard_task(100, 1);
  t.config.display_interval_ms = 10;
  auto bad = cli.Post("/v1/tasks", task_body(t).dump(), "application/json");
  CHECK(bad->status == 400);
  CHECK(body(bad)["error"]["message"].get<std::string>().find("display interval") != std::string::npos);

  t.config.display_interval_ms = 100;
  const std::string task = body(cli.Post("/v1/tasks", task_body(t).dump(), "application/json"))["task_id"];
  const std::string sid = body(cli.Post("/v1/tasks/" + task + "/sessions", R"({"worker_id":"a"})", "application/json"))["session_id"];
  CHECK(cli.Post("/v1/tasks/" + task + "/sessions", R"({"worker_id":"b"})", "application/json")->status == 409);
  json disordered{{"submission_id", "x"}, {"events", json::array({{{"t_ms", 500.0}}, {{"t_ms", 100.0}}})}};
  auto mal = cli.Post("/v1/sessions/" + sid + "/events", disordered.dump(), "application/json");
  CHECK(mal->status == 400);
  CHECK(body(mal)["error"]["code"] == "malformed events");
  CHECK(cli.Post("/v1/tasks/" + task + "/decode", "{}", "application/json")->status == 409);
}

#include <gtest/gtest.h>
#include <httplib.h>

#include <future>
#include <mutex>
#include <thread>

#include "oracles.hpp"
#include "studyhabit/api.hpp"
#include "studyhabit/server.hpp"

using namespace studyhabit;
using namespace std::chrono;

namespace {

Timestamp at(int month, int day, int hour = 0, int minute = 0) {
  return Timestamp{sys_days{year{2026} / month / day}} + hours(hour) + minutes(minute);
}

json math_timetable() {
  return {{"blocks",
           {{{"day", 0}, {"start", 600}, {"end", 720}, {"kind", "class"}, {"class_id", "MATH101"}},
            {{"day", 2}, {"start", 840}, {"end", 900}, {"kind", "class"}, {"class_id", "MATH101"}}}}};
}

class ApiFlow : public ::testing::Test {
 protected:
  ApiFlow() : clock(at(9, 6, 12)), api(engine, clock, [this] { ++mutations; }) {}

  void onboard(const std::string& id, bool share = false) {
    ASSERT_EQ(api.call("POST", "/students", {{"student_id", id}, {"share_schedule", share}}).status, 201);
    ASSERT_EQ(api.call("PUT", "/students/" + id + "/timetable", math_timetable()).status, 200);
    ASSERT_EQ(api.call("PUT", "/students/" + id + "/preference", {{"preference", "late"}}).status, 200);
  }

  Engine engine;
  ManualClock clock;
  int mutations = 0;
  Api api;
};

}  // namespace

TEST(HttpStatus, ErrorMapping) {
  EXPECT_EQ(http_status(ErrorCode::Validation), 422);
  EXPECT_EQ(http_status(ErrorCode::Incomplete), 422);
  EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::NoData), 404);
  EXPECT_EQ(http_status(ErrorCode::Conflict), 409);
  EXPECT_EQ(http_status(ErrorCode::IllegalTransition), 409);
  EXPECT_EQ(http_status(ErrorCode::Precondition), 409);
  EXPECT_EQ(http_status(ErrorCode::Authorization), 403);
  EXPECT_EQ(http_status(ErrorCode::Configuration), 500);
}

TEST_F(ApiFlow, TransportErrors) {
  EXPECT_EQ(api.call("GET", "/health").status, 200);
  EXPECT_EQ(api.call("GET", "/nowhere").status, 404);
  EXPECT_EQ(api.call("DELETE", "/students").status, 405);
  ApiRequest bad{"POST", "/students", "{oops", {}, ""};
  const auto r = api.handle(bad);
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["code"], "malformed_json");
  EXPECT_EQ(api.call("GET", "/students/ghost").status, 404);
  EXPECT_EQ(api.call("GET", "/students/ghost/checklist/minus").status, 422);
  EXPECT_EQ(mutations, 0);
}

TEST_F(ApiFlow, WizardOverHttp) {
  ASSERT_EQ(api.call("POST", "/students", {{"student_id", "alice"}}).status, 201);
  EXPECT_EQ(api.call("POST", "/students", {{"student_id", "alice"}}).status, 409);
  EXPECT_EQ(api.call("PUT", "/students/alice/preference", {{"preference", "late"}}).status, 409);
  EXPECT_EQ(api.call("GET", "/students/alice/schedule/suggestions").status, 409);
  EXPECT_EQ(api.call("PUT", "/students/alice/timetable", math_timetable()).status, 200);
  EXPECT_EQ(api.call("PUT", "/students/alice/preference", {{"preference", "sometimes"}}).status, 422);
  EXPECT_EQ(api.call("PUT", "/students/alice/preference", {{"preference", "early"}}).status, 200);

  const auto offer = api.call("GET", "/students/alice/schedule/suggestions");
  ASSERT_EQ(offer.status, 200);
  ASSERT_EQ(offer.body["suggestions"].size(), 1u);
  const auto accepted = api.call("POST", "/students/alice/sessions", {{"class_id", "MATH101"}});
  ASSERT_EQ(accepted.status, 201);
  EXPECT_EQ(accepted.body["slot"]["block"], offer.body["suggestions"][0]["block"]);
  EXPECT_EQ(api.call("GET", "/students/alice").body["wizard_step"], "planned");
  EXPECT_GT(mutations, 0);
}

TEST_F(ApiFlow, SessionLifecycleOverHttp) {
  onboard("alice");
  ASSERT_EQ(api.call("POST", "/students/alice/sessions", {{"class_id", "MATH101"}}).status, 201);
  clock.set(at(9, 7));
  EXPECT_EQ(api.call("POST", "/admin/tick").body["materialized"], 1);
  const auto sessions = api.call("GET", "/students/alice/sessions").body["sessions"];
  ASSERT_EQ(sessions.size(), 1u);
  const std::string sid = sessions[0]["session_id"];
  const Timestamp start = parse_iso8601(sessions[0]["start"].get<std::string>());
  const Timestamp end = parse_iso8601(sessions[0]["end"].get<std::string>());

  clock.set(start - minutes(10));
  api.call("POST", "/admin/tick");
  EXPECT_EQ(api.call("GET", "/sessions/" + sid).body["state"], "notified");
  clock.set(start + minutes(2));
  EXPECT_EQ(api.call("POST", "/sessions/" + sid + "/checkin").status, 200);
  clock.set(end);
  EXPECT_EQ(api.call("POST", "/sessions/" + sid + "/checkout", {{"effectiveness", 6}, {"environment", 3}}).status, 422);
  EXPECT_EQ(api.call("POST", "/sessions/" + sid + "/checkout", {{"effectiveness", "4"}, {"environment", 3}}).status,
            422);
  EXPECT_EQ(api.call("POST", "/sessions/" + sid + "/checkout", {{"environment", 3}}).status, 422);
  const auto out = api.call("POST", "/sessions/" + sid + "/checkout", {{"effectiveness", 4}, {"environment", 3}});
  ASSERT_EQ(out.status, 200);
  EXPECT_EQ(out.body["adherence"]["band"], "green");
  EXPECT_EQ(api.call("POST", "/sessions/" + sid + "/checkout", {{"effectiveness", 4}, {"environment", 3}}).status,
            409);
  EXPECT_EQ(api.call("POST", "/sessions/none/checkin").status, 404);

  const auto metrics = api.call("GET", "/students/alice/metrics").body;
  EXPECT_EQ(metrics["sessions"]["checked_out"], 1);
  EXPECT_EQ(metrics["cycles_completed"]["scheduling"], 1);
  EXPECT_FALSE(api.call("GET", "/students/alice/feed").body["items"].empty());
}

TEST_F(ApiFlow, ChecklistAndNotesOverHttp) {
  onboard("alice");
  api.call("POST", "/students/alice/sessions", {{"class_id", "MATH101"}});
  clock.set(at(9, 7));
  api.call("POST", "/admin/tick");
  ASSERT_EQ(api.call("PUT", "/classes/MATH101/materials/0", {{"lecture_notes", true}, {"textbook", {"ch. 1"}}}).status,
            200);
  const auto lists = api.call("GET", "/students/alice/checklist/0").body["checklists"];
  ASSERT_EQ(lists.size(), 1u);
  ASSERT_EQ(lists[0]["items"].size(), 3u);
  const std::string item = lists[0]["items"][0]["item_id"];
  const auto ticked = api.call("POST", "/checklist/items/" + item + "/tick", {{"student_id", "alice"}});
  ASSERT_EQ(ticked.status, 200);
  EXPECT_EQ(ticked.body["progress"], 0.5);
  EXPECT_EQ(ticked.body["band"], "amber");
  EXPECT_EQ(api.call("POST", "/students/alice/notes", {{"class_id", "MATH101"}, {"week", 0}, {"text", " "}}).status,
            422);
  EXPECT_EQ(api.call("POST", "/students/alice/notes", {{"class_id", "MATH101"}, {"week", 0}, {"text", "ok"}}).status,
            201);
  EXPECT_EQ(api.call("GET", "/students/alice/notes").body["notes"].size(), 1u);
}

TEST_F(ApiFlow, PerformanceMatchesOracle) {
  onboard("alice");
  EXPECT_EQ(api.call("GET", "/students/alice/performance").status, 404);
  json responses = json::object();
  std::map<std::string, std::vector<int>> x;
  for (const auto& m : oracle::reference_models()) {
    for (std::size_t i = 0; i < m.coefficients.size(); ++i) x[m.prefix].push_back(7 - static_cast<int>(i));
    for (const auto& [k, v] : oracle::as_responses(m, x[m.prefix])) responses[k] = v;
  }
  json partial = responses;
  partial.erase("cot_x6");
  EXPECT_EQ(api.call("POST", "/students/alice/responses", partial).status, 422);
  const auto r = api.call("POST", "/students/alice/responses", {{"responses", responses}});
  ASSERT_EQ(r.status, 200);
  const char* keys[] = {"self_perceived", "objective", "change_over_time"};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& m = oracle::reference_models()[k];
    EXPECT_NEAR(r.body["scores"][keys[k]].get<double>(), oracle::dot(m, x[m.prefix]), 1e-9);
  }
  EXPECT_EQ(api.call("GET", "/students/alice/performance").body, r.body);
}

TEST_F(ApiFlow, PartnersRespectOptIn) {
  onboard("alice");
  onboard("bob");
  onboard("carol");
  json rows = json::array();
  const std::pair<const char*, double> scores[] = {{"alice", 30}, {"bob", 95}, {"carol", 90}};
  for (const auto& [id, score] : scores) {
    rows.push_back({{"student_id", id}, {"class_id", "MATH101"}, {"topic", "limits"}, {"test_id", "t1"},
                    {"attempt_no", 1}, {"score", score}, {"taken_at", "2026-09-06T10:00:00+00:00"}});
  }
  const auto ingest = api.call("POST", "/ttm/scores", rows);
  ASSERT_EQ(ingest.status, 200) << ingest.body.dump();
  EXPECT_EQ(ingest.body["accepted"], 3);
  const std::map<std::string, std::string> q{{"class_id", "MATH101"}, {"topic", "limits"}};
  EXPECT_EQ(api.call("GET", "/students/alice/partners/suggestions").status, 422);
  const auto none = api.call("GET", "/students/alice/partners/suggestions", nullptr, q);
  ASSERT_EQ(none.status, 200);
  EXPECT_TRUE(none.body["candidates"].empty());
  api.call("PUT", "/students/bob/sharing", {{"share_schedule", true}});
  const auto some = api.call("GET", "/students/alice/partners/suggestions", nullptr, q);
  ASSERT_EQ(some.body["candidates"].size(), 1u);
  EXPECT_EQ(some.body["candidates"][0]["student_id"], "bob");
}

TEST_F(ApiFlow, StudentFacingReadsNeverRevealRoles) {
  std::vector<std::string> ids;
  json rows = json::array();
  for (int i = 0; i < 7; ++i) {
    ids.push_back("s" + std::to_string(i));
    onboard(ids.back(), i % 2 == 0);
    api.call("POST", "/students/" + ids.back() + "/sessions", {{"class_id", "MATH101"}});
    rows.push_back({{"student_id", ids.back()}, {"class_id", "MATH101"}, {"topic", "limits"}, {"test_id", "t1"},
                    {"attempt_no", 1}, {"score", 10.0 * i + 5}, {"taken_at", "2026-09-06T10:00:00+00:00"}});
  }
  api.call("POST", "/ttm/scores", rows);
  clock.set(at(9, 7));
  const auto pairing = api.call("POST", "/classes/MATH101/pairings", {{"topic", "limits"}});
  ASSERT_EQ(pairing.status, 201);
  EXPECT_EQ(pairing.body["pairs"].size(), 3u);
  EXPECT_EQ(pairing.body["unpaired"].size(), 1u);
  api.call("POST", "/admin/tick");

  int scanned = 0;
  for (const auto& route : api.routes()) {
    if (route.rfind("GET /students/{id}", 0) != 0) continue;
    for (const auto& id : ids) {
      std::string path = route.substr(4);
      path.replace(path.find("{id}"), 4, id);
      if (const auto w = path.find("{week}"); w != std::string::npos) path.replace(w, 6, "0");
      const auto r = api.call("GET", path, nullptr, {{"class_id", "MATH101"}, {"topic", "limits"}});
      EXPECT_EQ(oracle::find_role_token(r.body.dump()), "") << path << " " << r.body.dump();
      ++scanned;
    }
  }
  EXPECT_GE(scanned, 7 * 10);
  // The group created for each pair is student-facing too.
  for (const auto& p : pairing.body["pairs"]) {
    EXPECT_EQ(oracle::find_role_token(p.dump()), "");
    EXPECT_EQ(oracle::find_role_token(api.call("GET", "/study-groups/" + p["pair_id"].get<std::string>()).body.dump()),
              "");
  }
}

TEST_F(ApiFlow, GroupEndpoints) {
  onboard("alice");
  onboard("bob");
  const auto g = api.call("POST", "/study-groups", {{"class_id", "MATH101"}, {"members", {"alice", "bob"}}});
  ASSERT_EQ(g.status, 201);
  const std::string gid = g.body["group_id"];
  EXPECT_EQ(api.call("POST", "/study-groups/" + gid + "/ratings", {{"rater", "alice"}, {"ratings", {{"bob", 5}}}}).status,
            200);
  EXPECT_EQ(api.call("POST", "/study-groups/" + gid + "/ratings", {{"rater", "alice"}, {"ratings", 3}}).status, 422);
  EXPECT_EQ(api.call("POST", "/study-groups/" + gid + "/endorse", {{"from", "alice"}, {"to", "bob"}}).status, 201);
  EXPECT_EQ(api.call("POST", "/study-groups/" + gid + "/endorse", {{"from", "alice"}, {"to", "bob"}}).status, 200);
  EXPECT_EQ(api.call("POST", "/study-groups/" + gid + "/endorse", {{"from", "alice"}, {"to", "alice"}}).status, 422);
  EXPECT_EQ(api.call("GET", "/students/bob/metrics").body["endorsements"], 1);
}

TEST(ApiAuth, BearerTokenRequired) {
  EngineConfig cfg;
  cfg.api_token = "s3cret";
  Engine engine(cfg);
  ManualClock clock(at(9, 6));
  Api api(engine, clock);
  ApiRequest req{"GET", "/health", "", {}, ""};
  EXPECT_EQ(api.handle(req).status, 401);
  req.authorization = "Bearer wrong";
  EXPECT_EQ(api.handle(req).status, 401);
  req.authorization = "Bearer s3cret";
  EXPECT_EQ(api.handle(req).status, 200);
  EXPECT_EQ(api.call("GET", "/health").status, 200);
}

TEST(Webhook, PostsToLocalReceiver) {
  httplib::Server receiver;
  std::mutex mu;
  std::vector<json> bodies;
  receiver.Post("/hook", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    bodies.push_back(json::parse(req.body));
    res.status = 204;
  });
  const int port = receiver.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { receiver.listen_after_bind(); });
  receiver.wait_until_ready();

  const auto hook = http_webhook("http://127.0.0.1:" + std::to_string(port) + "/hook");
  EXPECT_TRUE(hook({{"student_id", "alice"}, {"message", "hi"}}));
  EXPECT_FALSE(http_webhook("http://127.0.0.1:" + std::to_string(port) + "/missing")({{"x", 1}}));
  receiver.stop();
  t.join();
  std::lock_guard lock(mu);
  ASSERT_EQ(bodies.size(), 1u);
  EXPECT_EQ(bodies[0]["student_id"], "alice");
}

TEST(Server, ServesTheApiOverHttp) {
  Engine engine;
  std::atomic<bool> stop{false};
  std::promise<int> bound;
  ServerOptions options;
  options.port = 0;
  options.tick_interval = seconds(1);
  options.on_listening = [&](int port) { bound.set_value(port); };
  std::thread t([&] { run_server(engine, nullptr, options, stop); });
  const int port = bound.get_future().get();

  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/health");
  const auto created = client.Post("/students", R"({"student_id":"alice"})", "application/json");
  const auto missing = client.Get("/students/bob");
  stop = true;
  t.join();
  ASSERT_TRUE(health) << httplib::to_string(health.error());
  EXPECT_EQ(health->status, 200);
  ASSERT_TRUE(created) << httplib::to_string(created.error());
  EXPECT_EQ(created->status, 201);
  ASSERT_TRUE(missing) << httplib::to_string(missing.error());
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(engine.student_ids().size(), 1u);
}

#include "studyhabit/api.hpp"

#include <sstream>

namespace studyhabit {

namespace {

using Params = std::map<std::string, std::string>;

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::stringstream in(path);
  std::string part;
  while (std::getline(in, part, '/')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
  return {status, {{"code", code}, {"message", message}}};
}

int int_field(const json& body, const char* key) {
  if (!body.contains(key)) throw Error(ErrorCode::Validation, std::string("missing field '") + key + "'");
  const auto& v = body.at(key);
  if (!v.is_number_integer()) throw Error(ErrorCode::Validation, std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::string string_field(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw Error(ErrorCode::Validation, std::string("missing string field '") + key + "'");
  }
  return body.at(key).get<std::string>();
}

int parse_week(const std::string& text) {
  try {
    std::size_t used = 0;
    const int week = std::stoi(text, &used);
    if (used == text.size() && week >= 0) return week;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::Validation, "week must be a non-negative integer");
}

json public_pairs(const std::vector<StudyPair>& pairs) {
  json out = json::array();
  for (const auto& p : pairs) out.push_back(p.public_json());
  return out;
}

}  // namespace

Timestamp SystemClock::now() const {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation:
    case ErrorCode::Incomplete: return 422;
    case ErrorCode::NotFound:
    case ErrorCode::NoData: return 404;
    case ErrorCode::Conflict:
    case ErrorCode::IllegalTransition:
    case ErrorCode::Precondition: return 409;
    case ErrorCode::Authorization: return 403;
    case ErrorCode::Configuration: return 500;
  }
  return 500;
}

struct Api::Route {
  std::string method;
  std::string pattern;
  std::vector<std::string> segments;
  std::function<ApiResponse(const Params&, const json&, const ApiRequest&, Timestamp)> handler;

  bool match(const std::string& m, const std::vector<std::string>& parts, Params& params) const {
    if (m != method || parts.size() != segments.size()) return false;
    params.clear();
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& seg = segments[i];
      if (seg.size() > 2 && seg.front() == '{' && seg.back() == '}') {
        params[seg.substr(1, seg.size() - 2)] = parts[i];
      } else if (seg != parts[i]) {
        return false;
      }
    }
    return true;
  }
};

Api::~Api() = default;

Api::Api(Engine& engine, const Clock& clock, std::function<void()> on_mutation)
    : engine_(engine), clock_(clock), on_mutation_(std::move(on_mutation)) {
  auto add = [this](std::string method, std::string pattern, auto fn) {
    Route r;
    r.method = std::move(method);
    r.segments = split_path(pattern);
    r.pattern = std::move(pattern);
    r.handler = fn;
    routes_.push_back(std::move(r));
  };
  Engine& e = engine_;
  auto sid = [](const Params& p) { return StudentId(p.at("id")); };

  add("GET", "/health", [](const Params&, const json&, const ApiRequest&, Timestamp now) {
    return ApiResponse{200, {{"status", "ok"}, {"now", to_iso8601(now)}}};
  });

  // ---- students and wizard
  add("POST", "/students", [&e](const Params&, const json& body, const ApiRequest&, Timestamp now) {
    return ApiResponse{201, public_json(e.create_student(body, now))};
  });
  add("GET", "/students", [&e](const Params&, const json&, const ApiRequest&, Timestamp) {
    json ids = json::array();
    for (const auto& id : e.student_ids()) ids.push_back(id.str());
    return ApiResponse{200, {{"students", ids}}};
  });
  add("GET", "/students/{id}", [&e, sid](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, public_json(e.student(sid(p)))};
  });
  add("PUT", "/students/{id}/timetable", [&e, sid](const Params& p, const json& body, const ApiRequest&,
                                                   Timestamp now) {
    return ApiResponse{200, public_json(e.put_timetable(sid(p), body.get<WeekTimetable>(), now))};
  });
  add("PUT", "/students/{id}/preference", [&e, sid](const Params& p, const json& body, const ApiRequest&,
                                                    Timestamp now) {
    const auto pref = time_preference_from(string_field(body, "preference"));
    return ApiResponse{200, public_json(e.put_preference(sid(p), pref, now))};
  });
  add("PUT", "/students/{id}/sharing", [&e, sid](const Params& p, const json& body, const ApiRequest&, Timestamp) {
    if (!body.contains("share_schedule") || !body["share_schedule"].is_boolean()) {
      throw Error(ErrorCode::Validation, "share_schedule must be true or false");
    }
    e.set_sharing(sid(p), body["share_schedule"].get<bool>());
    return ApiResponse{200, public_json(e.student(sid(p)))};
  });
  add("GET", "/students/{id}/schedule/suggestions", [&e, sid](const Params& p, const json&, const ApiRequest&,
                                                              Timestamp) {
    return ApiResponse{200, e.schedule_suggestions(sid(p))};
  });
  add("POST", "/students/{id}/schedule/suggestions/reject", [&e, sid](const Params& p, const json& body,
                                                                      const ApiRequest&, Timestamp) {
    e.reject_suggestion(sid(p), ClassId(string_field(body, "class_id")), body.at("block").get<TimeBlock>());
    return ApiResponse{200, e.schedule_suggestions(sid(p))};
  });
  add("POST", "/students/{id}/sessions", [&e, sid](const Params& p, const json& body, const ApiRequest&,
                                                   Timestamp now) {
    std::optional<TimeBlock> block;
    if (body.contains("block") && !body["block"].is_null()) block = body["block"].get<TimeBlock>();
    std::optional<int> replaces;
    if (body.contains("replaces") && !body["replaces"].is_null()) replaces = int_field(body, "replaces");
    const auto slot = e.accept_session(sid(p), ClassId(string_field(body, "class_id")), block, replaces, now);
    json sessions = json::array();
    for (const auto& s : e.sessions_of(sid(p))) {
      if (s.class_id == slot.class_id && !s.terminal()) sessions.push_back(s);
    }
    return ApiResponse{201, {{"slot", slot}, {"sessions", sessions}}};
  });
  add("GET", "/students/{id}/sessions", [&e, sid](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, {{"sessions", e.sessions_of(sid(p))}}};
  });

  // ---- sessions
  add("GET", "/sessions/{id}", [&e](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, e.session(SessionId(p.at("id")))};
  });
  add("POST", "/sessions/{id}/checkin", [&e](const Params& p, const json&, const ApiRequest&, Timestamp now) {
    return ApiResponse{200, e.check_in(SessionId(p.at("id")), now)};
  });
  add("POST", "/sessions/{id}/checkout", [&e](const Params& p, const json& body, const ApiRequest&, Timestamp now) {
    return ApiResponse{200, e.check_out(SessionId(p.at("id")), int_field(body, "effectiveness"),
                                        int_field(body, "environment"), now)};
  });

  // ---- preparation
  add("GET", "/students/{id}/checklist/{week}", [&e, sid](const Params& p, const json&, const ApiRequest&,
                                                          Timestamp) {
    return ApiResponse{200, {{"week", parse_week(p.at("week"))},
                             {"checklists", e.checklists(sid(p), parse_week(p.at("week")))}}};
  });
  add("POST", "/checklist/items/{id}/tick", [&e](const Params& p, const json& body, const ApiRequest&,
                                                 Timestamp now) {
    return ApiResponse{200, e.tick_item(StudentId(string_field(body, "student_id")), p.at("id"), now)};
  });
  add("POST", "/students/{id}/notes", [&e, sid](const Params& p, const json& body, const ApiRequest&,
                                                Timestamp now) {
    const auto note = e.submit_note(sid(p), ClassId(string_field(body, "class_id")), int_field(body, "week"),
                                    string_field(body, "text"), now);
    return ApiResponse{201, note};
  });
  add("GET", "/students/{id}/notes", [&e, sid](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, {{"notes", e.notes_of(sid(p))}}};
  });
  add("PUT", "/classes/{id}/materials/{week}", [&e](const Params& p, const json& body, const ApiRequest&,
                                                    Timestamp now) {
    json doc = body.is_object() ? body : json::object();
    doc["class_id"] = p.at("id");
    doc["week"] = parse_week(p.at("week"));
    const auto manifest = doc.get<MaterialsManifest>();
    e.put_materials(manifest, now);
    return ApiResponse{200, manifest};
  });

  // ---- group study
  add("GET", "/students/{id}/partners/suggestions", [&e, sid](const Params& p, const json&, const ApiRequest& req,
                                                              Timestamp) {
    auto cls = req.query.find("class_id");
    if (cls == req.query.end()) throw Error(ErrorCode::Validation, "query parameter class_id is required");
    auto topic = req.query.find("topic");
    return ApiResponse{200, e.partner_suggestions(sid(p), ClassId(cls->second),
                                                  topic == req.query.end() ? "" : topic->second)};
  });
  add("POST", "/study-groups", [&e](const Params&, const json& body, const ApiRequest&, Timestamp now) {
    return ApiResponse{201, e.create_group(body, now)};
  });
  add("GET", "/study-groups/{id}", [&e](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, e.group(p.at("id"))};
  });
  add("POST", "/study-groups/{id}/ratings", [&e](const Params& p, const json& body, const ApiRequest&,
                                                 Timestamp now) {
    std::map<StudentId, int> ratings;
    if (!body.contains("ratings") || !body["ratings"].is_object()) {
      throw Error(ErrorCode::Validation, "ratings must be an object of member id to 1-5");
    }
    for (const auto& [member, value] : body["ratings"].items()) {
      if (!value.is_number_integer()) throw Error(ErrorCode::Validation, "ratings must be integers");
      ratings[StudentId(member)] = value.get<int>();
    }
    e.rate_group(p.at("id"), StudentId(string_field(body, "rater")), ratings, now);
    return ApiResponse{200, e.group(p.at("id"))};
  });
  add("POST", "/study-groups/{id}/endorse", [&e](const Params& p, const json& body, const ApiRequest&,
                                                 Timestamp now) {
    const auto outcome = e.endorse_member(p.at("id"), StudentId(string_field(body, "from")),
                                          StudentId(string_field(body, "to")), now);
    return ApiResponse{outcome.created ? 201 : 200, {{"endorsement", outcome.endorsement}, {"created", outcome.created}}};
  });
  add("POST", "/classes/{id}/pairings", [&e](const Params& p, const json& body, const ApiRequest&, Timestamp now) {
    const auto result = e.pair_class(ClassId(p.at("id")), string_field(body, "topic"), now);
    json unpaired = json::array();
    for (const auto& u : result.unpaired) unpaired.push_back(u.str());
    return ApiResponse{201, {{"pairs", public_pairs(result.pairs)}, {"unpaired", unpaired}}};
  });
  add("GET", "/students/{id}/pairs", [&e, sid](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, {{"pairs", public_pairs(e.pairs_of(sid(p)))}}};
  });

  // ---- feed, metrics, scores
  add("GET", "/students/{id}/feed", [&e, sid](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, {{"items", e.feed(sid(p))}}};
  });
  add("GET", "/students/{id}/metrics", [&e, sid](const Params& p, const json&, const ApiRequest&, Timestamp now) {
    return ApiResponse{200, e.metrics(sid(p), now)};
  });
  add("POST", "/ttm/scores", [&e](const Params&, const json& body, const ApiRequest&, Timestamp) {
    const json rows = body.is_array() ? body : body.value("attempts", json::array());
    if (!rows.is_array()) throw Error(ErrorCode::Validation, "expected an array of test attempts");
    return ApiResponse{200, e.ingest_ttm(std::vector<json>(rows.begin(), rows.end()))};
  });
  add("POST", "/students/{id}/responses", [&e, sid](const Params& p, const json& body, const ApiRequest&,
                                                    Timestamp) {
    const json doc = body.contains("responses") ? body["responses"] : body;
    LikertResponseSet responses;
    for (const auto& [item, value] : doc.items()) {
      if (!value.is_number_integer()) throw Error(ErrorCode::Validation, "responses must be integers");
      responses[item] = value.get<int>();
    }
    e.submit_responses(sid(p), responses);
    return ApiResponse{200, e.performance(sid(p))};
  });
  add("GET", "/students/{id}/performance", [&e, sid](const Params& p, const json&, const ApiRequest&, Timestamp) {
    return ApiResponse{200, e.performance(sid(p))};
  });
  add("POST", "/admin/tick", [&e](const Params&, const json&, const ApiRequest&, Timestamp now) {
    const auto r = e.tick(now);
    return ApiResponse{200, {{"materialized", r.materialized}, {"missed", r.missed}, {"abandoned", r.abandoned},
                             {"delivered", r.delivered}, {"skipped", r.skipped}, {"deferred", r.deferred},
                             {"dropped", r.dropped}}};
  });
}

std::vector<std::string> Api::routes() const {
  std::vector<std::string> out;
  for (const auto& r : routes_) out.push_back(r.method + " " + r.pattern);
  return out;
}

ApiResponse Api::handle(const ApiRequest& request) {
  const std::string& token = engine_.config().api_token;
  if (!token.empty() && request.authorization != "Bearer " + token) {
    return error_response(401, "unauthorized", "a valid bearer token is required");
  }
  const auto parts = split_path(request.path);
  const Route* route = nullptr;
  Params params;
  bool path_known = false;
  for (const auto& r : routes_) {
    if (r.match(request.method, parts, params)) {
      route = &r;
      break;
    }
    Params ignored;
    for (const auto* m : {"GET", "POST", "PUT"}) {
      if (r.match(m, parts, ignored)) path_known = true;
    }
  }
  if (!route) {
    return path_known ? error_response(405, "method_not_allowed", request.method + " is not supported here")
                      : error_response(404, "not_found", "no route for " + request.path);
  }

  json body = json::object();
  if (!request.body.empty()) {
    body = json::parse(request.body, nullptr, false);
    if (body.is_discarded()) return error_response(400, "malformed_json", "request body is not valid JSON");
  }
  try {
    ApiResponse response = route->handler(params, body, request, clock_.now());
    if (request.method != "GET" && on_mutation_) on_mutation_();
    return response;
  } catch (const Error& e) {
    return error_response(http_status(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    return error_response(422, to_string(ErrorCode::Validation), std::string("malformed request: ") + e.what());
  }
}

ApiResponse Api::call(const std::string& method, const std::string& path, const json& body,
                      const std::map<std::string, std::string>& query) {
  ApiRequest req;
  req.method = method;
  req.path = path;
  req.query = query;
  if (!body.is_null()) req.body = body.dump();
  const std::string& token = engine_.config().api_token;
  if (!token.empty()) req.authorization = "Bearer " + token;
  return handle(req);
}

}  // namespace studyhabit

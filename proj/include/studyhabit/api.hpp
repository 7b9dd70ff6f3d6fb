#pragma once

// Transport-independent HTTP+JSON API over the engine. The server adapter in
// server.hpp and the tests both call Api::handle directly.

#include <atomic>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "studyhabit/engine.hpp"

namespace studyhabit {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

// A clock the caller moves by hand; used by tests and the simulator.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start) : now_(start.time_since_epoch().count()) {}
  Timestamp now() const override { return Timestamp{std::chrono::seconds{now_.load()}}; }
  void set(Timestamp t) { now_ = t.time_since_epoch().count(); }
  void advance(Minutes d) { now_ += std::chrono::duration_cast<std::chrono::seconds>(d).count(); }

 private:
  std::atomic<long long> now_;
};

struct ApiRequest {
  std::string method;
  std::string path;  // without query string
  std::string body;
  std::map<std::string, std::string> query;
  std::string authorization;  // raw Authorization header
};

struct ApiResponse {
  int status = 200;
  json body;
};

int http_status(ErrorCode code);

class Api {
 public:
  // `on_mutation` runs after every successful non-GET request (the server
  // uses it to persist).
  Api(Engine& engine, const Clock& clock, std::function<void()> on_mutation = {});
  ~Api();
  Api(const Api&) = delete;
  Api& operator=(const Api&) = delete;

  ApiResponse handle(const ApiRequest& request);

  // Convenience for tests and tools.
  ApiResponse call(const std::string& method, const std::string& path, const json& body = nullptr,
                   const std::map<std::string, std::string>& query = {});

  // Method and path pattern of every route, e.g. "GET /students/{id}".
  std::vector<std::string> routes() const;

 private:
  struct Route;
  Engine& engine_;
  const Clock& clock_;
  std::function<void()> on_mutation_;
  std::vector<Route> routes_;
};

}  // namespace studyhabit

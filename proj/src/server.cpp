#include "studyhabit/server.hpp"

#include <httplib.h>

#include <iostream>
#include <thread>

namespace studyhabit {

Notifier::WebhookFn http_webhook(const std::string& url) {
  // Split "scheme://host:port/path" into the client base and the path.
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return [base, path](const json& payload) {
    httplib::Client client(base);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(2, 0);
    const auto res = client.Post(path, payload.dump(), "application/json");
    return res && res->status >= 200 && res->status < 300;
  };
}

void run_server(Engine& engine, FileStore* store, const ServerOptions& options, std::atomic<bool>& stop) {
  SystemClock clock;
  auto persist = [&] {
    if (store) store->save(engine.snapshot());
  };
  Api api(engine, clock, persist);
  if (!options.webhook_url.empty()) engine.set_webhook(http_webhook(options.webhook_url));

  httplib::Server server;
  auto handler = [&](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request;
    request.method = req.method;
    request.path = req.path;
    request.body = req.body;
    request.authorization = req.get_header_value("Authorization");
    for (const auto& [k, v] : req.params) request.query[k] = v;
    const ApiResponse response = api.handle(request);
    res.status = response.status;
    res.set_content(response.body.dump(), "application/json");
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Put(".*", handler);
  server.Delete(".*", handler);

  std::thread dispatcher([&] {
    auto next = std::chrono::steady_clock::now();
    while (!stop) {
      if (std::chrono::steady_clock::now() >= next) {
        try {
          engine.tick(clock.now());
          persist();
        } catch (const std::exception& e) {
          std::cerr << "tick failed: " << e.what() << '\n';
        }
        next = std::chrono::steady_clock::now() + options.tick_interval;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
  });

  const int port = options.port == 0 ? server.bind_to_any_port(options.host)
                                     : (server.bind_to_port(options.host, options.port) ? options.port : -1);
  if (port <= 0) {
    stop = true;
    dispatcher.join();
    throw Error(ErrorCode::Configuration,
                "cannot listen on " + options.host + ":" + std::to_string(options.port));
  }
  if (options.on_listening) options.on_listening(port);
  server.listen_after_bind();
  stop = true;
  dispatcher.join();
}

}  // namespace studyhabit

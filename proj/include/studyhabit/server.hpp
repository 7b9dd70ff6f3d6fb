#pragma once

// HTTP server binding the API to a socket, with a background dispatcher that
// ticks the engine at a fixed interval.

#include <atomic>
#include <functional>
#include <string>

#include "studyhabit/api.hpp"
#include "studyhabit/store.hpp"

namespace studyhabit {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // Called once the socket is bound, with the actual port.
  std::function<void(int)> on_listening;
  std::chrono::seconds tick_interval{30};
  std::string webhook_url;  // e.g. http://127.0.0.1:9000/hook; empty disables the webhook
};

// Returns a webhook function that POSTs the payload to `url` and reports
// whether the receiver answered 2xx.
Notifier::WebhookFn http_webhook(const std::string& url);

// Blocks until `stop` becomes true (checked between ticks) or the listener
// fails. `store` may be null for an in-memory server.
void run_server(Engine& engine, FileStore* store, const ServerOptions& options, std::atomic<bool>& stop);

}  // namespace studyhabit

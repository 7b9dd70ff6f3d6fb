// habitctl: operator CLI for the study-habit service.
//
// Environment: STUDYHABIT_STORE (store directory), STUDYHABIT_PORT (serve
// port), STUDYHABIT_CONFIG (engine config file). Flags override them.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <iostream>
#include <sstream>

#include "studyhabit/api.hpp"
#include "studyhabit/server.hpp"
#include "studyhabit/sim.hpp"
#include "studyhabit/store.hpp"

using namespace studyhabit;

namespace {

std::atomic<bool> g_stop{false};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Validation, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

EngineConfig load_config(const std::string& path) {
  return path.empty() ? EngineConfig{} : EngineConfig::load_file(path);
}

// Builds an engine from the config and restores the stored state, if any.
std::unique_ptr<Engine> open_engine(const std::string& config_path, FileStore& store) {
  auto engine = std::make_unique<Engine>(load_config(config_path));
  if (auto state = store.load()) engine->restore(*state);
  return engine;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Study-habit engine operator tool"};
  app.require_subcommand(1);
  std::string store_dir = env_or("STUDYHABIT_STORE", "studyhabit-data");
  std::string config_path = env_or("STUDYHABIT_CONFIG", "");
  app.add_option("--store", store_dir, "Store directory");
  app.add_option("--config", config_path, "Engine config JSON file");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API with the background dispatcher");
  ServerOptions server_options;
  server_options.port = std::atoi(env_or("STUDYHABIT_PORT", "8080").c_str());
  int tick_seconds = 30;
  serve->add_option("--host", server_options.host);
  serve->add_option("--port", server_options.port, "0 picks a free port");
  serve->add_option("--tick-seconds", tick_seconds)->check(CLI::PositiveNumber);
  serve->add_option("--webhook", server_options.webhook_url, "URL that receives every delivery as a POST");

  auto* seed = app.add_subcommand("seed", "Create a deterministic cohort of students in a fresh store");
  int seed_students = 30;
  std::uint64_t seed_value = 1;
  seed->add_option("--students", seed_students)->required()->check(CLI::PositiveNumber);
  seed->add_option("--seed", seed_value)->required();

  auto* ingest = app.add_subcommand("ingest-ttm", "Ingest a JSON-lines file of test attempts");
  std::string ingest_file;
  ingest->add_option("file", ingest_file)->required();

  auto* pair = app.add_subcommand("pair", "Pair a class for peer explanation on a topic");
  std::string pair_class;
  std::string pair_topic;
  pair->add_option("--class", pair_class)->required();
  pair->add_option("--topic", pair_topic)->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Run the synthetic-student simulation");
  SimOptions sim;
  std::string profiles_file;
  int sim_students = 30;
  bool no_gate = false;
  simulate_cmd->add_option("--weeks", sim.weeks)->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", sim.seed);
  simulate_cmd->add_option("--profiles", profiles_file, "JSON file of student profiles");
  simulate_cmd->add_option("--students", sim_students, "Default profile count when no file is given")
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_flag("--no-gate", no_gate, "Disable the trigger gate (baseline run)");

  auto* report = app.add_subcommand("report", "Print a student's record and metrics");
  std::string report_student;
  report->add_option("--student", report_student)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) {
      FileStore store(store_dir);
      auto holder = open_engine(config_path, store);
      Engine& engine = *holder;
      engine.set_event_listener([&store](const json& e) { store.append_event(e); });
      server_options.tick_interval = std::chrono::seconds(tick_seconds);
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      server_options.on_listening = [&](int port) {
        std::cerr << "listening on " << server_options.host << ":" << port << '\n';
      };
      run_server(engine, &store, server_options, g_stop);
      return 0;
    }
    if (seed->parsed()) {
      FileStore store(store_dir);
      Engine engine(load_config(config_path));
      const auto ids = seed_cohort(engine, default_profiles(seed_students, seed_value), seed_value);
      store.save(engine.snapshot());
      std::cout << json{{"students", ids.size()}, {"store", store.state_path().string()}}.dump() << '\n';
      return 0;
    }
    if (ingest->parsed()) {
      FileStore store(store_dir);
      auto holder = open_engine(config_path, store);
      Engine& engine = *holder;
      const auto result = engine.ingest_ttm_jsonl(read_file(ingest_file));
      store.save(engine.snapshot());
      std::cout << json(result).dump(2) << '\n';
      return result.rejected == 0 ? 0 : 2;
    }
    if (pair->parsed()) {
      FileStore store(store_dir);
      auto holder = open_engine(config_path, store);
      Engine& engine = *holder;
      engine.set_event_listener([&store](const json& e) { store.append_event(e); });
      SystemClock clock;
      Api api(engine, clock);
      const auto res = api.call("POST", "/classes/" + pair_class + "/pairings", {{"topic", pair_topic}});
      std::cout << res.body.dump(2) << '\n';
      if (res.status >= 300) return 1;
      store.save(engine.snapshot());
      return 0;
    }
    if (simulate_cmd->parsed()) {
      sim.config = load_config(config_path);
      sim.gate_enabled = !no_gate;
      const auto profiles = profiles_file.empty() ? default_profiles(sim_students, sim.seed)
                                                  : profiles_from_json(json::parse(read_file(profiles_file)));
      std::cout << to_json(simulate(profiles, sim)).dump(2) << '\n';
      return 0;
    }
    if (report->parsed()) {
      FileStore store(store_dir);
      auto holder = open_engine(config_path, store);
      Engine& engine = *holder;
      SystemClock clock;
      const StudentId id(report_student);
      json out{{"student", public_json(engine.student(id))}, {"metrics", engine.metrics(id, clock.now())}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#pragma once

// File-backed persistence: the engine snapshot as one JSON document, replaced
// atomically on every save, plus an append-only JSON-lines event log.

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>

#include "studyhabit/core.hpp"

namespace studyhabit {

class FileStore {
 public:
  explicit FileStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path state_path() const { return dir_ / "state.json"; }
  std::filesystem::path events_path() const { return dir_ / "events.jsonl"; }

  // nullopt when no state has been saved yet.
  std::optional<json> load() const;
  // Writes a temporary file and renames it over state.json.
  void save(const json& snapshot);
  void append_event(const json& event);

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::ofstream events_;
};

}  // namespace studyhabit

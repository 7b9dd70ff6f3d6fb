#include "studyhabit/store.hpp"

#include <sstream>

namespace studyhabit {

namespace fs = std::filesystem;

FileStore::FileStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::Configuration, "cannot create store directory " + dir_.string() + ": " + ec.message());
  events_.open(events_path(), std::ios::app);
  if (!events_) throw Error(ErrorCode::Configuration, "cannot open " + events_path().string());
}

std::optional<json> FileStore::load() const {
  std::ifstream in(state_path());
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::Configuration, state_path().string() + " is not valid JSON");
  return doc;
}

void FileStore::save(const json& snapshot) {
  std::lock_guard lock(mutex_);
  const fs::path tmp = dir_ / "state.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << snapshot.dump(1) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::Configuration, "failed writing " + tmp.string());
  }
  fs::rename(tmp, state_path());
}

void FileStore::append_event(const json& event) {
  std::lock_guard lock(mutex_);
  events_ << event.dump() << '\n';
  events_.flush();
}

}  // namespace studyhabit

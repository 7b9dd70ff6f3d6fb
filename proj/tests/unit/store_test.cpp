#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "studyhabit/store.hpp"

using namespace studyhabit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("studyhabit_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(FileStore, EmptyThenSaveLoad) {
  const auto dir = fresh_dir("store_roundtrip");
  FileStore store(dir);
  EXPECT_TRUE(fs::exists(dir));
  EXPECT_FALSE(store.load().has_value());
  const json snap{{"schema_version", 1}, {"students", json::array({"a"})}};
  store.save(snap);
  EXPECT_EQ(*store.load(), snap);
  EXPECT_FALSE(fs::exists(dir / "state.json.tmp"));
  store.save(json{{"schema_version", 1}});
  EXPECT_EQ(*FileStore(dir).load(), (json{{"schema_version", 1}}));
  fs::remove_all(dir);
}

TEST(FileStore, AppendOnlyEvents) {
  const auto dir = fresh_dir("store_events");
  {
    FileStore store(dir);
    store.append_event({{"type", "a"}});
    store.append_event({{"type", "b"}});
  }
  {
    FileStore store(dir);
    store.append_event({{"type", "c"}});
  }
  std::ifstream in(dir / "events.jsonl");
  std::string line;
  std::vector<std::string> types;
  while (std::getline(in, line)) types.push_back(json::parse(line).at("type"));
  EXPECT_EQ(types, (std::vector<std::string>{"a", "b", "c"}));
  fs::remove_all(dir);
}

TEST(FileStore, CorruptStateIsAnError) {
  const auto dir = fresh_dir("store_corrupt");
  FileStore store(dir);
  std::ofstream(dir / "state.json") << "{not json";
  EXPECT_THROW(store.load(), Error);
  fs::remove_all(dir);
}

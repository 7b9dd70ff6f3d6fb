#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "studyhabit/config.hpp"

using namespace studyhabit;

TEST(Config, DefaultsValidate) {
  EngineConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.fbm.activation_threshold, 0.25);
  EXPECT_EQ(c.hook.internal_after, 5);
  EXPECT_EQ(c.rewards.delivery_probability, 0.7);
  EXPECT_EQ(c.scheduler.session_minutes, 60);
  EXPECT_EQ(c.preparation.reminder_lead, std::chrono::hours(48));
}

TEST(Config, RejectsThresholdAboveSplitProduct) {
  json j = EngineConfig{}.to_json();
  j["fbm"]["activation_threshold"] = 0.3;
  try {
    EngineConfig::from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Configuration);
  }
}

TEST(Config, RejectsBadProbability) {
  json j = EngineConfig{}.to_json();
  j["rewards"]["delivery_probability"] = 1.5;
  EXPECT_THROW(EngineConfig::from_json(j), Error);
}

TEST(Config, RoundTripAndPartialOverride) {
  const EngineConfig c;
  EXPECT_EQ(EngineConfig::from_json(c.to_json()).to_json(), c.to_json());
  const auto partial = EngineConfig::from_json({{"seed", 9}, {"scheduler", {{"grace_minutes", 20}}}});
  EXPECT_EQ(partial.seed, 9u);
  EXPECT_EQ(partial.scheduler.grace_minutes, 20);
  EXPECT_EQ(partial.scheduler.session_minutes, 60);
}

TEST(Config, LoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "studyhabit_config_test.json";
  {
    std::ofstream out(path);
    out << json{{"api_token", "secret"}}.dump();
  }
  EXPECT_EQ(EngineConfig::load_file(path.string()).api_token, "secret");
  std::filesystem::remove(path);
  EXPECT_THROW(EngineConfig::load_file(path.string()), Error);
}

TEST(Config, ShippedDefaultFileMatchesDefaults) {
  const auto path = std::filesystem::path(STUDYHABIT_SOURCE_DIR) / "data" / "engine_config.json";
  EXPECT_EQ(EngineConfig::load_file(path.string()).to_json(), EngineConfig{}.to_json());
}

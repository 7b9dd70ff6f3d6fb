#pragma once

// Engine-wide configuration: the tunable thresholds and durations the
// modules use, loaded from one JSON document. Missing keys keep their
// defaults; validate() runs on load.

#include <cstdint>
#include <string>

#include "studyhabit/core.hpp"
#include "studyhabit/fbm.hpp"
#include "studyhabit/group_study.hpp"
#include "studyhabit/hook.hpp"
#include "studyhabit/notifier.hpp"
#include "studyhabit/preparation.hpp"
#include "studyhabit/scheduler.hpp"

namespace studyhabit {

inline constexpr int kSchemaVersion = 1;

struct EngineConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;
  // Monday of week 0, interpreted in each student's own timezone.
  absl::CivilDay semester_start{2026, 9, 7};
  std::string api_token;  // empty: no token required

  FbmConfig fbm;
  HookConfig hook;
  RewardCatalog rewards = RewardCatalog::standard();
  SchedulerConfig scheduler;
  PreparationConfig preparation;
  GroupStudyConfig group;
  NotifierConfig notifier;
  BandThresholds bands;
  int target_prerequisite_cycles = 4;
  Minutes session_reminder_lead = Minutes{10};

  // Throws Configuration on any inconsistent value, including tau > m0 * a0.
  void validate() const;

  static EngineConfig from_json(const json& j);
  json to_json() const;
  static EngineConfig load_file(const std::string& path);
};

}  // namespace studyhabit

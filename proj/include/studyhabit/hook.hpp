#pragma once

// Hook cycle state machine: Triggered -> Acted -> Rewarded -> Invested, one
// open cycle per (student, category), with a variable-reward sampler and the
// external -> internal trigger progression.

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "studyhabit/core.hpp"
#include "studyhabit/fbm.hpp"
#include "studyhabit/rng.hpp"

namespace studyhabit {

enum class HookPhase { Triggered, Acted, Rewarded, Invested, Abandoned };
enum class TriggerSource { External, Internal };
enum class HookEvent { ActionCompleted, RewardDelivered, InvestmentRecorded };
enum class RewardKind { PraiseMessage, ProgressColorChange, StreakBadge, Endorsement };

std::string_view to_string(HookPhase p);
std::string_view to_string(TriggerSource s);
std::string_view to_string(HookEvent e);
std::string_view to_string(RewardKind k);
HookPhase hook_phase_from(std::string_view text);
TriggerSource trigger_source_from(std::string_view text);
RewardKind reward_kind_from(std::string_view text);

struct RewardInstance {
  RewardKind kind = RewardKind::PraiseMessage;
  std::string payload;
  Timestamp delivered_at{};
  bool operator==(const RewardInstance&) const = default;
};

void to_json(json& j, const RewardInstance& r);
void from_json(const json& j, RewardInstance& r);

struct RewardEntry {
  RewardKind kind = RewardKind::PraiseMessage;
  double weight = 1.0;
  std::vector<std::string> templates;
};

struct RewardCatalog {
  std::vector<RewardEntry> entries;
  double delivery_probability = 0.7;

  // Throws Configuration on an empty catalog, a non-positive weight, an entry
  // without templates or p outside [0,1].
  void validate() const;
  static RewardCatalog from_json(const json& j);
  json to_json() const;
  // Catalog of praise/badge rewards used when no file is configured.
  static RewardCatalog standard();
};

// With probability p a reward whose kind is drawn proportionally to the entry
// weights; otherwise nullopt. Deterministic for a given generator state.
std::optional<RewardInstance> draw_reward(const RewardCatalog& catalog, Rng& rng, Timestamp now = {});

TriggerSource trigger_source_for_next(int consecutive_completions, int internal_after = 5);

struct HookCycle {
  std::string cycle_id;
  StudentId student_id;
  HabitCategory category = HabitCategory::Scheduling;
  HookPhase phase = HookPhase::Triggered;
  TriggerSource source = TriggerSource::External;
  TriggerType trigger_type = TriggerType::Signal;
  // Indexed by Triggered..Invested.
  std::array<std::optional<Timestamp>, 4> phase_at{};
  std::optional<Timestamp> abandoned_at;
  std::optional<RewardInstance> reward;
  std::string subject;  // what the cycle is about, e.g. a session id

  bool open() const noexcept { return phase != HookPhase::Invested && phase != HookPhase::Abandoned; }
  Timestamp last_progress() const;
};

void to_json(json& j, const HookCycle& c);
void from_json(const json& j, HookCycle& c);

struct HookConfig {
  int internal_after = 5;
  Minutes stale_after = std::chrono::hours(24 * 7);
};

// Thread-safe; mutations are serialized per student.
class HookEngine {
 public:
  using EventSink = std::function<void(const json&)>;

  explicit HookEngine(HookConfig config = {}, EventSink sink = {});

  // Precondition error unless decision fires; Conflict if the student already
  // has an open cycle in the category.
  HookCycle open_cycle(const StudentId& student, HabitCategory category, const TriggerDecision& decision,
                       TriggerSource source, Timestamp now, std::string subject = {});

  // Applies one event. Out-of-order events throw IllegalTransition without
  // touching the cycle. A cycle idle longer than the TTL is abandoned first
  // (resetting the streak) and the event is then rejected.
  HookCycle advance(const std::string& cycle_id, HookEvent event, Timestamp now,
                    std::optional<RewardInstance> reward = std::nullopt);

  HookCycle abandon(const std::string& cycle_id, Timestamp now, const std::string& reason);
  // Abandons every open cycle idle longer than the TTL.
  std::vector<HookCycle> expire_stale(Timestamp now);

  std::optional<HookCycle> find(const std::string& cycle_id) const;
  std::optional<HookCycle> open_cycle_for(const StudentId& student, HabitCategory category) const;
  std::vector<HookCycle> cycles_of(const StudentId& student) const;
  int consecutive_completions(const StudentId& student, HabitCategory category) const;
  int completed_cycles(const StudentId& student, HabitCategory category) const;
  // Closed cycles of the student across categories, oldest first (true = Invested).
  std::vector<bool> outcome_history(const StudentId& student) const;
  TriggerSource next_source(const StudentId& student, HabitCategory category) const;

  const HookConfig& config() const noexcept { return config_; }
  json snapshot() const;
  void restore(const json& snapshot);

 private:
  struct StudentState {
    mutable std::mutex mutex;
    std::vector<HookCycle> cycles;  // creation order
    std::vector<bool> outcomes;     // close order
    std::array<int, 3> streak{};
    std::array<int, 3> completed{};
    std::array<std::optional<std::size_t>, 3> open_index{};
  };

  StudentState& state_for(const StudentId& student);
  const StudentState* state_if(const StudentId& student) const;
  StudentState& owner_state(const std::string& cycle_id);
  void close(StudentState& st, HookCycle& cycle, bool completed);
  void log(const HookCycle& cycle, std::string_view event, Timestamp at, const std::string& detail = {});

  HookConfig config_;
  EventSink sink_;
  mutable std::shared_mutex registry_mutex_;
  std::map<StudentId, std::unique_ptr<StudentState>> students_;
  std::map<std::string, StudentId> cycle_owner_;
  std::uint64_t next_cycle_ = 1;
  std::mutex sink_mutex_;
};

}  // namespace studyhabit

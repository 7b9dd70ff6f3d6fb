#pragma once

// The study-habit engine: student records, the scheduling wizard, weekly
// session materialization, checklists, study groups and the trigger loop,
// wired to the hook engine and the notifier.
//
// Every public member takes the current time explicitly, which lets the
// simulator drive the same engine as the server. Calls are serialized on one
// mutex.

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "studyhabit/config.hpp"
#include "studyhabit/group_study.hpp"
#include "studyhabit/hook.hpp"
#include "studyhabit/notifier.hpp"
#include "studyhabit/performance.hpp"
#include "studyhabit/preparation.hpp"
#include "studyhabit/scheduler.hpp"
#include "studyhabit/ttm.hpp"

namespace studyhabit {

// Wizard progress. Each step unlocks the next one only.
enum class WizardStep { New, Timetable, Preference, Planned };

std::string_view to_string(WizardStep s);
WizardStep wizard_step_from(std::string_view text);

// A weekly recurring study slot the student accepted.
struct PlanSlot {
  int slot_no = 0;
  ClassId class_id;
  TimeBlock block;  // kind Study
  Timestamp accepted_at{};
};

void to_json(json& j, const PlanSlot& p);
void from_json(const json& j, PlanSlot& p);

struct Relocation {
  int slot_no = 0;
  SlotSuggestion suggestion;
};

struct StudentRecord {
  StudentId id;
  std::string display_name;
  std::string timezone = "UTC";
  std::vector<ClassId> classes;
  bool share_schedule = false;
  std::optional<LikertResponseSet> responses;
  std::optional<TimePreference> preference;
  std::optional<WeekTimetable> timetable;
  WizardStep step = WizardStep::New;
  Timestamp created_at{};

  std::vector<PlanSlot> plan;
  int next_slot = 1;
  std::map<ClassId, int> session_target;  // sessions per week wanted for a class
  std::vector<TimeBlock> rejected;        // declined suggestions
  std::vector<Relocation> relocations;    // pending relocation proposals
  std::set<int> materialized_weeks;
  std::set<std::string> scheduled_prompts;
  int adapted_week = -1;
  std::optional<int> last_place_week;
  std::optional<int> last_invite_week;

  bool enrolled(const ClassId& c) const;
  int planned_count(const ClassId& c) const;
  std::vector<TimeBlock> plan_blocks() const;
};

json public_json(const StudentRecord& r);
void to_json(json& j, const StudentRecord& r);
void from_json(const json& j, StudentRecord& r);

struct TickReport {
  int materialized = 0;
  int missed = 0;
  int abandoned = 0;
  int delivered = 0;
  int skipped = 0;
  int deferred = 0;
  int dropped = 0;
};

// A reward shown to the student, with the context it came from.
struct FeedReward {
  RewardInstance reward;
  std::string context;  // e.g. "checkout", "checklist", "endorsement"
};

class Engine {
 public:
  using EventListener = std::function<void(const json&)>;

  explicit Engine(EngineConfig config = {}, PlaceCatalog places = PlaceCatalog::standard());
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EngineConfig& config() const noexcept { return config_; }
  void set_event_listener(EventListener fn);
  void set_webhook(Notifier::WebhookFn fn);
  void set_gate_enabled(bool on);

  // ---- students and wizard ----
  // Body: {student_id, display_name?, timezone?, classes?, share_schedule?}.
  StudentRecord create_student(const json& body, Timestamp now);
  StudentRecord student(const StudentId& id) const;
  std::vector<StudentId> student_ids() const;
  void set_sharing(const StudentId& id, bool share);

  // Wizard steps 1-2 (classes and commitments). May be repeated; plan slots
  // that clash with the new timetable are dropped.
  StudentRecord put_timetable(const StudentId& id, WeekTimetable timetable, Timestamp now);
  // Step 3. Precondition error before a timetable with at least one class.
  StudentRecord put_preference(const StudentId& id, TimePreference pref, Timestamp now);
  // Step 4. One suggestion for each class still short of its weekly target.
  json schedule_suggestions(const StudentId& id) const;
  void reject_suggestion(const StudentId& id, const ClassId& cls, const TimeBlock& block);
  // Accepts a weekly slot: the given block, or the current suggestion for the
  // class. `replaces` moves an existing slot instead of adding one.
  PlanSlot accept_session(const StudentId& id, const ClassId& cls, std::optional<TimeBlock> block,
                          std::optional<int> replaces, Timestamp now);

  // ---- sessions ----
  std::vector<StudySession> sessions_of(const StudentId& id) const;
  StudySession session(const SessionId& id) const;
  StudySession check_in(const SessionId& id, Timestamp now);
  // Returns {session, adherence, rewards}.
  json check_out(const SessionId& id, int effectiveness, int environment, Timestamp now);

  // ---- preparation ----
  void put_materials(const MaterialsManifest& manifest, Timestamp now);
  std::vector<Checklist> checklists(const StudentId& id, int week) const;
  json tick_item(const StudentId& id, const std::string& item_id, Timestamp now);
  SummaryNote submit_note(const StudentId& id, const ClassId& cls, int week, const std::string& text, Timestamp now);
  std::vector<SummaryNote> notes_of(const StudentId& id) const;

  // ---- group study ----
  HelperResult partner_suggestions(const StudentId& id, const ClassId& cls, const std::string& topic) const;
  // Body: {class_id, topic?, members: [ids]}.
  StudyGroup create_group(const json& body, Timestamp now);
  StudyGroup group(const std::string& group_id) const;
  void rate_group(const std::string& group_id, const StudentId& rater, const std::map<StudentId, int>& ratings,
                  Timestamp now);
  EndorseOutcome endorse_member(const std::string& group_id, const StudentId& from, const StudentId& to,
                                Timestamp now);
  // Pairs every enrolled student with a score for the topic and sends each
  // member the pairing prompt.
  PairingResult pair_class(const ClassId& cls, const std::string& topic, Timestamp now);
  std::vector<StudyPair> pairs_of(const StudentId& id) const;
  int endorsements_received(const StudentId& id) const;

  // ---- scores ----
  IngestReport ingest_ttm(const std::vector<json>& rows);
  IngestReport ingest_ttm(const std::vector<TestAttempt>& rows);
  IngestReport ingest_ttm_jsonl(std::string_view text);
  const TtmStore& ttm() const noexcept { return ttm_; }
  void submit_responses(const StudentId& id, const LikertResponseSet& responses);
  json performance(const StudentId& id) const;
  HabitCategory focus_category(const StudentId& id) const;

  // ---- feed and metrics ----
  json feed(const StudentId& id) const;
  std::vector<FeedReward> rewards_of(const StudentId& id) const;
  json metrics(const StudentId& id, Timestamp now) const;
  int week_of(const StudentId& id, Timestamp now) const;

  // Materializes sessions and prompts, marks missed sessions, expires stale
  // cycles and dispatches due triggers.
  TickReport tick(Timestamp now);

  const HookEngine& hook() const noexcept { return hook_; }
  const Notifier& notifier() const noexcept { return notifier_; }

  json snapshot() const;
  void restore(const json& snap);

 private:
  StudentRecord& record(const StudentId& id);
  const StudentRecord& record(const StudentId& id) const;
  const TimeZone& zone(const StudentRecord& r) const;
  int week_index(const StudentRecord& r, Timestamp now) const;
  absl::CivilDay monday_of_week(int week) const;

  void ensure_week(StudentRecord& r, int week, Timestamp now, TickReport& report);
  bool materialize(StudentRecord& r, const PlanSlot& slot, int week, Timestamp now);
  void schedule_preparation(StudentRecord& r, const TimeBlock& meeting, int week, Timestamp now);
  void ensure_checklist(const StudentRecord& r, const ClassId& cls, int week);
  void adapt_targets(StudentRecord& r, int week);
  std::vector<SlotSuggestion> next_suggestions(const StudentRecord& r, std::vector<ClassId>* unschedulable) const;
  bool enqueue(TriggerRequest req, Timestamp now);

  GateInputs gate(const StudentId& id, HabitCategory c) const;
  void on_fired(const TriggerRequest& req, const TriggerDecision& decision, Timestamp now);
  std::optional<RewardInstance> draw(const std::string& cycle_id, Timestamp now) const;
  // Advances the open cycle of the category to Invested (or to Rewarded when
  // `invest` is false) from wherever it is; no-op without an open cycle.
  // A reward in `offered` is used instead of a drawn one and then cleared.
  std::optional<HookCycle> progress_cycle(const StudentId& id, HabitCategory c, bool invest, Timestamp now,
                                          const std::string& context, std::optional<RewardInstance>* offered);
  void give_reward(const StudentId& id, RewardInstance reward, std::string context);
  void emit(json event);
  void sweep_missed(Timestamp now, TickReport& report);
  Adherence adherence_of(const StudentId& id, std::optional<int> week = std::nullopt) const;

  EngineConfig config_;
  PlaceCatalog places_;
  const ModelCatalog& catalog_;
  EventListener listener_;
  HookEngine hook_;
  Notifier notifier_;
  TtmStore ttm_;

  mutable std::recursive_mutex mutex_;
  std::map<StudentId, StudentRecord> students_;
  mutable std::map<std::string, TimeZone> zones_;
  std::map<SessionId, StudySession> sessions_;
  std::map<SessionId, int> session_slot_;
  std::set<SessionId> open_sessions_;  // Scheduled or Notified
  std::map<std::pair<ClassId, int>, MaterialsManifest> manifests_;
  std::map<std::tuple<StudentId, ClassId, int>, Checklist> checklists_;
  std::vector<SummaryNote> notes_;
  std::map<std::string, StudyGroup> groups_;
  std::map<std::string, StudyPair> pairs_;
  std::map<StudentId, std::vector<FeedReward>> rewards_;
  std::uint64_t next_group_ = 1;
  std::uint64_t next_pairing_ = 1;
};

}  // namespace studyhabit

#pragma once

// Scheduling features: free-time search over the weekly grid, one-session-per-
// class suggestions, the study-session lifecycle with check-in/out ratings,
// and the adaptive rules (extra sessions, relocation, study-place tips).

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "studyhabit/core.hpp"
#include "studyhabit/rng.hpp"

namespace studyhabit {

struct Interval {
  int start_min = 0;
  int end_min = 0;
  int length() const noexcept { return end_min - start_min; }
  bool operator==(const Interval&) const = default;
};

using WeekIntervals = std::array<std::vector<Interval>, kDaysPerWeek>;

// Maximal free intervals per day: the waking window minus every non-Study
// block (and minus `also_busy`), sorted ascending.
WeekIntervals free_intervals(const WeekTimetable& timetable, std::span<const TimeBlock> also_busy = {});

enum class TimePreference { Early, Late };

std::string_view to_string(TimePreference p);
TimePreference time_preference_from(std::string_view text);

struct SchedulerConfig {
  int session_minutes = 60;
  int snap_minutes = 30;
  MinuteWindow early_window{8 * 60, 12 * 60};
  MinuteWindow late_window{18 * 60, 23 * 60};
  int grace_minutes = 30;
  double adapt_threshold = 60.0;
  int adapt_cap = 3;
  int relocation_low_rating = 2;
  int relocation_run = 2;
  int place_low_rating = 2;
  int place_run = 3;

  void validate() const;
};

struct SlotSuggestion {
  ClassId class_id;
  TimeBlock block;  // kind Study
  double score = 0.0;
  bool operator==(const SlotSuggestion&) const = default;
};

void to_json(json& j, const SlotSuggestion& s);

struct SuggestionResult {
  std::vector<SlotSuggestion> suggestions;
  std::vector<ClassId> unschedulable;
};

// Every feasible slot for a class in suggestion order: the class's own weekday
// first, then the following days (wrapping); within a day the preferred window
// before the rest of the waking window; earliest start first. Starts are
// snapped to the configured boundary.
std::vector<SlotSuggestion> candidate_slots(const WeekTimetable& timetable, const ClassId& cls, TimePreference pref,
                                            const SchedulerConfig& config = {},
                                            std::span<const TimeBlock> taken = {});

// One suggestion per class, in the given class order; each accepted slot is
// unavailable to later classes. Classes without a feasible slot are reported
// as unschedulable.
SuggestionResult suggest_sessions(const WeekTimetable& timetable, std::span<const ClassId> classes,
                                  TimePreference pref, const SchedulerConfig& config = {},
                                  std::span<const TimeBlock> taken = {});

// +1 when the class mean is below threshold and the count is under the cap.
int adapt_session_count(double class_topic_mean, int current_count, double threshold = 60.0, int cap = 3);

enum class SessionState { Scheduled, Notified, CheckedIn, CheckedOut, Missed };

std::string_view to_string(SessionState s);
SessionState session_state_from(std::string_view text);

struct StudySession {
  SessionId id;
  StudentId student_id;
  ClassId class_id;
  TimeBlock block;
  int week = 0;
  Timestamp start{};
  Timestamp end{};
  SessionState state = SessionState::Scheduled;
  std::optional<int> effectiveness;
  std::optional<int> environment;
  std::optional<Timestamp> notified_at;
  std::optional<Timestamp> checked_in_at;
  std::optional<Timestamp> closed_at;  // check-out or missed

  bool terminal() const noexcept { return state == SessionState::CheckedOut || state == SessionState::Missed; }
};

void to_json(json& j, const StudySession& s);
void from_json(const json& j, StudySession& s);

// Lifecycle transitions. Each throws IllegalTransition from the wrong state or
// outside its time window, Validation on bad ratings, and leaves the session
// untouched on error.
void notify(StudySession& s, Timestamp now);
void check_in(StudySession& s, Timestamp now, Minutes grace = Minutes{30});
void check_out(StudySession& s, int effectiveness, int environment, Timestamp now);
void mark_missed(StudySession& s, Timestamp now, Minutes grace = Minutes{30});

struct Adherence {
  int checked_out = 0;
  int missed = 0;
  // CheckedOut / (CheckedOut + Missed); empty when nothing has resolved yet.
  std::optional<double> rate() const;
};

Adherence adherence(std::span<const StudySession> sessions, std::optional<int> week = std::nullopt);

// Next-best slot when the last `run` effectiveness ratings for the current
// slot are all <= the low threshold; ratings are oldest first.
std::optional<SlotSuggestion> propose_relocation(std::span<const int> effectiveness_ratings,
                                                 const WeekTimetable& timetable, const ClassId& cls,
                                                 const TimeBlock& current, TimePreference pref,
                                                 const SchedulerConfig& config = {},
                                                 std::span<const TimeBlock> taken = {});

struct Place {
  std::string name;
  std::string descriptor;
  bool operator==(const Place&) const = default;
};

struct PlaceCatalog {
  std::vector<Place> places;
  static PlaceCatalog from_json(const json& j);
  static PlaceCatalog standard();
};

// A uniformly drawn place when the last `run` environment ratings are all low,
// at most once per week (last_suggested_week == current_week suppresses it).
std::optional<Place> suggest_place(std::span<const int> environment_ratings, const PlaceCatalog& catalog, Rng& rng,
                                   std::optional<int> last_suggested_week, int current_week,
                                   const SchedulerConfig& config = {});

}  // namespace studyhabit

#include "studyhabit/scheduler.hpp"

#include <algorithm>

namespace studyhabit {

WeekIntervals free_intervals(const WeekTimetable& timetable, std::span<const TimeBlock> also_busy) {
  WeekIntervals out;
  for (int day = 0; day < kDaysPerWeek; ++day) {
    std::vector<Interval> busy;
    auto collect = [&](const TimeBlock& b) {
      if (b.day == day && b.kind != BlockKind::Study) busy.push_back({b.start_min, b.end_min});
    };
    for (const auto& b : timetable.blocks) collect(b);
    for (const auto& b : also_busy) {
      if (b.day == day) busy.push_back({b.start_min, b.end_min});
    }
    std::sort(busy.begin(), busy.end(),
              [](const Interval& a, const Interval& b) { return a.start_min < b.start_min; });

    const MinuteWindow w = timetable.waking_window[day];
    int cursor = w.start_min;
    for (const auto& b : busy) {
      if (b.start_min > cursor) {
        const int end = std::min(b.start_min, w.end_min);
        if (end > cursor) out[day].push_back({cursor, end});
      }
      cursor = std::max(cursor, b.end_min);
      if (cursor >= w.end_min) break;
    }
    if (cursor < w.end_min) out[day].push_back({cursor, w.end_min});
  }
  return out;
}

std::string_view to_string(TimePreference p) { return p == TimePreference::Early ? "early" : "late"; }

TimePreference time_preference_from(std::string_view text) {
  if (text == "early") return TimePreference::Early;
  if (text == "late") return TimePreference::Late;
  throw Error(ErrorCode::Validation, "preference must be 'early' or 'late'");
}

void SchedulerConfig::validate() const {
  if (session_minutes <= 0 || session_minutes > kMinutesPerDay) {
    throw Error(ErrorCode::Configuration, "session length must lie in 1..1440 minutes");
  }
  if (snap_minutes <= 0 || kMinutesPerDay % snap_minutes != 0) {
    throw Error(ErrorCode::Configuration, "snap must divide a day");
  }
  for (const auto& w : {early_window, late_window}) {
    if (w.start_min < 0 || w.end_min > kMinutesPerDay || w.start_min >= w.end_min) {
      throw Error(ErrorCode::Configuration, "preference window must satisfy 0 <= start < end <= 1440");
    }
  }
  if (grace_minutes < 0) throw Error(ErrorCode::Configuration, "grace must be >= 0");
  if (adapt_cap < 1) throw Error(ErrorCode::Configuration, "session cap must be >= 1");
  if (relocation_run < 1 || place_run < 1) throw Error(ErrorCode::Configuration, "rating runs must be >= 1");
}

void to_json(json& j, const SlotSuggestion& s) {
  j = json{{"class_id", s.class_id.str()}, {"block", s.block}, {"score", s.score}};
}

namespace {

int snap_up(int minute, int snap) { return (minute + snap - 1) / snap * snap; }

bool fits(const std::vector<Interval>& free, int start, int end) {
  for (const auto& iv : free) {
    if (iv.start_min <= start && end <= iv.end_min) return true;
  }
  return false;
}

int home_day(const WeekTimetable& timetable, const ClassId& cls) {
  const auto meetings = timetable.blocks_of(cls);
  return meetings.empty() ? 0 : meetings.front().day;
}

}  // namespace

std::vector<SlotSuggestion> candidate_slots(const WeekTimetable& timetable, const ClassId& cls, TimePreference pref,
                                            const SchedulerConfig& config, std::span<const TimeBlock> taken) {
  const WeekIntervals free = free_intervals(timetable, taken);
  const MinuteWindow preferred = pref == TimePreference::Early ? config.early_window : config.late_window;
  const int first_day = home_day(timetable, cls);
  const int len = config.session_minutes;

  std::vector<SlotSuggestion> out;
  for (int offset = 0; offset < kDaysPerWeek; ++offset) {
    const int day = (first_day + offset) % kDaysPerWeek;
    const MinuteWindow wake = timetable.waking_window[day];
    std::vector<int> emitted;
    auto emit = [&](int lo, int hi, bool in_pref) {
      for (int s = snap_up(lo, config.snap_minutes); s + len <= hi; s += config.snap_minutes) {
        if (std::find(emitted.begin(), emitted.end(), s) != emitted.end()) continue;
        if (!fits(free[day], s, s + len)) continue;
        emitted.push_back(s);
        TimeBlock b{day, s, s + len, BlockKind::Study, cls};
        out.push_back({cls, b, (in_pref ? 1.0 : 0.5) - 0.05 * offset});
      }
    };
    emit(std::max(preferred.start_min, wake.start_min), std::min(preferred.end_min, wake.end_min), true);
    emit(wake.start_min, wake.end_min, false);
  }
  return out;
}

SuggestionResult suggest_sessions(const WeekTimetable& timetable, std::span<const ClassId> classes,
                                  TimePreference pref, const SchedulerConfig& config,
                                  std::span<const TimeBlock> taken) {
  SuggestionResult result;
  std::vector<TimeBlock> used(taken.begin(), taken.end());
  for (const auto& cls : classes) {
    auto candidates = candidate_slots(timetable, cls, pref, config, used);
    if (candidates.empty()) {
      result.unschedulable.push_back(cls);
      continue;
    }
    used.push_back(candidates.front().block);
    result.suggestions.push_back(std::move(candidates.front()));
  }
  return result;
}

int adapt_session_count(double class_topic_mean, int current_count, double threshold, int cap) {
  if (current_count < 1) throw Error(ErrorCode::Validation, "a class has at least one session");
  return class_topic_mean < threshold && current_count < cap ? 1 : 0;
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Scheduled: return "scheduled";
    case SessionState::Notified: return "notified";
    case SessionState::CheckedIn: return "checked_in";
    case SessionState::CheckedOut: return "checked_out";
    case SessionState::Missed: return "missed";
  }
  return "scheduled";
}

SessionState session_state_from(std::string_view text) {
  for (auto s : {SessionState::Scheduled, SessionState::Notified, SessionState::CheckedIn, SessionState::CheckedOut,
                 SessionState::Missed}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::Validation, "unknown session state '" + std::string(text) + "'");
}

void to_json(json& j, const StudySession& s) {
  j = json{{"session_id", s.id.str()},
           {"student_id", s.student_id.str()},
           {"class_id", s.class_id.str()},
           {"block", s.block},
           {"week", s.week},
           {"start", to_iso8601(s.start)},
           {"end", to_iso8601(s.end)},
           {"state", to_string(s.state)}};
  j["effectiveness"] = s.effectiveness ? json(*s.effectiveness) : json(nullptr);
  j["environment"] = s.environment ? json(*s.environment) : json(nullptr);
  if (s.notified_at) j["notified_at"] = to_iso8601(*s.notified_at);
  if (s.checked_in_at) j["checked_in_at"] = to_iso8601(*s.checked_in_at);
  if (s.closed_at) j["closed_at"] = to_iso8601(*s.closed_at);
}

void from_json(const json& j, StudySession& s) {
  s.id = SessionId(j.at("session_id").get<std::string>());
  s.student_id = StudentId(j.at("student_id").get<std::string>());
  s.class_id = ClassId(j.at("class_id").get<std::string>());
  s.block = j.at("block").get<TimeBlock>();
  s.week = j.at("week").get<int>();
  s.start = parse_iso8601(j.at("start").get<std::string>());
  s.end = parse_iso8601(j.at("end").get<std::string>());
  s.state = session_state_from(j.at("state").get<std::string>());
  auto opt_int = [&](const char* key) -> std::optional<int> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<int>();
  };
  auto opt_ts = [&](const char* key) -> std::optional<Timestamp> {
    if (!j.contains(key)) return std::nullopt;
    return parse_iso8601(j[key].get<std::string>());
  };
  s.effectiveness = opt_int("effectiveness");
  s.environment = opt_int("environment");
  s.notified_at = opt_ts("notified_at");
  s.checked_in_at = opt_ts("checked_in_at");
  s.closed_at = opt_ts("closed_at");
}

namespace {

[[noreturn]] void illegal(const StudySession& s, std::string_view what) {
  throw Error(ErrorCode::IllegalTransition,
              std::string(what) + " not allowed for session " + s.id.str() + " in state " +
                  std::string(to_string(s.state)));
}

}  // namespace

void notify(StudySession& s, Timestamp now) {
  if (s.state != SessionState::Scheduled) illegal(s, "notify");
  s.state = SessionState::Notified;
  s.notified_at = now;
}

void check_in(StudySession& s, Timestamp now, Minutes grace) {
  if (s.state != SessionState::Notified) illegal(s, "check-in");
  if (now < s.start - grace || now > s.end) {
    throw Error(ErrorCode::IllegalTransition, "check-in for " + s.id.str() + " outside its window");
  }
  s.state = SessionState::CheckedIn;
  s.checked_in_at = now;
}

void check_out(StudySession& s, int effectiveness, int environment, Timestamp now) {
  if (effectiveness < 1 || effectiveness > 5 || environment < 1 || environment > 5) {
    throw Error(ErrorCode::Validation, "ratings must lie in 1..5");
  }
  if (s.state != SessionState::CheckedIn) illegal(s, "check-out");
  s.state = SessionState::CheckedOut;
  s.effectiveness = effectiveness;
  s.environment = environment;
  s.closed_at = now;
}

void mark_missed(StudySession& s, Timestamp now, Minutes grace) {
  if (s.state != SessionState::Scheduled && s.state != SessionState::Notified) illegal(s, "mark missed");
  if (now <= s.start + grace) {
    throw Error(ErrorCode::IllegalTransition, "session " + s.id.str() + " is still within its check-in grace");
  }
  s.state = SessionState::Missed;
  s.closed_at = now;
}

std::optional<double> Adherence::rate() const {
  const int total = checked_out + missed;
  if (total == 0) return std::nullopt;
  return static_cast<double>(checked_out) / total;
}

Adherence adherence(std::span<const StudySession> sessions, std::optional<int> week) {
  Adherence a;
  for (const auto& s : sessions) {
    if (week && s.week != *week) continue;
    if (s.state == SessionState::CheckedOut) ++a.checked_out;
    if (s.state == SessionState::Missed) ++a.missed;
  }
  return a;
}

std::optional<SlotSuggestion> propose_relocation(std::span<const int> effectiveness_ratings,
                                                 const WeekTimetable& timetable, const ClassId& cls,
                                                 const TimeBlock& current, TimePreference pref,
                                                 const SchedulerConfig& config, std::span<const TimeBlock> taken) {
  const auto run = static_cast<std::size_t>(config.relocation_run);
  if (effectiveness_ratings.size() < std::max<std::size_t>(run, 2)) return std::nullopt;
  const auto tail = effectiveness_ratings.last(run);
  if (!std::all_of(tail.begin(), tail.end(), [&](int r) { return r <= config.relocation_low_rating; })) {
    return std::nullopt;
  }
  for (auto& c : candidate_slots(timetable, cls, pref, config, taken)) {
    if (c.block.day == current.day && c.block.start_min == current.start_min) continue;
    if (c.block.overlaps(current)) continue;
    return c;
  }
  return std::nullopt;
}

PlaceCatalog PlaceCatalog::from_json(const json& j) {
  PlaceCatalog cat;
  try {
    for (const auto& p : j.at("places")) {
      cat.places.push_back({p.at("name").get<std::string>(), p.value("descriptor", "")});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string("malformed place catalog: ") + e.what());
  }
  if (cat.places.empty()) throw Error(ErrorCode::Configuration, "place catalog is empty");
  return cat;
}

PlaceCatalog PlaceCatalog::standard() {
  return {{
      {"Library reading room", "Silent floor with individual desks"},
      {"Library quiet carrels", "Bookable single-person study booths"},
      {"Faculty study hub", "Quiet zone with power and good lighting"},
      {"Postgraduate lounge after hours", "Usually empty in the evening"},
      {"Campus chapel annex", "Calm space open to all students"},
  }};
}

std::optional<Place> suggest_place(std::span<const int> environment_ratings, const PlaceCatalog& catalog, Rng& rng,
                                   std::optional<int> last_suggested_week, int current_week,
                                   const SchedulerConfig& config) {
  if (catalog.places.empty()) throw Error(ErrorCode::Configuration, "place catalog is empty");
  if (last_suggested_week && *last_suggested_week == current_week) return std::nullopt;
  const auto run = static_cast<std::size_t>(config.place_run);
  if (environment_ratings.size() < run) return std::nullopt;
  const auto tail = environment_ratings.last(run);
  if (!std::all_of(tail.begin(), tail.end(), [&](int r) { return r <= config.place_low_rating; })) {
    return std::nullopt;
  }
  return catalog.places[rng.below(catalog.places.size())];
}

}  // namespace studyhabit

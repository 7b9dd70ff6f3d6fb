#include "studyhabit/engine.hpp"

#include <algorithm>
#include <memory>
#include <span>

namespace studyhabit {

namespace {

using Lock = std::lock_guard<std::recursive_mutex>;

constexpr std::array<WizardStep, 4> kSteps{WizardStep::New, WizardStep::Timetable, WizardStep::Preference,
                                           WizardStep::Planned};

std::string band_word(ProgressBand b) { return std::string(to_string(b)); }

bool same_slot(const TimeBlock& a, const TimeBlock& b) {
  return a.day == b.day && a.start_min == b.start_min && a.end_min == b.end_min && a.class_id == b.class_id;
}

}  // namespace

std::string_view to_string(WizardStep s) {
  switch (s) {
    case WizardStep::New: return "new";
    case WizardStep::Timetable: return "timetable";
    case WizardStep::Preference: return "preference";
    case WizardStep::Planned: return "planned";
  }
  return "new";
}

WizardStep wizard_step_from(std::string_view text) {
  for (auto s : kSteps) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::Validation, "unknown wizard step '" + std::string(text) + "'");
}

void to_json(json& j, const PlanSlot& p) {
  j = json{{"slot_no", p.slot_no},
           {"class_id", p.class_id.str()},
           {"block", p.block},
           {"accepted_at", to_iso8601(p.accepted_at)}};
}

void from_json(const json& j, PlanSlot& p) {
  p.slot_no = j.at("slot_no").get<int>();
  p.class_id = ClassId(j.at("class_id").get<std::string>());
  p.block = j.at("block").get<TimeBlock>();
  p.accepted_at = parse_iso8601(j.at("accepted_at").get<std::string>());
}

bool StudentRecord::enrolled(const ClassId& c) const {
  return std::find(classes.begin(), classes.end(), c) != classes.end();
}

int StudentRecord::planned_count(const ClassId& c) const {
  return static_cast<int>(std::count_if(plan.begin(), plan.end(), [&](const PlanSlot& p) { return p.class_id == c; }));
}

std::vector<TimeBlock> StudentRecord::plan_blocks() const {
  std::vector<TimeBlock> out;
  for (const auto& p : plan) out.push_back(p.block);
  return out;
}

json public_json(const StudentRecord& r) {
  json classes = json::array();
  for (const auto& c : r.classes) classes.push_back(c.str());
  json target = json::object();
  for (const auto& [c, n] : r.session_target) target[c.str()] = n;
  return {{"student_id", r.id.str()},
          {"display_name", r.display_name},
          {"timezone", r.timezone},
          {"classes", classes},
          {"share_schedule", r.share_schedule},
          {"preference", r.preference ? json(to_string(*r.preference)) : json(nullptr)},
          {"wizard_step", to_string(r.step)},
          {"timetable", r.timetable ? json(*r.timetable) : json(nullptr)},
          {"plan", r.plan},
          {"session_target", target},
          {"has_responses", r.responses.has_value()},
          {"created_at", to_iso8601(r.created_at)}};
}

void to_json(json& j, const StudentRecord& r) {
  j = public_json(r);
  j["responses"] = r.responses ? json(*r.responses) : json(nullptr);
  j["next_slot"] = r.next_slot;
  json rejected = json::array();
  for (const auto& b : r.rejected) rejected.push_back(b);
  j["rejected"] = rejected;
  json relocations = json::array();
  for (const auto& rel : r.relocations) relocations.push_back({{"slot_no", rel.slot_no}, {"suggestion", rel.suggestion}});
  j["relocations"] = relocations;
  j["materialized_weeks"] = r.materialized_weeks;
  j["scheduled_prompts"] = r.scheduled_prompts;
  j["adapted_week"] = r.adapted_week;
  j["last_place_week"] = r.last_place_week ? json(*r.last_place_week) : json(nullptr);
  j["last_invite_week"] = r.last_invite_week ? json(*r.last_invite_week) : json(nullptr);
}

void from_json(const json& j, StudentRecord& r) {
  r.id = StudentId(j.at("student_id").get<std::string>());
  r.display_name = j.value("display_name", "");
  r.timezone = j.value("timezone", "UTC");
  r.classes.clear();
  for (const auto& c : j.value("classes", json::array())) r.classes.emplace_back(c.get<std::string>());
  r.share_schedule = j.value("share_schedule", false);
  r.preference.reset();
  if (j.contains("preference") && !j["preference"].is_null()) {
    r.preference = time_preference_from(j["preference"].get<std::string>());
  }
  r.step = wizard_step_from(j.value("wizard_step", "new"));
  r.timetable.reset();
  if (j.contains("timetable") && !j["timetable"].is_null()) r.timetable = j["timetable"].get<WeekTimetable>();
  r.plan = j.value("plan", std::vector<PlanSlot>{});
  r.session_target.clear();
  const json targets = j.value("session_target", json::object());
  for (const auto& [c, n] : targets.items()) r.session_target[ClassId(c)] = n;
  r.created_at = parse_iso8601(j.value("created_at", "1970-01-01T00:00:00Z"));
  r.responses.reset();
  if (j.contains("responses") && !j["responses"].is_null()) r.responses = j["responses"].get<LikertResponseSet>();
  r.next_slot = j.value("next_slot", 1);
  r.rejected = j.value("rejected", std::vector<TimeBlock>{});
  r.relocations.clear();
  for (const auto& rel : j.value("relocations", json::array())) {
    const auto& s = rel.at("suggestion");
    r.relocations.push_back({rel.at("slot_no").get<int>(),
                             {ClassId(s.at("class_id").get<std::string>()), s.at("block").get<TimeBlock>(),
                              s.at("score").get<double>()}});
  }
  r.materialized_weeks = j.value("materialized_weeks", std::set<int>{});
  r.scheduled_prompts = j.value("scheduled_prompts", std::set<std::string>{});
  r.adapted_week = j.value("adapted_week", -1);
  r.last_place_week.reset();
  r.last_invite_week.reset();
  if (j.contains("last_place_week") && !j["last_place_week"].is_null()) r.last_place_week = j["last_place_week"].get<int>();
  if (j.contains("last_invite_week") && !j["last_invite_week"].is_null()) {
    r.last_invite_week = j["last_invite_week"].get<int>();
  }
}

Engine::Engine(EngineConfig config, PlaceCatalog places)
    : config_(std::move(config)),
      places_(std::move(places)),
      catalog_(ModelCatalog::standard()),
      hook_(config_.hook, [this](const json& e) { emit(e); }),
      notifier_([&] {
        NotifierConfig n = config_.notifier;
        n.fbm = config_.fbm;
        return n;
      }()) {
  config_.notifier.fbm = config_.fbm;
  config_.validate();
}

void Engine::set_event_listener(EventListener fn) {
  Lock lock(mutex_);
  listener_ = std::move(fn);
}

void Engine::set_webhook(Notifier::WebhookFn fn) {
  Lock lock(mutex_);
  notifier_.set_webhook(std::move(fn));
}

void Engine::set_gate_enabled(bool on) {
  Lock lock(mutex_);
  config_.notifier.gate_enabled = on;
  notifier_.set_gate_enabled(on);
}

void Engine::emit(json event) {
  if (listener_) listener_(event);
}

StudentRecord& Engine::record(const StudentId& id) {
  auto it = students_.find(id);
  if (it == students_.end()) throw Error(ErrorCode::NotFound, "no student '" + id.str() + "'");
  return it->second;
}

const StudentRecord& Engine::record(const StudentId& id) const {
  auto it = students_.find(id);
  if (it == students_.end()) throw Error(ErrorCode::NotFound, "no student '" + id.str() + "'");
  return it->second;
}

const TimeZone& Engine::zone(const StudentRecord& r) const {
  auto it = zones_.find(r.timezone);
  if (it == zones_.end()) it = zones_.emplace(r.timezone, TimeZone::load(r.timezone)).first;
  return it->second;
}

absl::CivilDay Engine::monday_of_week(int week) const { return config_.semester_start + 7 * week; }

int Engine::week_index(const StudentRecord& r, Timestamp now) const {
  const auto days = monday_of(now, zone(r)) - config_.semester_start;
  return static_cast<int>(days >= 0 ? days / 7 : -((-days + 6) / 7));
}

int Engine::week_of(const StudentId& id, Timestamp now) const {
  Lock lock(mutex_);
  return week_index(record(id), now);
}

// ---------------------------------------------------------------- students

StudentRecord Engine::create_student(const json& body, Timestamp now) {
  Lock lock(mutex_);
  StudentRecord r;
  try {
    r.id = StudentId(body.at("student_id").get<std::string>());
    r.display_name = body.value("display_name", r.id.str());
    r.timezone = body.value("timezone", "UTC");
    r.share_schedule = body.value("share_schedule", false);
    for (const auto& c : body.value("classes", json::array())) r.classes.emplace_back(c.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed student: ") + e.what());
  }
  try {
    zone(r);
  } catch (const Error& e) {
    throw Error(ErrorCode::Validation, e.what());
  }
  if (students_.count(r.id)) throw Error(ErrorCode::Conflict, "student '" + r.id.str() + "' already exists");
  std::sort(r.classes.begin(), r.classes.end());
  r.classes.erase(std::unique(r.classes.begin(), r.classes.end()), r.classes.end());
  r.created_at = now;
  students_.emplace(r.id, r);
  emit({{"type", "student_created"}, {"student_id", r.id.str()}, {"at", to_iso8601(now)}});
  return r;
}

StudentRecord Engine::student(const StudentId& id) const {
  Lock lock(mutex_);
  return record(id);
}

std::vector<StudentId> Engine::student_ids() const {
  Lock lock(mutex_);
  std::vector<StudentId> out;
  for (const auto& [id, r] : students_) out.push_back(id);
  return out;
}

void Engine::set_sharing(const StudentId& id, bool share) {
  Lock lock(mutex_);
  record(id).share_schedule = share;
}

StudentRecord Engine::put_timetable(const StudentId& id, WeekTimetable timetable, Timestamp now) {
  Lock lock(mutex_);
  StudentRecord& r = record(id);
  timetable.student_id = id;
  timetable.blocks.erase(std::remove_if(timetable.blocks.begin(), timetable.blocks.end(),
                                        [](const TimeBlock& b) { return b.kind == BlockKind::Study; }),
                         timetable.blocks.end());
  timetable.validate();
  for (const auto& b : timetable.blocks) {
    if (b.kind == BlockKind::Class && !r.enrolled(*b.class_id)) r.classes.push_back(*b.class_id);
  }
  std::sort(r.classes.begin(), r.classes.end());
  r.timetable = std::move(timetable);

  // Slots that now clash with a commitment are dropped.
  std::vector<PlanSlot> kept;
  for (const auto& slot : r.plan) {
    const bool clash = std::any_of(r.timetable->blocks.begin(), r.timetable->blocks.end(),
                                   [&](const TimeBlock& b) { return b.overlaps(slot.block); });
    if (!clash) kept.push_back(slot);
  }
  r.plan = std::move(kept);
  if (r.step == WizardStep::New) r.step = WizardStep::Timetable;
  if (r.step == WizardStep::Planned && r.plan.empty()) r.step = WizardStep::Preference;
  emit({{"type", "timetable_set"}, {"student_id", id.str()}, {"at", to_iso8601(now)}});
  return r;
}

StudentRecord Engine::put_preference(const StudentId& id, TimePreference pref, Timestamp now) {
  Lock lock(mutex_);
  StudentRecord& r = record(id);
  if (r.step == WizardStep::New || !r.timetable || r.classes.empty()) {
    throw Error(ErrorCode::Precondition, "enter your timetable and classes before choosing a preference");
  }
  r.preference = pref;
  if (r.step == WizardStep::Timetable) r.step = WizardStep::Preference;
  emit({{"type", "preference_set"}, {"student_id", id.str()}, {"at", to_iso8601(now)}});
  return r;
}

std::vector<SlotSuggestion> Engine::next_suggestions(const StudentRecord& r,
                                                     std::vector<ClassId>* unschedulable) const {
  std::vector<SlotSuggestion> out;
  std::vector<TimeBlock> taken = r.plan_blocks();
  for (const auto& cls : r.classes) {
    const auto target_it = r.session_target.find(cls);
    const int target = target_it == r.session_target.end() ? 1 : target_it->second;
    for (int k = r.planned_count(cls); k < target; ++k) {
      const auto candidates = candidate_slots(*r.timetable, cls, *r.preference, config_.scheduler, taken);
      auto pick = std::find_if(candidates.begin(), candidates.end(), [&](const SlotSuggestion& c) {
        return std::none_of(r.rejected.begin(), r.rejected.end(),
                            [&](const TimeBlock& b) { return same_slot(b, c.block); });
      });
      if (pick == candidates.end()) {
        if (unschedulable) unschedulable->push_back(cls);
        break;
      }
      out.push_back(*pick);
      taken.push_back(pick->block);
    }
  }
  return out;
}

json Engine::schedule_suggestions(const StudentId& id) const {
  Lock lock(mutex_);
  const StudentRecord& r = record(id);
  if (!r.preference || r.step == WizardStep::New || r.step == WizardStep::Timetable) {
    throw Error(ErrorCode::Precondition, "choose an early or late preference before asking for suggestions");
  }
  std::vector<ClassId> unschedulable;
  const auto suggestions = next_suggestions(r, &unschedulable);
  json unsched = json::array();
  for (const auto& c : unschedulable) unsched.push_back(c.str());
  json relocations = json::array();
  for (const auto& rel : r.relocations) relocations.push_back({{"slot_no", rel.slot_no}, {"suggestion", rel.suggestion}});
  return {{"suggestions", suggestions}, {"unschedulable", unsched}, {"relocations", relocations}};
}

void Engine::reject_suggestion(const StudentId& id, const ClassId& cls, const TimeBlock& block) {
  Lock lock(mutex_);
  StudentRecord& r = record(id);
  if (!r.preference) throw Error(ErrorCode::Precondition, "no suggestions have been offered yet");
  if (!r.enrolled(cls)) throw Error(ErrorCode::Validation, id.str() + " is not enrolled in " + cls.str());
  TimeBlock b = block;
  b.kind = BlockKind::Study;
  b.class_id = cls;
  b.validate();
  r.rejected.push_back(b);
}

PlanSlot Engine::accept_session(const StudentId& id, const ClassId& cls, std::optional<TimeBlock> block,
                                std::optional<int> replaces, Timestamp now) {
  Lock lock(mutex_);
  StudentRecord& r = record(id);
  if (!r.preference || r.step == WizardStep::New || r.step == WizardStep::Timetable) {
    throw Error(ErrorCode::Precondition, "finish the timetable and preference steps first");
  }
  if (!r.enrolled(cls)) throw Error(ErrorCode::Validation, id.str() + " is not enrolled in " + cls.str());
  auto replaced = r.plan.end();
  if (replaces) {
    replaced = std::find_if(r.plan.begin(), r.plan.end(), [&](const PlanSlot& p) { return p.slot_no == *replaces; });
    if (replaced == r.plan.end()) throw Error(ErrorCode::NotFound, "no plan slot " + std::to_string(*replaces));
    if (replaced->class_id != cls) throw Error(ErrorCode::Validation, "slot belongs to another class");
  }
  if (!block) {
    if (replaces) {
      auto rel = std::find_if(r.relocations.begin(), r.relocations.end(),
                              [&](const Relocation& x) { return x.slot_no == *replaces; });
      if (rel == r.relocations.end()) throw Error(ErrorCode::Precondition, "no relocation is pending for that slot");
      block = rel->suggestion.block;
    } else {
      const auto suggestions = next_suggestions(r, nullptr);
      auto it = std::find_if(suggestions.begin(), suggestions.end(),
                             [&](const SlotSuggestion& s) { return s.class_id == cls; });
      if (it == suggestions.end()) throw Error(ErrorCode::Precondition, "no open suggestion for " + cls.str());
      block = it->block;
    }
  }
  block->kind = BlockKind::Study;
  block->class_id = cls;
  block->validate();

  std::vector<TimeBlock> others;
  for (auto it = r.plan.begin(); it != r.plan.end(); ++it) {
    if (it != replaced) others.push_back(it->block);
  }
  const auto free = free_intervals(*r.timetable, others);
  const bool fits = std::any_of(free[block->day].begin(), free[block->day].end(), [&](const Interval& iv) {
    return iv.start_min <= block->start_min && block->end_min <= iv.end_min;
  });
  if (!fits) throw Error(ErrorCode::Conflict, "that time clashes with a commitment or another study session");

  PlanSlot slot;
  if (replaced != r.plan.end()) {
    replaced->block = *block;
    replaced->accepted_at = now;
    slot = *replaced;
    std::erase_if(r.relocations, [&](const Relocation& x) { return x.slot_no == slot.slot_no; });
    // Sessions of the old time that have not been announced yet move too.
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      const auto s_slot = session_slot_.find(it->first);
      if (it->second.student_id == id && s_slot != session_slot_.end() && s_slot->second == slot.slot_no &&
          it->second.state == SessionState::Scheduled && it->second.start > now) {
        notifier_.cancel(id, TriggerPurpose::SessionStart, it->first.str());
        open_sessions_.erase(it->first);
        session_slot_.erase(s_slot);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  } else {
    slot = {r.next_slot++, cls, *block, now};
    r.plan.push_back(slot);
  }
  std::erase_if(r.rejected, [&](const TimeBlock& b) { return b.class_id == cls; });
  r.step = WizardStep::Planned;
  for (int week : r.materialized_weeks) materialize(r, slot, week, now);
  emit({{"type", "slot_accepted"}, {"student_id", id.str()}, {"slot", slot}, {"at", to_iso8601(now)}});
  return slot;
}

// ---------------------------------------------------------------- sessions

bool Engine::enqueue(TriggerRequest req, Timestamp now) {
  if (req.due_at < now) req.due_at = now;
  return notifier_.enqueue(std::move(req), now);
}

bool Engine::materialize(StudentRecord& r, const PlanSlot& slot, int week, Timestamp now) {
  const TimeZone& tz = zone(r);
  const absl::CivilDay day = monday_of_week(week) + slot.block.day;
  const Timestamp start = local_instant(day, slot.block.start_min, tz);
  if (start <= slot.accepted_at || start <= now) return false;
  const SessionId sid(r.id.str() + "-w" + std::to_string(week) + "-s" + std::to_string(slot.slot_no));
  if (sessions_.count(sid)) return false;

  StudySession s;
  s.id = sid;
  s.student_id = r.id;
  s.class_id = slot.class_id;
  s.block = slot.block;
  s.week = week;
  s.start = start;
  s.end = local_instant(day, slot.block.end_min, tz);
  sessions_.emplace(sid, s);
  session_slot_[sid] = slot.slot_no;
  open_sessions_.insert(sid);

  TriggerRequest req;
  req.student_id = r.id;
  req.category = HabitCategory::Scheduling;
  req.purpose = TriggerPurpose::SessionStart;
  req.due_at = start - config_.session_reminder_lead;
  req.payload = {{"class_id", slot.class_id.str()},
                 {"session_id", sid.str()},
                 {"streak", hook_.consecutive_completions(r.id, HabitCategory::Scheduling)}};
  req.subject = sid.str();
  enqueue(std::move(req), now);
  return true;
}

std::vector<StudySession> Engine::sessions_of(const StudentId& id) const {
  Lock lock(mutex_);
  record(id);
  std::vector<StudySession> out;
  for (const auto& [sid, s] : sessions_) {
    if (s.student_id == id) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.start, a.id) < std::tie(b.start, b.id);
  });
  return out;
}

StudySession Engine::session(const SessionId& id) const {
  Lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id.str() + "'");
  return it->second;
}

StudySession Engine::check_in(const SessionId& id, Timestamp now) {
  Lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id.str() + "'");
  StudySession& s = it->second;
  studyhabit::check_in(s, now, Minutes{config_.scheduler.grace_minutes});
  open_sessions_.erase(id);

  TriggerRequest req;
  req.student_id = s.student_id;
  req.category = HabitCategory::Scheduling;
  req.purpose = TriggerPurpose::CheckOut;
  req.due_at = s.end;
  req.payload = {{"class_id", s.class_id.str()}, {"session_id", id.str()}};
  req.subject = id.str();
  enqueue(std::move(req), now);
  emit({{"type", "check_in"}, {"session_id", id.str()}, {"at", to_iso8601(now)}});
  return s;
}

Adherence Engine::adherence_of(const StudentId& id, std::optional<int> week) const {
  std::vector<StudySession> mine;
  for (const auto& [sid, s] : sessions_) {
    if (s.student_id == id) mine.push_back(s);
  }
  return adherence(mine, week);
}

json Engine::check_out(const SessionId& id, int effectiveness, int environment, Timestamp now) {
  Lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id.str() + "'");
  StudySession& s = it->second;
  StudentRecord& r = record(s.student_id);
  const auto before = adherence_of(r.id).rate();
  studyhabit::check_out(s, effectiveness, environment, now);
  notifier_.cancel(r.id, TriggerPurpose::CheckOut, id.str());
  emit({{"type", "check_out"}, {"session_id", id.str()}, {"effectiveness", effectiveness},
        {"environment", environment}, {"at", to_iso8601(now)}});

  const std::size_t rewards_before = rewards_[r.id].size();
  progress_cycle(r.id, HabitCategory::Scheduling, true, now, "checkout", nullptr);

  const Adherence after = adherence_of(r.id);
  const double rate = after.rate().value_or(0.0);
  const ProgressBand band = progress_band(rate, config_.bands);
  if (!before || progress_band(*before, config_.bands) != band) {
    give_reward(r.id, {RewardKind::ProgressColorChange, "Your schedule bar is now " + band_word(band) + ".", now},
                "adherence");
  }

  const int week = s.week;
  const auto slot_it = session_slot_.find(id);
  if (slot_it != session_slot_.end() && r.timetable && r.preference) {
    const int slot_no = slot_it->second;
    std::vector<const StudySession*> history;
    for (const auto& [sid, x] : sessions_) {
      const auto x_slot = session_slot_.find(sid);
      if (x.student_id == r.id && x.state == SessionState::CheckedOut && x_slot != session_slot_.end() &&
          x_slot->second == slot_no) {
        history.push_back(&x);
      }
    }
    std::sort(history.begin(), history.end(), [](const auto* a, const auto* b) { return a->start < b->start; });
    std::vector<int> ratings;
    for (const auto* x : history) ratings.push_back(*x->effectiveness);
    std::vector<TimeBlock> taken;
    for (const auto& p : r.plan) {
      if (p.slot_no != slot_no) taken.push_back(p.block);
    }
    std::erase_if(r.relocations, [&](const Relocation& x) { return x.slot_no == slot_no; });
    if (auto proposal = propose_relocation(ratings, *r.timetable, s.class_id, s.block, *r.preference,
                                           config_.scheduler, taken)) {
      r.relocations.push_back({slot_no, *proposal});
    }
  }

  std::vector<StudySession> mine;
  for (const auto& [sid, x] : sessions_) {
    if (x.student_id == r.id) mine.push_back(x);
  }
  std::vector<const StudySession*> closed;
  for (const auto& x : mine) {
    if (x.state == SessionState::CheckedOut) closed.push_back(&x);
  }
  std::sort(closed.begin(), closed.end(), [](const auto* a, const auto* b) { return a->closed_at < b->closed_at; });
  std::vector<int> env;
  for (const auto* x : closed) env.push_back(*x->environment);
  Rng place_rng(derive_seed(config_.seed, "place/" + r.id.str() + "/" + std::to_string(week)));
  if (auto place = suggest_place(env, places_, place_rng, r.last_place_week, week, config_.scheduler)) {
    r.last_place_week = week;
    TriggerRequest req;
    req.student_id = r.id;
    req.category = HabitCategory::Scheduling;
    req.purpose = TriggerPurpose::PlaceSuggestion;
    req.due_at = now;
    req.payload = {{"place", place->name}, {"descriptor", place->descriptor}};
    req.subject = "place-w" + std::to_string(week);
    enqueue(std::move(req), now);
  }

  if (should_invite_friends(mine, week, config_.group) &&
      (!r.last_invite_week || week - *r.last_invite_week >= config_.group.invite_window_weeks)) {
    r.last_invite_week = week;
    TriggerRequest req;
    req.student_id = r.id;
    req.category = HabitCategory::GroupStudy;
    req.purpose = TriggerPurpose::InviteFriends;
    req.due_at = now;
    req.payload = {{"class_id", s.class_id.str()}};
    req.subject = "invite-w" + std::to_string(week);
    enqueue(std::move(req), now);
  }

  json rewards = json::array();
  for (std::size_t i = rewards_before; i < rewards_[r.id].size(); ++i) rewards.push_back(rewards_[r.id][i].reward);
  return {{"session", s},
          {"adherence",
           {{"checked_out", after.checked_out}, {"missed", after.missed}, {"rate", rate}, {"band", band_word(band)}}},
          {"rewards", rewards}};
}

void Engine::sweep_missed(Timestamp now, TickReport& report) {
  const Minutes grace{config_.scheduler.grace_minutes};
  std::vector<SessionId> due;
  for (const auto& sid : open_sessions_) {
    if (now > sessions_.at(sid).start + grace) due.push_back(sid);
  }
  for (const auto& sid : due) {
    StudySession& s = sessions_.at(sid);
    mark_missed(s, now, grace);
    open_sessions_.erase(sid);
    notifier_.cancel(s.student_id, TriggerPurpose::SessionStart, sid.str());
    ++report.missed;
    emit({{"type", "missed"}, {"session_id", sid.str()}, {"at", to_iso8601(now)}});
    if (auto c = hook_.open_cycle_for(s.student_id, HabitCategory::Scheduling); c && c->subject == sid.str()) {
      hook_.abandon(c->cycle_id, now, "session missed");
      ++report.abandoned;
    }
  }
}

// ---------------------------------------------------------------- hook wiring

std::optional<RewardInstance> Engine::draw(const std::string& cycle_id, Timestamp now) const {
  Rng rng(derive_seed(config_.seed, "reward/" + cycle_id));
  return draw_reward(config_.rewards, rng, now);
}

void Engine::give_reward(const StudentId& id, RewardInstance reward, std::string context) {
  emit({{"type", "reward"}, {"student_id", id.str()}, {"reward", reward}, {"context", context}});
  rewards_[id].push_back({std::move(reward), std::move(context)});
}

std::optional<HookCycle> Engine::progress_cycle(const StudentId& id, HabitCategory c, bool invest, Timestamp now,
                                                const std::string& context,
                                                std::optional<RewardInstance>* offered) {
  auto cycle = hook_.open_cycle_for(id, c);
  if (!cycle) return std::nullopt;
  try {
    if (cycle->phase == HookPhase::Triggered) {
      cycle = hook_.advance(cycle->cycle_id, HookEvent::ActionCompleted, now);
    }
    if (cycle->phase == HookPhase::Acted) {
      std::optional<RewardInstance> reward;
      if (offered && *offered) {
        reward = std::move(*offered);
        offered->reset();
      } else {
        reward = draw(cycle->cycle_id, now);
      }
      cycle = hook_.advance(cycle->cycle_id, HookEvent::RewardDelivered, now, reward);
      if (reward) give_reward(id, *reward, context);
    }
    if (invest && cycle->phase == HookPhase::Rewarded) {
      cycle = hook_.advance(cycle->cycle_id, HookEvent::InvestmentRecorded, now);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::IllegalTransition) throw;
    return std::nullopt;  // the cycle went stale and was abandoned
  }
  return cycle;
}

GateInputs Engine::gate(const StudentId& id, HabitCategory c) const {
  const auto outcomes = hook_.outcome_history(id);
  // vector<bool> is not contiguous, so copy it into a plain array for the span.
  const auto history = std::make_unique<bool[]>(outcomes.size());
  std::copy(outcomes.begin(), outcomes.end(), history.get());
  GateInputs in;
  in.motivation = estimate_motivation(std::span<const bool>(history.get(), outcomes.size()), config_.fbm.motivation_prior, config_.fbm.motivation_window);
  in.ability = estimate_ability(c, hook_.consecutive_completions(id, c), config_.fbm);
  in.source = hook_.next_source(id, c);
  return in;
}

void Engine::on_fired(const TriggerRequest& req, const TriggerDecision& decision, Timestamp now) {
  if (!students_.count(req.student_id)) return;
  HabitCategory category = req.category;
  std::string subject = req.subject;
  switch (req.purpose) {
    case TriggerPurpose::SessionStart: {
      const SessionId sid(req.payload.value("session_id", req.subject));
      auto it = sessions_.find(sid);
      if (it == sessions_.end() || it->second.state != SessionState::Scheduled) return;
      notify(it->second, now);
      category = HabitCategory::Scheduling;
      break;
    }
    case TriggerPurpose::ReadingList:
    case TriggerPurpose::PostClassNotes:
      category = HabitCategory::Preparation;
      break;
    case TriggerPurpose::PairPrompt:
    case TriggerPurpose::InviteFriends:
      category = HabitCategory::GroupStudy;
      break;
    case TriggerPurpose::CheckOut:
    case TriggerPurpose::PlaceSuggestion:
      return;
  }
  if (hook_.open_cycle_for(req.student_id, category)) return;
  hook_.open_cycle(req.student_id, category, decision, hook_.next_source(req.student_id, category), now, subject);
}

// ---------------------------------------------------------------- preparation

void Engine::ensure_checklist(const StudentRecord& r, const ClassId& cls, int week) {
  const auto key = std::make_tuple(r.id, cls, week);
  auto manifest = manifests_.find({cls, week});
  if (manifest == manifests_.end()) return;
  auto fresh = generate_checklist(manifest->second);
  auto existing = checklists_.find(key);
  if (!fresh) {
    if (existing != checklists_.end()) checklists_.erase(existing);
    return;
  }
  if (existing != checklists_.end()) {
    for (auto& item : fresh->items) {
      // Item ids are positional, so ticks follow the material (kind and label) instead.
      auto old = std::find_if(existing->second.items.begin(), existing->second.items.end(),
                              [&](const ChecklistItem& o) { return o.kind == item.kind && o.label == item.label; });
      if (old != existing->second.items.end()) item.ticked_at = old->ticked_at;
    }
  }
  checklists_[key] = std::move(*fresh);
}

void Engine::schedule_preparation(StudentRecord& r, const TimeBlock& meeting, int week, Timestamp now) {
  const ClassId cls = *meeting.class_id;
  const auto manifest = manifests_.find({cls, week});
  if (manifest != manifests_.end() && (!manifest->second.meets || manifest->second.cancelled)) return;
  const TimeZone& tz = zone(r);
  const absl::CivilDay monday = monday_of_week(week);
  const Timestamp start = local_instant(monday + meeting.day, meeting.start_min, tz);

  auto reading = pre_class_reminder(r.id, meeting, monday, tz, config_.preparation.reminder_lead);
  const std::string reading_key = "rl|" + reading.subject + "|w" + std::to_string(week);
  if (manifest != manifests_.end() && !r.scheduled_prompts.count(reading_key) && start > now) {
    reading.payload["week"] = week;
    enqueue(std::move(reading), now);
    r.scheduled_prompts.insert(reading_key);
  }

  auto notes = post_class_prompt(r.id, meeting, monday, tz, config_.preparation.notes_delay);
  const std::string notes_key = "pc|" + notes.subject + "|w" + std::to_string(week);
  if (!r.scheduled_prompts.count(notes_key)) {
    r.scheduled_prompts.insert(notes_key);
    if (notes.due_at >= now) {
      notes.payload["week"] = week;
      enqueue(std::move(notes), now);
    }
  }
  ensure_checklist(r, cls, week);
}

void Engine::put_materials(const MaterialsManifest& manifest, Timestamp now) {
  Lock lock(mutex_);
  manifests_[{manifest.class_id, manifest.week}] = manifest;
  emit({{"type", "materials"}, {"class_id", manifest.class_id.str()}, {"week", manifest.week},
        {"at", to_iso8601(now)}});
  const bool off = manifest.cancelled || !manifest.meets;
  for (auto& [id, r] : students_) {
    if (!r.enrolled(manifest.class_id)) continue;
    ensure_checklist(r, manifest.class_id, manifest.week);
    if (!r.timetable) continue;
    for (const auto& meeting : r.timetable->blocks_of(manifest.class_id)) {
      if (meeting.kind != BlockKind::Class) continue;
      if (off) {
        const auto subject = pre_class_reminder(id, meeting, monday_of_week(manifest.week), zone(r)).subject;
        notifier_.cancel(id, TriggerPurpose::ReadingList, subject);
        notifier_.cancel(id, TriggerPurpose::PostClassNotes, subject);
      } else if (r.materialized_weeks.count(manifest.week)) {
        schedule_preparation(r, meeting, manifest.week, now);
      }
    }
  }
}

std::vector<Checklist> Engine::checklists(const StudentId& id, int week) const {
  Lock lock(mutex_);
  record(id);
  std::vector<Checklist> out;
  for (const auto& [key, c] : checklists_) {
    if (std::get<0>(key) == id && std::get<2>(key) == week) out.push_back(c);
  }
  return out;
}

json Engine::tick_item(const StudentId& id, const std::string& item_id, Timestamp now) {
  Lock lock(mutex_);
  record(id);
  Checklist* list = nullptr;
  for (auto& [key, c] : checklists_) {
    if (std::get<0>(key) == id && c.find(item_id)) {
      list = &c;
      break;
    }
  }
  if (!list) throw Error(ErrorCode::NotFound, "no checklist item '" + item_id + "' for " + id.str());
  const TickOutcome outcome = studyhabit::tick(*list, item_id, now, config_.bands);
  if (outcome.changed) {
    emit({{"type", "checklist_tick"}, {"student_id", id.str()}, {"item_id", item_id}, {"at", to_iso8601(now)}});
    std::optional<RewardInstance> band_reward;
    if (outcome.band_changed()) {
      band_reward = RewardInstance{RewardKind::ProgressColorChange,
                                   "Your " + list->class_id.str() + " reading bar is now " +
                                       band_word(outcome.band_after) + ".",
                                   now};
    }
    progress_cycle(id, HabitCategory::Preparation, false, now, "checklist", &band_reward);
    if (band_reward) give_reward(id, *band_reward, "checklist");
    if (outcome.completed) {
      give_reward(id,
                  {RewardKind::PraiseMessage,
                   "All of this week's reading for " + list->class_id.str() + " is done. Brilliant preparation!",
                   now},
                  "checklist");
    }
  }
  json out{{"checklist", *list},
           {"changed", outcome.changed},
           {"progress", outcome.progress_after},
           {"band", band_word(outcome.band_after)},
           {"completed", outcome.completed}};
  if (!outcome.warning.empty()) out["warning"] = outcome.warning;
  return out;
}

SummaryNote Engine::submit_note(const StudentId& id, const ClassId& cls, int week, const std::string& text,
                                Timestamp now) {
  Lock lock(mutex_);
  const StudentRecord& r = record(id);
  if (!r.enrolled(cls)) throw Error(ErrorCode::Validation, id.str() + " is not enrolled in " + cls.str());
  if (!note_accepted(text)) throw Error(ErrorCode::Validation, "a summary note needs some text");
  SummaryNote note{id, cls, week, text, now};
  notes_.push_back(note);
  emit({{"type", "note"}, {"student_id", id.str()}, {"class_id", cls.str()}, {"week", week},
        {"at", to_iso8601(now)}});
  progress_cycle(id, HabitCategory::Preparation, true, now, "notes", nullptr);
  return note;
}

std::vector<SummaryNote> Engine::notes_of(const StudentId& id) const {
  Lock lock(mutex_);
  std::vector<SummaryNote> out;
  for (const auto& n : notes_) {
    if (n.student_id == id) out.push_back(n);
  }
  return out;
}

// ---------------------------------------------------------------- group study

int Engine::endorsements_received(const StudentId& id) const {
  Lock lock(mutex_);
  int n = 0;
  for (const auto& [gid, g] : groups_) {
    n += static_cast<int>(std::count_if(g.endorsements.begin(), g.endorsements.end(),
                                        [&](const Endorsement& e) { return e.to == id; }));
  }
  return n;
}

HelperResult Engine::partner_suggestions(const StudentId& id, const ClassId& cls, const std::string& topic) const {
  Lock lock(mutex_);
  const StudentRecord& r = record(id);
  if (!r.enrolled(cls)) throw Error(ErrorCode::Validation, id.str() + " is not enrolled in " + cls.str());
  std::vector<TopicScore> scores;
  for (const auto& s : ttm_.class_scores(cls, topic)) {
    auto it = students_.find(s.student_id);
    if (it != students_.end() && it->second.enrolled(cls)) scores.push_back(s);
  }
  std::map<StudentId, WeekIntervals> free;
  std::set<StudentId> opted_in;
  std::map<StudentId, int> endorsements;
  for (const auto& [sid, st] : students_) {
    if (st.timetable) {
      const auto busy = st.plan_blocks();
      free.emplace(sid, free_intervals(*st.timetable, busy));
    }
    if (st.share_schedule) opted_in.insert(sid);
    endorsements[sid] = endorsements_received(sid);
  }
  return suggest_helpers({id, cls, topic}, scores, free, opted_in, endorsements, config_.group);
}

StudyGroup Engine::create_group(const json& body, Timestamp now) {
  Lock lock(mutex_);
  StudyGroup g;
  try {
    g.class_id = ClassId(body.at("class_id").get<std::string>());
    g.topic = body.value("topic", "");
    for (const auto& m : body.at("members")) g.members.emplace_back(m.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed study group: ") + e.what());
  }
  g.validate();
  for (const auto& m : g.members) {
    if (!record(m).enrolled(g.class_id)) {
      throw Error(ErrorCode::Validation, m.str() + " is not enrolled in " + g.class_id.str());
    }
  }
  std::sort(g.members.begin(), g.members.end());
  g.group_id = "grp-" + std::to_string(next_group_++);
  g.created_at = now;
  groups_.emplace(g.group_id, g);
  emit({{"type", "group_created"}, {"group_id", g.group_id}, {"at", to_iso8601(now)}});
  return g;
}

StudyGroup Engine::group(const std::string& group_id) const {
  Lock lock(mutex_);
  auto it = groups_.find(group_id);
  if (it == groups_.end()) throw Error(ErrorCode::NotFound, "no study group '" + group_id + "'");
  return it->second;
}

void Engine::rate_group(const std::string& group_id, const StudentId& rater, const std::map<StudentId, int>& ratings,
                        Timestamp now) {
  Lock lock(mutex_);
  auto it = groups_.find(group_id);
  if (it == groups_.end()) throw Error(ErrorCode::NotFound, "no study group '" + group_id + "'");
  rate_group_session(it->second, rater, ratings);
  emit({{"type", "group_rating"}, {"group_id", group_id}, {"rater", rater.str()}, {"at", to_iso8601(now)}});
  progress_cycle(rater, HabitCategory::GroupStudy, true, now, "group_session", nullptr);
}

EndorseOutcome Engine::endorse_member(const std::string& group_id, const StudentId& from, const StudentId& to,
                                      Timestamp now) {
  Lock lock(mutex_);
  auto it = groups_.find(group_id);
  if (it == groups_.end()) throw Error(ErrorCode::NotFound, "no study group '" + group_id + "'");
  auto outcome = endorse(it->second, from, to, now, config_.group);
  if (outcome.created) {
    emit({{"type", "endorsement"}, {"endorsement", outcome.endorsement}});
    give_reward(to, {RewardKind::Endorsement, "A study partner endorsed you as helpful!", now}, "endorsement");
  }
  return outcome;
}

PairingResult Engine::pair_class(const ClassId& cls, const std::string& topic, Timestamp now) {
  Lock lock(mutex_);
  std::vector<TopicScore> roster;
  for (const auto& s : ttm_.class_scores(cls, topic)) {
    auto it = students_.find(s.student_id);
    if (it != students_.end() && it->second.enrolled(cls)) roster.push_back(s);
  }
  auto result = pair_for_explanation(roster, cls, topic, "pair" + std::to_string(next_pairing_++));
  for (const auto& pair : result.pairs) {
    pairs_.insert_or_assign(pair.pair_id(), pair);
    StudyGroup g;
    g.group_id = pair.pair_id();
    g.class_id = cls;
    g.topic = topic;
    const auto members = pair.members();
    g.members = {members[0], members[1]};
    g.created_at = now;
    groups_.insert_or_assign(g.group_id, g);
    for (const auto& m : members) {
      TriggerRequest req;
      req.student_id = m;
      req.category = HabitCategory::GroupStudy;
      req.purpose = TriggerPurpose::PairPrompt;
      req.due_at = now;
      req.payload = {{"topic", topic}, {"class_id", cls.str()}, {"pair_id", pair.pair_id()}};
      req.subject = pair.pair_id();
      enqueue(std::move(req), now);
    }
  }
  emit({{"type", "pairing"}, {"class_id", cls.str()}, {"topic", topic}, {"pairs", result.pairs.size()},
        {"at", to_iso8601(now)}});
  return result;
}

std::vector<StudyPair> Engine::pairs_of(const StudentId& id) const {
  Lock lock(mutex_);
  record(id);
  std::vector<StudyPair> out;
  for (const auto& [pid, p] : pairs_) {
    if (p.has_member(id)) out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- scores

IngestReport Engine::ingest_ttm(const std::vector<json>& rows) {
  Lock lock(mutex_);
  return ttm_.ingest(rows);
}

IngestReport Engine::ingest_ttm(const std::vector<TestAttempt>& rows) {
  Lock lock(mutex_);
  return ttm_.ingest(rows);
}

IngestReport Engine::ingest_ttm_jsonl(std::string_view text) {
  Lock lock(mutex_);
  return ttm_.ingest_jsonl(text);
}

void Engine::submit_responses(const StudentId& id, const LikertResponseSet& responses) {
  Lock lock(mutex_);
  StudentRecord& r = record(id);
  validate_responses(catalog_, responses);
  r.responses = responses;
}

HabitCategory Engine::focus_category(const StudentId& id) const {
  Lock lock(mutex_);
  const StudentRecord& r = record(id);
  if (!r.responses) return HabitCategory::Scheduling;
  return select_target_category(catalog_, *r.responses,
                                {hook_.completed_cycles(id, HabitCategory::Scheduling)},
                                config_.target_prerequisite_cycles);
}

json Engine::performance(const StudentId& id) const {
  Lock lock(mutex_);
  const StudentRecord& r = record(id);
  if (!r.responses) throw Error(ErrorCode::NoData, id.str() + " has not answered the habit questionnaire");
  json scores = json::object();
  for (const auto& m : catalog_.models()) scores[std::string(to_string(m.kind))] = score(m, *r.responses);
  return {{"student_id", id.str()},
          {"catalog_version", catalog_.version()},
          {"scores", scores},
          {"focus_category", to_string(focus_category(id))}};
}

// ---------------------------------------------------------------- feed and metrics

std::vector<FeedReward> Engine::rewards_of(const StudentId& id) const {
  Lock lock(mutex_);
  auto it = rewards_.find(id);
  return it == rewards_.end() ? std::vector<FeedReward>{} : it->second;
}

json Engine::feed(const StudentId& id) const {
  Lock lock(mutex_);
  record(id);
  std::vector<std::pair<Timestamp, json>> items;
  for (const auto& d : notifier_.feed(id)) {
    json item = feed_item(d);
    item["type"] = "notification";
    items.emplace_back(d.delivered_at, std::move(item));
  }
  if (auto it = rewards_.find(id); it != rewards_.end()) {
    for (const auto& r : it->second) {
      items.emplace_back(r.reward.delivered_at, json{{"type", "reward"},
                                                     {"kind", to_string(r.reward.kind)},
                                                     {"message", r.reward.payload},
                                                     {"context", r.context},
                                                     {"delivered_at", to_iso8601(r.reward.delivered_at)}});
    }
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  json out = json::array();
  for (auto& [t, item] : items) out.push_back(std::move(item));
  return out;
}

json Engine::metrics(const StudentId& id, Timestamp now) const {
  Lock lock(mutex_);
  const StudentRecord& r = record(id);
  const int week = week_index(r, now);
  auto adherence_json = [&](const Adherence& a) {
    const auto rate = a.rate();
    return json{{"checked_out", a.checked_out},
                {"missed", a.missed},
                {"rate", rate ? json(*rate) : json(nullptr)},
                {"band", band_word(progress_band(rate.value_or(0.0), config_.bands))}};
  };
  std::map<int, bool> weeks;
  int scheduled = 0;
  int open = 0;
  for (const auto& [sid, s] : sessions_) {
    if (s.student_id != id) continue;
    weeks[s.week] = true;
    ++scheduled;
    if (!s.terminal()) ++open;
  }
  json weekly = json::array();
  for (const auto& [w, unused] : weeks) {
    json entry = adherence_json(adherence_of(id, w));
    entry["week"] = w;
    weekly.push_back(std::move(entry));
  }
  json cycles = json::object();
  json streaks = json::object();
  for (auto c : kAllCategories) {
    cycles[std::string(to_string(c))] = hook_.completed_cycles(id, c);
    streaks[std::string(to_string(c))] = hook_.consecutive_completions(id, c);
  }
  const Adherence total = adherence_of(id);
  json out{{"student_id", id.str()},
           {"week", week},
           {"adherence", adherence_json(total)},
           {"this_week", adherence_json(adherence_of(id, week))},
           {"weekly", weekly},
           {"sessions", {{"scheduled", scheduled}, {"checked_out", total.checked_out}, {"missed", total.missed},
                         {"open", open}}},
           {"cycles_completed", cycles},
           {"streaks", streaks},
           {"focus_category", to_string(focus_category(id))},
           {"endorsements", endorsements_received(id)}};
  if (r.responses) out["scores"] = performance(id)["scores"];
  return out;
}

// ---------------------------------------------------------------- loop

void Engine::adapt_targets(StudentRecord& r, int week) {
  if (r.adapted_week >= week) return;
  r.adapted_week = week;
  for (const auto& cls : r.classes) {
    const int planned = r.planned_count(cls);
    if (planned < 1) continue;
    const auto mean = ttm_.class_mean(cls);
    if (!mean) continue;
    if (adapt_session_count(*mean, planned, config_.scheduler.adapt_threshold, config_.scheduler.adapt_cap) > 0) {
      r.session_target[cls] = std::max(r.session_target[cls], planned + 1);
    }
  }
}

void Engine::ensure_week(StudentRecord& r, int week, Timestamp now, TickReport& report) {
  if (week < 0 || r.materialized_weeks.count(week)) return;
  r.materialized_weeks.insert(week);
  for (const auto& slot : r.plan) {
    if (materialize(r, slot, week, now)) ++report.materialized;
  }
  if (!r.timetable) return;
  for (const auto& meeting : r.timetable->blocks) {
    if (meeting.kind == BlockKind::Class) schedule_preparation(r, meeting, week, now);
  }
}

TickReport Engine::tick(Timestamp now) {
  Lock lock(mutex_);
  TickReport report;
  for (auto& [id, r] : students_) {
    if (!r.timetable) continue;
    const int week = week_index(r, now);
    if (week < 0) continue;
    adapt_targets(r, week);
    ensure_week(r, week, now, report);
  }
  sweep_missed(now, report);
  report.abandoned += static_cast<int>(hook_.expire_stale(now).size());

  const auto dispatched =
      notifier_.dispatch(now, [this](const StudentId& id, HabitCategory c) { return gate(id, c); });
  for (const auto& d : dispatched.delivered) {
    on_fired(d.request, d.decision, now);
    emit({{"type", "delivery"}, {"delivery", d}});
  }
  for (const auto& req : dispatched.skipped) {
    on_fired(req, TriggerDecision::fire(TriggerType::Signal), now);
    emit({{"type", "skipped"}, {"request", req}, {"at", to_iso8601(now)}});
  }
  report.delivered = static_cast<int>(dispatched.delivered.size());
  report.skipped = static_cast<int>(dispatched.skipped.size());
  report.deferred = static_cast<int>(dispatched.deferred.size());
  report.dropped = static_cast<int>(dispatched.dropped.size());
  return report;
}

// ---------------------------------------------------------------- persistence

json Engine::snapshot() const {
  Lock lock(mutex_);
  json students = json::array();
  for (const auto& [id, r] : students_) students.push_back(r);
  json sessions = json::array();
  for (const auto& [sid, s] : sessions_) {
    json js = s;
    if (auto it = session_slot_.find(sid); it != session_slot_.end()) js["slot_no"] = it->second;
    sessions.push_back(std::move(js));
  }
  json manifests = json::array();
  for (const auto& [key, m] : manifests_) manifests.push_back(m);
  json checklists = json::array();
  for (const auto& [key, c] : checklists_) checklists.push_back({{"student_id", std::get<0>(key).str()}, {"checklist", c}});
  json groups = json::array();
  for (const auto& [gid, g] : groups_) groups.push_back(g);
  json pairs = json::array();
  for (const auto& [pid, p] : pairs_) pairs.push_back(p.internal_json());
  json rewards = json::object();
  for (const auto& [sid, list] : rewards_) {
    json arr = json::array();
    for (const auto& r : list) arr.push_back({{"reward", r.reward}, {"context", r.context}});
    rewards[sid.str()] = arr;
  }
  return {{"schema_version", kSchemaVersion},
          {"config", config_.to_json()},
          {"students", students},
          {"sessions", sessions},
          {"manifests", manifests},
          {"checklists", checklists},
          {"notes", notes_},
          {"groups", groups},
          {"pairs", pairs},
          {"rewards", rewards},
          {"hook", hook_.snapshot()},
          {"notifier", notifier_.snapshot()},
          {"ttm", ttm_.snapshot()},
          {"counters", {{"next_group", next_group_}, {"next_pairing", next_pairing_}}}};
}

void Engine::restore(const json& snap) {
  Lock lock(mutex_);
  if (snap.value("schema_version", 0) != kSchemaVersion) {
    throw Error(ErrorCode::Configuration, "snapshot schema_version does not match " + std::to_string(kSchemaVersion));
  }
  try {
    students_.clear();
    for (const auto& j : snap.at("students")) {
      auto r = j.get<StudentRecord>();
      students_.emplace(r.id, std::move(r));
    }
    sessions_.clear();
    session_slot_.clear();
    open_sessions_.clear();
    for (const auto& j : snap.at("sessions")) {
      auto s = j.get<StudySession>();
      if (j.contains("slot_no")) session_slot_[s.id] = j["slot_no"].get<int>();
      if (s.state == SessionState::Scheduled || s.state == SessionState::Notified) open_sessions_.insert(s.id);
      sessions_.emplace(s.id, std::move(s));
    }
    manifests_.clear();
    for (const auto& j : snap.at("manifests")) {
      auto m = j.get<MaterialsManifest>();
      manifests_[{m.class_id, m.week}] = m;
    }
    checklists_.clear();
    for (const auto& j : snap.at("checklists")) {
      auto c = j.at("checklist").get<Checklist>();
      checklists_[{StudentId(j.at("student_id").get<std::string>()), c.class_id, c.week}] = std::move(c);
    }
    notes_ = snap.at("notes").get<std::vector<SummaryNote>>();
    groups_.clear();
    for (const auto& j : snap.at("groups")) {
      auto g = j.get<StudyGroup>();
      groups_.emplace(g.group_id, std::move(g));
    }
    pairs_.clear();
    for (const auto& j : snap.at("pairs")) {
      auto p = StudyPair::from_internal_json(j);
      pairs_.insert_or_assign(p.pair_id(), p);
    }
    rewards_.clear();
    for (const auto& [sid, arr] : snap.at("rewards").items()) {
      auto& list = rewards_[StudentId(sid)];
      for (const auto& r : arr) list.push_back({r.at("reward").get<RewardInstance>(), r.at("context").get<std::string>()});
    }
    hook_.restore(snap.at("hook"));
    notifier_.restore(snap.at("notifier"));
    ttm_.restore(snap.at("ttm"));
    next_group_ = snap.at("counters").at("next_group").get<std::uint64_t>();
    next_pairing_ = snap.at("counters").at("next_pairing").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace studyhabit

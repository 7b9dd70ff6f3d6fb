#include "studyhabit/hook.hpp"

#include <algorithm>

namespace studyhabit {

std::string_view to_string(HookPhase p) {
  switch (p) {
    case HookPhase::Triggered: return "triggered";
    case HookPhase::Acted: return "acted";
    case HookPhase::Rewarded: return "rewarded";
    case HookPhase::Invested: return "invested";
    case HookPhase::Abandoned: return "abandoned";
  }
  return "triggered";
}

std::string_view to_string(TriggerSource s) { return s == TriggerSource::External ? "external" : "internal"; }

std::string_view to_string(HookEvent e) {
  switch (e) {
    case HookEvent::ActionCompleted: return "action_completed";
    case HookEvent::RewardDelivered: return "reward_delivered";
    case HookEvent::InvestmentRecorded: return "investment_recorded";
  }
  return "action_completed";
}

std::string_view to_string(RewardKind k) {
  switch (k) {
    case RewardKind::PraiseMessage: return "praise_message";
    case RewardKind::ProgressColorChange: return "progress_color_change";
    case RewardKind::StreakBadge: return "streak_badge";
    case RewardKind::Endorsement: return "endorsement";
  }
  return "praise_message";
}

HookPhase hook_phase_from(std::string_view text) {
  for (auto p : {HookPhase::Triggered, HookPhase::Acted, HookPhase::Rewarded, HookPhase::Invested,
                 HookPhase::Abandoned}) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorCode::Validation, "unknown hook phase '" + std::string(text) + "'");
}

TriggerSource trigger_source_from(std::string_view text) {
  if (text == "external") return TriggerSource::External;
  if (text == "internal") return TriggerSource::Internal;
  throw Error(ErrorCode::Validation, "unknown trigger source '" + std::string(text) + "'");
}

RewardKind reward_kind_from(std::string_view text) {
  for (auto k : {RewardKind::PraiseMessage, RewardKind::ProgressColorChange, RewardKind::StreakBadge,
                 RewardKind::Endorsement}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::Configuration, "unknown reward kind '" + std::string(text) + "'");
}

void to_json(json& j, const RewardInstance& r) {
  j = json{{"kind", to_string(r.kind)}, {"payload", r.payload}, {"delivered_at", to_iso8601(r.delivered_at)}};
}

void from_json(const json& j, RewardInstance& r) {
  r.kind = reward_kind_from(j.at("kind").get<std::string>());
  r.payload = j.value("payload", "");
  r.delivered_at = parse_iso8601(j.at("delivered_at").get<std::string>());
}

void RewardCatalog::validate() const {
  if (entries.empty()) throw Error(ErrorCode::Configuration, "reward catalog is empty");
  if (!(delivery_probability >= 0.0 && delivery_probability <= 1.0)) {
    throw Error(ErrorCode::Configuration, "reward delivery probability must lie in [0,1]");
  }
  double total = 0.0;
  for (const auto& e : entries) {
    if (!(e.weight > 0.0)) throw Error(ErrorCode::Configuration, "reward weights must be positive");
    if (e.templates.empty()) throw Error(ErrorCode::Configuration, "reward entry without templates");
    total += e.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::Configuration, "reward weights must sum above zero");
}

RewardCatalog RewardCatalog::from_json(const json& j) {
  RewardCatalog cat;
  try {
    cat.delivery_probability = j.value("delivery_probability", 0.7);
    for (const auto& e : j.at("entries")) {
      cat.entries.push_back({reward_kind_from(e.at("kind").get<std::string>()), e.at("weight").get<double>(),
                             e.at("templates").get<std::vector<std::string>>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string("malformed reward catalog: ") + e.what());
  }
  cat.validate();
  return cat;
}

json RewardCatalog::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"kind", to_string(e.kind)}, {"weight", e.weight}, {"templates", e.templates}});
  }
  return {{"delivery_probability", delivery_probability}, {"entries", entries_json}};
}

RewardCatalog RewardCatalog::standard() {
  RewardCatalog cat;
  cat.delivery_probability = 0.7;
  cat.entries = {
      {RewardKind::PraiseMessage, 3.0,
       {"Great work finishing that session!", "You showed up for yourself today. Nice one!",
        "Another step towards your goals. Well done!"}},
      {RewardKind::StreakBadge, 1.0, {"Streak badge unlocked: keep the run going!"}},
  };
  return cat;
}

std::optional<RewardInstance> draw_reward(const RewardCatalog& catalog, Rng& rng, Timestamp now) {
  if (catalog.entries.empty()) throw Error(ErrorCode::Configuration, "reward catalog is empty");
  if (!rng.bernoulli(catalog.delivery_probability)) return std::nullopt;
  double total = 0.0;
  for (const auto& e : catalog.entries) total += e.weight;
  const double r = rng.uniform() * total;
  double acc = 0.0;
  const RewardEntry* chosen = &catalog.entries.back();
  for (const auto& e : catalog.entries) {
    acc += e.weight;
    if (r < acc) {
      chosen = &e;
      break;
    }
  }
  RewardInstance out;
  out.kind = chosen->kind;
  out.payload = chosen->templates.empty() ? std::string{} : chosen->templates[rng.below(chosen->templates.size())];
  out.delivered_at = now;
  return out;
}

TriggerSource trigger_source_for_next(int consecutive_completions, int internal_after) {
  if (consecutive_completions < 0) throw Error(ErrorCode::Validation, "completion count must be >= 0");
  return consecutive_completions < internal_after ? TriggerSource::External : TriggerSource::Internal;
}

Timestamp HookCycle::last_progress() const {
  Timestamp last{};
  for (const auto& t : phase_at) {
    if (t) last = std::max(last, *t);
  }
  return last;
}

void to_json(json& j, const HookCycle& c) {
  j = json{{"cycle_id", c.cycle_id},
           {"student_id", c.student_id.str()},
           {"category", to_string(c.category)},
           {"phase", to_string(c.phase)},
           {"trigger_source", to_string(c.source)},
           {"trigger_type", to_string(c.trigger_type)},
           {"subject", c.subject}};
  json times = json::object();
  for (int i = 0; i < 4; ++i) {
    if (c.phase_at[i]) times[std::string(to_string(static_cast<HookPhase>(i)))] = to_iso8601(*c.phase_at[i]);
  }
  j["phase_at"] = times;
  if (c.abandoned_at) j["abandoned_at"] = to_iso8601(*c.abandoned_at);
  if (c.reward) j["reward"] = *c.reward;
}

void from_json(const json& j, HookCycle& c) {
  c.cycle_id = j.at("cycle_id").get<std::string>();
  c.student_id = StudentId(j.at("student_id").get<std::string>());
  c.category = habit_category_from(j.at("category").get<std::string>());
  c.phase = hook_phase_from(j.at("phase").get<std::string>());
  c.source = trigger_source_from(j.at("trigger_source").get<std::string>());
  c.trigger_type = trigger_type_from(j.at("trigger_type").get<std::string>());
  c.subject = j.value("subject", "");
  c.phase_at = {};
  for (int i = 0; i < 4; ++i) {
    const std::string key(to_string(static_cast<HookPhase>(i)));
    if (j.at("phase_at").contains(key)) c.phase_at[i] = parse_iso8601(j["phase_at"][key].get<std::string>());
  }
  c.abandoned_at.reset();
  if (j.contains("abandoned_at")) c.abandoned_at = parse_iso8601(j["abandoned_at"].get<std::string>());
  c.reward.reset();
  if (j.contains("reward")) c.reward = j["reward"].get<RewardInstance>();
}

HookEngine::HookEngine(HookConfig config, EventSink sink) : config_(config), sink_(std::move(sink)) {}

HookEngine::StudentState& HookEngine::state_for(const StudentId& student) {
  {
    std::shared_lock lock(registry_mutex_);
    auto it = students_.find(student);
    if (it != students_.end()) return *it->second;
  }
  std::unique_lock lock(registry_mutex_);
  auto& slot = students_[student];
  if (!slot) slot = std::make_unique<StudentState>();
  return *slot;
}

const HookEngine::StudentState* HookEngine::state_if(const StudentId& student) const {
  std::shared_lock lock(registry_mutex_);
  auto it = students_.find(student);
  return it == students_.end() ? nullptr : it->second.get();
}

HookEngine::StudentState& HookEngine::owner_state(const std::string& cycle_id) {
  StudentId owner;
  {
    std::shared_lock lock(registry_mutex_);
    auto it = cycle_owner_.find(cycle_id);
    if (it == cycle_owner_.end()) throw Error(ErrorCode::NotFound, "no hook cycle " + cycle_id);
    owner = it->second;
  }
  return state_for(owner);
}

void HookEngine::log(const HookCycle& cycle, std::string_view event, Timestamp at, const std::string& detail) {
  if (!sink_) return;
  json rec{{"cycle_id", cycle.cycle_id},
           {"student_id", cycle.student_id.str()},
           {"category", to_string(cycle.category)},
           {"event", event},
           {"phase", to_string(cycle.phase)},
           {"at", to_iso8601(at)}};
  if (!detail.empty()) rec["detail"] = detail;
  std::lock_guard lock(sink_mutex_);
  sink_(rec);
}

HookCycle HookEngine::open_cycle(const StudentId& student, HabitCategory category, const TriggerDecision& decision,
                                 TriggerSource source, Timestamp now, std::string subject) {
  if (!decision.fires() || !decision.type) {
    throw Error(ErrorCode::Precondition, "a hook cycle can only open on a firing trigger decision");
  }
  StudentState& st = state_for(student);
  std::lock_guard lock(st.mutex);
  const auto ci = static_cast<std::size_t>(category);
  if (st.open_index[ci]) {
    throw Error(ErrorCode::Conflict, "student " + student.str() + " already has an open " +
                                         std::string(to_string(category)) + " cycle");
  }
  HookCycle cycle;
  {
    std::unique_lock reg(registry_mutex_);
    cycle.cycle_id = "hc-" + std::to_string(next_cycle_++);
    cycle_owner_.emplace(cycle.cycle_id, student);
  }
  cycle.student_id = student;
  cycle.category = category;
  cycle.phase = HookPhase::Triggered;
  cycle.source = source;
  cycle.trigger_type = *decision.type;
  cycle.phase_at[0] = now;
  cycle.subject = std::move(subject);
  st.cycles.push_back(cycle);
  st.open_index[ci] = st.cycles.size() - 1;
  log(cycle, "opened", now, std::string(to_string(cycle.trigger_type)));
  return cycle;
}

void HookEngine::close(StudentState& st, HookCycle& cycle, bool completed) {
  const auto ci = static_cast<std::size_t>(cycle.category);
  st.open_index[ci].reset();
  st.outcomes.push_back(completed);
  if (completed) {
    ++st.streak[ci];
    ++st.completed[ci];
  } else {
    st.streak[ci] = 0;
  }
}

namespace {

std::size_t find_index(const std::vector<HookCycle>& cycles, const std::string& id) {
  // Cycles are mostly touched while open, i.e. near the back.
  for (std::size_t i = cycles.size(); i-- > 0;) {
    if (cycles[i].cycle_id == id) return i;
  }
  throw Error(ErrorCode::NotFound, "no hook cycle " + id);
}

HookPhase expected_phase(HookEvent e) {
  switch (e) {
    case HookEvent::ActionCompleted: return HookPhase::Triggered;
    case HookEvent::RewardDelivered: return HookPhase::Acted;
    case HookEvent::InvestmentRecorded: return HookPhase::Rewarded;
  }
  return HookPhase::Triggered;
}

}  // namespace

HookCycle HookEngine::advance(const std::string& cycle_id, HookEvent event, Timestamp now,
                              std::optional<RewardInstance> reward) {
  StudentState& st = owner_state(cycle_id);
  std::lock_guard lock(st.mutex);
  HookCycle& cycle = st.cycles[find_index(st.cycles, cycle_id)];

  if (!cycle.open()) {
    throw Error(ErrorCode::IllegalTransition, "cycle " + cycle_id + " is " + std::string(to_string(cycle.phase)));
  }
  if (now - cycle.last_progress() > config_.stale_after) {
    cycle.phase = HookPhase::Abandoned;
    cycle.abandoned_at = now;
    close(st, cycle, false);
    log(cycle, "abandoned", now, "stale");
    throw Error(ErrorCode::IllegalTransition, "cycle " + cycle_id + " went stale and was abandoned");
  }
  if (cycle.phase != expected_phase(event)) {
    throw Error(ErrorCode::IllegalTransition, std::string(to_string(event)) + " is not legal in phase " +
                                                  std::string(to_string(cycle.phase)));
  }
  if (now < cycle.last_progress()) {
    throw Error(ErrorCode::IllegalTransition, "event time precedes the previous phase");
  }
  if (reward && event != HookEvent::RewardDelivered) {
    throw Error(ErrorCode::IllegalTransition, "a reward can only accompany reward delivery");
  }

  const auto next = static_cast<HookPhase>(static_cast<int>(cycle.phase) + 1);
  cycle.phase = next;
  cycle.phase_at[static_cast<int>(next)] = now;
  if (reward) cycle.reward = std::move(reward);
  if (next == HookPhase::Invested) close(st, cycle, true);
  log(cycle, to_string(event), now, cycle.reward && event == HookEvent::RewardDelivered
                                        ? std::string(to_string(cycle.reward->kind))
                                        : std::string{});
  return cycle;
}

HookCycle HookEngine::abandon(const std::string& cycle_id, Timestamp now, const std::string& reason) {
  StudentState& st = owner_state(cycle_id);
  std::lock_guard lock(st.mutex);
  HookCycle& cycle = st.cycles[find_index(st.cycles, cycle_id)];
  if (!cycle.open()) {
    throw Error(ErrorCode::IllegalTransition, "cycle " + cycle_id + " is " + std::string(to_string(cycle.phase)));
  }
  cycle.phase = HookPhase::Abandoned;
  cycle.abandoned_at = std::max(now, cycle.last_progress());
  close(st, cycle, false);
  log(cycle, "abandoned", *cycle.abandoned_at, reason);
  return cycle;
}

std::vector<HookCycle> HookEngine::expire_stale(Timestamp now) {
  std::vector<StudentState*> states;
  {
    std::shared_lock lock(registry_mutex_);
    for (auto& [id, st] : students_) states.push_back(st.get());
  }
  std::vector<HookCycle> expired;
  for (StudentState* st : states) {
    std::lock_guard lock(st->mutex);
    for (auto& idx : st->open_index) {
      if (!idx) continue;
      HookCycle& cycle = st->cycles[*idx];
      if (now - cycle.last_progress() > config_.stale_after) {
        cycle.phase = HookPhase::Abandoned;
        cycle.abandoned_at = now;
        close(*st, cycle, false);
        log(cycle, "abandoned", now, "stale");
        expired.push_back(cycle);
      }
    }
  }
  return expired;
}

std::optional<HookCycle> HookEngine::find(const std::string& cycle_id) const {
  StudentId owner;
  {
    std::shared_lock lock(registry_mutex_);
    auto it = cycle_owner_.find(cycle_id);
    if (it == cycle_owner_.end()) return std::nullopt;
    owner = it->second;
  }
  const StudentState* st = state_if(owner);
  std::lock_guard lock(st->mutex);
  return st->cycles[find_index(st->cycles, cycle_id)];
}

std::optional<HookCycle> HookEngine::open_cycle_for(const StudentId& student, HabitCategory category) const {
  const StudentState* st = state_if(student);
  if (!st) return std::nullopt;
  std::lock_guard lock(st->mutex);
  const auto& idx = st->open_index[static_cast<std::size_t>(category)];
  if (!idx) return std::nullopt;
  return st->cycles[*idx];
}

std::vector<HookCycle> HookEngine::cycles_of(const StudentId& student) const {
  const StudentState* st = state_if(student);
  if (!st) return {};
  std::lock_guard lock(st->mutex);
  return st->cycles;
}

int HookEngine::consecutive_completions(const StudentId& student, HabitCategory category) const {
  const StudentState* st = state_if(student);
  if (!st) return 0;
  std::lock_guard lock(st->mutex);
  return st->streak[static_cast<std::size_t>(category)];
}

int HookEngine::completed_cycles(const StudentId& student, HabitCategory category) const {
  const StudentState* st = state_if(student);
  if (!st) return 0;
  std::lock_guard lock(st->mutex);
  return st->completed[static_cast<std::size_t>(category)];
}

std::vector<bool> HookEngine::outcome_history(const StudentId& student) const {
  const StudentState* st = state_if(student);
  if (!st) return {};
  std::lock_guard lock(st->mutex);
  return st->outcomes;
}

TriggerSource HookEngine::next_source(const StudentId& student, HabitCategory category) const {
  return trigger_source_for_next(consecutive_completions(student, category), config_.internal_after);
}

json HookEngine::snapshot() const {
  std::shared_lock lock(registry_mutex_);
  json students = json::object();
  for (const auto& [id, st] : students_) {
    std::lock_guard sl(st->mutex);
    students[id.str()] = {{"cycles", st->cycles},
                          {"outcomes", st->outcomes},
                          {"streak", st->streak},
                          {"completed", st->completed}};
  }
  return {{"next_cycle", next_cycle_}, {"students", students}};
}

void HookEngine::restore(const json& snap) {
  std::unique_lock lock(registry_mutex_);
  students_.clear();
  cycle_owner_.clear();
  next_cycle_ = snap.value("next_cycle", std::uint64_t{1});
  for (const auto& [id, doc] : snap.at("students").items()) {
    auto st = std::make_unique<StudentState>();
    st->cycles = doc.at("cycles").get<std::vector<HookCycle>>();
    st->outcomes = doc.at("outcomes").get<std::vector<bool>>();
    st->streak = doc.at("streak").get<std::array<int, 3>>();
    st->completed = doc.at("completed").get<std::array<int, 3>>();
    for (std::size_t i = 0; i < st->cycles.size(); ++i) {
      const auto& c = st->cycles[i];
      cycle_owner_.emplace(c.cycle_id, c.student_id);
      if (c.open()) st->open_index[static_cast<std::size_t>(c.category)] = i;
    }
    students_.emplace(StudentId(id), std::move(st));
  }
}

}  // namespace studyhabit

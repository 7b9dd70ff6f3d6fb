#include "studyhabit/config.hpp"

#include <fstream>
#include <sstream>

namespace studyhabit {

namespace {

bool unit(double x) { return x >= 0.0 && x <= 1.0; }

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_minutes(const json& obj, const char* key, Minutes& out) {
  if (obj.contains(key)) out = Minutes{obj.at(key).get<long>()};
}

void read_window(const json& obj, const char* key, MinuteWindow& out) {
  if (!obj.contains(key)) return;
  out.start_min = obj.at(key).at("start").get<int>();
  out.end_min = obj.at(key).at("end").get<int>();
}

json window_json(const MinuteWindow& w) { return {{"start", w.start_min}, {"end", w.end_min}}; }

}  // namespace

void EngineConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    throw Error(ErrorCode::Configuration, "unsupported schema_version " + std::to_string(schema_version));
  }
  if (absl::GetWeekday(semester_start) != absl::Weekday::monday) {
    throw Error(ErrorCode::Configuration, "semester_start must be a Monday");
  }
  fbm.validate();
  rewards.validate();
  scheduler.validate();
  group.validate();
  if (hook.internal_after < 1) throw Error(ErrorCode::Configuration, "internal_after must be >= 1");
  if (hook.stale_after <= Minutes{0}) throw Error(ErrorCode::Configuration, "stale_after must be positive");
  if (preparation.reminder_lead < Minutes{0} || preparation.notes_delay < Minutes{0}) {
    throw Error(ErrorCode::Configuration, "preparation lead and delay must be >= 0");
  }
  if (notifier.defer_delay <= Minutes{0}) throw Error(ErrorCode::Configuration, "defer delay must be positive");
  if (notifier.max_deferrals < 0 || notifier.max_webhook_retries < 0) {
    throw Error(ErrorCode::Configuration, "retry and deferral limits must be >= 0");
  }
  if (notifier.retry_base <= Minutes{0}) throw Error(ErrorCode::Configuration, "retry base must be positive");
  if (!(unit(bands.amber) && unit(bands.green) && bands.amber < bands.green)) {
    throw Error(ErrorCode::Configuration, "bands must satisfy 0 <= amber < green <= 1");
  }
  if (target_prerequisite_cycles < 0) {
    throw Error(ErrorCode::Configuration, "target_prerequisite_cycles must be >= 0");
  }
  if (session_reminder_lead < Minutes{0}) throw Error(ErrorCode::Configuration, "reminder lead must be >= 0");
}

EngineConfig EngineConfig::from_json(const json& j) {
  EngineConfig c;
  try {
    read(j, "schema_version", c.schema_version);
    read(j, "seed", c.seed);
    if (j.contains("semester_start")) c.semester_start = parse_date(j.at("semester_start").get<std::string>());
    read(j, "api_token", c.api_token);

    const json fbm = j.value("fbm", json::object());
    read(fbm, "activation_threshold", c.fbm.activation_threshold);
    read(fbm, "motivation_split", c.fbm.motivation_split);
    read(fbm, "ability_split", c.fbm.ability_split);
    read(fbm, "motivation_prior", c.fbm.motivation_prior);
    read(fbm, "motivation_window", c.fbm.motivation_window);
    read(fbm, "base_ability_scheduling", c.fbm.base_ability_scheduling);
    read(fbm, "base_ability_preparation", c.fbm.base_ability_preparation);
    read(fbm, "base_ability_group_study", c.fbm.base_ability_group_study);
    read(fbm, "ability_step_per_completion", c.fbm.ability_step_per_completion);
    read(fbm, "ability_step_cap", c.fbm.ability_step_cap);

    const json hook = j.value("hook", json::object());
    read(hook, "internal_after", c.hook.internal_after);
    read_minutes(hook, "stale_after_minutes", c.hook.stale_after);

    if (j.contains("rewards")) c.rewards = RewardCatalog::from_json(j.at("rewards"));

    const json s = j.value("scheduler", json::object());
    read(s, "session_minutes", c.scheduler.session_minutes);
    read(s, "snap_minutes", c.scheduler.snap_minutes);
    read_window(s, "early_window", c.scheduler.early_window);
    read_window(s, "late_window", c.scheduler.late_window);
    read(s, "grace_minutes", c.scheduler.grace_minutes);
    read(s, "adapt_threshold", c.scheduler.adapt_threshold);
    read(s, "adapt_cap", c.scheduler.adapt_cap);
    read(s, "relocation_low_rating", c.scheduler.relocation_low_rating);
    read(s, "relocation_run", c.scheduler.relocation_run);
    read(s, "place_low_rating", c.scheduler.place_low_rating);
    read(s, "place_run", c.scheduler.place_run);

    const json p = j.value("preparation", json::object());
    read_minutes(p, "reminder_lead_minutes", c.preparation.reminder_lead);
    read_minutes(p, "notes_delay_minutes", c.preparation.notes_delay);

    const json g = j.value("group_study", json::object());
    read(g, "helper_percentile", c.group.helper_percentile);
    read(g, "min_overlap_minutes", c.group.min_overlap_minutes);
    read(g, "endorse_min_rating", c.group.endorse_min_rating);
    read(g, "invite_min_sessions", c.group.invite_min_sessions);
    read(g, "invite_min_effectiveness", c.group.invite_min_effectiveness);
    read(g, "invite_window_weeks", c.group.invite_window_weeks);

    const json n = j.value("notifier", json::object());
    read_minutes(n, "defer_delay_minutes", c.notifier.defer_delay);
    read(n, "max_deferrals", c.notifier.max_deferrals);
    read(n, "max_webhook_retries", c.notifier.max_webhook_retries);
    read_minutes(n, "retry_base_minutes", c.notifier.retry_base);
    read(n, "gate_enabled", c.notifier.gate_enabled);
    read(n, "instructor", c.notifier.instructor);

    const json b = j.value("bands", json::object());
    read(b, "amber", c.bands.amber);
    read(b, "green", c.bands.green);

    read(j, "target_prerequisite_cycles", c.target_prerequisite_cycles);
    read_minutes(j, "session_reminder_lead_minutes", c.session_reminder_lead);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string("malformed engine config: ") + e.what());
  }
  c.notifier.fbm = c.fbm;
  c.validate();
  return c;
}

json EngineConfig::to_json() const {
  const auto& s = scheduler;
  return {
      {"schema_version", schema_version},
      {"seed", seed},
      {"semester_start", format_date(semester_start)},
      {"api_token", api_token},
      {"fbm",
       {{"activation_threshold", fbm.activation_threshold},
        {"motivation_split", fbm.motivation_split},
        {"ability_split", fbm.ability_split},
        {"motivation_prior", fbm.motivation_prior},
        {"motivation_window", fbm.motivation_window},
        {"base_ability_scheduling", fbm.base_ability_scheduling},
        {"base_ability_preparation", fbm.base_ability_preparation},
        {"base_ability_group_study", fbm.base_ability_group_study},
        {"ability_step_per_completion", fbm.ability_step_per_completion},
        {"ability_step_cap", fbm.ability_step_cap}}},
      {"hook", {{"internal_after", hook.internal_after}, {"stale_after_minutes", hook.stale_after.count()}}},
      {"rewards", rewards.to_json()},
      {"scheduler",
       {{"session_minutes", s.session_minutes},
        {"snap_minutes", s.snap_minutes},
        {"early_window", window_json(s.early_window)},
        {"late_window", window_json(s.late_window)},
        {"grace_minutes", s.grace_minutes},
        {"adapt_threshold", s.adapt_threshold},
        {"adapt_cap", s.adapt_cap},
        {"relocation_low_rating", s.relocation_low_rating},
        {"relocation_run", s.relocation_run},
        {"place_low_rating", s.place_low_rating},
        {"place_run", s.place_run}}},
      {"preparation",
       {{"reminder_lead_minutes", preparation.reminder_lead.count()},
        {"notes_delay_minutes", preparation.notes_delay.count()}}},
      {"group_study",
       {{"helper_percentile", group.helper_percentile},
        {"min_overlap_minutes", group.min_overlap_minutes},
        {"endorse_min_rating", group.endorse_min_rating},
        {"invite_min_sessions", group.invite_min_sessions},
        {"invite_min_effectiveness", group.invite_min_effectiveness},
        {"invite_window_weeks", group.invite_window_weeks}}},
      {"notifier",
       {{"defer_delay_minutes", notifier.defer_delay.count()},
        {"max_deferrals", notifier.max_deferrals},
        {"max_webhook_retries", notifier.max_webhook_retries},
        {"retry_base_minutes", notifier.retry_base.count()},
        {"gate_enabled", notifier.gate_enabled},
        {"instructor", notifier.instructor}}},
      {"bands", {{"amber", bands.amber}, {"green", bands.green}}},
      {"target_prerequisite_cycles", target_prerequisite_cycles},
      {"session_reminder_lead_minutes", session_reminder_lead.count()},
  };
}

EngineConfig EngineConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Configuration, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::Configuration, "config file " + path + " is not valid JSON");
  return from_json(doc);
}

}  // namespace studyhabit

#include "studyhabit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace studyhabit {

void StudentProfile::validate() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(motivation_base) || !unit(ability_base)) {
    throw Error(ErrorCode::Validation, "profile bases must lie in [0, 1]");
  }
  if (!(responsiveness > 0.0)) throw Error(ErrorCode::Validation, "responsiveness must be positive");
}

void to_json(json& j, const StudentProfile& p) {
  j = json{{"name", p.name},
           {"motivation_base", p.motivation_base},
           {"ability_base", p.ability_base},
           {"responsiveness", p.responsiveness},
           {"noise_seed", p.noise_seed}};
}

void from_json(const json& j, StudentProfile& p) {
  try {
    p.name = j.value("name", "");
    p.motivation_base = j.at("motivation_base").get<double>();
    p.ability_base = j.at("ability_base").get<double>();
    p.responsiveness = j.value("responsiveness", 10.0);
    p.noise_seed = j.value("noise_seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed profile: ") + e.what());
  }
  p.validate();
}

std::vector<StudentProfile> profiles_from_json(const json& doc) {
  const json& list = doc.is_object() ? doc.at("profiles") : doc;
  if (!list.is_array()) throw Error(ErrorCode::Validation, "profiles must be a JSON array");
  return list.get<std::vector<StudentProfile>>();
}

std::vector<StudentProfile> default_profiles(int count, std::uint64_t seed) {
  std::vector<StudentProfile> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, "profile/" + std::to_string(i)));
    StudentProfile p;
    p.name = "profile-" + std::to_string(i);
    p.motivation_base = 0.1 * static_cast<double>(1 + i % 9);
    p.ability_base = std::round(rng.uniform(0.3, 0.9) * 100.0) / 100.0;
    p.noise_seed = static_cast<std::uint64_t>(i);
    out.push_back(p);
  }
  return out;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double act_probability(double motivation, double ability, double responsiveness, double threshold) {
  return logistic(responsiveness * (motivation * ability - threshold));
}

bool respond(const StudentProfile& profile, double threshold, Rng& rng) {
  const double m = std::clamp(profile.motivation_base + rng.uniform(-0.05, 0.05), 0.0, 1.0);
  const double a = std::clamp(profile.ability_base + rng.uniform(-0.05, 0.05), 0.0, 1.0);
  return rng.uniform() < act_probability(m, a, profile.responsiveness, threshold);
}

int SimResult::total_deferred() const {
  int n = 0;
  for (const auto& s : students) n += s.triggers_deferred;
  return n;
}

double SimResult::mean_adherence() const {
  if (students.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : students) sum += s.adherence_rate;
  return sum / static_cast<double>(students.size());
}

json to_json(const StudentMetrics& m) {
  json cycles = json::object();
  for (const auto& [c, n] : m.cycles_completed) cycles[std::string(to_string(c))] = n;
  return {{"student_id", m.student_id.str()},
          {"name", m.name},
          {"motivation_base", m.motivation_base},
          {"cycles_completed", cycles},
          {"scheduled", m.scheduled},
          {"checked_out", m.checked_out},
          {"missed", m.missed},
          {"still_open", m.still_open},
          {"adherence_rate", m.adherence_rate},
          {"triggers_delivered", m.triggers_delivered},
          {"triggers_deferred", m.triggers_deferred},
          {"triggers_skipped", m.triggers_skipped},
          {"triggers_dropped", m.triggers_dropped},
          {"checklist_ticks", m.checklist_ticks},
          {"notes", m.notes},
          {"endorsements_received", m.endorsements_received}};
}

json to_json(const SimResult& r) {
  json students = json::array();
  for (const auto& s : r.students) students.push_back(to_json(s));
  return {{"weeks", r.weeks},
          {"seed", r.seed},
          {"gate_enabled", r.gate_enabled},
          {"mean_adherence", r.mean_adherence()},
          {"triggers_deferred", r.total_deferred()},
          {"action_errors", r.action_errors},
          {"students", students}};
}

namespace {

struct ClassPlan {
  const char* id;
  TimeBlock lecture;
  TimeBlock tutorial;
};

TimeBlock class_block(int day, int start, int end, const char* cls) {
  TimeBlock b;
  b.day = day;
  b.start_min = start;
  b.end_min = end;
  b.kind = BlockKind::Class;
  b.class_id = ClassId(cls);
  return b;
}

// A fixed, clash-free class timetable shared by every simulated student.
const std::vector<ClassPlan>& class_plans() {
  static const std::vector<ClassPlan> plans{
      {"MATH101", class_block(0, 600, 720, "MATH101"), class_block(2, 840, 900, "MATH101")},
      {"PHYS102", class_block(1, 540, 660, "PHYS102"), class_block(3, 780, 840, "PHYS102")},
      {"CHEM103", class_block(2, 600, 720, "CHEM103"), class_block(4, 660, 720, "CHEM103")},
      {"BIOL104", class_block(3, 540, 660, "BIOL104"), class_block(0, 900, 960, "BIOL104")},
  };
  return plans;
}

const std::vector<std::string> kTopics{"topic-a", "topic-b"};

enum class ActionKind { CheckIn, CheckOut, TickItems, WriteNote, RateGroup };

struct Action {
  ActionKind kind;
  std::size_t student = 0;
  std::string target;  // session id, class id or group id
  int week = 0;
  int effectiveness = 0;
  int environment = 0;
};

std::string student_label(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%03zu", i + 1);
  return buf;
}

}  // namespace

std::vector<StudentId> seed_cohort(Engine& engine, const std::vector<StudentProfile>& profiles, std::uint64_t seed,
                                   int classes_per_student) {
  const Timestamp created =
      local_instant(engine.config().semester_start, 0, TimeZone::load("UTC")) - std::chrono::hours(24);
  const auto& plans = class_plans();
  const auto& catalog = ModelCatalog::standard();
  std::map<std::string, std::vector<StudentId>> roster;
  std::vector<StudentId> ids;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const StudentId id(student_label(i));
    ids.push_back(id);
    // Timetables depend on the seed and position only, never on the profile.
    Rng rng(derive_seed(seed, "timetable/" + id.str()));
    std::vector<std::size_t> order(plans.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[rng.below(k + 1)]);
    const int n_classes = std::clamp(classes_per_student, 1, static_cast<int>(plans.size()));

    WeekTimetable tt;
    tt.student_id = id;
    for (int k = 0; k < n_classes; ++k) {
      const auto& plan = plans[order[k]];
      tt.blocks.push_back(plan.lecture);
      tt.blocks.push_back(plan.tutorial);
      roster[plan.id].push_back(id);
    }
    const int shifts = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < shifts; ++k) {
      TimeBlock work;
      work.day = static_cast<int>(rng.below(7));
      work.start_min = 17 * 60 + 30 * static_cast<int>(rng.below(4));
      work.end_min = work.start_min + 180;
      work.kind = BlockKind::Work;
      const bool clash =
          std::any_of(tt.blocks.begin(), tt.blocks.end(), [&](const TimeBlock& b) { return b.overlaps(work); });
      if (!clash) tt.blocks.push_back(work);
    }

    LikertResponseSet responses;
    for (const auto& model : catalog.models()) {
      for (const auto& item : model.items) responses[item.item_id] = 1 + static_cast<int>(rng.below(7));
    }
    const bool share = rng.bernoulli(0.5);
    const auto pref = rng.bernoulli(0.5) ? TimePreference::Early : TimePreference::Late;

    engine.create_student({{"student_id", id.str()},
                           {"display_name", profiles[i].name.empty() ? id.str() : profiles[i].name},
                           {"share_schedule", share}},
                          created);
    engine.put_timetable(id, tt, created);
    engine.submit_responses(id, responses);
    engine.put_preference(id, pref, created);
  }
  for (const auto& [cls, students] : roster) {
    engine.ingest_ttm(mock_attempts(students, ClassId(cls), kTopics, 2, seed, created));
  }
  return ids;
}

namespace {

class Simulation {
 public:
  Simulation(const std::vector<StudentProfile>& profiles, const SimOptions& options)
      : profiles_(profiles), options_(options), engine_(options.config) {
    engine_.set_gate_enabled(options.gate_enabled);
    engine_.set_event_listener([this](const json& e) {
      const auto type = e.value("type", "");
      if (type == "delivery") {
        incoming_.push_back(e.at("delivery").at("request").get<TriggerRequest>());
      } else if (type == "skipped") {
        incoming_.push_back(e.at("request").get<TriggerRequest>());
      }
    });
    const auto& cfg = engine_.config();
    start_ = local_instant(cfg.semester_start, 0, TimeZone::load("UTC"));
    threshold_ = cfg.fbm.activation_threshold;
    for (std::size_t i = 0; i < profiles_.size(); ++i) ids_.emplace_back(student_label(i));
  }

  SimResult run() {
    enrol();
    for (int week = 0; week < options_.weeks; ++week) {
      const Timestamp monday = start_ + std::chrono::days(7 * week);
      if (week > 0) replan(monday);
      publish_materials(week, monday);
      if (week >= options_.pairing_from_week && (week - options_.pairing_from_week) % 4 == 0) pair(week, monday);
      for (Timestamp t = monday; t < monday + std::chrono::days(7); t += options_.step) {
        engine_.tick(t);
        react(t);
        run_actions(t);
      }
    }
    return collect();
  }

 private:
  Rng stream(std::size_t student, const std::string& label) const {
    const auto base = derive_seed(options_.seed, profiles_[student].noise_seed);
    return Rng(derive_seed(base, ids_[student].str() + "/" + label));
  }

  template <class Fn>
  void attempt(Fn&& fn) {
    try {
      fn();
    } catch (const Error&) {
      ++action_errors_;
    }
  }

  void enrol() {
    seed_cohort(engine_, profiles_, options_.seed, options_.classes_per_student);
    replan(start_ - std::chrono::hours(1));
  }

  void replan(Timestamp now) {
    for (const auto& id : ids_) {
      const json offer = engine_.schedule_suggestions(id);
      for (const auto& rel : offer.at("relocations")) {
        attempt([&] {
          engine_.accept_session(id, ClassId(rel.at("suggestion").at("class_id").get<std::string>()),
                                 rel.at("suggestion").at("block").get<TimeBlock>(), rel.at("slot_no").get<int>(), now);
        });
      }
      for (const auto& s : offer.at("suggestions")) {
        attempt([&] {
          engine_.accept_session(id, ClassId(s.at("class_id").get<std::string>()), s.at("block").get<TimeBlock>(),
                                 std::nullopt, now);
        });
      }
    }
  }

  void publish_materials(int week, Timestamp now) {
    for (const auto& plan : class_plans()) {
      Rng rng(derive_seed(options_.seed, std::string("materials/") + plan.id + "/" + std::to_string(week)));
      MaterialsManifest m;
      m.class_id = ClassId(plan.id);
      m.week = week;
      m.lecture_notes = true;
      m.tutorial_notes = rng.bernoulli(0.8);
      m.textbook = {"chapter " + std::to_string(week + 1)};
      for (int k = 0, n = static_cast<int>(rng.below(3)); k < n; ++k) {
        m.links.push_back("https://example.edu/" + std::string(plan.id) + "/w" + std::to_string(week) + "/" +
                          std::to_string(k));
      }
      m.previous_notes = week > 0;
      engine_.put_materials(m, now);
    }
  }

  void pair(int week, Timestamp now) {
    const std::string& topic = kTopics[static_cast<std::size_t>(week / 4) % kTopics.size()];
    for (const auto& plan : class_plans()) {
      attempt([&] { engine_.pair_class(ClassId(plan.id), topic, now); });
    }
  }

  std::size_t index_of(const StudentId& id) const {
    return static_cast<std::size_t>(std::find(ids_.begin(), ids_.end(), id) - ids_.begin());
  }

  void schedule(Timestamp at, Action a) { actions_.emplace(at, std::move(a)); }

  void react(Timestamp now) {
    while (!incoming_.empty()) {
      const TriggerRequest req = std::move(incoming_.front());
      incoming_.pop_front();
      const std::size_t i = index_of(req.student_id);
      if (i >= ids_.size()) continue;
      Rng rng = stream(i, std::string(to_string(req.purpose)) + "/" + req.subject + "/" + to_iso8601(req.due_at));
      if (!respond(profiles_[i], threshold_, rng)) continue;
      const int week = req.payload.value("week", engine_.week_of(req.student_id, now));
      switch (req.purpose) {
        case TriggerPurpose::SessionStart: {
          const auto sid = req.payload.value("session_id", req.subject);
          schedule(now + options_.step * static_cast<int>(rng.below(2)), {ActionKind::CheckIn, i, sid, week});
          break;
        }
        case TriggerPurpose::ReadingList:
          schedule(now + std::chrono::hours(2), {ActionKind::TickItems, i, req.payload.value("class_id", ""), week});
          break;
        case TriggerPurpose::PostClassNotes:
          schedule(now + std::chrono::hours(1), {ActionKind::WriteNote, i, req.payload.value("class_id", ""), week});
          break;
        case TriggerPurpose::PairPrompt:
          schedule(now + std::chrono::hours(24), {ActionKind::RateGroup, i, req.payload.value("pair_id", ""), week});
          break;
        default:
          break;
      }
    }
  }

  void run_actions(Timestamp now) {
    while (!actions_.empty() && actions_.begin()->first <= now) {
      const Action a = actions_.begin()->second;
      actions_.erase(actions_.begin());
      execute(a, now);
    }
  }

  void execute(const Action& a, Timestamp now) {
    const StudentProfile& p = profiles_[a.student];
    const StudentId& id = ids_[a.student];
    switch (a.kind) {
      case ActionKind::CheckIn:
        attempt([&] {
          const auto s = engine_.check_in(SessionId(a.target), now);
          Rng rng = stream(a.student, "ratings/" + a.target);
          const double quality = (p.motivation_base + p.ability_base) / 2.0;
          Action out{ActionKind::CheckOut, a.student, a.target, a.week};
          out.effectiveness = std::clamp(static_cast<int>(std::lround(1 + 4 * quality + rng.uniform(-1, 1))), 1, 5);
          out.environment = std::clamp(static_cast<int>(std::lround(1 + 4 * p.ability_base + rng.uniform(-1.5, 1.5))),
                                       1, 5);
          schedule(s.end, out);
        });
        break;
      case ActionKind::CheckOut:
        attempt([&] { engine_.check_out(SessionId(a.target), a.effectiveness, a.environment, now); });
        break;
      case ActionKind::TickItems: {
        Rng rng = stream(a.student, "ticks/" + a.target + "/" + std::to_string(a.week));
        for (const auto& list : engine_.checklists(id, a.week)) {
          if (list.class_id.str() != a.target) continue;
          for (const auto& item : list.items) {
            if (item.ticked_at || !rng.bernoulli(std::clamp(p.ability_base + 0.3, 0.0, 1.0))) continue;
            attempt([&] {
              engine_.tick_item(id, item.item_id, now);
              ++ticks_[a.student];
            });
          }
        }
        break;
      }
      case ActionKind::WriteNote:
        attempt([&] {
          engine_.submit_note(id, ClassId(a.target), a.week, "Main ideas from week " + std::to_string(a.week), now);
          ++notes_[a.student];
        });
        break;
      case ActionKind::RateGroup:
        attempt([&] {
          const auto group = engine_.group(a.target);
          Rng rng = stream(a.student, "group/" + a.target);
          std::map<StudentId, int> ratings;
          for (const auto& m : group.members) {
            if (m == id) continue;
            ratings[m] = std::clamp(static_cast<int>(std::lround(2 + 3 * p.motivation_base + rng.uniform(-1, 1))), 1, 5);
          }
          engine_.rate_group(a.target, id, ratings, now);
          for (const auto& [m, r] : ratings) {
            if (r >= options_.config.group.endorse_min_rating) engine_.endorse_member(a.target, id, m, now);
          }
        });
        break;
    }
  }

  SimResult collect() const {
    SimResult result;
    result.weeks = options_.weeks;
    result.seed = options_.seed;
    result.gate_enabled = options_.gate_enabled;
    result.action_errors = action_errors_;
    std::map<StudentId, std::map<AuditKind, int>> audit;
    for (const auto& r : engine_.notifier().audit()) ++audit[r.request.student_id][r.kind];
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const StudentId& id = ids_[i];
      StudentMetrics m;
      m.student_id = id;
      m.name = profiles_[i].name;
      m.motivation_base = profiles_[i].motivation_base;
      for (auto c : kAllCategories) m.cycles_completed[c] = engine_.hook().completed_cycles(id, c);
      for (const auto& s : engine_.sessions_of(id)) {
        ++m.scheduled;
        if (s.state == SessionState::CheckedOut) {
          ++m.checked_out;
        } else if (s.state == SessionState::Missed) {
          ++m.missed;
        } else {
          ++m.still_open;
        }
      }
      const int closed = m.checked_out + m.missed;
      m.adherence_rate = closed == 0 ? 0.0 : static_cast<double>(m.checked_out) / closed;
      auto& a = audit[id];
      m.triggers_delivered = a[AuditKind::Delivered];
      m.triggers_deferred = a[AuditKind::Deferred];
      m.triggers_skipped = a[AuditKind::SkippedInternal];
      m.triggers_dropped = a[AuditKind::Dropped];
      if (auto it = ticks_.find(i); it != ticks_.end()) m.checklist_ticks = it->second;
      if (auto it = notes_.find(i); it != notes_.end()) m.notes = it->second;
      m.endorsements_received = engine_.endorsements_received(id);
      result.students.push_back(std::move(m));
    }
    return result;
  }

  std::vector<StudentProfile> profiles_;
  SimOptions options_;
  Engine engine_;
  std::vector<StudentId> ids_;
  Timestamp start_{};
  double threshold_ = 0.25;
  std::deque<TriggerRequest> incoming_;
  std::multimap<Timestamp, Action> actions_;
  std::map<std::size_t, int> ticks_;
  std::map<std::size_t, int> notes_;
  int action_errors_ = 0;
};

}  // namespace

SimResult simulate(const std::vector<StudentProfile>& profiles, const SimOptions& options) {
  if (options.weeks < 1) throw Error(ErrorCode::Validation, "weeks must be >= 1");
  if (options.step <= Minutes{0}) throw Error(ErrorCode::Validation, "step must be positive");
  for (const auto& p : profiles) p.validate();
  return Simulation(profiles, options).run();
}

}  // namespace studyhabit

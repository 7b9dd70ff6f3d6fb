#include "studyhabit/group_study.hpp"

#include <algorithm>
#include <cmath>

namespace studyhabit {

void to_json(json& j, const TopicScore& s) {
  j = json{{"student_id", s.student_id.str()}, {"class_id", s.class_id.str()}, {"topic", s.topic}, {"score", s.score}};
}

void GroupStudyConfig::validate() const {
  if (!(helper_percentile > 0.0 && helper_percentile <= 1.0)) {
    throw Error(ErrorCode::Configuration, "helper percentile must lie in (0,1]");
  }
  if (min_overlap_minutes <= 0) throw Error(ErrorCode::Configuration, "overlap floor must be positive");
  if (endorse_min_rating < 1 || endorse_min_rating > 5) {
    throw Error(ErrorCode::Configuration, "endorsement rating floor must lie in 1..5");
  }
  if (invite_min_sessions < 1 || invite_window_weeks < 1) {
    throw Error(ErrorCode::Configuration, "invite rule needs positive counts");
  }
}

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::NoData, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::NoData, "median of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

int longest_common_free(const WeekIntervals& a, const WeekIntervals& b) {
  int best = 0;
  for (int day = 0; day < kDaysPerWeek; ++day) {
    for (const auto& x : a[day]) {
      for (const auto& y : b[day]) {
        best = std::max(best, std::min(x.end_min, y.end_min) - std::max(x.start_min, y.start_min));
      }
    }
  }
  return best;
}

void to_json(json& j, const HelperResult& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"student_id", c.student_id.str()}, {"endorsements", c.endorsements}});
  }
  j = json{{"status", r.status == HelperStatus::Ok ? "ok" : "not_needed"}, {"candidates", cands}};
}

HelperResult suggest_helpers(const HelperQuery& q, std::span<const TopicScore> scores,
                             const std::map<StudentId, WeekIntervals>& free_time, const std::set<StudentId>& opted_in,
                             const std::map<StudentId, int>& endorsements, const GroupStudyConfig& config) {
  std::vector<const TopicScore*> cohort;
  for (const auto& s : scores) {
    if (s.class_id == q.class_id && s.topic == q.topic) cohort.push_back(&s);
  }
  auto mine = std::find_if(cohort.begin(), cohort.end(), [&](const auto* s) { return s->student_id == q.requester; });
  if (mine == cohort.end()) {
    throw Error(ErrorCode::NoData, "no score for " + q.requester.str() + " on '" + q.topic + "'");
  }
  std::vector<double> values;
  for (const auto* s : cohort) values.push_back(s->score);

  HelperResult out;
  if ((*mine)->score >= median(values)) {
    out.status = HelperStatus::NotWeak;
    return out;
  }
  const double floor = nearest_rank_percentile(values, config.helper_percentile);
  const auto requester_free = free_time.find(q.requester);
  for (const auto* s : cohort) {
    if (s->student_id == q.requester || !opted_in.count(s->student_id) || s->score < floor) continue;
    const auto their_free = free_time.find(s->student_id);
    if (requester_free == free_time.end() || their_free == free_time.end()) continue;
    if (longest_common_free(requester_free->second, their_free->second) < config.min_overlap_minutes) continue;
    const auto e = endorsements.find(s->student_id);
    out.candidates.push_back({s->student_id, s->score, e == endorsements.end() ? 0 : e->second});
  }
  std::sort(out.candidates.begin(), out.candidates.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.endorsements != b.endorsements) return a.endorsements > b.endorsements;
    return a.student_id < b.student_id;
  });
  return out;
}

StudyPair::StudyPair(std::string pair_id, ClassId class_id, std::string topic, StudentId above, StudentId at_or_below)
    : pair_id_(std::move(pair_id)),
      class_id_(std::move(class_id)),
      topic_(std::move(topic)),
      above_(std::move(above)),
      below_(std::move(at_or_below)) {
  if (above_ == below_) throw Error(ErrorCode::Validation, "a pair needs two distinct students");
}

std::array<StudentId, 2> StudyPair::members() const {
  return above_ < below_ ? std::array{above_, below_} : std::array{below_, above_};
}

StudentId StudyPair::partner_of(const StudentId& s) const {
  if (s == above_) return below_;
  if (s == below_) return above_;
  throw Error(ErrorCode::NotFound, s.str() + " is not in " + pair_id_);
}

std::string StudyPair::prompt() const {
  return "Explain the key ideas of " + topic_ + " to your partner in your own words, then swap and listen.";
}

json StudyPair::public_json() const {
  const auto m = members();
  return {{"pair_id", pair_id_},
          {"class_id", class_id_.str()},
          {"topic", topic_},
          {"members", {m[0].str(), m[1].str()}},
          {"prompt", prompt()}};
}

json StudyPair::internal_json() const {
  return {{"pair_id", pair_id_},
          {"class_id", class_id_.str()},
          {"topic", topic_},
          {"ranked", {above_.str(), below_.str()}}};
}

StudyPair StudyPair::from_internal_json(const json& j) {
  const auto& ranked = j.at("ranked");
  return StudyPair(j.at("pair_id").get<std::string>(), ClassId(j.at("class_id").get<std::string>()),
                   j.at("topic").get<std::string>(), StudentId(ranked.at(0).get<std::string>()),
                   StudentId(ranked.at(1).get<std::string>()));
}

PairingResult pair_for_explanation(std::span<const TopicScore> roster, const ClassId& class_id,
                                   const std::string& topic, const std::string& id_prefix) {
  if (roster.size() < 2) throw Error(ErrorCode::Precondition, "pairing needs at least two students");
  std::vector<const TopicScore*> ranked;
  std::vector<double> values;
  for (const auto& s : roster) {
    ranked.push_back(&s);
    values.push_back(s.score);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->student_id < b->student_id;
  });
  const double m = median(values);
  std::vector<const TopicScore*> upper;
  std::vector<const TopicScore*> lower;
  for (const auto* s : ranked) (s->score > m ? upper : lower).push_back(s);

  PairingResult out;
  // lower.size() >= upper.size(): at most half the roster lies strictly above the median.
  for (std::size_t i = 0; i < upper.size(); ++i) {
    const auto* partner = lower[lower.size() - 1 - i];
    out.pairs.emplace_back(id_prefix + "-" + std::to_string(i + 1), class_id, topic, upper[i]->student_id,
                           partner->student_id);
  }
  for (std::size_t i = 0; i + upper.size() < lower.size(); ++i) out.unpaired.push_back(lower[i]->student_id);
  return out;
}

void to_json(json& j, const Endorsement& e) {
  j = json{{"from", e.from.str()}, {"to", e.to.str()}, {"group_id", e.group_id}, {"tag", "helpful"},
           {"at", to_iso8601(e.at)}};
}

void from_json(const json& j, Endorsement& e) {
  e.from = StudentId(j.at("from").get<std::string>());
  e.to = StudentId(j.at("to").get<std::string>());
  e.group_id = j.at("group_id").get<std::string>();
  e.at = parse_iso8601(j.at("at").get<std::string>());
}

bool StudyGroup::has_member(const StudentId& s) const {
  return std::find(members.begin(), members.end(), s) != members.end();
}

void StudyGroup::validate() const {
  std::set<StudentId> distinct(members.begin(), members.end());
  if (distinct.size() < 2 || distinct.size() != members.size()) {
    throw Error(ErrorCode::Validation, "a study group needs at least two distinct members");
  }
}

void to_json(json& j, const StudyGroup& g) {
  json ratings = json::array();
  for (const auto& [key, value] : g.ratings) {
    ratings.push_back({{"rater", key.first.str()}, {"ratee", key.second.str()}, {"rating", value}});
  }
  json members = json::array();
  for (const auto& m : g.members) members.push_back(m.str());
  j = json{{"group_id", g.group_id},
           {"class_id", g.class_id.str()},
           {"topic", g.topic},
           {"members", members},
           {"created_at", to_iso8601(g.created_at)},
           {"ratings", ratings},
           {"endorsements", g.endorsements}};
}

void from_json(const json& j, StudyGroup& g) {
  g.group_id = j.at("group_id").get<std::string>();
  g.class_id = ClassId(j.at("class_id").get<std::string>());
  g.topic = j.value("topic", "");
  g.members.clear();
  for (const auto& m : j.at("members")) g.members.emplace_back(m.get<std::string>());
  g.created_at = parse_iso8601(j.at("created_at").get<std::string>());
  g.ratings.clear();
  for (const auto& r : j.value("ratings", json::array())) {
    g.ratings[{StudentId(r.at("rater").get<std::string>()), StudentId(r.at("ratee").get<std::string>())}] =
        r.at("rating").get<int>();
  }
  g.endorsements = j.value("endorsements", std::vector<Endorsement>{});
}

void rate_group_session(StudyGroup& group, const StudentId& rater, const std::map<StudentId, int>& ratings) {
  if (!group.has_member(rater)) {
    throw Error(ErrorCode::Authorization, rater.str() + " is not a member of " + group.group_id);
  }
  if (ratings.empty()) throw Error(ErrorCode::Validation, "no ratings given");
  for (const auto& [ratee, value] : ratings) {
    if (ratee == rater) throw Error(ErrorCode::Validation, "members rate each other, not themselves");
    if (!group.has_member(ratee)) throw Error(ErrorCode::Validation, ratee.str() + " is not in this group");
    if (value < 1 || value > 5) throw Error(ErrorCode::Validation, "ratings must lie in 1..5");
  }
  for (const auto& [ratee, value] : ratings) group.ratings[{rater, ratee}] = value;
}

EndorseOutcome endorse(StudyGroup& group, const StudentId& from, const StudentId& to, Timestamp now,
                       const GroupStudyConfig& config) {
  if (from == to) throw Error(ErrorCode::Validation, "students cannot endorse themselves");
  auto it = group.ratings.find({from, to});
  if (it == group.ratings.end() || it->second < config.endorse_min_rating) {
    throw Error(ErrorCode::Precondition,
                "endorsing needs a rating of at least " + std::to_string(config.endorse_min_rating));
  }
  for (const auto& e : group.endorsements) {
    if (e.from == from && e.to == to) return {e, false};
  }
  Endorsement e{from, to, group.group_id, now};
  group.endorsements.push_back(e);
  return {e, true};
}

bool should_invite_friends(std::span<const StudySession> sessions, int current_week, const GroupStudyConfig& config) {
  const int first_week = current_week - config.invite_window_weeks + 1;
  const auto effective = std::count_if(sessions.begin(), sessions.end(), [&](const StudySession& s) {
    return s.state == SessionState::CheckedOut && s.week >= first_week && s.week <= current_week &&
           s.effectiveness.value_or(0) >= config.invite_min_effectiveness;
  });
  return effective >= config.invite_min_sessions;
}

}  // namespace studyhabit

#include "studyhabit/ttm.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <sstream>

namespace studyhabit {

void TestAttempt::validate() const {
  if (topic.empty()) throw Error(ErrorCode::Validation, "topic must not be empty");
  if (test_id.empty()) throw Error(ErrorCode::Validation, "test_id must not be empty");
  if (attempt_no < 1) throw Error(ErrorCode::Validation, "attempt_no must be >= 1");
  if (!(score >= 0.0 && score <= 100.0)) throw Error(ErrorCode::Validation, "score must lie in [0, 100]");
}

void to_json(json& j, const TestAttempt& a) {
  j = json{{"student_id", a.student_id.str()}, {"class_id", a.class_id.str()}, {"topic", a.topic},
           {"test_id", a.test_id},             {"attempt_no", a.attempt_no},  {"score", a.score},
           {"taken_at", to_iso8601(a.taken_at)}};
}

void from_json(const json& j, TestAttempt& a) {
  try {
    a.student_id = StudentId(j.at("student_id").get<std::string>());
    a.class_id = ClassId(j.at("class_id").get<std::string>());
    a.topic = j.at("topic").get<std::string>();
    a.test_id = j.at("test_id").get<std::string>();
    a.attempt_no = j.at("attempt_no").get<int>();
    a.score = j.at("score").get<double>();
    a.taken_at = parse_iso8601(j.at("taken_at").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed test attempt: ") + e.what());
  }
}

void to_json(json& j, const IngestReport& r) {
  j = json{{"accepted", r.accepted}, {"rejected", r.rejected}, {"duplicates", r.duplicates}, {"reasons", r.reasons}};
}

bool TtmStore::insert(const TestAttempt& a, IngestReport& report) {
  const auto [it, inserted] = attempts_.try_emplace(Key{a.student_id, a.test_id, a.attempt_no}, a);
  if (inserted) {
    ++report.accepted;
  } else {
    ++report.duplicates;
  }
  return inserted;
}

IngestReport TtmStore::ingest(const std::vector<json>& rows) {
  IngestReport report;
  std::unique_lock lock(mutex_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      auto a = rows[i].get<TestAttempt>();
      a.validate();
      insert(a, report);
    } catch (const Error& e) {
      ++report.rejected;
      report.reasons.push_back("row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return report;
}

IngestReport TtmStore::ingest(const std::vector<TestAttempt>& attempts) {
  IngestReport report;
  std::unique_lock lock(mutex_);
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    try {
      attempts[i].validate();
      insert(attempts[i], report);
    } catch (const Error& e) {
      ++report.rejected;
      report.reasons.push_back("row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return report;
}

IngestReport TtmStore::ingest_jsonl(std::string_view text) {
  std::vector<json> rows;
  IngestReport parse_failures;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    auto row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      ++parse_failures.rejected;
      parse_failures.reasons.push_back("line " + std::to_string(line_no) + ": not a JSON object");
      continue;
    }
    rows.push_back(std::move(row));
  }
  IngestReport report = ingest(rows);
  report.rejected += parse_failures.rejected;
  report.reasons.insert(report.reasons.end(), parse_failures.reasons.begin(), parse_failures.reasons.end());
  return report;
}

namespace {

// test_id -> best score
using BestPerTest = std::map<std::string, double>;

double mean_of_best(const BestPerTest& best) {
  double sum = 0.0;
  for (const auto& [test, score] : best) sum += score;
  return sum / static_cast<double>(best.size());
}

}  // namespace

double TtmStore::topic_score(const StudentId& student, const ClassId& cls, const std::string& topic) const {
  std::shared_lock lock(mutex_);
  BestPerTest best;
  for (const auto& [key, a] : attempts_) {
    if (a.student_id != student || a.class_id != cls || a.topic != topic) continue;
    auto [it, inserted] = best.try_emplace(a.test_id, a.score);
    if (!inserted) it->second = std::max(it->second, a.score);
  }
  if (best.empty()) {
    throw Error(ErrorCode::NoData, "no test attempts for " + student.str() + " on '" + topic + "'");
  }
  return mean_of_best(best);
}

std::vector<TopicScore> TtmStore::class_scores(const ClassId& cls, const std::string& topic) const {
  std::shared_lock lock(mutex_);
  std::map<StudentId, BestPerTest> per_student;
  for (const auto& [key, a] : attempts_) {
    if (a.class_id != cls || a.topic != topic) continue;
    auto& best = per_student[a.student_id];
    auto [it, inserted] = best.try_emplace(a.test_id, a.score);
    if (!inserted) it->second = std::max(it->second, a.score);
  }
  std::vector<TopicScore> out;
  for (const auto& [student, best] : per_student) out.push_back({student, cls, topic, mean_of_best(best)});
  return out;
}

std::optional<double> TtmStore::class_mean(const ClassId& cls) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& topic : topics(cls)) {
    for (const auto& s : class_scores(cls, topic)) {
      sum += s.score;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<std::string> TtmStore::topics(const ClassId& cls) const {
  std::shared_lock lock(mutex_);
  std::set<std::string> out;
  for (const auto& [key, a] : attempts_) {
    if (a.class_id == cls) out.insert(a.topic);
  }
  return {out.begin(), out.end()};
}

std::size_t TtmStore::size() const {
  std::shared_lock lock(mutex_);
  return attempts_.size();
}

json TtmStore::snapshot() const {
  std::shared_lock lock(mutex_);
  json rows = json::array();
  for (const auto& [key, a] : attempts_) rows.push_back(a);
  return rows;
}

void TtmStore::restore(const json& snap) {
  std::map<Key, TestAttempt> loaded;
  for (const auto& row : snap) {
    auto a = row.get<TestAttempt>();
    a.validate();
    loaded.emplace(Key{a.student_id, a.test_id, a.attempt_no}, a);
  }
  std::unique_lock lock(mutex_);
  attempts_ = std::move(loaded);
}

std::vector<TestAttempt> mock_attempts(const std::vector<StudentId>& students, const ClassId& cls,
                                       const std::vector<std::string>& topics, int tests_per_topic,
                                       std::uint64_t seed, Timestamp taken_at) {
  std::vector<TestAttempt> out;
  for (const auto& student : students) {
    Rng rng(derive_seed(seed, student.str() + "/" + cls.str()));
    const double ability = rng.uniform(30.0, 95.0);
    for (const auto& topic : topics) {
      for (int t = 1; t <= tests_per_topic; ++t) {
        const int attempts = 1 + static_cast<int>(rng.below(3));
        for (int k = 1; k <= attempts; ++k) {
          TestAttempt a;
          a.student_id = student;
          a.class_id = cls;
          a.topic = topic;
          a.test_id = cls.str() + "/" + topic + "/t" + std::to_string(t);
          a.attempt_no = k;
          a.score = std::clamp(std::round(ability + rng.uniform(-15.0, 15.0) + 3.0 * (k - 1)), 0.0, 100.0);
          a.taken_at = taken_at + Minutes{10 * (k - 1)};
          out.push_back(std::move(a));
        }
      }
    }
  }
  return out;
}

}  // namespace studyhabit

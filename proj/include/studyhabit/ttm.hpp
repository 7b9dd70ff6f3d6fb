#pragma once

// Ingestion of multiple-choice test results from the TTM learning tool, plus a
// seeded mock source for development and simulation.

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "studyhabit/core.hpp"
#include "studyhabit/group_study.hpp"
#include "studyhabit/rng.hpp"

namespace studyhabit {

struct TestAttempt {
  StudentId student_id;
  ClassId class_id;
  std::string topic;
  std::string test_id;
  int attempt_no = 1;
  double score = 0.0;  // 0..100
  Timestamp taken_at{};

  // Throws Validation for an empty topic/test id, attempt_no < 1 or a score
  // outside [0, 100].
  void validate() const;
  bool operator==(const TestAttempt&) const = default;
};

void to_json(json& j, const TestAttempt& a);
void from_json(const json& j, TestAttempt& a);

struct IngestReport {
  int accepted = 0;
  int rejected = 0;
  int duplicates = 0;
  std::vector<std::string> reasons;  // one per rejected row
};

void to_json(json& j, const IngestReport& r);

// Thread-safe store of attempts keyed on (student, test, attempt_no).
class TtmStore {
 public:
  // Each row is validated on its own; malformed rows are rejected with a
  // reason and the rest of the batch still lands. Rows whose key is already
  // stored count as duplicates.
  IngestReport ingest(const std::vector<json>& rows);
  IngestReport ingest(const std::vector<TestAttempt>& attempts);
  // One JSON object per non-blank line; unparsable lines are rejected.
  IngestReport ingest_jsonl(std::string_view text);

  // Mean over tests of the best attempt per test. NoData when no attempt exists.
  double topic_score(const StudentId& student, const ClassId& cls, const std::string& topic) const;
  // topic_score for every student with data in (class, topic), in id order.
  std::vector<TopicScore> class_scores(const ClassId& cls, const std::string& topic) const;
  // Mean of the topic scores of every student and topic in the class.
  std::optional<double> class_mean(const ClassId& cls) const;
  std::vector<std::string> topics(const ClassId& cls) const;
  std::size_t size() const;

  json snapshot() const;
  void restore(const json& snap);

 private:
  using Key = std::tuple<StudentId, std::string, int>;
  bool insert(const TestAttempt& a, IngestReport& report);

  mutable std::shared_mutex mutex_;
  std::map<Key, TestAttempt> attempts_;
};

// Seeded synthetic attempts: `tests_per_topic` tests per topic, one to three
// attempts each, for every student.
std::vector<TestAttempt> mock_attempts(const std::vector<StudentId>& students, const ClassId& cls,
                                       const std::vector<std::string>& topics, int tests_per_topic,
                                       std::uint64_t seed, Timestamp taken_at);

}  // namespace studyhabit

#pragma once

// Group study: helper suggestions for students below the class median,
// median-split peer-explanation pairs, group session ratings and "helpful"
// endorsements.
//
// A StudyPair knows which member scored above the median so that pairing can
// be audited, but that ordering never leaves the process: public_json() lists
// members in id order and carries the same prompt for both.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "studyhabit/core.hpp"
#include "studyhabit/scheduler.hpp"

namespace studyhabit {

struct TopicScore {
  StudentId student_id;
  ClassId class_id;
  std::string topic;
  double score = 0.0;  // 0..100
};

void to_json(json& j, const TopicScore& s);

struct GroupStudyConfig {
  double helper_percentile = 0.75;
  int min_overlap_minutes = 60;
  int endorse_min_rating = 4;
  int invite_min_sessions = 3;
  int invite_min_effectiveness = 4;
  int invite_window_weeks = 4;

  void validate() const;
};

// Nearest-rank percentile: element ceil(p * n) (1-based) of the ascending sort.
double nearest_rank_percentile(std::vector<double> values, double p);
// Middle value, or the mean of the two middle values for an even count.
double median(std::vector<double> values);

// Longest stretch of free time two students share in one day, in minutes.
int longest_common_free(const WeekIntervals& a, const WeekIntervals& b);

enum class HelperStatus { Ok, NotWeak };

struct HelperCandidate {
  StudentId student_id;
  double score = 0.0;
  int endorsements = 0;
  bool operator==(const HelperCandidate&) const = default;
};

struct HelperResult {
  HelperStatus status = HelperStatus::Ok;
  std::vector<HelperCandidate> candidates;
};

void to_json(json& j, const HelperResult& r);

struct HelperQuery {
  StudentId requester;
  ClassId class_id;
  std::string topic;
};

// `scores` may hold any mix of classes and topics; only (class, topic) rows
// count. Candidates are opted-in classmates at or above the helper percentile
// who share at least the overlap floor of contiguous free time with the
// requester, ranked by score, endorsements, then id. NoData when the
// requester has no score.
HelperResult suggest_helpers(const HelperQuery& query, std::span<const TopicScore> scores,
                             const std::map<StudentId, WeekIntervals>& free_time, const std::set<StudentId>& opted_in,
                             const std::map<StudentId, int>& endorsements, const GroupStudyConfig& config = {});

class StudyPair {
 public:
  StudyPair(std::string pair_id, ClassId class_id, std::string topic, StudentId above, StudentId at_or_below);

  const std::string& pair_id() const noexcept { return pair_id_; }
  const ClassId& class_id() const noexcept { return class_id_; }
  const std::string& topic() const noexcept { return topic_; }
  // Members in id order.
  std::array<StudentId, 2> members() const;
  bool has_member(const StudentId& s) const noexcept { return s == above_ || s == below_; }
  StudentId partner_of(const StudentId& s) const;
  // The prompt both members receive.
  std::string prompt() const;

  // Internal audit access.
  const StudentId& above_median() const noexcept { return above_; }
  const StudentId& at_or_below_median() const noexcept { return below_; }

  // Student-facing view.
  json public_json() const;
  // Full record for the store, never returned by the API.
  json internal_json() const;
  static StudyPair from_internal_json(const json& j);

 private:
  std::string pair_id_;
  ClassId class_id_;
  std::string topic_;
  StudentId above_;
  StudentId below_;
};

struct PairingResult {
  std::vector<StudyPair> pairs;
  std::vector<StudentId> unpaired;
};

// Pairs the best student above the median with the weakest at or below it,
// the second best with the second weakest, and so on. Ties in score are
// broken by id. Students at or below the median left without a partner (the
// ones nearest the median) are returned as unpaired. Precondition error for a
// roster of fewer than two.
PairingResult pair_for_explanation(std::span<const TopicScore> roster, const ClassId& class_id,
                                   const std::string& topic, const std::string& id_prefix = "pair");

struct Endorsement {
  StudentId from;
  StudentId to;
  std::string group_id;
  Timestamp at{};
  bool operator==(const Endorsement&) const = default;
};

void to_json(json& j, const Endorsement& e);
void from_json(const json& j, Endorsement& e);

struct StudyGroup {
  std::string group_id;
  ClassId class_id;
  std::string topic;
  std::vector<StudentId> members;
  Timestamp created_at{};
  // (rater, ratee) -> latest rating
  std::map<std::pair<StudentId, StudentId>, int> ratings;
  std::vector<Endorsement> endorsements;

  bool has_member(const StudentId& s) const;
  // Validation unless there are at least two distinct members.
  void validate() const;
};

void to_json(json& j, const StudyGroup& g);
void from_json(const json& j, StudyGroup& g);

// Stores the rater's ratings of fellow members, replacing earlier ones.
// Authorization error for a non-member rater; Validation for a rating outside
// 1..5, a non-member ratee or a self-rating.
void rate_group_session(StudyGroup& group, const StudentId& rater, const std::map<StudentId, int>& ratings);

struct EndorseOutcome {
  Endorsement endorsement;
  bool created = false;  // false when the endorsement already existed
};

// Validation for a self-endorsement; Precondition unless `from` rated `to`
// at or above the endorsement floor in this group.
EndorseOutcome endorse(StudyGroup& group, const StudentId& from, const StudentId& to, Timestamp now,
                       const GroupStudyConfig& config = {});

// True once the student has enough effective solo sessions (checked out with
// a high effectiveness rating) in the trailing window of weeks ending at
// `current_week`.
bool should_invite_friends(std::span<const StudySession> sessions, int current_week,
                           const GroupStudyConfig& config = {});

}  // namespace studyhabit

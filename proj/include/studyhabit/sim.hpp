#pragma once

// Synthetic-student simulation. Each simulated student answers triggers with
// a logistic response model and drives the engine through the same public
// operations a real client uses. Runs are deterministic per seed.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "studyhabit/engine.hpp"

namespace studyhabit {

struct StudentProfile {
  std::string name;  // optional label; ids are assigned by position
  double motivation_base = 0.5;
  double ability_base = 0.5;
  double responsiveness = 10.0;  // beta
  std::uint64_t noise_seed = 0;

  void validate() const;
};

void to_json(json& j, const StudentProfile& p);
void from_json(const json& j, StudentProfile& p);

// Accepts either an array of profiles or {"profiles": [...]}.
std::vector<StudentProfile> profiles_from_json(const json& doc);
// A spread of motivation over {0.1, ..., 0.9} with seeded abilities.
std::vector<StudentProfile> default_profiles(int count, std::uint64_t seed);

double logistic(double x);
// Probability that a student with bases (m, a) acts on a trigger.
double act_probability(double motivation, double ability, double responsiveness, double threshold);
// Perturbs both bases by uniform noise in +-0.05 (clamped to [0, 1]) and
// draws the action against act_probability.
bool respond(const StudentProfile& profile, double threshold, Rng& rng);

struct SimOptions {
  int weeks = 12;
  std::uint64_t seed = 1;
  bool gate_enabled = true;
  Minutes step = Minutes{15};
  int classes_per_student = 2;
  int pairing_from_week = 4;  // zero-based, i.e. the fifth week
  EngineConfig config;
};

struct StudentMetrics {
  StudentId student_id;
  std::string name;
  double motivation_base = 0.0;
  std::map<HabitCategory, int> cycles_completed;
  int scheduled = 0;
  int checked_out = 0;
  int missed = 0;
  int still_open = 0;
  double adherence_rate = 0.0;
  int triggers_delivered = 0;
  int triggers_deferred = 0;
  int triggers_skipped = 0;
  int triggers_dropped = 0;
  int checklist_ticks = 0;
  int notes = 0;
  int endorsements_received = 0;
};

struct SimResult {
  int weeks = 0;
  std::uint64_t seed = 0;
  bool gate_enabled = true;
  std::vector<StudentMetrics> students;
  int action_errors = 0;  // engine rejections of simulated actions

  int total_deferred() const;
  double mean_adherence() const;
};

json to_json(const StudentMetrics& m);
json to_json(const SimResult& r);

// Creates one student per profile (ids s001, s002, ...), runs each through the
// timetable, questionnaire and preference steps the day before the semester
// starts, and ingests mock test scores for every class. Deterministic per seed.
std::vector<StudentId> seed_cohort(Engine& engine, const std::vector<StudentProfile>& profiles, std::uint64_t seed,
                                   int classes_per_student = 2);

SimResult simulate(const std::vector<StudentProfile>& profiles, const SimOptions& options);

}  // namespace studyhabit

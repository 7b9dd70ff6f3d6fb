#include <gtest/gtest.h>

#include <cmath>

#include "studyhabit/sim.hpp"

using namespace studyhabit;

namespace {

StudentProfile profile(double m, double a = 0.7, std::uint64_t noise = 0) {
  StudentProfile p;
  p.motivation_base = m;
  p.ability_base = a;
  p.noise_seed = noise;
  return p;
}

}  // namespace

TEST(Logistic, Examples) {
  EXPECT_NEAR(logistic(7.5), 0.99945, 1e-5);
  EXPECT_NEAR(logistic(-2.5), 0.0759, 1e-4);
  EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
  // m * a == threshold gives an even chance.
  EXPECT_DOUBLE_EQ(act_probability(0.5, 0.5, 10.0, 0.25), 0.5);
  EXPECT_NEAR(act_probability(1.0, 1.0, 10.0, 0.25), logistic(7.5), 1e-15);
  EXPECT_NEAR(act_probability(0.0, 0.0, 10.0, 0.25), logistic(-2.5), 1e-15);
}

TEST(Logistic, RespondFrequencyTracksProbability) {
  Rng rng(5);
  int acted = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) acted += respond(profile(0.5, 0.5), 0.25, rng);
  // Noise of +-0.05 around the midpoint keeps the mean near one half.
  EXPECT_NEAR(acted / static_cast<double>(n), 0.5, 0.02);
}

TEST(Profiles, Validation) {
  EXPECT_THROW(profile(1.2).validate(), Error);
  EXPECT_THROW(profile(0.5, -0.1).validate(), Error);
  auto p = profile(0.5);
  p.responsiveness = 0.0;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_THROW(profiles_from_json(json{{"profiles", {{{"motivation_base", 2.0}, {"ability_base", 0.5}}}}}), Error);
  const auto list = profiles_from_json(json::array({json(profile(0.3)), json(profile(0.9))}));
  ASSERT_EQ(list.size(), 2u);
  EXPECT_DOUBLE_EQ(list[1].motivation_base, 0.9);
  const auto defaults = default_profiles(9, 1);
  for (std::size_t i = 0; i < defaults.size(); ++i) {
    EXPECT_NEAR(defaults[i].motivation_base, 0.1 * static_cast<double>(i + 1), 1e-12);
    EXPECT_NO_THROW(defaults[i].validate());
  }
}

TEST(Cohort, SeedingIsDeterministic) {
  Engine a, b;
  const auto profiles = default_profiles(6, 3);
  seed_cohort(a, profiles, 11);
  seed_cohort(b, profiles, 11);
  EXPECT_EQ(a.snapshot(), b.snapshot());
  for (const auto& id : a.student_ids()) {
    EXPECT_EQ(a.student(id).step, WizardStep::Preference);
    EXPECT_EQ(a.student(id).classes.size(), 2u);
  }
}

TEST(Simulation, OneStudentOneWeekSchedulesEveryClass) {
  SimOptions opt;
  opt.weeks = 1;
  opt.seed = 4;
  const auto r = simulate({profile(0.8)}, opt);
  ASSERT_EQ(r.students.size(), 1u);
  EXPECT_EQ(r.students[0].scheduled, opt.classes_per_student);
  EXPECT_EQ(r.action_errors, 0);
}

TEST(Simulation, SessionsAreConserved) {
  SimOptions opt;
  opt.weeks = 3;
  opt.seed = 8;
  const auto r = simulate(default_profiles(9, 8), opt);
  for (const auto& s : r.students) {
    EXPECT_EQ(s.scheduled, s.checked_out + s.missed + s.still_open) << s.student_id.str();
    const int resolved = s.checked_out + s.missed;
    if (resolved > 0) EXPECT_NEAR(s.adherence_rate, s.checked_out / static_cast<double>(resolved), 1e-12);
  }
}

TEST(Simulation, DeterministicPerSeed) {
  SimOptions opt;
  opt.weeks = 2;
  opt.seed = 21;
  const auto profiles = default_profiles(5, 21);
  EXPECT_EQ(to_json(simulate(profiles, opt)), to_json(simulate(profiles, opt)));
  opt.seed = 22;
  EXPECT_NE(to_json(simulate(profiles, opt)).dump(), to_json(simulate(profiles, SimOptions{.weeks = 2, .seed = 21})).dump());
}

TEST(Simulation, GateDefersOnlyWhenEnabled) {
  SimOptions opt;
  opt.weeks = 2;
  opt.seed = 2;
  // Only group-study prompts start below the ability split, so pair early,
  // once a week of misses has pulled estimated motivation down.
  opt.pairing_from_week = 1;
  std::vector<StudentProfile> profiles;
  for (int i = 0; i < 6; ++i) profiles.push_back(profile(0.1, 0.3, static_cast<std::uint64_t>(i)));
  const auto gated = simulate(profiles, opt);
  opt.gate_enabled = false;
  const auto open = simulate(profiles, opt);
  EXPECT_GT(gated.total_deferred(), 0);
  EXPECT_EQ(open.total_deferred(), 0);
}

TEST(Simulation, MotivatedTwinAdheresBetter) {
  int wins = 0;
  const int n = 10;
  for (int seed = 1; seed <= n; ++seed) {
    SimOptions opt;
    opt.weeks = 4;
    opt.seed = static_cast<std::uint64_t>(seed);
    const auto high = simulate({profile(0.9)}, opt);
    const auto low = simulate({profile(0.2)}, opt);
    wins += high.students[0].adherence_rate > low.students[0].adherence_rate;
  }
  EXPECT_GE(wins, 9);
}

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "studyhabit/scheduler.hpp"

using namespace studyhabit;
using namespace std::chrono;

namespace {

const Timestamp t0 = Timestamp{sys_days{year{2026} / 9 / 7}};

TimeBlock cls_block(int day, int start, int end, const char* id) {
  return {day, start, end, BlockKind::Class, ClassId(id)};
}

WeekTimetable two_classes() {
  WeekTimetable t;
  t.student_id = StudentId("s");
  t.blocks = {cls_block(0, 540, 660, "A"), cls_block(1, 840, 960, "B")};
  return t;
}

StudySession session_at(Timestamp start) {
  StudySession s;
  s.id = SessionId("x");
  s.student_id = StudentId("s");
  s.class_id = ClassId("A");
  s.start = start;
  s.end = start + minutes(60);
  return s;
}

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Validation;
}

}  // namespace

TEST(FreeIntervals, NoCommitments) {
  WeekTimetable t;
  t.student_id = StudentId("s");
  const auto free = free_intervals(t);
  for (int d = 0; d < 7; ++d) EXPECT_EQ(free[d], (std::vector<Interval>{{480, 1380}}));
}

TEST(FreeIntervals, TwoMondayBlocks) {
  WeekTimetable t;
  t.student_id = StudentId("s");
  t.blocks = {cls_block(0, 540, 660, "A"), cls_block(0, 720, 840, "B")};
  EXPECT_EQ(free_intervals(t)[0], (std::vector<Interval>{{480, 540}, {660, 720}, {840, 1380}}));
  EXPECT_EQ(free_intervals(t), oracle::grid_free(t));
}

TEST(FreeIntervals, BackToBackBlocksLeaveNoGap) {
  WeekTimetable t;
  t.student_id = StudentId("s");
  t.blocks = {cls_block(0, 540, 660, "A"), {0, 660, 780, BlockKind::Work, std::nullopt}};
  EXPECT_EQ(free_intervals(t)[0], (std::vector<Interval>{{480, 540}, {780, 1380}}));
}

TEST(FreeIntervals, StudyBlocksAreNotCommitments) {
  WeekTimetable t;
  t.student_id = StudentId("s");
  t.blocks = {{2, 600, 660, BlockKind::Study, ClassId("A")}};
  EXPECT_EQ(free_intervals(t)[2], (std::vector<Interval>{{480, 1380}}));
}

TEST(Suggest, LatePreference) {
  const auto t = two_classes();
  const std::vector<ClassId> classes{ClassId("A"), ClassId("B")};
  const auto r = suggest_sessions(t, classes, TimePreference::Late);
  ASSERT_EQ(r.suggestions.size(), 2u);
  EXPECT_EQ(r.suggestions[0].block, (TimeBlock{0, 1080, 1140, BlockKind::Study, ClassId("A")}));
  EXPECT_EQ(r.suggestions[1].block, (TimeBlock{1, 1080, 1140, BlockKind::Study, ClassId("B")}));
  EXPECT_TRUE(r.unschedulable.empty());
}

TEST(Suggest, EarlyPreference) {
  const auto t = two_classes();
  const std::vector<ClassId> classes{ClassId("A"), ClassId("B")};
  const auto r = suggest_sessions(t, classes, TimePreference::Early);
  ASSERT_EQ(r.suggestions.size(), 2u);
  EXPECT_EQ(r.suggestions[0].block, (TimeBlock{0, 480, 540, BlockKind::Study, ClassId("A")}));
  EXPECT_EQ(r.suggestions[1].block, (TimeBlock{1, 480, 540, BlockKind::Study, ClassId("B")}));
}

TEST(Suggest, FullyBookedWeek) {
  WeekTimetable t;
  t.student_id = StudentId("s");
  t.blocks.push_back(cls_block(0, 480, 1380, "A"));
  t.blocks.push_back(cls_block(1, 480, 1380, "B"));
  for (int d = 2; d < 7; ++d) t.blocks.push_back({d, 480, 1380, BlockKind::Work, std::nullopt});
  const std::vector<ClassId> classes{ClassId("A"), ClassId("B")};
  const auto r = suggest_sessions(t, classes, TimePreference::Late);
  EXPECT_TRUE(r.suggestions.empty());
  EXPECT_EQ(r.unschedulable, classes);
}

TEST(Suggest, SpillsToNextDayWhenOwnDayIsFull) {
  WeekTimetable t;
  t.student_id = StudentId("s");
  t.blocks = {cls_block(2, 480, 1380, "A")};
  const std::vector<ClassId> classes{ClassId("A")};
  const auto r = suggest_sessions(t, classes, TimePreference::Early);
  ASSERT_EQ(r.suggestions.size(), 1u);
  EXPECT_EQ(r.suggestions[0].block.day, 3);
}

TEST(Suggest, CandidatesMatchEnumerationOracle) {
  Rng rng(8);
  SchedulerConfig cfg;
  for (int n = 0; n < 200; ++n) {
    std::vector<ClassId> classes;
    const auto t = oracle::random_timetable(rng, classes);
    const auto pref = rng.bernoulli(0.5) ? TimePreference::Early : TimePreference::Late;
    for (const auto& c : classes) {
      const auto got = candidate_slots(t, c, pref, cfg);
      const auto want = oracle::candidates(t, c, pref == TimePreference::Early ? cfg.early_window : cfg.late_window);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].block, want[i]);
    }
  }
}

TEST(Suggest, FuzzedSoundness) {
  Rng rng(500);
  for (int n = 0; n < 500; ++n) {
    std::vector<ClassId> classes;
    const auto t = oracle::random_timetable(rng, classes);
    ASSERT_NO_THROW(t.validate());
    EXPECT_EQ(free_intervals(t), oracle::grid_free(t));
    const auto pref = rng.bernoulli(0.5) ? TimePreference::Early : TimePreference::Late;
    const auto r = suggest_sessions(t, classes, pref);
    EXPECT_EQ(r.suggestions.size() + r.unschedulable.size(), classes.size());
    std::set<ClassId> seen;
    for (std::size_t i = 0; i < r.suggestions.size(); ++i) {
      const auto& b = r.suggestions[i].block;
      EXPECT_TRUE(seen.insert(r.suggestions[i].class_id).second);
      EXPECT_EQ(b.start_min % 30, 0);
      EXPECT_GE(b.start_min, t.waking_window[b.day].start_min);
      EXPECT_LE(b.end_min, t.waking_window[b.day].end_min);
      for (const auto& c : t.blocks) EXPECT_FALSE(c.kind != BlockKind::Study && c.overlaps(b));
      for (std::size_t j = 0; j < i; ++j) EXPECT_FALSE(r.suggestions[j].block.overlaps(b));
    }
    const auto again = suggest_sessions(t, classes, pref);
    json a = r.suggestions, b = again.suggestions;
    EXPECT_EQ(a.dump(), b.dump());
  }
}

TEST(Adapt, Examples) {
  EXPECT_EQ(adapt_session_count(55, 1), 1);
  EXPECT_EQ(adapt_session_count(85, 1), 0);
  EXPECT_EQ(adapt_session_count(40, 3), 0);
  EXPECT_EQ(adapt_session_count(60, 1), 0);
}

TEST(Lifecycle, HappyPath) {
  auto s = session_at(t0 + hours(10));
  notify(s, t0 + hours(9));
  check_in(s, s.start, minutes(30));
  EXPECT_EQ(s.state, SessionState::CheckedIn);
  check_out(s, 4, 2, s.end);
  EXPECT_EQ(s.state, SessionState::CheckedOut);
  EXPECT_EQ(s.effectiveness, 4);
  EXPECT_EQ(s.environment, 2);
  EXPECT_TRUE(s.terminal());
}

TEST(Lifecycle, MissedAfterGrace) {
  auto s = session_at(t0 + hours(10));
  notify(s, t0);
  EXPECT_EQ(code_of([&] { mark_missed(s, s.start + minutes(30), minutes(30)); }), ErrorCode::IllegalTransition);
  mark_missed(s, s.start + minutes(31), minutes(30));
  EXPECT_EQ(s.state, SessionState::Missed);
  EXPECT_THROW(check_in(s, s.start, minutes(30)), Error);
}

TEST(Lifecycle, IllegalMovesLeaveSessionUntouched) {
  auto s = session_at(t0 + hours(10));
  EXPECT_EQ(code_of([&] { check_in(s, s.start, minutes(30)); }), ErrorCode::IllegalTransition);
  EXPECT_EQ(code_of([&] { check_out(s, 3, 3, s.start); }), ErrorCode::IllegalTransition);
  notify(s, t0);
  EXPECT_EQ(code_of([&] { check_in(s, s.start - minutes(31), minutes(30)); }), ErrorCode::IllegalTransition);
  EXPECT_EQ(s.state, SessionState::Notified);
  check_in(s, s.start - minutes(30), minutes(30));
  EXPECT_EQ(code_of([&] { check_out(s, 6, 3, s.end); }), ErrorCode::Validation);
  EXPECT_EQ(code_of([&] { check_out(s, 3, 0, s.end); }), ErrorCode::Validation);
  EXPECT_EQ(s.state, SessionState::CheckedIn);
  EXPECT_FALSE(s.effectiveness.has_value());
}

TEST(Lifecycle, RandomWalkNeverSkipsCheckIn) {
  Rng rng(4);
  for (int n = 0; n < 1000; ++n) {
    auto s = session_at(t0 + hours(10));
    bool checked_in = false;
    for (int k = 0; k < 8; ++k) {
      const Timestamp now = s.start + minutes(static_cast<int>(rng.below(180)) - 60);
      try {
        switch (rng.below(4)) {
          case 0: notify(s, now); break;
          case 1: check_in(s, now, minutes(30)); checked_in = true; break;
          case 2: check_out(s, 1 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(5)), now); break;
          default: mark_missed(s, now, minutes(30)); break;
        }
      } catch (const Error&) {
      }
      if (s.state == SessionState::CheckedOut) EXPECT_TRUE(checked_in);
      EXPECT_EQ(s.effectiveness.has_value(), s.state == SessionState::CheckedOut);
    }
  }
}

TEST(Adherence, RatioAndWeekFilter) {
  std::vector<StudySession> v(4, session_at(t0));
  v[0].state = SessionState::CheckedOut;
  v[1].state = SessionState::Missed;
  v[2].state = SessionState::CheckedOut;
  v[2].week = 1;
  v[3].state = SessionState::Scheduled;
  EXPECT_NEAR(*adherence(v).rate(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*adherence(v, 0).rate(), 0.5, 1e-12);
  EXPECT_FALSE(adherence(v, 5).rate().has_value());
}

TEST(Relocation, Rules) {
  const auto t = two_classes();
  const TimeBlock current{0, 1080, 1140, BlockKind::Study, ClassId("A")};
  const std::vector<TimeBlock> taken{current};
  const int low[] = {2, 1};
  const int mixed[] = {2, 4};
  const int one[] = {1};
  const auto moved = propose_relocation(low, t, ClassId("A"), current, TimePreference::Late, {}, taken);
  ASSERT_TRUE(moved.has_value());
  EXPECT_FALSE(moved->block.overlaps(current));
  EXPECT_EQ(moved->block, (TimeBlock{0, 1140, 1200, BlockKind::Study, ClassId("A")}));
  EXPECT_FALSE(propose_relocation(mixed, t, ClassId("A"), current, TimePreference::Late, {}, taken).has_value());
  EXPECT_FALSE(propose_relocation(one, t, ClassId("A"), current, TimePreference::Late, {}, taken).has_value());
}

TEST(Place, Rules) {
  const auto cat = PlaceCatalog::standard();
  Rng rng(1);
  const int low[] = {2, 1, 2};
  const int high[] = {5, 5, 5};
  const int two[] = {1, 1};
  EXPECT_TRUE(suggest_place(low, cat, rng, std::nullopt, 3).has_value());
  EXPECT_FALSE(suggest_place(high, cat, rng, std::nullopt, 3).has_value());
  EXPECT_FALSE(suggest_place(two, cat, rng, std::nullopt, 3).has_value());
  EXPECT_FALSE(suggest_place(low, cat, rng, 3, 3).has_value());
  EXPECT_TRUE(suggest_place(low, cat, rng, 2, 3).has_value());
}

TEST(Place, UniformOverSeeds) {
  const auto cat = PlaceCatalog::standard();
  const int low[] = {1, 1, 1};
  std::map<std::string, int> counts;
  const int n = 6000;
  for (int seed = 0; seed < n; ++seed) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(seed)));
    ++counts[suggest_place(low, cat, rng, std::nullopt, 0)->name];
  }
  EXPECT_EQ(counts.size(), cat.places.size());
  const double expected = static_cast<double>(n) / cat.places.size();
  for (const auto& [name, c] : counts) EXPECT_NEAR(c, expected, expected * 0.15) << name;
}

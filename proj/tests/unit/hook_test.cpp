#include <gtest/gtest.h>

#include <thread>

#include "studyhabit/hook.hpp"

using namespace studyhabit;
using namespace std::chrono;

namespace {

const Timestamp t0 = Timestamp{sys_days{year{2026} / 9 / 7}};
const StudentId alice("alice");
const auto fire = TriggerDecision::fire(TriggerType::Signal);

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

HookCycle complete(HookEngine& h, HabitCategory c, Timestamp at) {
  const auto cycle = h.open_cycle(alice, c, fire, h.next_source(alice, c), at);
  h.advance(cycle.cycle_id, HookEvent::ActionCompleted, at + minutes(1));
  h.advance(cycle.cycle_id, HookEvent::RewardDelivered, at + minutes(2));
  return h.advance(cycle.cycle_id, HookEvent::InvestmentRecorded, at + minutes(3));
}

}  // namespace

TEST(Hook, OpenCycleRules) {
  HookEngine h;
  const auto c = h.open_cycle(alice, HabitCategory::Scheduling, fire, TriggerSource::External, t0);
  EXPECT_EQ(c.phase, HookPhase::Triggered);
  EXPECT_EQ(code_of([&] { h.open_cycle(alice, HabitCategory::Scheduling, fire, TriggerSource::External, t0); }),
            ErrorCode::Conflict);
  EXPECT_EQ(code_of([&] {
              h.open_cycle(alice, HabitCategory::Preparation, TriggerDecision::defer(), TriggerSource::External, t0);
            }),
            ErrorCode::Precondition);
  // Another category is independent.
  EXPECT_NO_THROW(h.open_cycle(alice, HabitCategory::Preparation, fire, TriggerSource::External, t0));
}

TEST(Hook, TransitionExamples) {
  HookEngine h;
  const auto c = h.open_cycle(alice, HabitCategory::Scheduling, fire, TriggerSource::External, t0);
  EXPECT_EQ(h.advance(c.cycle_id, HookEvent::ActionCompleted, t0 + minutes(5)).phase, HookPhase::Acted);
  EXPECT_EQ(code_of([&] { h.advance(c.cycle_id, HookEvent::InvestmentRecorded, t0 + minutes(6)); }),
            ErrorCode::IllegalTransition);
  EXPECT_EQ(h.find(c.cycle_id)->phase, HookPhase::Acted);
  // A withheld reward still advances the phase.
  const auto rewarded = h.advance(c.cycle_id, HookEvent::RewardDelivered, t0 + minutes(7));
  EXPECT_EQ(rewarded.phase, HookPhase::Rewarded);
  EXPECT_FALSE(rewarded.reward.has_value());
  const auto done = h.advance(c.cycle_id, HookEvent::InvestmentRecorded, t0 + minutes(8));
  EXPECT_EQ(done.phase, HookPhase::Invested);
  EXPECT_EQ(h.completed_cycles(alice, HabitCategory::Scheduling), 1);
  EXPECT_EQ(h.consecutive_completions(alice, HabitCategory::Scheduling), 1);
  EXPECT_FALSE(h.open_cycle_for(alice, HabitCategory::Scheduling).has_value());
}

TEST(Hook, RewardStoredOnRewardedPhase) {
  HookEngine h;
  const auto c = h.open_cycle(alice, HabitCategory::Scheduling, fire, TriggerSource::External, t0);
  h.advance(c.cycle_id, HookEvent::ActionCompleted, t0);
  const RewardInstance r{RewardKind::StreakBadge, "badge", t0};
  EXPECT_EQ(h.advance(c.cycle_id, HookEvent::RewardDelivered, t0, r).reward, r);
}

TEST(Hook, StaleCycleAbandonedAndStreakReset) {
  HookEngine h;
  for (int i = 0; i < 3; ++i) complete(h, HabitCategory::Scheduling, t0 + hours(i));
  EXPECT_EQ(h.consecutive_completions(alice, HabitCategory::Scheduling), 3);
  const auto c = h.open_cycle(alice, HabitCategory::Scheduling, fire, TriggerSource::External, t0 + days(1));
  EXPECT_EQ(code_of([&] { h.advance(c.cycle_id, HookEvent::ActionCompleted, t0 + days(9)); }),
            ErrorCode::IllegalTransition);
  EXPECT_EQ(h.find(c.cycle_id)->phase, HookPhase::Abandoned);
  EXPECT_EQ(h.consecutive_completions(alice, HabitCategory::Scheduling), 0);
  EXPECT_EQ(h.next_source(alice, HabitCategory::Scheduling), TriggerSource::External);
  // Abandoned cycles never transition again.
  EXPECT_THROW(h.advance(c.cycle_id, HookEvent::ActionCompleted, t0 + days(9)), Error);
}

TEST(Hook, ExpireStale) {
  HookEngine h;
  h.open_cycle(alice, HabitCategory::Scheduling, fire, TriggerSource::External, t0);
  EXPECT_TRUE(h.expire_stale(t0 + days(6)).empty());
  EXPECT_EQ(h.expire_stale(t0 + days(7) + seconds(1)).size(), 1u);
  EXPECT_EQ(h.outcome_history(alice), std::vector<bool>{false});
}

TEST(Hook, InternalSourceAfterFiveCompletions) {
  EXPECT_EQ(trigger_source_for_next(0), TriggerSource::External);
  EXPECT_EQ(trigger_source_for_next(4), TriggerSource::External);
  EXPECT_EQ(trigger_source_for_next(5), TriggerSource::Internal);
  HookEngine h;
  for (int i = 0; i < 5; ++i) complete(h, HabitCategory::Preparation, t0 + hours(i));
  EXPECT_EQ(h.next_source(alice, HabitCategory::Preparation), TriggerSource::Internal);
  EXPECT_EQ(h.next_source(alice, HabitCategory::Scheduling), TriggerSource::External);
}

TEST(Hook, EventSinkReceivesLog) {
  std::vector<json> events;
  HookEngine h({}, [&](const json& e) { events.push_back(e); });
  complete(h, HabitCategory::GroupStudy, t0);
  ASSERT_GE(events.size(), 4u);
  EXPECT_EQ(events.front().value("cycle_id", ""), events.back().value("cycle_id", ""));
}

TEST(Hook, SnapshotRoundTrip) {
  HookEngine h;
  complete(h, HabitCategory::Scheduling, t0);
  h.open_cycle(alice, HabitCategory::Preparation, fire, TriggerSource::External, t0 + hours(1));
  HookEngine copy;
  copy.restore(h.snapshot());
  EXPECT_EQ(copy.snapshot(), h.snapshot());
  EXPECT_EQ(copy.completed_cycles(alice, HabitCategory::Scheduling), 1);
  EXPECT_TRUE(copy.open_cycle_for(alice, HabitCategory::Preparation).has_value());
}

TEST(Hook, ConcurrentOpenKeepsOneCycle) {
  HookEngine h;
  std::atomic<int> opened{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      for (int k = 0; k < 50; ++k) {
        try {
          h.open_cycle(alice, HabitCategory::Scheduling, fire, TriggerSource::External, t0);
          ++opened;
        } catch (const Error&) {
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(opened.load(), 1);
}

TEST(Hook, FuzzedEventSequences) {
  Rng rng(17);
  HookEngine h;
  const HookEvent events[] = {HookEvent::ActionCompleted, HookEvent::RewardDelivered, HookEvent::InvestmentRecorded};
  for (int n = 0; n < 2000; ++n) {
    const StudentId s("f" + std::to_string(n % 50));
    const auto cat = kAllCategories[rng.below(3)];
    Timestamp now = t0 + hours(n);
    std::optional<HookCycle> c;
    try {
      c = h.open_cycle(s, cat, fire, TriggerSource::External, now);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Conflict);
      c = h.open_cycle_for(s, cat);
      ASSERT_TRUE(c.has_value());
    }
    for (int k = 0, len = static_cast<int>(rng.below(6)); k < len; ++k) {
      now += minutes(static_cast<int>(rng.below(600)));
      const auto before = *h.find(c->cycle_id);
      const auto ev = events[rng.below(3)];
      try {
        const auto after = h.advance(c->cycle_id, ev, now);
        EXPECT_EQ(static_cast<int>(after.phase), static_cast<int>(before.phase) + 1);
        EXPECT_EQ(static_cast<int>(ev), static_cast<int>(before.phase));
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IllegalTransition);
        const auto after = *h.find(c->cycle_id);
        if (after.phase != HookPhase::Abandoned) EXPECT_EQ(after.phase, before.phase);
      }
    }
  }
  for (int i = 0; i < 50; ++i) {
    const StudentId s("f" + std::to_string(i));
    std::map<HabitCategory, int> open;
    for (const auto& c : h.cycles_of(s)) {
      if (c.open()) ++open[c.category];
      for (std::size_t p = 1; p < 4; ++p) {
        if (c.phase_at[p]) {
          ASSERT_TRUE(c.phase_at[p - 1].has_value());
          EXPECT_LE(*c.phase_at[p - 1], *c.phase_at[p]);
        }
      }
    }
    for (const auto& [cat, count] : open) EXPECT_LE(count, 1);
  }
}

TEST(Reward, DegenerateProbabilities) {
  RewardCatalog always{{{RewardKind::StreakBadge, 1.0, {"Badge earned"}}}, 1.0};
  RewardCatalog never{{{RewardKind::StreakBadge, 1.0, {"Badge earned"}}}, 0.0};
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto r = draw_reward(always, rng);
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->kind, RewardKind::StreakBadge);
    EXPECT_FALSE(draw_reward(never, rng).has_value());
  }
}

TEST(Reward, EmptyCatalogIsConfigurationError) {
  RewardCatalog empty;
  Rng rng(1);
  EXPECT_EQ(code_of([&] { draw_reward(empty, rng); }), ErrorCode::Configuration);
  RewardCatalog zero{{{RewardKind::StreakBadge, 0.0, {"x"}}}, 0.5};
  EXPECT_THROW(zero.validate(), Error);
}

TEST(Reward, Statistics) {
  RewardCatalog cat{{{RewardKind::PraiseMessage, 3.0, {"Great work"}}, {RewardKind::StreakBadge, 1.0, {"Badge"}}}, 0.7};
  Rng rng(2026);
  int delivered = 0, praise = 0, badge = 0;
  for (int i = 0; i < 10000; ++i) {
    if (auto r = draw_reward(cat, rng)) {
      ++delivered;
      (r->kind == RewardKind::PraiseMessage ? praise : badge)++;
    }
  }
  EXPECT_NEAR(delivered / 10000.0, 0.7, 0.02);
  EXPECT_NEAR(static_cast<double>(praise) / badge, 3.0, 0.15);
}

TEST(Reward, DeterministicPerSeed) {
  const auto cat = RewardCatalog::standard();
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_reward(cat, a, t0), draw_reward(cat, b, t0));
}

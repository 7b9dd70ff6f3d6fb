#include <gtest/gtest.h>

#include <memory>

#include "oracles.hpp"
#include "studyhabit/fbm.hpp"

using namespace studyhabit;

TEST(Activation, Examples) {
  EXPECT_TRUE(activation(1.0, 1.0, 0.25));
  EXPECT_FALSE(activation(0.0, 0.9, 0.25));
  EXPECT_TRUE(activation(0.5, 0.5, 0.25));
}

TEST(Activation, RejectsOutOfRange) {
  EXPECT_THROW(activation(1.1, 0.5, 0.25), Error);
  EXPECT_THROW(activation(0.5, -0.1, 0.25), Error);
  EXPECT_THROW(activation(0.5, 0.5, 0.0), Error);
  EXPECT_THROW(activation(0.5, 0.5, 1.0), Error);
}

TEST(TriggerType, Examples) {
  EXPECT_EQ(select_trigger_type(0.8, 0.2), TriggerDecision::fire(TriggerType::Facilitator));
  EXPECT_EQ(select_trigger_type(0.2, 0.8), TriggerDecision::fire(TriggerType::Spark));
  EXPECT_EQ(select_trigger_type(0.2, 0.2), TriggerDecision::defer());
  EXPECT_EQ(select_trigger_type(0.8, 0.9), TriggerDecision::fire(TriggerType::Signal));
  EXPECT_EQ(select_trigger_type(0.5, 0.5), TriggerDecision::fire(TriggerType::Signal));
}

TEST(TriggerType, ExhaustiveGrid) {
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double m = i / 100.0;
      const double a = j / 100.0;
      const auto d = select_trigger_type(m, a);
      const bool hm = m >= 0.5;
      const bool ha = a >= 0.5;
      if (hm && ha) {
        EXPECT_EQ(d, TriggerDecision::fire(TriggerType::Signal));
      } else if (hm) {
        EXPECT_EQ(d, TriggerDecision::fire(TriggerType::Facilitator));
      } else if (ha) {
        EXPECT_EQ(d, TriggerDecision::fire(TriggerType::Spark));
      } else {
        EXPECT_EQ(d, TriggerDecision::defer());
      }
      EXPECT_EQ(d.fires(), d.type.has_value());
      if (activation(m, a, 0.25)) EXPECT_TRUE(d.fires()) << m << "," << a;
      // Monotone in both axes.
      if (i < 100 && activation(m, a, 0.25)) EXPECT_TRUE(activation((i + 1) / 100.0, a, 0.25));
      if (j < 100 && activation(m, a, 0.25)) EXPECT_TRUE(activation(m, (j + 1) / 100.0, 0.25));
    }
  }
}

TEST(Motivation, Examples) {
  EXPECT_EQ(estimate_motivation({}), 0.5);
  const bool all[] = {true, true, true, true, true, true};
  EXPECT_DOUBLE_EQ(estimate_motivation(all), 1.0);
  const bool alt[] = {true, false, true, false};
  // Newest first: miss(1), done(1/2), miss(1/4), done(1/8) -> (1/2 + 1/8) / (15/8) = 1/3.
  EXPECT_NEAR(estimate_motivation(alt), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(estimate_motivation(alt), oracle::ewma({true, false, true, false}), 1e-12);
}

TEST(Motivation, FuzzAgainstOracle) {
  Rng rng(99);
  for (int n = 0; n < 2000; ++n) {
    const std::size_t len = rng.below(25);
    std::vector<bool> h;
    auto buf = std::make_unique<bool[]>(len + 1);
    for (std::size_t i = 0; i < len; ++i) {
      buf[i] = rng.bernoulli(0.5);
      h.push_back(buf[i]);
    }
    const double got = estimate_motivation(std::span<const bool>(buf.get(), len));
    EXPECT_NEAR(got, oracle::ewma(h), 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(Ability, Examples) {
  EXPECT_DOUBLE_EQ(estimate_ability(HabitCategory::Scheduling, 0), 0.8);
  EXPECT_DOUBLE_EQ(estimate_ability(HabitCategory::GroupStudy, 10), 0.6);
  EXPECT_GT(estimate_ability(HabitCategory::Preparation, 5), estimate_ability(HabitCategory::Preparation, 0));
  EXPECT_DOUBLE_EQ(estimate_ability(HabitCategory::Scheduling, 50), 1.0);
}

TEST(FbmConfig, RejectsThresholdAboveSplitProduct) {
  FbmConfig c;
  EXPECT_NO_THROW(c.validate());
  c.activation_threshold = 0.26;
  EXPECT_THROW(c.validate(), Error);
  c.activation_threshold = 0.2;
  c.motivation_split = 0.3;
  EXPECT_THROW(c.validate(), Error);
  c.motivation_split = 0.5;
  c.base_ability_group_study = 1.2;
  EXPECT_THROW(c.validate(), Error);
}

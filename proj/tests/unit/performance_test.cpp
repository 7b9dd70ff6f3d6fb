#include <gtest/gtest.h>

#include "oracles.hpp"
#include "studyhabit/performance.hpp"

using namespace studyhabit;

namespace {

const ModelCatalog& cat() { return ModelCatalog::standard(); }

LikertResponseSet all_items(int value) {
  LikertResponseSet r;
  for (const auto& m : cat().models()) {
    for (const auto& item : m.items) r[item.item_id] = value;
  }
  return r;
}

}  // namespace

TEST(Catalog, MatchesHandTypedTable) {
  const ModelKind kinds[] = {ModelKind::SelfPerceived, ModelKind::Objective, ModelKind::ChangeOverTime};
  for (int k = 0; k < 3; ++k) {
    const auto& m = cat().model(kinds[k]);
    const auto& ref = oracle::reference_models()[k];
    ASSERT_EQ(m.items.size(), ref.coefficients.size());
    EXPECT_EQ(m.intercept, ref.intercept);
    for (std::size_t i = 0; i < m.items.size(); ++i) {
      EXPECT_EQ(m.items[i].item_id, ref.prefix + std::to_string(i + 1));
      EXPECT_EQ(m.items[i].coefficient, ref.coefficients[i]);
      EXPECT_FALSE(m.items[i].prompt.empty());
    }
  }
  EXPECT_EQ(cat().likert_min(), 1);
  EXPECT_EQ(cat().likert_max(), 7);
}

TEST(Catalog, CategoryMapTwoTwoTwo) {
  std::map<HabitCategory, std::set<std::string>> by_cat;
  int untargeted = 0;
  for (const auto& m : cat().models()) {
    for (const auto& item : m.items) {
      if (item.category) {
        by_cat[*item.category].insert(item.item_id);
      } else {
        ++untargeted;
      }
    }
  }
  EXPECT_EQ(by_cat[HabitCategory::Scheduling], (std::set<std::string>{"obj_x2", "obj_x3"}));
  EXPECT_EQ(by_cat[HabitCategory::Preparation], (std::set<std::string>{"sp_x1", "obj_x1", "obj_x5"}));
  EXPECT_EQ(by_cat[HabitCategory::GroupStudy], (std::set<std::string>{"cot_x2", "cot_x5"}));
  EXPECT_EQ(untargeted, 14 - 7);
}

TEST(Catalog, RejectsZeroCoefficientAndDuplicates) {
  json doc = cat().to_json();
  json zero = doc;
  zero["models"][0]["items"][0]["coefficient"] = 0.0;
  EXPECT_THROW(ModelCatalog::from_json(zero), Error);
  json dup = doc;
  dup["models"][0]["items"][1]["item_id"] = dup["models"][0]["items"][0]["item_id"];
  EXPECT_THROW(ModelCatalog::from_json(dup), Error);
  EXPECT_NO_THROW(ModelCatalog::from_json(doc));
}

TEST(Score, InterceptsOnZeroVectors) {
  EXPECT_EQ(score(cat().model(ModelKind::SelfPerceived), {{"sp_x1", 0}, {"sp_x2", 0}, {"sp_x3", 0}}, ScoreMode::Raw),
            4.39);
  LikertResponseSet obj;
  for (int i = 1; i <= 5; ++i) obj["obj_x" + std::to_string(i)] = 0;
  EXPECT_EQ(score(cat().model(ModelKind::Objective), obj, ScoreMode::Raw), 2.16);
  LikertResponseSet cot;
  for (int i = 1; i <= 6; ++i) cot["cot_x" + std::to_string(i)] = 0;
  EXPECT_EQ(score(cat().model(ModelKind::ChangeOverTime), cot, ScoreMode::Raw), 2.75);
}

TEST(Score, WorkedExamples) {
  // 0.18*7 - 0.21 - 0.28 + 4.39
  EXPECT_NEAR(score(cat().model(ModelKind::SelfPerceived), {{"sp_x1", 7}, {"sp_x2", 1}, {"sp_x3", 1}}), 5.16, 1e-12);
  const auto r = all_items(4);
  EXPECT_NEAR(score(cat().model(ModelKind::ChangeOverTime), r), 4.47, 1e-12);
}

TEST(Score, ErrorsForMissingAndOutOfRange) {
  const auto& sp = cat().model(ModelKind::SelfPerceived);
  try {
    score(sp, {{"sp_x1", 4}, {"sp_x2", 4}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Incomplete);
  }
  try {
    score(sp, {{"sp_x1", 8}, {"sp_x2", 4}, {"sp_x3", 4}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Validation);
  }
  EXPECT_NO_THROW(score(sp, {{"sp_x1", 8}, {"sp_x2", 4}, {"sp_x3", 4}}, ScoreMode::Raw));
}

TEST(Score, MatchesDotProductOracle) {
  studyhabit::Rng rng(2024);
  const ModelKind kinds[] = {ModelKind::SelfPerceived, ModelKind::Objective, ModelKind::ChangeOverTime};
  for (int k = 0; k < 3; ++k) {
    const auto& ref = oracle::reference_models()[k];
    for (int n = 0; n < 1000; ++n) {
      std::vector<int> x;
      for (std::size_t i = 0; i < ref.coefficients.size(); ++i) x.push_back(1 + static_cast<int>(rng.below(7)));
      EXPECT_NEAR(score(cat().model(kinds[k]), oracle::as_responses(ref, x)), oracle::dot(ref, x), 1e-9);
    }
  }
}

TEST(Score, Affine) {
  studyhabit::Rng rng(7);
  const auto& ref = oracle::reference_models()[2];
  const auto& model = cat().model(ModelKind::ChangeOverTime);
  for (int n = 0; n < 500; ++n) {
    std::vector<int> x, y;
    double diff = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      x.push_back(1 + static_cast<int>(rng.below(7)));
      y.push_back(1 + static_cast<int>(rng.below(7)));
      diff += ref.coefficients[i] * (x[i] - y[i]);
    }
    EXPECT_NEAR(score(model, oracle::as_responses(ref, x)) - score(model, oracle::as_responses(ref, y)), diff, 1e-9);
  }
}

TEST(RankTargets, WorkedExample) {
  const auto ranked = rank_habit_targets({{"sp_x1", 4}, {"sp_x2", 4}, {"sp_x3", 4}}, cat().model(ModelKind::SelfPerceived));
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].item_id, "sp_x3");
  EXPECT_NEAR(ranked[0].gain, 0.84, 1e-12);
  EXPECT_EQ(ranked[1].item_id, "sp_x2");
  EXPECT_NEAR(ranked[1].gain, 0.63, 1e-12);
  EXPECT_EQ(ranked[2].item_id, "sp_x1");
  EXPECT_NEAR(ranked[2].gain, 0.54, 1e-12);
}

TEST(RankTargets, AllAtBestIsLexicographicZeros) {
  const auto ranked = rank_habit_targets({{"sp_x1", 7}, {"sp_x2", 1}, {"sp_x3", 1}}, cat().model(ModelKind::SelfPerceived));
  ASSERT_EQ(ranked.size(), 3u);
  for (const auto& g : ranked) EXPECT_EQ(g.gain, 0.0);
  EXPECT_EQ(ranked[0].item_id, "sp_x1");
  EXPECT_EQ(ranked[1].item_id, "sp_x2");
  EXPECT_EQ(ranked[2].item_id, "sp_x3");
}

TEST(RankTargets, GainsNonNegativeAndZeroOnlyAtExtreme) {
  studyhabit::Rng rng(3);
  for (int k = 0; k < 3; ++k) {
    const auto& model = cat().models()[k];
    for (int n = 0; n < 300; ++n) {
      LikertResponseSet r;
      for (const auto& item : model.items) r[item.item_id] = 1 + static_cast<int>(rng.below(7));
      for (const auto& g : rank_habit_targets(r, model)) {
        EXPECT_GE(g.gain, 0.0);
        const double c = cat().find_item(g.item_id)->coefficient;
        const bool extreme = c > 0 ? r[g.item_id] == 7 : r[g.item_id] == 1;
        EXPECT_EQ(g.gain == 0.0, extreme);
      }
    }
  }
}

TEST(TargetCategory, SchedulingFirst) {
  EXPECT_EQ(select_target_category(cat(), all_items(4), {0}), HabitCategory::Scheduling);
  EXPECT_EQ(select_target_category(cat(), all_items(4), {3}), HabitCategory::Scheduling);
}

TEST(TargetCategory, TopGainGroupStudy) {
  // Everything at its best value except cot_x5 (negative coefficient, at 7).
  LikertResponseSet r;
  for (const auto& m : cat().models()) {
    for (const auto& item : m.items) r[item.item_id] = item.coefficient > 0 ? 7 : 1;
  }
  r["cot_x5"] = 7;
  EXPECT_EQ(select_target_category(cat(), r, {4}), HabitCategory::GroupStudy);
}

TEST(TargetCategory, AllGainsZeroFallsBack) {
  LikertResponseSet r;
  for (const auto& m : cat().models()) {
    for (const auto& item : m.items) r[item.item_id] = item.coefficient > 0 ? 7 : 1;
  }
  EXPECT_EQ(select_target_category(cat(), r, {4}), HabitCategory::Scheduling);
}

TEST(TargetCategory, UntargetedItemsNeverDecide) {
  LikertResponseSet r;
  for (const auto& m : cat().models()) {
    for (const auto& item : m.items) r[item.item_id] = item.coefficient > 0 ? 7 : 1;
  }
  // Huge headroom on an untargeted item (cot_x4, coefficient -0.30) and a
  // small one on a Preparation item.
  r["cot_x4"] = 7;
  r["obj_x5"] = 6;
  EXPECT_EQ(select_target_category(cat(), r, {4}), HabitCategory::Preparation);
}

TEST(TargetCategory, PreparationBeatsGroupStudyOnTie) {
  // The reference coefficients have no exact cross-category tie, so give obj_x5 the same
  // magnitude as cot_x5 in a custom catalog.
  json doc = cat().to_json();
  for (auto& m : doc["models"]) {
    for (auto& item : m["items"]) {
      if (item["item_id"] == "obj_x5") item["coefficient"] = 0.25;
    }
  }
  const auto custom = ModelCatalog::from_json(doc);
  LikertResponseSet r;
  for (const auto& m : custom.models()) {
    for (const auto& item : m.items) r[item.item_id] = item.coefficient > 0 ? 7 : 1;
  }
  r["obj_x5"] = 3;  // 0.25 * (7 - 3)
  r["cot_x5"] = 5;  // 0.25 * (5 - 1)
  EXPECT_EQ(select_target_category(custom, r, {4}), HabitCategory::Preparation);
}

TEST(Responses, ValidateCompleteness) {
  auto r = all_items(4);
  EXPECT_NO_THROW(validate_responses(cat(), r));
  r.erase("cot_x6");
  EXPECT_THROW(validate_responses(cat(), r), Error);
  r = all_items(4);
  r["zz_x1"] = 3;
  EXPECT_THROW(validate_responses(cat(), r), Error);
}

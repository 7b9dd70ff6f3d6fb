#include "studyhabit/performance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "habit_models_data.hpp"

namespace studyhabit {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SelfPerceived: return "self_perceived";
    case ModelKind::Objective: return "objective";
    case ModelKind::ChangeOverTime: return "change_over_time";
  }
  return "self_perceived";
}

ModelKind model_kind_from(std::string_view text) {
  if (text == "self_perceived") return ModelKind::SelfPerceived;
  if (text == "objective") return ModelKind::Objective;
  if (text == "change_over_time") return ModelKind::ChangeOverTime;
  throw Error(ErrorCode::Configuration, "unknown model kind '" + std::string(text) + "'");
}

ModelCatalog ModelCatalog::from_json(const json& doc) {
  ModelCatalog cat;
  try {
    cat.version_ = doc.at("catalog_version").get<std::string>();
    cat.likert_min_ = doc.value("likert_min", 1);
    cat.likert_max_ = doc.value("likert_max", 7);
    std::set<std::string> seen;
    for (const auto& m : doc.at("models")) {
      RegressionModel model;
      model.kind = model_kind_from(m.at("kind").get<std::string>());
      model.outcome = m.value("outcome", "");
      model.intercept = m.at("intercept").get<double>();
      for (const auto& it : m.at("items")) {
        HabitItem item;
        item.item_id = it.at("item_id").get<std::string>();
        item.prompt = it.value("prompt", "");
        item.model = model.kind;
        item.coefficient = it.at("coefficient").get<double>();
        item.significance = it.value("significance", "");
        const auto cat_name = it.value("category", std::string("untargeted"));
        if (cat_name != "untargeted") item.category = habit_category_from(cat_name);
        if (item.coefficient == 0.0) {
          throw Error(ErrorCode::Configuration, "item " + item.item_id + " has a zero coefficient");
        }
        if (!seen.insert(item.item_id).second) {
          throw Error(ErrorCode::Configuration, "duplicate item id " + item.item_id);
        }
        model.items.push_back(std::move(item));
      }
      cat.models_.push_back(std::move(model));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string("malformed model catalog: ") + e.what());
  }
  if (cat.likert_min_ >= cat.likert_max_) throw Error(ErrorCode::Configuration, "empty Likert range");
  for (ModelKind k : {ModelKind::SelfPerceived, ModelKind::Objective, ModelKind::ChangeOverTime}) {
    (void)cat.model(k);
  }
  return cat;
}

const ModelCatalog& ModelCatalog::standard() {
  static const ModelCatalog catalog = from_json(json::parse(kHabitModelsJson));
  return catalog;
}

const RegressionModel& ModelCatalog::model(ModelKind kind) const {
  for (const auto& m : models_) {
    if (m.kind == kind) return m;
  }
  throw Error(ErrorCode::Configuration, "catalog lacks model " + std::string(to_string(kind)));
}

const HabitItem* ModelCatalog::find_item(const std::string& item_id) const {
  for (const auto& m : models_) {
    for (const auto& it : m.items) {
      if (it.item_id == item_id) return &it;
    }
  }
  return nullptr;
}

json ModelCatalog::to_json() const {
  json models = json::array();
  for (const auto& m : models_) {
    json items = json::array();
    for (const auto& it : m.items) {
      items.push_back({{"item_id", it.item_id},
                       {"prompt", it.prompt},
                       {"coefficient", it.coefficient},
                       {"significance", it.significance},
                       {"category", it.category ? std::string(studyhabit::to_string(*it.category)) : "untargeted"}});
    }
    models.push_back({{"kind", studyhabit::to_string(m.kind)},
                      {"outcome", m.outcome},
                      {"intercept", m.intercept},
                      {"items", items}});
  }
  return {{"catalog_version", version_}, {"likert_min", likert_min_}, {"likert_max", likert_max_}, {"models", models}};
}

namespace {

int lookup(const LikertResponseSet& responses, const HabitItem& item, ScoreMode mode, int lo, int hi) {
  auto it = responses.find(item.item_id);
  if (it == responses.end()) {
    throw Error(ErrorCode::Incomplete, "missing response for " + item.item_id);
  }
  if (mode == ScoreMode::Validated && (it->second < lo || it->second > hi)) {
    throw Error(ErrorCode::Validation, "response for " + item.item_id + " outside " + std::to_string(lo) + ".." +
                                           std::to_string(hi));
  }
  return it->second;
}

}  // namespace

double score(const RegressionModel& model, const LikertResponseSet& responses, ScoreMode mode, int likert_min,
             int likert_max) {
  double total = model.intercept;
  for (const auto& item : model.items) {
    total += item.coefficient * lookup(responses, item, mode, likert_min, likert_max);
  }
  return total;
}

void validate_responses(const ModelCatalog& catalog, const LikertResponseSet& responses) {
  for (const auto& [id, value] : responses) {
    if (!catalog.find_item(id)) throw Error(ErrorCode::Validation, "unknown item " + id);
  }
  for (const auto& m : catalog.models()) {
    for (const auto& item : m.items) {
      lookup(responses, item, ScoreMode::Validated, catalog.likert_min(), catalog.likert_max());
    }
  }
}

std::vector<TargetGain> rank_habit_targets(const LikertResponseSet& responses, const RegressionModel& model,
                                           int likert_min, int likert_max) {
  std::vector<TargetGain> gains;
  gains.reserve(model.items.size());
  for (const auto& item : model.items) {
    const int x = lookup(responses, item, ScoreMode::Validated, likert_min, likert_max);
    const double gain =
        item.coefficient > 0 ? item.coefficient * (likert_max - x) : -item.coefficient * (x - likert_min);
    gains.push_back({item.item_id, gain});
  }
  std::sort(gains.begin(), gains.end(), [](const TargetGain& a, const TargetGain& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    return a.item_id < b.item_id;
  });
  return gains;
}

HabitCategory select_target_category(const ModelCatalog& catalog, const LikertResponseSet& responses,
                                     const CategoryProgress& progress, int prerequisite_cycles) {
  if (progress.completed_scheduling_cycles < prerequisite_cycles) return HabitCategory::Scheduling;

  // Gains that differ by less than this are the same value reached through
  // different float products (e.g. 0.30*2 vs 0.20*3).
  constexpr double kTieEps = 1e-12;
  double best_gain = 0.0;
  std::optional<HabitCategory> best;
  for (const auto& m : catalog.models()) {
    for (const auto& tg : rank_habit_targets(responses, m, catalog.likert_min(), catalog.likert_max())) {
      const HabitItem* item = catalog.find_item(tg.item_id);
      if (!item->category || tg.gain <= kTieEps) continue;
      const bool better = tg.gain > best_gain + kTieEps;
      // kAllCategories order is the tie priority: Scheduling, Preparation, GroupStudy.
      const bool tie_wins = std::abs(tg.gain - best_gain) <= kTieEps && best &&
                            static_cast<int>(*item->category) < static_cast<int>(*best);
      if (!best || better || tie_wins) {
        best_gain = better || !best ? tg.gain : best_gain;
        best = item->category;
      }
    }
  }
  return best.value_or(HabitCategory::Scheduling);
}

}  // namespace studyhabit

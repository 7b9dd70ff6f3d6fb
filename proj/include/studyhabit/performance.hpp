#pragma once

// Study-habit regression models. Each model predicts one academic-performance
// dimension as a linear function of Likert responses; the coefficients ship as
// a versioned JSON catalog (data/habit_models.json) rather than code.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "studyhabit/core.hpp"

namespace studyhabit {

enum class ModelKind { SelfPerceived, Objective, ChangeOverTime };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from(std::string_view text);

struct HabitItem {
  std::string item_id;
  std::string prompt;
  ModelKind model = ModelKind::SelfPerceived;
  double coefficient = 0.0;
  std::string significance;  // "*", "**" or "***"; informational only
  std::optional<HabitCategory> category;  // nullopt = untargeted
};

struct RegressionModel {
  ModelKind kind = ModelKind::SelfPerceived;
  std::string outcome;
  std::vector<HabitItem> items;
  double intercept = 0.0;
};

// item_id -> Likert score
using LikertResponseSet = std::map<std::string, int>;

class ModelCatalog {
 public:
  // Parses and validates a catalog document. Throws Configuration on a zero
  // coefficient, a duplicate item id or a missing model.
  static ModelCatalog from_json(const json& doc);
  // The catalog compiled into the library from data/habit_models.json.
  static const ModelCatalog& standard();

  const std::string& version() const noexcept { return version_; }
  int likert_min() const noexcept { return likert_min_; }
  int likert_max() const noexcept { return likert_max_; }
  const RegressionModel& model(ModelKind kind) const;
  const std::vector<RegressionModel>& models() const noexcept { return models_; }
  const HabitItem* find_item(const std::string& item_id) const;
  json to_json() const;

 private:
  std::string version_;
  int likert_min_ = 1;
  int likert_max_ = 7;
  std::vector<RegressionModel> models_;
};

enum class ScoreMode {
  Validated,  // every item present, values within the Likert range
  Raw,        // arbitrary values, missing items still rejected
};

// Linear predictor sum(c_i * x_i) + intercept. No clamping.
double score(const RegressionModel& model, const LikertResponseSet& responses,
             ScoreMode mode = ScoreMode::Validated, int likert_min = 1, int likert_max = 7);

// Validates responses against the catalog: every item of every model present
// and in range. Unknown item ids are rejected too.
void validate_responses(const ModelCatalog& catalog, const LikertResponseSet& responses);

struct TargetGain {
  std::string item_id;
  double gain = 0.0;
  bool operator==(const TargetGain&) const = default;
};

// Headroom per item: positive coefficient c gains c*(max - x), negative
// coefficient gains |c|*(x - min). Sorted by gain desc, then item_id asc.
std::vector<TargetGain> rank_habit_targets(const LikertResponseSet& responses, const RegressionModel& model,
                                           int likert_min = 1, int likert_max = 7);

struct CategoryProgress {
  int completed_scheduling_cycles = 0;
};

// Scheduling until `prerequisite_cycles` scheduling cycles are complete; then
// the category owning the highest-gain targeted item across all models.
HabitCategory select_target_category(const ModelCatalog& catalog, const LikertResponseSet& responses,
                                     const CategoryProgress& progress, int prerequisite_cycles = 4);

}  // namespace studyhabit

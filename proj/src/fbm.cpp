#include "studyhabit/fbm.hpp"

#include <algorithm>

namespace studyhabit {

std::string_view to_string(TriggerType t) {
  switch (t) {
    case TriggerType::Signal: return "signal";
    case TriggerType::Spark: return "spark";
    case TriggerType::Facilitator: return "facilitator";
  }
  return "signal";
}

TriggerType trigger_type_from(std::string_view text) {
  if (text == "signal") return TriggerType::Signal;
  if (text == "spark") return TriggerType::Spark;
  if (text == "facilitator") return TriggerType::Facilitator;
  throw Error(ErrorCode::Validation, "unknown trigger type '" + std::string(text) + "'");
}

namespace {

bool unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void FbmConfig::validate() const {
  if (!(activation_threshold > 0.0 && activation_threshold < 1.0)) {
    throw Error(ErrorCode::Configuration, "activation threshold must lie in (0,1)");
  }
  if (!unit(motivation_split) || !unit(ability_split)) {
    throw Error(ErrorCode::Configuration, "quadrant splits must lie in [0,1]");
  }
  if (activation_threshold > motivation_split * ability_split) {
    throw Error(ErrorCode::Configuration, "activation threshold must not exceed m0*a0");
  }
  if (!unit(motivation_prior)) throw Error(ErrorCode::Configuration, "motivation prior must lie in [0,1]");
  if (motivation_window < 1) throw Error(ErrorCode::Configuration, "motivation window must be >= 1");
  for (double b : {base_ability_scheduling, base_ability_preparation, base_ability_group_study}) {
    if (!unit(b)) throw Error(ErrorCode::Configuration, "base ability must lie in [0,1]");
  }
  if (ability_step_per_completion < 0.0 || ability_step_cap < 0.0) {
    throw Error(ErrorCode::Configuration, "ability steps must be non-negative");
  }
}

double FbmConfig::base_ability(HabitCategory c) const {
  switch (c) {
    case HabitCategory::Scheduling: return base_ability_scheduling;
    case HabitCategory::Preparation: return base_ability_preparation;
    case HabitCategory::GroupStudy: return base_ability_group_study;
  }
  return base_ability_scheduling;
}

bool activation(double motivation, double ability, double tau) {
  if (!unit(motivation) || !unit(ability)) {
    throw Error(ErrorCode::Validation, "motivation and ability must lie in [0,1]");
  }
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::Validation, "tau must lie in (0,1)");
  return motivation * ability >= tau;
}

TriggerDecision select_trigger_type(double motivation, double ability, double m0, double a0) {
  if (!unit(motivation) || !unit(ability) || !unit(m0) || !unit(a0)) {
    throw Error(ErrorCode::Validation, "motivation, ability and splits must lie in [0,1]");
  }
  const bool m_high = motivation >= m0;
  const bool a_high = ability >= a0;
  if (m_high && a_high) return TriggerDecision::fire(TriggerType::Signal);
  if (m_high) return TriggerDecision::fire(TriggerType::Facilitator);
  if (a_high) return TriggerDecision::fire(TriggerType::Spark);
  return TriggerDecision::defer();
}

double estimate_motivation(std::span<const bool> history, double prior, int window) {
  if (history.empty() || window < 1) return prior;
  const std::size_t n = std::min<std::size_t>(history.size(), static_cast<std::size_t>(window));
  double weight = 1.0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (history[history.size() - 1 - i]) num += weight;
    den += weight;
    weight *= 0.5;
  }
  return num / den;
}

double estimate_ability(HabitCategory category, int streak, const FbmConfig& config) {
  if (streak < 0) throw Error(ErrorCode::Validation, "streak must be >= 0");
  const double boost = std::min(config.ability_step_cap, config.ability_step_per_completion * streak);
  return std::min(1.0, config.base_ability(category) + boost);
}

}  // namespace studyhabit

#pragma once

// Motivation/ability gate in front of every trigger. The activation curve is
// the hyperbola m*a >= tau; the trigger type comes from the quadrant of (m, a).
// All constants are engineering defaults, exposed through FbmConfig.

#include <optional>
#include <span>

#include "studyhabit/core.hpp"

namespace studyhabit {

enum class TriggerType { Signal, Spark, Facilitator };
enum class GateOutcome { Fire, Defer };

std::string_view to_string(TriggerType t);
TriggerType trigger_type_from(std::string_view text);

struct TriggerDecision {
  GateOutcome outcome = GateOutcome::Defer;
  std::optional<TriggerType> type;  // engaged iff outcome == Fire

  static TriggerDecision fire(TriggerType t) { return {GateOutcome::Fire, t}; }
  static TriggerDecision defer() { return {GateOutcome::Defer, std::nullopt}; }
  bool fires() const noexcept { return outcome == GateOutcome::Fire; }
  bool operator==(const TriggerDecision&) const = default;
};

struct BehaviorContext {
  double motivation = 0.5;
  double ability = 0.5;
  HabitCategory category = HabitCategory::Scheduling;
};

struct FbmConfig {
  double activation_threshold = 0.25;  // tau
  double motivation_split = 0.5;       // m0
  double ability_split = 0.5;          // a0
  double motivation_prior = 0.5;
  int motivation_window = 10;
  double base_ability_scheduling = 0.8;
  double base_ability_preparation = 0.6;
  double base_ability_group_study = 0.4;
  double ability_step_per_completion = 0.02;
  double ability_step_cap = 0.2;

  // Throws Configuration unless tau in (0,1), splits in [0,1], tau <= m0*a0
  // and base abilities in [0,1].
  void validate() const;
  double base_ability(HabitCategory c) const;
};

// True iff m*a >= tau. Throws Validation when m or a leave [0,1] or tau leaves (0,1).
bool activation(double motivation, double ability, double tau);

TriggerDecision select_trigger_type(double motivation, double ability, double m0 = 0.5, double a0 = 0.5);

// Outcomes ordered oldest -> newest (true = completed cycle). The newest
// outcome weighs 1, each older one half the previous; at most `window` are used.
double estimate_motivation(std::span<const bool> history, double prior = 0.5, int window = 10);

double estimate_ability(HabitCategory category, int streak, const FbmConfig& config = {});

}  // namespace studyhabit

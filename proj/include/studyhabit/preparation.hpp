#pragma once

// Class preparation: a weekly reading checklist built from the instructor's
// materials manifest, the pre-class reading reminder and the post-class
// summary-note prompt.

#include <optional>
#include <string>
#include <vector>

#include "studyhabit/core.hpp"
#include "studyhabit/notifier.hpp"

namespace studyhabit {

enum class MaterialKind { LectureNotes, TutorialNotes, Textbook, SharedLink, PersonalNotesPrev, OwnArticle };

std::string_view to_string(MaterialKind k);
MaterialKind material_kind_from(std::string_view text);

// What the instructor published for one class in one week.
struct MaterialsManifest {
  ClassId class_id;
  int week = 0;
  bool meets = true;
  bool cancelled = false;
  bool lecture_notes = false;
  bool tutorial_notes = false;
  std::vector<std::string> textbook;  // passages; one checklist item in total
  std::vector<std::string> links;     // one checklist item each
  bool previous_notes = false;

  bool empty() const noexcept {
    return !lecture_notes && !tutorial_notes && textbook.empty() && links.empty() && !previous_notes;
  }
};

void to_json(json& j, const MaterialsManifest& m);
void from_json(const json& j, MaterialsManifest& m);

struct ChecklistItem {
  std::string item_id;
  ClassId class_id;
  int week = 0;
  MaterialKind kind = MaterialKind::LectureNotes;
  std::string label;
  bool required = true;
  std::optional<Timestamp> ticked_at;
};

struct Checklist {
  ClassId class_id;
  int week = 0;
  std::vector<ChecklistItem> items;
  bool sparse = false;

  int required_total() const noexcept;
  int required_ticked() const noexcept;
  // Ticked required items over all required items; 0 when nothing is required.
  double progress() const noexcept;
  ChecklistItem* find(const std::string& item_id);
};

void to_json(json& j, const Checklist& c);
void from_json(const json& j, Checklist& c);

// Nothing when the class does not meet that week or is cancelled. An empty
// manifest yields a sparse checklist holding only the optional own-article item.
std::optional<Checklist> generate_checklist(const MaterialsManifest& manifest);

struct TickOutcome {
  bool changed = false;  // false for a repeated tick
  std::string warning;
  double progress_before = 0.0;
  double progress_after = 0.0;
  ProgressBand band_before = ProgressBand::Red;
  ProgressBand band_after = ProgressBand::Red;
  bool completed = false;  // this tick took progress to 1.0

  bool band_changed() const noexcept { return band_before != band_after; }
};

// NotFound for an unknown item. A second tick of the same item changes nothing.
TickOutcome tick(Checklist& checklist, const std::string& item_id, Timestamp now,
                 const BandThresholds& bands = {});

struct PreparationConfig {
  Minutes reminder_lead = std::chrono::hours(48);
  Minutes notes_delay = Minutes{15};
};

// Reading-list reminder `lead` before the meeting, never earlier than the
// Monday 00:00 that starts the meeting's week.
TriggerRequest pre_class_reminder(const StudentId& student, const TimeBlock& meeting, absl::CivilDay week_monday,
                                  const TimeZone& tz, Minutes lead = std::chrono::hours(48));

// Summary-note prompt `delay` after the meeting ends.
TriggerRequest post_class_prompt(const StudentId& student, const TimeBlock& meeting, absl::CivilDay week_monday,
                                 const TimeZone& tz, Minutes delay = Minutes{15});

// A note counts once it has at least one non-whitespace character.
bool note_accepted(std::string_view text);

struct SummaryNote {
  StudentId student_id;
  ClassId class_id;
  int week = 0;
  std::string text;
  Timestamp written_at{};
};

void to_json(json& j, const SummaryNote& n);
void from_json(const json& j, SummaryNote& n);

}  // namespace studyhabit

#include "studyhabit/preparation.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace studyhabit {

namespace {

constexpr std::array<MaterialKind, 6> kKinds{MaterialKind::LectureNotes,  MaterialKind::TutorialNotes,
                                             MaterialKind::Textbook,      MaterialKind::SharedLink,
                                             MaterialKind::PersonalNotesPrev, MaterialKind::OwnArticle};

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string meeting_subject(const TimeBlock& meeting) {
  return (meeting.class_id ? meeting.class_id->str() : std::string("class")) + "@" + std::to_string(meeting.day) +
         ":" + std::to_string(meeting.start_min);
}

}  // namespace

std::string_view to_string(MaterialKind k) {
  switch (k) {
    case MaterialKind::LectureNotes: return "lecture_notes";
    case MaterialKind::TutorialNotes: return "tutorial_notes";
    case MaterialKind::Textbook: return "textbook";
    case MaterialKind::SharedLink: return "shared_link";
    case MaterialKind::PersonalNotesPrev: return "personal_notes_prev";
    case MaterialKind::OwnArticle: return "own_article";
  }
  return "lecture_notes";
}

MaterialKind material_kind_from(std::string_view text) {
  for (auto k : kKinds) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::Validation, "unknown material kind '" + std::string(text) + "'");
}

void to_json(json& j, const MaterialsManifest& m) {
  j = json{{"class_id", m.class_id.str()},         {"week", m.week},
           {"meets", m.meets},                     {"cancelled", m.cancelled},
           {"lecture_notes", m.lecture_notes},     {"tutorial_notes", m.tutorial_notes},
           {"textbook", m.textbook},               {"links", m.links},
           {"previous_notes", m.previous_notes}};
}

void from_json(const json& j, MaterialsManifest& m) {
  try {
    m.class_id = ClassId(j.at("class_id").get<std::string>());
    m.week = j.at("week").get<int>();
    m.meets = j.value("meets", true);
    m.cancelled = j.value("cancelled", false);
    m.lecture_notes = j.value("lecture_notes", false);
    m.tutorial_notes = j.value("tutorial_notes", false);
    m.textbook = j.value("textbook", std::vector<std::string>{});
    m.links = j.value("links", std::vector<std::string>{});
    m.previous_notes = j.value("previous_notes", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed materials manifest: ") + e.what());
  }
  if (m.week < 0) throw Error(ErrorCode::Validation, "week must be >= 0");
}

int Checklist::required_total() const noexcept {
  return static_cast<int>(std::count_if(items.begin(), items.end(), [](const auto& i) { return i.required; }));
}

int Checklist::required_ticked() const noexcept {
  return static_cast<int>(
      std::count_if(items.begin(), items.end(), [](const auto& i) { return i.required && i.ticked_at; }));
}

double Checklist::progress() const noexcept {
  const int total = required_total();
  return total == 0 ? 0.0 : static_cast<double>(required_ticked()) / total;
}

ChecklistItem* Checklist::find(const std::string& item_id) {
  auto it = std::find_if(items.begin(), items.end(), [&](const auto& i) { return i.item_id == item_id; });
  return it == items.end() ? nullptr : &*it;
}

void to_json(json& j, const Checklist& c) {
  json items = json::array();
  for (const auto& i : c.items) {
    json ji{{"item_id", i.item_id}, {"kind", to_string(i.kind)}, {"label", i.label}, {"required", i.required}};
    ji["ticked_at"] = i.ticked_at ? json(to_iso8601(*i.ticked_at)) : json(nullptr);
    items.push_back(std::move(ji));
  }
  const double p = c.progress();
  j = json{{"class_id", c.class_id.str()}, {"week", c.week},     {"items", items},
           {"sparse", c.sparse},           {"progress", p},      {"band", to_string(progress_band(p))}};
}

void from_json(const json& j, Checklist& c) {
  c.class_id = ClassId(j.at("class_id").get<std::string>());
  c.week = j.at("week").get<int>();
  c.sparse = j.value("sparse", false);
  c.items.clear();
  for (const auto& ji : j.at("items")) {
    ChecklistItem i;
    i.item_id = ji.at("item_id").get<std::string>();
    i.class_id = c.class_id;
    i.week = c.week;
    i.kind = material_kind_from(ji.at("kind").get<std::string>());
    i.label = ji.value("label", "");
    i.required = ji.value("required", i.kind != MaterialKind::OwnArticle);
    if (ji.contains("ticked_at") && !ji["ticked_at"].is_null()) {
      i.ticked_at = parse_iso8601(ji["ticked_at"].get<std::string>());
    }
    c.items.push_back(std::move(i));
  }
}

std::optional<Checklist> generate_checklist(const MaterialsManifest& m) {
  if (!m.meets || m.cancelled) return std::nullopt;
  Checklist c;
  c.class_id = m.class_id;
  c.week = m.week;
  c.sparse = m.empty();
  auto add = [&](MaterialKind kind, std::string label) {
    ChecklistItem i;
    i.item_id = m.class_id.str() + "-w" + std::to_string(m.week) + "-" + std::to_string(c.items.size() + 1);
    i.class_id = m.class_id;
    i.week = m.week;
    i.kind = kind;
    i.label = std::move(label);
    i.required = kind != MaterialKind::OwnArticle;
    c.items.push_back(std::move(i));
  };
  if (m.lecture_notes) add(MaterialKind::LectureNotes, "Lecture notes");
  if (m.tutorial_notes) add(MaterialKind::TutorialNotes, "Tutorial notes");
  if (!m.textbook.empty()) add(MaterialKind::Textbook, "Textbook: " + join(m.textbook, ", "));
  for (const auto& link : m.links) add(MaterialKind::SharedLink, link);
  if (m.previous_notes) add(MaterialKind::PersonalNotesPrev, "Your notes from last week");
  add(MaterialKind::OwnArticle, "Find an article of your own that interests you");
  return c;
}

TickOutcome tick(Checklist& checklist, const std::string& item_id, Timestamp now, const BandThresholds& bands) {
  ChecklistItem* item = checklist.find(item_id);
  if (!item) throw Error(ErrorCode::NotFound, "no checklist item '" + item_id + "'");
  TickOutcome out;
  out.progress_before = checklist.progress();
  out.band_before = progress_band(out.progress_before, bands);
  if (item->ticked_at) {
    out.warning = "item '" + item_id + "' already ticked";
  } else {
    item->ticked_at = now;
    out.changed = true;
  }
  out.progress_after = checklist.progress();
  out.band_after = progress_band(out.progress_after, bands);
  out.completed = out.changed && out.progress_before < 1.0 && out.progress_after >= 1.0;
  return out;
}

TriggerRequest pre_class_reminder(const StudentId& student, const TimeBlock& meeting, absl::CivilDay week_monday,
                                  const TimeZone& tz, Minutes lead) {
  const Timestamp start = local_instant(week_monday + meeting.day, meeting.start_min, tz);
  const Timestamp week_start = local_instant(week_monday, 0, tz);
  TriggerRequest r;
  r.student_id = student;
  r.category = HabitCategory::Preparation;
  r.purpose = TriggerPurpose::ReadingList;
  r.due_at = std::max(start - lead, week_start);
  r.payload = {{"label", "this week's reading list"}};
  if (meeting.class_id) r.payload["class_id"] = meeting.class_id->str();
  r.subject = meeting_subject(meeting);
  return r;
}

TriggerRequest post_class_prompt(const StudentId& student, const TimeBlock& meeting, absl::CivilDay week_monday,
                                 const TimeZone& tz, Minutes delay) {
  TriggerRequest r;
  r.student_id = student;
  r.category = HabitCategory::Preparation;
  r.purpose = TriggerPurpose::PostClassNotes;
  r.due_at = local_instant(week_monday + meeting.day, meeting.end_min, tz) + delay;
  r.payload = json::object();
  if (meeting.class_id) r.payload["class_id"] = meeting.class_id->str();
  r.subject = meeting_subject(meeting);
  return r;
}

bool note_accepted(std::string_view text) {
  return std::any_of(text.begin(), text.end(), [](unsigned char c) { return !std::isspace(c); });
}

void to_json(json& j, const SummaryNote& n) {
  j = json{{"student_id", n.student_id.str()},
           {"class_id", n.class_id.str()},
           {"week", n.week},
           {"text", n.text},
           {"written_at", to_iso8601(n.written_at)}};
}

void from_json(const json& j, SummaryNote& n) {
  n.student_id = StudentId(j.at("student_id").get<std::string>());
  n.class_id = ClassId(j.at("class_id").get<std::string>());
  n.week = j.at("week").get<int>();
  n.text = j.at("text").get<std::string>();
  n.written_at = parse_iso8601(j.at("written_at").get<std::string>());
}

}  // namespace studyhabit

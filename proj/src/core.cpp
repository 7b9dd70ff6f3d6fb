#include "studyhabit/core.hpp"

#include <algorithm>
#include <tuple>

namespace studyhabit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Incomplete: return "incomplete_response";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::IllegalTransition: return "illegal_transition";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Configuration: return "configuration";
    case ErrorCode::Authorization: return "authorization";
    case ErrorCode::NoData: return "no_data";
  }
  return "unknown";
}

std::string_view to_string(HabitCategory c) {
  switch (c) {
    case HabitCategory::Scheduling: return "scheduling";
    case HabitCategory::Preparation: return "preparation";
    case HabitCategory::GroupStudy: return "group_study";
  }
  return "scheduling";
}

HabitCategory habit_category_from(std::string_view text) {
  if (text == "scheduling") return HabitCategory::Scheduling;
  if (text == "preparation") return HabitCategory::Preparation;
  if (text == "group_study") return HabitCategory::GroupStudy;
  throw Error(ErrorCode::Validation, "unknown habit category '" + std::string(text) + "'");
}

TimeZone::TimeZone() : name_("UTC"), zone_(absl::UTCTimeZone()) {}

TimeZone TimeZone::load(const std::string& name) {
  TimeZone tz;
  if (name.empty() || !absl::LoadTimeZone(name, &tz.zone_)) {
    throw Error(ErrorCode::Configuration, "unknown timezone '" + name + "'");
  }
  tz.name_ = name;
  return tz;
}

namespace {

absl::Time to_absl(Timestamp ts) { return absl::FromUnixSeconds(ts.time_since_epoch().count()); }
Timestamp from_absl(absl::Time t) { return Timestamp{std::chrono::seconds{absl::ToUnixSeconds(t)}}; }

int weekday_index(absl::Weekday wd) {
  switch (wd) {
    case absl::Weekday::monday: return 0;
    case absl::Weekday::tuesday: return 1;
    case absl::Weekday::wednesday: return 2;
    case absl::Weekday::thursday: return 3;
    case absl::Weekday::friday: return 4;
    case absl::Weekday::saturday: return 5;
    case absl::Weekday::sunday: return 6;
  }
  return 0;
}

}  // namespace

WeekPosition week_position(Timestamp ts, const TimeZone& tz) {
  const absl::CivilMinute local = absl::ToCivilMinute(to_absl(ts), tz.raw());
  return {weekday_index(absl::GetWeekday(local)), local.hour() * 60 + local.minute()};
}

WeekPosition week_position(Timestamp ts, const std::string& tz_name) {
  return week_position(ts, TimeZone::load(tz_name));
}

absl::CivilDay monday_of(Timestamp ts, const TimeZone& tz) {
  const absl::CivilDay day = absl::ToCivilDay(to_absl(ts), tz.raw());
  return day - weekday_index(absl::GetWeekday(day));
}

Timestamp local_instant(absl::CivilDay date, int minute, const TimeZone& tz) {
  const absl::CivilMinute local(date.year(), date.month(), date.day(), 0, minute);
  return from_absl(absl::FromCivil(local, tz.raw()));
}

absl::CivilDay parse_date(const std::string& text) {
  absl::CivilDay day;
  if (!absl::ParseCivilTime(text, &day)) {
    throw Error(ErrorCode::Validation, "bad date '" + text + "', expected YYYY-MM-DD");
  }
  return day;
}

std::string format_date(absl::CivilDay date) { return absl::FormatCivilTime(date); }

std::string to_iso8601(Timestamp ts, const TimeZone& tz) {
  return absl::FormatTime("%Y-%m-%dT%H:%M:%S%Ez", to_absl(ts), tz.raw());
}

Timestamp parse_iso8601(const std::string& text) {
  absl::Time t;
  std::string err;
  if (!absl::ParseTime("%Y-%m-%dT%H:%M:%E*S%Ez", text, &t, &err)) {
    throw Error(ErrorCode::Validation, "bad timestamp '" + text + "': " + err);
  }
  return from_absl(t);
}

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Class: return "class";
    case BlockKind::Work: return "work";
    case BlockKind::Other: return "other";
    case BlockKind::Study: return "study";
  }
  return "other";
}

BlockKind block_kind_from(std::string_view text) {
  if (text == "class") return BlockKind::Class;
  if (text == "work") return BlockKind::Work;
  if (text == "other") return BlockKind::Other;
  if (text == "study") return BlockKind::Study;
  throw Error(ErrorCode::Validation, "unknown block kind '" + std::string(text) + "'");
}

void TimeBlock::validate() const {
  if (day < 0 || day >= kDaysPerWeek) throw Error(ErrorCode::Validation, "block day must be 0..6");
  if (start_min < 0 || end_min > kMinutesPerDay || start_min >= end_min) {
    throw Error(ErrorCode::Validation, "block must satisfy 0 <= start < end <= 1440");
  }
  if ((kind == BlockKind::Class || kind == BlockKind::Study) && !class_id) {
    throw Error(ErrorCode::Validation, "class and study blocks need a class_id");
  }
}

void to_json(json& j, const TimeBlock& b) {
  j = json{{"day", b.day}, {"start", b.start_min}, {"end", b.end_min}, {"kind", to_string(b.kind)}};
  if (b.class_id) j["class_id"] = b.class_id->str();
}

void from_json(const json& j, TimeBlock& b) {
  try {
    b.day = j.at("day").get<int>();
    b.start_min = j.at("start").get<int>();
    b.end_min = j.at("end").get<int>();
    b.kind = block_kind_from(j.value("kind", std::string("other")));
    if (j.contains("class_id") && !j["class_id"].is_null()) {
      b.class_id = ClassId(j["class_id"].get<std::string>());
    } else {
      b.class_id.reset();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed time block: ") + e.what());
  }
}

void WeekTimetable::validate() const {
  for (const auto& b : blocks) b.validate();
  for (const auto& w : waking_window) {
    if (w.start_min < 0 || w.end_min > kMinutesPerDay || w.start_min >= w.end_min) {
      throw Error(ErrorCode::Validation, "waking window must satisfy 0 <= start < end <= 1440");
    }
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].kind == BlockKind::Study) continue;
    for (std::size_t k = i + 1; k < blocks.size(); ++k) {
      if (blocks[k].kind == BlockKind::Study) continue;
      if (blocks[i].overlaps(blocks[k])) {
        throw Error(ErrorCode::Validation, "commitments overlap on day " + std::to_string(blocks[i].day));
      }
    }
  }
}

std::vector<TimeBlock> WeekTimetable::blocks_of(const ClassId& cls) const {
  std::vector<TimeBlock> out;
  for (const auto& b : blocks) {
    if (b.kind == BlockKind::Class && b.class_id == cls) out.push_back(b);
  }
  std::sort(out.begin(), out.end(), [](const TimeBlock& a, const TimeBlock& b) {
    return std::tie(a.day, a.start_min) < std::tie(b.day, b.start_min);
  });
  return out;
}

ProgressBand progress_band(double ratio, const BandThresholds& t) {
  if (ratio < t.amber) return ProgressBand::Red;
  if (ratio < t.green) return ProgressBand::Amber;
  return ProgressBand::Green;
}

std::string_view to_string(ProgressBand b) {
  switch (b) {
    case ProgressBand::Red: return "red";
    case ProgressBand::Amber: return "amber";
    case ProgressBand::Green: return "green";
  }
  return "red";
}

void to_json(json& j, const WeekTimetable& t) {
  j = json{{"student_id", t.student_id.str()}, {"blocks", t.blocks}};
  json windows = json::array();
  for (const auto& w : t.waking_window) windows.push_back({{"start", w.start_min}, {"end", w.end_min}});
  j["waking_window"] = windows;
}

void from_json(const json& j, WeekTimetable& t) {
  if (j.contains("student_id")) t.student_id = StudentId(j["student_id"].get<std::string>());
  t.blocks = j.value("blocks", std::vector<TimeBlock>{});
  t.waking_window.fill(MinuteWindow{});
  if (j.contains("waking_window")) {
    const auto& w = j["waking_window"];
    // Either one window for every day or seven per-day windows.
    if (w.is_object()) {
      MinuteWindow mw{w.at("start").get<int>(), w.at("end").get<int>()};
      t.waking_window.fill(mw);
    } else if (w.is_array() && w.size() == kDaysPerWeek) {
      for (int d = 0; d < kDaysPerWeek; ++d) {
        t.waking_window[d] = {w[d].at("start").get<int>(), w[d].at("end").get<int>()};
      }
    } else {
      throw Error(ErrorCode::Validation, "waking_window must be an object or 7 objects");
    }
  }
}

}  // namespace studyhabit

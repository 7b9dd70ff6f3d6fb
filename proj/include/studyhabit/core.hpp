#pragma once

// Shared vocabulary: identifiers, the Monday-anchored week grid, timestamps
// and the error type every module throws.

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <absl/time/civil_time.h>
#include <absl/time/time.h>
#include <json.hpp>

namespace studyhabit {

using json = nlohmann::json;

enum class ErrorCode {
  Validation,
  Incomplete,
  NotFound,
  Conflict,
  IllegalTransition,
  Precondition,
  Configuration,
  Authorization,
  NoData,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Opaque string identifier, distinct per tag so a ClassId can't be passed
// where a StudentId is expected.
template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw Error(ErrorCode::Validation, "identifier must be non-empty");
  }
  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }
  auto operator<=>(const Id&) const = default;

 private:
  std::string value_;
};

using StudentId = Id<struct StudentTag>;
using ClassId = Id<struct ClassTag>;
using SessionId = Id<struct SessionTag>;

template <class Tag>
void to_json(json& j, const Id<Tag>& id) { j = id.str(); }
template <class Tag>
void from_json(const json& j, Id<Tag>& id) { id = Id<Tag>(j.get<std::string>()); }

// The three targeted behaviours; every Hook cycle and trigger belongs to one.
enum class HabitCategory { Scheduling, Preparation, GroupStudy };

inline constexpr std::array<HabitCategory, 3> kAllCategories{
    HabitCategory::Scheduling, HabitCategory::Preparation, HabitCategory::GroupStudy};

std::string_view to_string(HabitCategory c);
HabitCategory habit_category_from(std::string_view text);

using Timestamp = std::chrono::sys_seconds;
using Minutes = std::chrono::minutes;

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kMinutesPerWeek = kMinutesPerDay * kDaysPerWeek;

// IANA zone loaded from the system zoneinfo database.
class TimeZone {
 public:
  TimeZone();  // UTC
  static TimeZone load(const std::string& name);
  const std::string& name() const noexcept { return name_; }
  const absl::TimeZone& raw() const noexcept { return zone_; }

 private:
  std::string name_;
  absl::TimeZone zone_;
};

struct WeekPosition {
  int day = 0;     // 0 = Monday
  int minute = 0;  // 0..1439
  bool operator==(const WeekPosition&) const = default;
};

WeekPosition week_position(Timestamp ts, const TimeZone& tz);
WeekPosition week_position(Timestamp ts, const std::string& tz_name);

// Monday of the local week containing ts.
absl::CivilDay monday_of(Timestamp ts, const TimeZone& tz);
// Absolute instant for a local (date, minute-of-day).
Timestamp local_instant(absl::CivilDay date, int minute, const TimeZone& tz);
absl::CivilDay parse_date(const std::string& yyyy_mm_dd);
std::string format_date(absl::CivilDay date);

std::string to_iso8601(Timestamp ts, const TimeZone& tz = TimeZone());
Timestamp parse_iso8601(const std::string& text);

enum class BlockKind { Class, Work, Other, Study };

std::string_view to_string(BlockKind kind);
BlockKind block_kind_from(std::string_view text);

struct TimeBlock {
  int day = 0;
  int start_min = 0;
  int end_min = 0;
  BlockKind kind = BlockKind::Other;
  std::optional<ClassId> class_id;

  // Throws Validation on out-of-grid values, end <= start (midnight-spanning
  // blocks included), or a missing class id on Class/Study blocks.
  void validate() const;
  int duration() const noexcept { return end_min - start_min; }
  bool overlaps(const TimeBlock& other) const noexcept {
    return day == other.day && start_min < other.end_min && other.start_min < end_min;
  }
  bool operator==(const TimeBlock&) const = default;
};

void to_json(json& j, const TimeBlock& b);
void from_json(const json& j, TimeBlock& b);

struct MinuteWindow {
  int start_min = 8 * 60;
  int end_min = 23 * 60;
  bool operator==(const MinuteWindow&) const = default;
};

struct WeekTimetable {
  StudentId student_id;
  std::vector<TimeBlock> blocks;
  std::array<MinuteWindow, kDaysPerWeek> waking_window{};

  // Rejects invalid blocks and overlapping non-Study blocks on the same day.
  void validate() const;
  std::vector<TimeBlock> blocks_of(const ClassId& cls) const;
};

// Colour band of a completion ratio: red < 0.34 <= amber < 0.67 <= green.
enum class ProgressBand { Red, Amber, Green };

struct BandThresholds {
  double amber = 0.34;
  double green = 0.67;
};

ProgressBand progress_band(double ratio, const BandThresholds& t = {});
std::string_view to_string(ProgressBand b);

void to_json(json& j, const WeekTimetable& t);
void from_json(const json& j, WeekTimetable& t);

}  // namespace studyhabit

template <class Tag>
struct std::hash<studyhabit::Id<Tag>> {
  std::size_t operator()(const studyhabit::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

#pragma once

// Trigger queue and delivery pipeline. Feature modules enqueue TriggerRequests;
// dispatch_due() gates each due request through the motivation/ability model,
// renders an instructor-signed message and hands it to the delivery channels.

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "studyhabit/core.hpp"
#include "studyhabit/fbm.hpp"
#include "studyhabit/hook.hpp"

namespace studyhabit {

enum class TriggerPurpose { SessionStart, CheckOut, ReadingList, PostClassNotes, PlaceSuggestion, InviteFriends, PairPrompt };

std::string_view to_string(TriggerPurpose p);
TriggerPurpose trigger_purpose_from(std::string_view text);
// Plain reminders; an internal trigger source halves how often these go out.
bool is_reminder(TriggerPurpose p);

struct TriggerRequest {
  StudentId student_id;
  HabitCategory category = HabitCategory::Scheduling;
  TriggerPurpose purpose = TriggerPurpose::SessionStart;
  Timestamp due_at{};
  json payload = json::object();
  // Distinguishes requests that share (student, purpose, due_at), e.g. two
  // classes whose reminders clamp to the same instant.
  std::string subject;
  int deferrals = 0;
};

void to_json(json& j, const TriggerRequest& r);
void from_json(const json& j, TriggerRequest& r);

enum class Channel { InAppFeed, WebhookStub };
std::string_view to_string(Channel c);

struct Delivery {
  TriggerRequest request;
  TriggerDecision decision;
  std::string message;
  Channel channel = Channel::InAppFeed;
  Timestamp delivered_at{};
};

void to_json(json& j, const Delivery& d);

// Student-facing view of a delivery.
json feed_item(const Delivery& d);
// Body POSTed to the webhook: {student_id, purpose, message, trigger_type, delivered_at}.
json webhook_payload(const Delivery& d);

// Message templates per purpose and trigger type, all signed by the instructor.
class TemplateCatalog {
 public:
  static TemplateCatalog from_json(const json& doc);
  static const TemplateCatalog& standard();

  // Placeholders: {class}, {streak}, {place}, {partner}, {topic}, {action}, {instructor}.
  std::string render(TriggerPurpose purpose, TriggerType type, const json& payload,
                     const std::string& instructor) const;
  const std::string& attribution_format() const noexcept { return attribution_; }
  // Every raw template string, for linting.
  std::vector<std::string> all_templates() const;
  const std::vector<std::string>& banned_words() const noexcept { return banned_; }

 private:
  std::map<std::pair<TriggerPurpose, TriggerType>, std::string> templates_;
  std::map<TriggerType, std::string> suffix_;
  std::string attribution_;
  std::vector<std::string> banned_;
};

// Empty result when every template is positive in tone and carries the
// attribution; otherwise one line per offending template.
std::vector<std::string> lint_templates(const TemplateCatalog& catalog);

struct GateInputs {
  double motivation = 0.5;
  double ability = 0.5;
  TriggerSource source = TriggerSource::External;
};

struct NotifierConfig {
  Minutes defer_delay = std::chrono::hours(24);
  int max_deferrals = 1;
  int max_webhook_retries = 3;
  Minutes retry_base = Minutes{1};
  bool gate_enabled = true;
  FbmConfig fbm;
  std::string instructor = "Your instructor";
};

enum class AuditKind { Delivered, Deferred, Dropped, SkippedInternal, WebhookFailed, DeadLettered };
std::string_view to_string(AuditKind k);

struct AuditRecord {
  AuditKind kind = AuditKind::Delivered;
  TriggerRequest request;
  std::optional<TriggerDecision> decision;
  Timestamp at{};
  std::string detail;
};

void to_json(json& j, const AuditRecord& r);

struct DispatchReport {
  std::vector<Delivery> delivered;         // in-app deliveries
  std::vector<TriggerRequest> skipped;     // fired but skipped for an internal trigger
  std::vector<TriggerRequest> deferred;    // rescheduled
  std::vector<TriggerRequest> dropped;
};

class Notifier {
 public:
  using GateFn = std::function<GateInputs(const StudentId&, HabitCategory)>;
  // Returns false on delivery failure.
  using WebhookFn = std::function<bool(const json&)>;

  explicit Notifier(NotifierConfig config = {}, const TemplateCatalog& templates = TemplateCatalog::standard());

  void set_webhook(WebhookFn fn) { webhook_ = std::move(fn); }
  const NotifierConfig& config() const noexcept { return config_; }
  void set_gate_enabled(bool on) { config_.gate_enabled = on; }

  // Validation error when due_at < now. Returns false (and keeps a single
  // entry) for a duplicate (student, purpose, due_at, subject).
  bool enqueue(TriggerRequest request, Timestamp now);

  // Processes every request due at or before `now`. Deferred requests come
  // back once after the defer delay and are dropped on the second deferral.
  std::vector<Delivery> dispatch_due(Timestamp now, const GateFn& gate) { return dispatch(now, gate).delivered; }
  DispatchReport dispatch(Timestamp now, const GateFn& gate);

  // Drops pending requests for (student, purpose, subject); returns how many.
  std::size_t cancel(const StudentId& student, TriggerPurpose purpose, const std::string& subject);

  std::vector<TriggerRequest> pending() const;
  std::vector<Delivery> feed(const StudentId& student) const;
  std::vector<AuditRecord> audit() const;
  std::size_t dead_letters() const;

  json snapshot() const;
  void restore(const json& snap);

 private:
  using Key = std::tuple<StudentId, TriggerPurpose, Timestamp, std::string>;
  static Key key_of(const TriggerRequest& r) { return {r.student_id, r.purpose, r.due_at, r.subject}; }

  struct WebhookRetry {
    Delivery delivery;
    int attempts = 0;
    Timestamp next_at{};
  };

  void deliver_webhook(const Delivery& d, Timestamp now);
  void record(AuditKind kind, const TriggerRequest& r, std::optional<TriggerDecision> decision, Timestamp at,
              std::string detail = {});

  NotifierConfig config_;
  TemplateCatalog templates_;
  WebhookFn webhook_;
  mutable std::mutex mutex_;
  std::map<Key, TriggerRequest> queue_;
  std::map<StudentId, std::vector<Delivery>> feeds_;
  std::map<std::pair<StudentId, TriggerPurpose>, int> reminder_counter_;
  std::deque<WebhookRetry> retries_;
  std::vector<Delivery> dead_;
  std::vector<AuditRecord> audit_;
};

}  // namespace studyhabit

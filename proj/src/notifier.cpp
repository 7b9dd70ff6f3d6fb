#include "studyhabit/notifier.hpp"

#include <algorithm>
#include <cctype>

#include "message_templates_data.hpp"

namespace studyhabit {

namespace {

constexpr std::array<TriggerPurpose, 7> kPurposes{
    TriggerPurpose::SessionStart,    TriggerPurpose::CheckOut,      TriggerPurpose::ReadingList,
    TriggerPurpose::PostClassNotes,  TriggerPurpose::PlaceSuggestion, TriggerPurpose::InviteFriends,
    TriggerPurpose::PairPrompt};

constexpr std::array<TriggerType, 3> kTypes{TriggerType::Signal, TriggerType::Spark, TriggerType::Facilitator};

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string payload_text(const json& payload, const char* key, const std::string& fallback) {
  if (payload.contains(key)) {
    const auto& v = payload[key];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
  }
  return fallback;
}

}  // namespace

std::string_view to_string(TriggerPurpose p) {
  switch (p) {
    case TriggerPurpose::SessionStart: return "session_start";
    case TriggerPurpose::CheckOut: return "check_out";
    case TriggerPurpose::ReadingList: return "reading_list";
    case TriggerPurpose::PostClassNotes: return "post_class_notes";
    case TriggerPurpose::PlaceSuggestion: return "place_suggestion";
    case TriggerPurpose::InviteFriends: return "invite_friends";
    case TriggerPurpose::PairPrompt: return "pair_prompt";
  }
  return "session_start";
}

TriggerPurpose trigger_purpose_from(std::string_view text) {
  for (auto p : kPurposes) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorCode::Validation, "unknown trigger purpose '" + std::string(text) + "'");
}

bool is_reminder(TriggerPurpose p) {
  return p == TriggerPurpose::SessionStart || p == TriggerPurpose::CheckOut || p == TriggerPurpose::ReadingList ||
         p == TriggerPurpose::PostClassNotes;
}

void to_json(json& j, const TriggerRequest& r) {
  j = json{{"student_id", r.student_id.str()},
           {"category", to_string(r.category)},
           {"purpose", to_string(r.purpose)},
           {"due_at", to_iso8601(r.due_at)},
           {"payload", r.payload},
           {"subject", r.subject},
           {"deferrals", r.deferrals}};
}

void from_json(const json& j, TriggerRequest& r) {
  r.student_id = StudentId(j.at("student_id").get<std::string>());
  r.category = habit_category_from(j.at("category").get<std::string>());
  r.purpose = trigger_purpose_from(j.at("purpose").get<std::string>());
  r.due_at = parse_iso8601(j.at("due_at").get<std::string>());
  r.payload = j.value("payload", json::object());
  r.subject = j.value("subject", "");
  r.deferrals = j.value("deferrals", 0);
}

std::string_view to_string(Channel c) { return c == Channel::InAppFeed ? "in_app_feed" : "webhook_stub"; }

void to_json(json& j, const Delivery& d) {
  j = json{{"request", d.request},
           {"outcome", d.decision.fires() ? "fire" : "defer"},
           {"trigger_type", d.decision.type ? to_string(*d.decision.type) : "none"},
           {"message", d.message},
           {"channel", to_string(d.channel)},
           {"delivered_at", to_iso8601(d.delivered_at)}};
}

json feed_item(const Delivery& d) {
  return {{"purpose", to_string(d.request.purpose)},
          {"category", to_string(d.request.category)},
          {"message", d.message},
          {"trigger_type", d.decision.type ? to_string(*d.decision.type) : "none"},
          {"delivered_at", to_iso8601(d.delivered_at)}};
}

json webhook_payload(const Delivery& d) {
  return {{"student_id", d.request.student_id.str()},
          {"purpose", to_string(d.request.purpose)},
          {"message", d.message},
          {"trigger_type", d.decision.type ? to_string(*d.decision.type) : "none"},
          {"delivered_at", to_iso8601(d.delivered_at)}};
}

TemplateCatalog TemplateCatalog::from_json(const json& doc) {
  TemplateCatalog cat;
  try {
    cat.attribution_ = doc.at("attribution").get<std::string>();
    for (auto p : kPurposes) {
      const auto base = doc.at("purposes").at(std::string(to_string(p))).get<std::string>();
      for (auto t : kTypes) cat.templates_[{p, t}] = base;
    }
    for (auto t : kTypes) {
      cat.suffix_[t] = doc.at("trigger_suffix").value(std::string(to_string(t)), std::string{});
    }
    cat.banned_ = doc.value("banned_words", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string("malformed template catalog: ") + e.what());
  }
  if (cat.attribution_.find("{instructor}") == std::string::npos) {
    throw Error(ErrorCode::Configuration, "attribution must contain {instructor}");
  }
  return cat;
}

const TemplateCatalog& TemplateCatalog::standard() {
  static const TemplateCatalog catalog = from_json(json::parse(kMessageTemplatesJson));
  return catalog;
}

std::string TemplateCatalog::render(TriggerPurpose purpose, TriggerType type, const json& payload,
                                    const std::string& instructor) const {
  std::string msg = templates_.at({purpose, type}) + suffix_.at(type) + "\n" + attribution_;
  replace_all(msg, "{class}", payload_text(payload, "class_id", "your class"));
  replace_all(msg, "{streak}", payload_text(payload, "streak", "1"));
  replace_all(msg, "{place}", payload_text(payload, "place", "a quiet library room"));
  replace_all(msg, "{partner}", payload_text(payload, "partner", "a classmate"));
  replace_all(msg, "{topic}", payload_text(payload, "topic", "this topic"));
  replace_all(msg, "{action}", std::string(to_string(purpose)));
  replace_all(msg, "{instructor}", instructor);
  return msg;
}

std::vector<std::string> TemplateCatalog::all_templates() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) out.push_back(v);
  for (const auto& [k, v] : suffix_) out.push_back(v);
  out.push_back(attribution_);
  return out;
}

std::vector<std::string> lint_templates(const TemplateCatalog& catalog) {
  std::vector<std::string> problems;
  for (const auto& t : catalog.all_templates()) {
    const std::string lt = lower(t);
    for (const auto& word : catalog.banned_words()) {
      if (lt.find(lower(word)) != std::string::npos) problems.push_back("'" + word + "' in: " + t);
    }
  }
  if (catalog.attribution_format().find("{instructor}") == std::string::npos) {
    problems.push_back("attribution lacks {instructor}");
  }
  return problems;
}

std::string_view to_string(AuditKind k) {
  switch (k) {
    case AuditKind::Delivered: return "delivered";
    case AuditKind::Deferred: return "deferred";
    case AuditKind::Dropped: return "dropped";
    case AuditKind::SkippedInternal: return "skipped_internal";
    case AuditKind::WebhookFailed: return "webhook_failed";
    case AuditKind::DeadLettered: return "dead_lettered";
  }
  return "delivered";
}

void to_json(json& j, const AuditRecord& r) {
  j = json{{"kind", to_string(r.kind)}, {"request", r.request}, {"at", to_iso8601(r.at)}};
  if (r.decision) {
    j["outcome"] = r.decision->fires() ? "fire" : "defer";
    if (r.decision->type) j["trigger_type"] = to_string(*r.decision->type);
  }
  if (!r.detail.empty()) j["detail"] = r.detail;
}

Notifier::Notifier(NotifierConfig config, const TemplateCatalog& templates)
    : config_(std::move(config)), templates_(templates) {}

bool Notifier::enqueue(TriggerRequest request, Timestamp now) {
  if (request.due_at < now) {
    throw Error(ErrorCode::Validation, "trigger due " + to_iso8601(request.due_at) + " is in the past");
  }
  std::lock_guard lock(mutex_);
  return queue_.emplace(key_of(request), std::move(request)).second;
}

void Notifier::record(AuditKind kind, const TriggerRequest& r, std::optional<TriggerDecision> decision, Timestamp at,
                      std::string detail) {
  audit_.push_back({kind, r, decision, at, std::move(detail)});
}

void Notifier::deliver_webhook(const Delivery& d, Timestamp now) {
  if (!webhook_) return;
  if (webhook_(webhook_payload(d))) return;
  record(AuditKind::WebhookFailed, d.request, d.decision, now, "attempt 1");
  retries_.push_back({d, 1, now + config_.retry_base});
}

DispatchReport Notifier::dispatch(Timestamp now, const GateFn& gate) {
  std::lock_guard lock(mutex_);
  DispatchReport report;

  std::vector<TriggerRequest> due;
  for (auto it = queue_.begin(); it != queue_.end();) {
    if (it->second.due_at <= now) {
      due.push_back(std::move(it->second));
      it = queue_.erase(it);
    } else {
      ++it;
    }
  }
  std::stable_sort(due.begin(), due.end(),
                   [](const TriggerRequest& a, const TriggerRequest& b) { return a.due_at < b.due_at; });

  for (auto& req : due) {
    const GateInputs in = gate ? gate(req.student_id, req.category) : GateInputs{};
    const double m = std::clamp(in.motivation, 0.0, 1.0);
    const double a = std::clamp(in.ability, 0.0, 1.0);
    TriggerDecision decision = select_trigger_type(m, a, config_.fbm.motivation_split, config_.fbm.ability_split);
    if (!decision.fires() && !config_.gate_enabled) decision = TriggerDecision::fire(TriggerType::Signal);

    if (!decision.fires()) {
      if (req.deferrals < config_.max_deferrals) {
        ++req.deferrals;
        record(AuditKind::Deferred, req, decision, now);
        req.due_at = now + config_.defer_delay;
        queue_.emplace(key_of(req), req);
        report.deferred.push_back(req);
      } else {
        record(AuditKind::Dropped, req, decision, now, "deferred twice");
        report.dropped.push_back(req);
      }
      continue;
    }

    if (in.source == TriggerSource::Internal && is_reminder(req.purpose) &&
        decision.type == TriggerType::Signal) {
      int& n = reminder_counter_[{req.student_id, req.purpose}];
      const bool skip = (n++ % 2) == 1;
      if (skip) {
        record(AuditKind::SkippedInternal, req, decision, now);
        report.skipped.push_back(req);
        continue;
      }
    }

    Delivery d{req, decision, templates_.render(req.purpose, *decision.type, req.payload, config_.instructor),
               Channel::InAppFeed, now};
    feeds_[req.student_id].push_back(d);
    record(AuditKind::Delivered, req, decision, now);
    report.delivered.push_back(d);
    if (webhook_) {
      Delivery w = d;
      w.channel = Channel::WebhookStub;
      deliver_webhook(w, now);
    }
  }

  // Webhook retries with exponential backoff, then the dead-letter list.
  std::deque<WebhookRetry> later;
  while (!retries_.empty()) {
    WebhookRetry r = std::move(retries_.front());
    retries_.pop_front();
    if (r.next_at > now) {
      later.push_back(std::move(r));
      continue;
    }
    if (webhook_ && webhook_(webhook_payload(r.delivery))) continue;
    ++r.attempts;
    if (r.attempts > config_.max_webhook_retries) {
      record(AuditKind::DeadLettered, r.delivery.request, r.delivery.decision, now);
      dead_.push_back(std::move(r.delivery));
    } else {
      record(AuditKind::WebhookFailed, r.delivery.request, r.delivery.decision, now,
             "attempt " + std::to_string(r.attempts));
      r.next_at = now + config_.retry_base * (1 << (r.attempts - 1));
      later.push_back(std::move(r));
    }
  }
  retries_ = std::move(later);
  return report;
}

std::size_t Notifier::cancel(const StudentId& student, TriggerPurpose purpose, const std::string& subject) {
  std::lock_guard lock(mutex_);
  return std::erase_if(queue_, [&](const auto& entry) {
    const auto& r = entry.second;
    return r.student_id == student && r.purpose == purpose && r.subject == subject;
  });
}

std::vector<TriggerRequest> Notifier::pending() const {
  std::lock_guard lock(mutex_);
  std::vector<TriggerRequest> out;
  for (const auto& [k, v] : queue_) out.push_back(v);
  return out;
}

std::vector<Delivery> Notifier::feed(const StudentId& student) const {
  std::lock_guard lock(mutex_);
  auto it = feeds_.find(student);
  return it == feeds_.end() ? std::vector<Delivery>{} : it->second;
}

std::vector<AuditRecord> Notifier::audit() const {
  std::lock_guard lock(mutex_);
  return audit_;
}

std::size_t Notifier::dead_letters() const {
  std::lock_guard lock(mutex_);
  return dead_.size();
}

json Notifier::snapshot() const {
  std::lock_guard lock(mutex_);
  json queue = json::array();
  for (const auto& [k, v] : queue_) queue.push_back(v);
  json feeds = json::object();
  for (const auto& [sid, items] : feeds_) feeds[sid.str()] = items;
  json counters = json::array();
  for (const auto& [k, n] : reminder_counter_) {
    counters.push_back({{"student_id", k.first.str()}, {"purpose", to_string(k.second)}, {"count", n}});
  }
  return {{"queue", queue}, {"feeds", feeds}, {"reminder_counters", counters}, {"audit", audit_}};
}

void Notifier::restore(const json& snap) {
  std::lock_guard lock(mutex_);
  queue_.clear();
  feeds_.clear();
  reminder_counter_.clear();
  audit_.clear();
  for (const auto& r : snap.value("queue", json::array())) {
    auto req = r.get<TriggerRequest>();
    queue_.emplace(key_of(req), req);
  }
  const json feeds = snap.value("feeds", json::object());
  for (const auto& [sid, items] : feeds.items()) {
    auto& feed = feeds_[StudentId(sid)];
    for (const auto& d : items) {
      Delivery del;
      del.request = d.at("request").get<TriggerRequest>();
      const auto type = d.at("trigger_type").get<std::string>();
      del.decision = type == "none" ? TriggerDecision::defer() : TriggerDecision::fire(trigger_type_from(type));
      del.message = d.at("message").get<std::string>();
      del.channel = d.at("channel").get<std::string>() == "in_app_feed" ? Channel::InAppFeed : Channel::WebhookStub;
      del.delivered_at = parse_iso8601(d.at("delivered_at").get<std::string>());
      feed.push_back(std::move(del));
    }
  }
  for (const auto& c : snap.value("reminder_counters", json::array())) {
    reminder_counter_[{StudentId(c.at("student_id").get<std::string>()),
                       trigger_purpose_from(c.at("purpose").get<std::string>())}] = c.at("count").get<int>();
  }
  // Audit entries are restored as opaque history.
  for (const auto& a : snap.value("audit", json::array())) {
    AuditRecord rec;
    const auto kind = a.at("kind").get<std::string>();
    for (auto k : {AuditKind::Delivered, AuditKind::Deferred, AuditKind::Dropped, AuditKind::SkippedInternal,
                   AuditKind::WebhookFailed, AuditKind::DeadLettered}) {
      if (to_string(k) == kind) rec.kind = k;
    }
    rec.request = a.at("request").get<TriggerRequest>();
    rec.at = parse_iso8601(a.at("at").get<std::string>());
    rec.detail = a.value("detail", "");
    if (a.contains("outcome")) {
      rec.decision = a["outcome"] == "fire"
                         ? TriggerDecision::fire(trigger_type_from(a.value("trigger_type", "signal")))
                         : TriggerDecision::defer();
    }
    audit_.push_back(std::move(rec));
  }
}

}  // namespace studyhabit

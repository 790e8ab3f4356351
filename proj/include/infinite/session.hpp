#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "infinite/indices.hpp"

namespace infinite::session {

inline constexpr int kSchemaVersion = 1;

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

enum class EventKind {
  session_opened,
  attempt_started,
  query_sent,
  response_received,
  sb_detected,
  outcome_tagged,
  session_closed,
};

enum class OutcomeTag {
  accepted,
  rejected_wrong_output,
  rejected_runtime_error,
  rejected_misunderstood,
};

/// Why a query produced no answer.
enum class BusyCause { server_busy, timeout, transport_error };

struct SessionOpened {
  int schema_version = kSchemaVersion;
  std::string session_id;
  std::string framework_label;
  std::string task_label;
  friend bool operator==(const SessionOpened&, const SessionOpened&) = default;
};

struct AttemptStarted {
  std::string note;
  friend bool operator==(const AttemptStarted&, const AttemptStarted&) = default;
};

struct QuerySent {
  std::string prompt;
  friend bool operator==(const QuerySent&, const QuerySent&) = default;
};

/// text may be dropped (redacted); text_sha256 always stays.
struct ResponseReceived {
  double latency_s = 0.0;
  std::optional<std::string> text;
  std::string text_sha256;

  static ResponseReceived with_text(double latency_s, std::string text);
  friend bool operator==(const ResponseReceived&, const ResponseReceived&) = default;
};

struct SbDetected {
  double latency_s = 0.0;
  BusyCause cause = BusyCause::server_busy;
  std::string detail;
  friend bool operator==(const SbDetected&, const SbDetected&) = default;
};

struct OutcomeTagged {
  OutcomeTag tag = OutcomeTag::rejected_misunderstood;
  friend bool operator==(const OutcomeTagged&, const OutcomeTagged&) = default;
};

/// completed is true iff the session ended on an accepted outcome.
struct SessionClosed {
  bool completed = false;
  std::string reason;
  friend bool operator==(const SessionClosed&, const SessionClosed&) = default;
};

// Alternative order matches EventKind.
using Payload = std::variant<SessionOpened, AttemptStarted, QuerySent, ResponseReceived,
                             SbDetected, OutcomeTagged, SessionClosed>;

struct SessionEvent {
  std::int64_t seq = 0;
  Timestamp ts{};
  Payload payload;

  EventKind kind() const noexcept { return static_cast<EventKind>(payload.index()); }
  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

/// Position in the attempt/query protocol after the latest event.
enum class SessionState {
  opened,
  attempt_open,      // attempt declared, no query yet
  awaiting_reply,    // query sent
  answered,          // response received, not yet judged
  busy,              // last query got no answer
  rejected,
  accepted,
  closed,
};

/// The state reached by applying `payload` in `state`, or empty when the
/// transition is illegal.
std::optional<SessionState> next_state(SessionState state, const Payload& payload);

/// Append-only event log of one evaluation session.
class SessionLog {
 public:
  /// Throws on empty labels.
  static SessionLog open(std::string framework_label, std::string task_label);
  static SessionLog open(std::string framework_label, std::string task_label, Timestamp ts);

  /// Validates an event list end to end (ordering, state machine, hashes).
  static SessionLog replay(std::vector<SessionEvent> events);

  /// Appends with the current wall-clock time (never earlier than the last event).
  const SessionEvent& append(Payload payload);
  const SessionEvent& append(Payload payload, Timestamp ts);

  /// Appends session_closed with the completion flag derived from the state.
  const SessionEvent& close(std::string reason = {});

  const std::string& session_id() const;
  const std::string& framework_label() const;
  const std::string& task_label() const;
  std::span<const SessionEvent> events() const noexcept { return events_; }
  SessionState state() const noexcept { return state_; }
  bool closed() const noexcept { return state_ == SessionState::closed; }
  /// True when an accepted outcome has been tagged.
  bool accepted() const noexcept;

  friend bool operator==(const SessionLog& a, const SessionLog& b) { return a.events_ == b.events_; }

 private:
  SessionLog() = default;
  const SessionEvent& push(Payload payload, Timestamp ts);

  std::vector<SessionEvent> events_;
  SessionState state_ = SessionState::opened;
};

/// Counts over the events so far; works on sessions still in progress.
indices::SessionStats tally(const SessionLog& log);

/// Statistics of a closed session with at least one query.
indices::SessionStats derive_stats(const SessionLog& log);

/// Copy with every response text removed; hashes are kept.
SessionLog redact(const SessionLog& log);

std::string new_session_id();
Timestamp now();

std::string to_string(EventKind kind);
std::string to_string(OutcomeTag tag);
std::string to_string(BusyCause cause);
std::string to_string(SessionState state);
EventKind parse_event_kind(std::string_view text);
OutcomeTag parse_outcome_tag(std::string_view text);
BusyCause parse_busy_cause(std::string_view text);

/// ISO-8601 UTC with milliseconds, e.g. 2019-11-08T13:19:00.000Z
std::string format_timestamp(Timestamp ts);
Timestamp parse_timestamp(std::string_view text);

/// One JSON object per line: {"seq", "ts", "kind", "payload"}.
std::string to_jsonl(const SessionLog& log);
SessionLog from_jsonl(std::string_view text);

void save(const SessionLog& log, const std::filesystem::path& path);
SessionLog load(const std::filesystem::path& path);

}  // namespace infinite::session

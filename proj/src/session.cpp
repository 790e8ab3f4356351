#include "infinite/session.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "infinite/error.hpp"
#include "infinite/hash.hpp"

namespace infinite::session {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "session_opened", "attempt_started", "query_sent",    "response_received",
    "sb_detected",    "outcome_tagged",  "session_closed",
};
constexpr std::array<std::string_view, 4> kTagNames = {
    "accepted", "rejected_wrong_output", "rejected_runtime_error", "rejected_misunderstood",
};
constexpr std::array<std::string_view, 3> kCauseNames = {"server_busy", "timeout", "transport_error"};
constexpr std::array<std::string_view, 8> kStateNames = {
    "opened", "attempt_open", "awaiting_reply", "answered", "busy", "rejected", "accepted", "closed",
};

template <typename Enum, std::size_t N>
Enum parse_name(const std::array<std::string_view, N>& names, std::string_view text, const char* what) {
  const auto it = std::find(names.begin(), names.end(), text);
  if (it == names.end()) {
    throw Error("unknown_" + std::string(what), "unknown " + std::string(what) + " '" + std::string(text) + "'");
  }
  return static_cast<Enum>(it - names.begin());
}

void check_response(const ResponseReceived& r) {
  if (!(r.latency_s > 0.0)) throw Error("invalid_event", "response latency must be > 0");
  if (r.text && sha256_hex(*r.text) != r.text_sha256) {
    throw Error("hash_mismatch", "response text does not match its recorded hash");
  }
  if (r.text_sha256.size() != 64) throw Error("invalid_event", "response hash must be a SHA-256 hex digest");
}

}  // namespace

ResponseReceived ResponseReceived::with_text(double latency_s, std::string text) {
  ResponseReceived r;
  r.latency_s = latency_s;
  r.text_sha256 = sha256_hex(text);
  r.text = std::move(text);
  return r;
}

std::optional<SessionState> next_state(SessionState state, const Payload& payload) {
  using S = SessionState;
  switch (static_cast<EventKind>(payload.index())) {
    case EventKind::session_opened:
      return std::nullopt;
    case EventKind::attempt_started:
      if (state == S::opened || state == S::rejected) return S::attempt_open;
      return std::nullopt;
    case EventKind::query_sent:
      if (state == S::attempt_open || state == S::answered || state == S::busy) return S::awaiting_reply;
      return std::nullopt;
    case EventKind::response_received:
      if (state == S::awaiting_reply) return S::answered;
      return std::nullopt;
    case EventKind::sb_detected:
      if (state == S::awaiting_reply) return S::busy;
      return std::nullopt;
    case EventKind::outcome_tagged:
      if (state != S::answered) return std::nullopt;
      return std::get<OutcomeTagged>(payload).tag == OutcomeTag::accepted ? S::accepted : S::rejected;
    case EventKind::session_closed: {
      if (state != S::opened && state != S::busy && state != S::rejected && state != S::accepted) {
        return std::nullopt;
      }
      if (std::get<SessionClosed>(payload).completed != (state == S::accepted)) return std::nullopt;
      return S::closed;
    }
  }
  return std::nullopt;
}

SessionLog SessionLog::open(std::string framework_label, std::string task_label) {
  return open(std::move(framework_label), std::move(task_label), now());
}

SessionLog SessionLog::open(std::string framework_label, std::string task_label, Timestamp ts) {
  if (framework_label.empty()) throw Error("invalid_label", "framework label must not be empty");
  if (task_label.empty()) throw Error("invalid_label", "task label must not be empty");
  SessionLog log;
  SessionOpened opened;
  opened.session_id = new_session_id();
  opened.framework_label = std::move(framework_label);
  opened.task_label = std::move(task_label);
  log.events_.push_back(SessionEvent{1, ts, std::move(opened)});
  log.state_ = SessionState::opened;
  return log;
}

SessionLog SessionLog::replay(std::vector<SessionEvent> events) {
  if (events.empty()) throw Error("corrupt_log", "session log has no events");
  const auto* opened = std::get_if<SessionOpened>(&events.front().payload);
  if (!opened) throw Error("corrupt_log", "first event must be session_opened");
  if (opened->schema_version != kSchemaVersion) {
    throw Error("unsupported_schema", "unsupported session schema version",
                std::to_string(opened->schema_version));
  }
  if (opened->session_id.empty() || opened->framework_label.empty() || opened->task_label.empty()) {
    throw Error("corrupt_log", "session_opened is missing identifiers");
  }
  if (events.front().seq != 1) throw Error("corrupt_log", "first event must have seq 1");

  SessionLog log;
  log.events_.push_back(events.front());
  for (std::size_t i = 1; i < events.size(); ++i) {
    const SessionEvent& ev = events[i];
    if (ev.seq != log.events_.back().seq + 1) {
      throw Error("seq_gap", "event sequence numbers must increase by one",
                  "seq " + std::to_string(ev.seq) + " after " + std::to_string(log.events_.back().seq));
    }
    if (ev.ts < log.events_.back().ts) {
      throw Error("timestamp_regression", "event timestamps must not decrease", "seq " + std::to_string(ev.seq));
    }
    log.push(ev.payload, ev.ts);
  }
  return log;
}

const SessionEvent& SessionLog::append(Payload payload) { return append(std::move(payload), now()); }

const SessionEvent& SessionLog::append(Payload payload, Timestamp ts) {
  return push(std::move(payload), std::max(ts, events_.back().ts));
}

const SessionEvent& SessionLog::push(Payload payload, Timestamp ts) {
  if (state_ == SessionState::closed) throw Error("session_closed", "session is already closed");
  if (const auto* r = std::get_if<ResponseReceived>(&payload)) check_response(*r);
  if (const auto* sb = std::get_if<SbDetected>(&payload); sb && !(sb->latency_s >= 0.0)) {
    throw Error("invalid_event", "server-busy latency must be >= 0");
  }
  const auto next = next_state(state_, payload);
  if (!next) {
    throw Error("illegal_transition",
                "event " + to_string(static_cast<EventKind>(payload.index())) + " is not allowed in state " +
                    to_string(state_));
  }
  events_.push_back(SessionEvent{events_.back().seq + 1, ts, std::move(payload)});
  state_ = *next;
  return events_.back();
}

const SessionEvent& SessionLog::close(std::string reason) {
  return append(SessionClosed{state_ == SessionState::accepted, std::move(reason)});
}

const std::string& SessionLog::session_id() const {
  return std::get<SessionOpened>(events_.front().payload).session_id;
}
const std::string& SessionLog::framework_label() const {
  return std::get<SessionOpened>(events_.front().payload).framework_label;
}
const std::string& SessionLog::task_label() const {
  return std::get<SessionOpened>(events_.front().payload).task_label;
}

bool SessionLog::accepted() const noexcept {
  return std::any_of(events_.begin(), events_.end(), [](const SessionEvent& e) {
    const auto* t = std::get_if<OutcomeTagged>(&e.payload);
    return t && t->tag == OutcomeTag::accepted;
  });
}

indices::SessionStats tally(const SessionLog& log) {
  indices::SessionStats s;
  for (const SessionEvent& e : log.events()) {
    switch (e.kind()) {
      case EventKind::attempt_started: ++s.attempts_q; break;
      case EventKind::query_sent: ++s.total_queries_n; break;
      case EventKind::response_received:
        s.response_times_s.push_back(std::get<ResponseReceived>(e.payload).latency_s);
        break;
      case EventKind::sb_detected:
        ++s.sb_count;
        s.sb_times_s.push_back(std::get<SbDetected>(e.payload).latency_s);
        break;
      default: break;
    }
  }
  return s;
}

indices::SessionStats derive_stats(const SessionLog& log) {
  if (!log.closed()) throw Error("session_incomplete", "session is not closed");
  indices::SessionStats s = tally(log);
  if (s.attempts_q < 1 || s.total_queries_n < 1) {
    throw Error("session_empty", "session contains no attempts");
  }
  return s;
}

SessionLog redact(const SessionLog& log) {
  std::vector<SessionEvent> events(log.events().begin(), log.events().end());
  for (SessionEvent& e : events) {
    if (auto* r = std::get_if<ResponseReceived>(&e.payload)) r->text.reset();
  }
  return SessionLog::replay(std::move(events));
}

std::string new_session_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uniform_int_distribution<std::uint64_t> dist;
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(dist(rng)),
                static_cast<unsigned long long>(dist(rng)));
  return buf;
}

Timestamp now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::string to_string(EventKind kind) { return std::string(kKindNames[static_cast<std::size_t>(kind)]); }
std::string to_string(OutcomeTag tag) { return std::string(kTagNames[static_cast<std::size_t>(tag)]); }
std::string to_string(BusyCause cause) { return std::string(kCauseNames[static_cast<std::size_t>(cause)]); }
std::string to_string(SessionState state) { return std::string(kStateNames[static_cast<std::size_t>(state)]); }

EventKind parse_event_kind(std::string_view text) { return parse_name<EventKind>(kKindNames, text, "event_kind"); }
OutcomeTag parse_outcome_tag(std::string_view text) { return parse_name<OutcomeTag>(kTagNames, text, "outcome_tag"); }
BusyCause parse_busy_cause(std::string_view text) { return parse_name<BusyCause>(kCauseNames, text, "busy_cause"); }

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const auto ms = (ts - day).count();
  const long long h = ms / 3'600'000;
  const long long mi = ms / 60'000 % 60;
  const long long s = ms / 1000 % 60;
  const long long frac = ms % 1000;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, s, frac);
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0, ms = 0;
  char z = 0;
  int consumed = 0;
  const std::string str(text);
  if (std::sscanf(str.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u.%3u%c%n", &y, &mo, &d, &h, &mi, &s, &ms, &z, &consumed) != 8 ||
      z != 'Z' || static_cast<std::size_t>(consumed) != str.size() || str.size() != 24) {
    throw Error("invalid_timestamp", "timestamp must look like 2019-11-08T13:19:00.000Z", str);
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw Error("invalid_timestamp", "timestamp out of range", str);
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

namespace {

json payload_to_json(const Payload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SessionOpened>) {
          return {{"schema_version", p.schema_version},
                  {"session_id", p.session_id},
                  {"framework_label", p.framework_label},
                  {"task_label", p.task_label}};
        } else if constexpr (std::is_same_v<T, AttemptStarted>) {
          return {{"note", p.note}};
        } else if constexpr (std::is_same_v<T, QuerySent>) {
          return {{"prompt", p.prompt}};
        } else if constexpr (std::is_same_v<T, ResponseReceived>) {
          json j = {{"latency_s", p.latency_s}};
          if (p.text) j["text"] = *p.text;
          j["text_sha256"] = p.text_sha256;
          return j;
        } else if constexpr (std::is_same_v<T, SbDetected>) {
          return {{"latency_s", p.latency_s}, {"cause", to_string(p.cause)}, {"detail", p.detail}};
        } else if constexpr (std::is_same_v<T, OutcomeTagged>) {
          return {{"tag", to_string(p.tag)}};
        } else {
          return {{"completed", p.completed}, {"reason", p.reason}};
        }
      },
      payload);
}

Payload payload_from_json(EventKind kind, const json& j) {
  switch (kind) {
    case EventKind::session_opened:
      return SessionOpened{j.at("schema_version").get<int>(), j.at("session_id").get<std::string>(),
                           j.at("framework_label").get<std::string>(), j.at("task_label").get<std::string>()};
    case EventKind::attempt_started:
      return AttemptStarted{j.value("note", std::string{})};
    case EventKind::query_sent:
      return QuerySent{j.at("prompt").get<std::string>()};
    case EventKind::response_received: {
      ResponseReceived r;
      r.latency_s = j.at("latency_s").get<double>();
      if (j.contains("text")) r.text = j.at("text").get<std::string>();
      r.text_sha256 = j.at("text_sha256").get<std::string>();
      return r;
    }
    case EventKind::sb_detected:
      return SbDetected{j.at("latency_s").get<double>(), parse_busy_cause(j.at("cause").get<std::string>()),
                        j.value("detail", std::string{})};
    case EventKind::outcome_tagged:
      return OutcomeTagged{parse_outcome_tag(j.at("tag").get<std::string>())};
    case EventKind::session_closed:
      return SessionClosed{j.at("completed").get<bool>(), j.value("reason", std::string{})};
  }
  throw Error("corrupt_log", "unknown event kind");
}

}  // namespace

std::string to_jsonl(const SessionLog& log) {
  std::string out;
  for (const SessionEvent& e : log.events()) {
    json line;
    line["seq"] = e.seq;
    line["ts"] = format_timestamp(e.ts);
    line["kind"] = to_string(e.kind());
    line["payload"] = payload_to_json(e.payload);
    out += line.dump();
    out += '\n';
  }
  return out;
}

SessionLog from_jsonl(std::string_view text) {
  std::vector<SessionEvent> events;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t end = text.find('\n', pos);
    const std::string_view line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    const std::string where = "line " + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      SessionEvent e;
      e.seq = j.at("seq").get<std::int64_t>();
      e.ts = parse_timestamp(j.at("ts").get<std::string>());
      e.payload = payload_from_json(parse_event_kind(j.at("kind").get<std::string>()), j.at("payload"));
      if (!events.empty() && e.seq <= events.back().seq) {
        throw Error("seq_not_increasing", "sequence numbers must increase", where);
      }
      events.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error("malformed_line", "malformed session log " + where, ex.what());
    } catch (const Error& ex) {
      throw Error(ex.code(), std::string(ex.what()) + " (" + where + ")", ex.detail());
    }
  }
  return SessionLog::replay(std::move(events));
}

void save(const SessionLog& log, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write session log", path.string());
    out << to_jsonl(log);
    if (!out.flush()) throw Error("io_error", "failed writing session log", path.string());
  }
  std::filesystem::rename(tmp, path);
}

SessionLog load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read session log", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

}  // namespace infinite::session

#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "infinite/session.hpp"

namespace infinite::llm {

/// A chat-completions-compatible endpoint. The credential never lives here,
/// only the name of the environment variable that holds it.
struct EndpointSpec {
  std::string base_url;
  std::string model_name;
  std::string api_key_env;
  double timeout_s = 300.0;
  int max_retries_sb = 3;

  void validate() const;
};

enum class ResponseStatus { answer, server_busy, transport_error };

struct TimedResponse {
  /// Seconds from request dispatch to complete receipt, monotonic clock.
  double latency_s = 0.0;
  ResponseStatus status = ResponseStatus::transport_error;
  /// Present iff status == answer.
  std::optional<std::string> text;
  std::string detail;
  std::optional<int> http_status;
  bool timed_out = false;
};

enum class Classification { server_busy, answer_eligible, transport_error };

/// Overload codes (429, 503, 529) and timeouts are server-busy, 2xx is
/// answer-eligible, anything else is a transport error.
Classification classify_sb(std::optional<int> status_code, bool timed_out);

std::string to_string(ResponseStatus status);
std::string to_string(Classification c);

struct ChatMessage {
  std::string role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};
using Conversation = std::vector<ChatMessage>;

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  double timeout_s = 300.0;
};

/// Raw outcome of one HTTP exchange.
struct HttpExchange {
  std::optional<int> status_code;  // empty when nothing came back
  bool timed_out = false;
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpExchange post(const HttpRequest& request) = 0;
};

/// Real HTTP(S) transport.
class HttplibTransport final : public Transport {
 public:
  HttpExchange post(const HttpRequest& request) override;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::nanoseconds now() const = 0;
};

class SteadyClock final : public Clock {
 public:
  std::chrono::nanoseconds now() const override {
    return std::chrono::steady_clock::now().time_since_epoch();
  }
};

/// Clock that only moves when told to. Lets tests script multi-second latencies.
class ManualClock final : public Clock {
 public:
  std::chrono::nanoseconds now() const override;
  void advance(std::chrono::nanoseconds by);

 private:
  mutable std::mutex mu_;
  std::chrono::nanoseconds t_{0};
};

/// One scripted reply of a mock endpoint.
struct MockReply {
  long delay_ms = 0;
  int status = 200;  // 0 simulates a connection failure
  std::string body;
};

/// Reads the mock fixture format: a JSON array of {delay_ms, status, body};
/// body may be a string or a JSON object.
std::vector<MockReply> parse_mock_fixture(const std::string& json_text);
std::vector<MockReply> load_mock_fixture(const std::string& path);

/// Chat-completions response body carrying `text` as the assistant message.
std::string completion_body(const std::string& text);

/// In-process endpoint that replays fixtures and advances a ManualClock by
/// each reply's delay instead of sleeping.
class MockTransport final : public Transport {
 public:
  MockTransport(std::vector<MockReply> replies, std::shared_ptr<ManualClock> clock);
  HttpExchange post(const HttpRequest& request) override;
  std::vector<HttpRequest> requests() const;

 private:
  mutable std::mutex mu_;
  std::deque<MockReply> replies_;
  std::shared_ptr<ManualClock> clock_;
  std::vector<HttpRequest> seen_;
};

/// Timed client. Shareable across threads; holds no per-session state.
class ChatClient {
 public:
  explicit ChatClient(EndpointSpec endpoint, std::shared_ptr<Transport> transport = nullptr,
                      std::shared_ptr<const Clock> clock = nullptr);

  /// Sends the whole conversation as one non-streaming completion request.
  TimedResponse send_query(const Conversation& conversation) const;

  const EndpointSpec& endpoint() const noexcept { return endpoint_; }

 private:
  EndpointSpec endpoint_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<const Clock> clock_;
};

using EventSink = std::function<void(const session::SessionLog&, const session::SessionEvent&)>;

struct ScriptedSessionOptions {
  std::string framework_label;
  std::string task_label;
  /// Tag given to the final prompt's answer; earlier answers are tagged
  /// rejected_misunderstood.
  session::OutcomeTag final_tag = session::OutcomeTag::accepted;
};

/// Runs each prompt as one attempt, retrying server-busy replies up to
/// max_retries_sb times. Conversation context accumulates across attempts.
session::SessionLog run_scripted_session(const ChatClient& client, const std::vector<std::string>& script,
                                         const ScriptedSessionOptions& options, const EventSink& sink = {});

/// Splits the base URL into "scheme://host:port" and a path prefix.
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace infinite::llm

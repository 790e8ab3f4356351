#include "infinite/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "infinite/error.hpp"

namespace infinite::llm {

using json = nlohmann::json;

void EndpointSpec::validate() const {
  if (!(timeout_s > 0.0)) throw Error("invalid_endpoint", "timeout_s must be > 0");
  if (max_retries_sb < 0) throw Error("invalid_endpoint", "max_retries_sb must be >= 0");
  if (model_name.empty()) throw Error("invalid_endpoint", "model_name must not be empty");
  split_url(base_url);
}

Classification classify_sb(std::optional<int> status_code, bool timed_out) {
  if (timed_out) return Classification::server_busy;
  if (!status_code) return Classification::transport_error;
  const int code = *status_code;
  if (code == 429 || code == 503 || code == 529) return Classification::server_busy;
  if (code >= 200 && code < 300) return Classification::answer_eligible;
  return Classification::transport_error;
}

std::string to_string(ResponseStatus status) {
  switch (status) {
    case ResponseStatus::answer: return "answer";
    case ResponseStatus::server_busy: return "server_busy";
    case ResponseStatus::transport_error: return "transport_error";
  }
  return "?";
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::server_busy: return "server_busy";
    case Classification::answer_eligible: return "answer_eligible";
    case Classification::transport_error: return "transport_error";
  }
  return "?";
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/\s]+)(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error("invalid_endpoint", "base_url is not a valid http(s) URL", url);
  std::string path = m[2].matched ? m[2].str() : std::string{};
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

HttpExchange HttplibTransport::post(const HttpRequest& request) {
  const auto [origin, path] = split_url(request.url);
  httplib::Client cli(origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(request.timeout_s));
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  const auto start = std::chrono::steady_clock::now();
  auto res = cli.Post(path.empty() ? "/" : path, headers, request.body, "application/json");
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  HttpExchange out;
  if (!res) {
    const auto err = res.error();
    out.error = httplib::to_string(err);
    // httplib reports an expired read as a plain read error.
    out.timed_out = err == httplib::Error::ConnectionTimeout ||
                    (err == httplib::Error::Read && elapsed >= request.timeout_s * 0.95);
    return out;
  }
  out.status_code = res->status;
  out.body = res->body;
  return out;
}

std::chrono::nanoseconds ManualClock::now() const {
  std::lock_guard lock(mu_);
  return t_;
}

void ManualClock::advance(std::chrono::nanoseconds by) {
  std::lock_guard lock(mu_);
  t_ += by;
}

std::vector<MockReply> parse_mock_fixture(const std::string& json_text) {
  std::vector<MockReply> out;
  try {
    const json j = json::parse(json_text);
    if (!j.is_array()) throw Error("invalid_fixture", "mock fixture must be a JSON array");
    for (const json& item : j) {
      MockReply r;
      r.delay_ms = item.value("delay_ms", 0L);
      r.status = item.value("status", 200);
      if (item.contains("body")) {
        const json& b = item.at("body");
        r.body = b.is_string() ? b.get<std::string>() : b.dump();
      }
      if (r.delay_ms < 0) throw Error("invalid_fixture", "delay_ms must be >= 0");
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error("invalid_fixture", "malformed mock fixture", e.what());
  }
  return out;
}

std::vector<MockReply> load_mock_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read mock fixture", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mock_fixture(buf.str());
}

std::string completion_body(const std::string& text) {
  json j = {{"object", "chat.completion"},
            {"choices", json::array({{{"index", 0},
                                      {"message", {{"role", "assistant"}, {"content", text}}},
                                      {"finish_reason", "stop"}}})}};
  return j.dump();
}

MockTransport::MockTransport(std::vector<MockReply> replies, std::shared_ptr<ManualClock> clock)
    : replies_(replies.begin(), replies.end()), clock_(std::move(clock)) {
  if (!clock_) throw Error("invalid_argument", "mock transport needs a clock");
}

HttpExchange MockTransport::post(const HttpRequest& request) {
  std::lock_guard lock(mu_);
  seen_.push_back(request);
  HttpExchange out;
  if (replies_.empty()) {
    out.error = "mock endpoint has no replies left";
    return out;
  }
  const MockReply reply = replies_.front();
  replies_.pop_front();
  const auto delay = std::chrono::milliseconds(reply.delay_ms);
  const auto limit = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::duration<double>(request.timeout_s));
  if (delay > limit) {
    clock_->advance(limit);
    out.timed_out = true;
    out.error = "timed out";
    return out;
  }
  clock_->advance(delay);
  if (reply.status == 0) {
    out.error = "connection refused";
    return out;
  }
  out.status_code = reply.status;
  out.body = reply.body;
  return out;
}

std::vector<HttpRequest> MockTransport::requests() const {
  std::lock_guard lock(mu_);
  return seen_;
}

ChatClient::ChatClient(EndpointSpec endpoint, std::shared_ptr<Transport> transport,
                       std::shared_ptr<const Clock> clock)
    : endpoint_(std::move(endpoint)),
      transport_(transport ? std::move(transport) : std::make_shared<HttplibTransport>()),
      clock_(clock ? std::move(clock) : std::make_shared<SteadyClock>()) {
  endpoint_.validate();
}

TimedResponse ChatClient::send_query(const Conversation& conversation) const {
  if (conversation.empty() || conversation.back().role != "user") {
    throw Error("invalid_conversation", "conversation must be non-empty and end with a user turn");
  }
  json messages = json::array();
  for (const ChatMessage& m : conversation) messages.push_back({{"role", m.role}, {"content", m.content}});
  const json body = {{"model", endpoint_.model_name}, {"messages", messages}, {"stream", false}};

  HttpRequest req;
  req.url = endpoint_.base_url;
  while (!req.url.empty() && req.url.back() == '/') req.url.pop_back();
  req.url += "/chat/completions";
  req.body = body.dump();
  req.timeout_s = endpoint_.timeout_s;
  if (!endpoint_.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint_.api_key_env.c_str()); key && *key) {
      req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto t0 = clock_->now();
  const HttpExchange ex = transport_->post(req);
  const auto t1 = clock_->now();

  TimedResponse out;
  out.latency_s = std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
  out.http_status = ex.status_code;
  out.timed_out = ex.timed_out;
  switch (classify_sb(ex.status_code, ex.timed_out)) {
    case Classification::server_busy:
      out.status = ResponseStatus::server_busy;
      out.detail = ex.timed_out ? "timed out after " + std::to_string(endpoint_.timeout_s) + " s"
                                : "HTTP " + std::to_string(*ex.status_code);
      break;
    case Classification::transport_error:
      out.status = ResponseStatus::transport_error;
      out.detail = ex.status_code ? "HTTP " + std::to_string(*ex.status_code) + ": " + ex.body.substr(0, 512)
                                  : ex.error;
      break;
    case Classification::answer_eligible:
      out.status = ResponseStatus::answer;
      try {
        const json j = json::parse(ex.body);
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        // Raw body stands as the answer.
        out.text = ex.body;
        out.detail = std::string("unparseable completion body: ") + e.what();
      }
      break;
  }
  return out;
}

session::SessionLog run_scripted_session(const ChatClient& client, const std::vector<std::string>& script,
                                         const ScriptedSessionOptions& options, const EventSink& sink) {
  using namespace session;
  if (script.empty()) throw Error("empty_script", "script must contain at least one prompt");

  SessionLog log = SessionLog::open(options.framework_label, options.task_label);
  auto emit = [&](Payload p) {
    const SessionEvent& e = log.append(std::move(p));
    if (sink) sink(log, e);
  };
  if (sink) sink(log, log.events().front());

  Conversation conversation;
  for (std::size_t i = 0; i < script.size(); ++i) {
    emit(AttemptStarted{"prompt " + std::to_string(i + 1)});
    conversation.push_back({"user", script[i]});

    std::optional<std::string> answer;
    for (int q = 0; q <= client.endpoint().max_retries_sb && !answer; ++q) {
      emit(QuerySent{script[i]});
      TimedResponse r = client.send_query(conversation);
      if (r.status == ResponseStatus::answer) {
        answer = *r.text;
        emit(ResponseReceived::with_text(r.latency_s, *r.text));
      } else {
        const BusyCause cause = r.status == ResponseStatus::transport_error ? BusyCause::transport_error
                                : r.timed_out                              ? BusyCause::timeout
                                                                           : BusyCause::server_busy;
        emit(SbDetected{r.latency_s, cause, r.detail});
      }
    }
    if (!answer) {
      emit(SessionClosed{false, "server-busy retries exhausted on prompt " + std::to_string(i + 1)});
      return log;
    }
    conversation.push_back({"assistant", *answer});
    const bool last = i + 1 == script.size();
    emit(OutcomeTagged{last ? options.final_tag : OutcomeTag::rejected_misunderstood});
  }
  emit(SessionClosed{log.state() == SessionState::accepted, "script finished"});
  return log;
}

}  // namespace infinite::llm

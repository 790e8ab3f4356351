#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

#include "infinite/error.hpp"
#include "infinite/llm_client.hpp"

using namespace infinite::llm;
using namespace infinite::session;
using json = nlohmann::json;

namespace {

EndpointSpec endpoint(std::string url = "http://mock.local/v1", double timeout = 300.0, int retries = 3) {
  return EndpointSpec{std::move(url), "gpt-test", "INFINITE_TEST_KEY", timeout, retries};
}

struct Mock {
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>();
  std::shared_ptr<MockTransport> transport;
  explicit Mock(std::vector<MockReply> r) : transport(std::make_shared<MockTransport>(std::move(r), clock)) {}
};

}  // namespace

TEST_CASE("server-busy classification over every status code") {
  for (int code = 100; code <= 599; ++code) {
    CAPTURE(code);
    const Classification c = classify_sb(code, false);
    if (code == 429 || code == 503 || code == 529) {
      CHECK(c == Classification::server_busy);
    } else if (code >= 200 && code < 300) {
      CHECK(c == Classification::answer_eligible);
    } else {
      CHECK(c == Classification::transport_error);
    }
    CHECK(classify_sb(code, true) == Classification::server_busy);
  }
  CHECK(classify_sb(std::nullopt, true) == Classification::server_busy);
  CHECK(classify_sb(std::nullopt, false) == Classification::transport_error);
}

TEST_CASE("endpoint validation") {
  CHECK_NOTHROW(endpoint().validate());
  CHECK_THROWS_AS(endpoint("ftp://x").validate(), infinite::Error);
  CHECK_THROWS_AS(endpoint("http://x", 0.0).validate(), infinite::Error);
  CHECK_THROWS_AS(endpoint("http://x", 1.0, -1).validate(), infinite::Error);
  CHECK(split_url("https://api.example.com/v1") == std::pair<std::string, std::string>{"https://api.example.com", "/v1"});
  CHECK(split_url("http://127.0.0.1:8080") == std::pair<std::string, std::string>{"http://127.0.0.1:8080", ""});
}

TEST_CASE("mock transport: answers, busy replies and timeouts") {
  Mock m({{53'000, 200, completion_body("print('hi')")},
          {100, 429, R"({"error":"rate limited"})"},
          {400'000, 200, completion_body("late")},
          {5, 0, ""},
          {10, 400, R"({"error":"bad request"})"},
          {10, 200, "{\"choices\": [trunc"}});
  ChatClient client(endpoint(), m.transport, m.clock);
  const Conversation convo{{"user", "Write an LSTM"}};

  const auto a = client.send_query(convo);
  CHECK(a.status == ResponseStatus::answer);
  CHECK(a.latency_s == doctest::Approx(53.0));
  CHECK(*a.text == "print('hi')");
  CHECK(a.http_status == 200);

  const auto b = client.send_query(convo);
  CHECK(b.status == ResponseStatus::server_busy);
  CHECK_FALSE(b.text.has_value());
  CHECK(b.latency_s == doctest::Approx(0.1));

  const auto t = client.send_query(convo);
  CHECK(t.status == ResponseStatus::server_busy);
  CHECK(t.timed_out);
  CHECK(t.latency_s == doctest::Approx(300.0));

  const auto refused = client.send_query(convo);
  CHECK(refused.status == ResponseStatus::transport_error);
  CHECK_FALSE(refused.http_status.has_value());

  const auto bad = client.send_query(convo);
  CHECK(bad.status == ResponseStatus::transport_error);
  CHECK(bad.http_status == 400);

  const auto trunc = client.send_query(convo);
  CHECK(trunc.status == ResponseStatus::answer);
  CHECK(*trunc.text == "{\"choices\": [trunc");
}

TEST_CASE("request shape and credentials") {
  setenv("INFINITE_TEST_KEY", "sk-secret", 1);
  Mock m({{1, 200, completion_body("ok")}});
  ChatClient client(endpoint("http://mock.local/v1/"), m.transport, m.clock);
  client.send_query({{"system", "be brief"}, {"user", "hi"}});
  const auto reqs = m.transport->requests();
  REQUIRE(reqs.size() == 1);
  CHECK(reqs[0].url == "http://mock.local/v1/chat/completions");
  const json body = json::parse(reqs[0].body);
  CHECK(body["model"] == "gpt-test");
  CHECK(body["stream"] == false);
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][1]["content"] == "hi");
  bool has_auth = false;
  for (const auto& [k, v] : reqs[0].headers) has_auth |= (k == "Authorization" && v == "Bearer sk-secret");
  CHECK(has_auth);
  unsetenv("INFINITE_TEST_KEY");

  CHECK_THROWS_AS(client.send_query({}), infinite::Error);
  CHECK_THROWS_AS(client.send_query({{"assistant", "x"}}), infinite::Error);
}

TEST_CASE("scripted session: two prompts without busy replies") {
  setenv("INFINITE_TEST_KEY", "sk-should-not-be-logged", 1);
  Mock m({{53'000, 200, completion_body("v1")}, {3'000, 200, completion_body("v2")}});
  ChatClient client(endpoint(), m.transport, m.clock);
  std::vector<EventKind> streamed;
  const SessionLog log =
      run_scripted_session(client, {"Write an LSTM", "Use all variables"}, {"GPT", "lstm-weather"},
                           [&](const SessionLog&, const SessionEvent& e) { streamed.push_back(e.kind()); });
  unsetenv("INFINITE_TEST_KEY");
  CHECK(log.closed());
  CHECK(log.accepted());
  const auto s = derive_stats(log);
  CHECK(s.attempts_q == 2);
  CHECK(s.total_queries_n == 2);
  CHECK(s.sb_count == 0);
  CHECK(s.response_times_s == std::vector<double>{53.0, 3.0});
  CHECK(streamed.size() == log.events().size());
  CHECK(to_jsonl(log).find("sk-should-not-be-logged") == std::string::npos);

  // Context accumulates: the second request carries the first exchange.
  const auto reqs = m.transport->requests();
  CHECK(json::parse(reqs[1].body)["messages"].size() == 3);
}

TEST_CASE("scripted session: four busy replies then an answer") {
  Mock m({{100, 503, ""}, {100, 429, ""}, {100, 529, ""}, {100, 503, ""}, {2'000, 200, completion_body("ok")}});
  ChatClient client(endpoint("http://mock.local/v1", 300.0, 4), m.transport, m.clock);
  const auto s = derive_stats(run_scripted_session(client, {"Write an LSTM"}, {"X", "t"}));
  CHECK(s.attempts_q == 1);
  CHECK(s.total_queries_n == 5);
  CHECK(s.sb_count == 4);
}

TEST_CASE("scripted session: retries exhausted") {
  Mock m({{100, 503, ""}, {100, 503, ""}, {100, 503, ""}, {100, 503, ""}});
  ChatClient client(endpoint(), m.transport, m.clock);
  const SessionLog log = run_scripted_session(client, {"q"}, {"X", "t"});
  CHECK(log.closed());
  CHECK_FALSE(std::get<SessionClosed>(log.events().back().payload).completed);
  CHECK(tally(log).sb_count == 4);
  CHECK_THROWS_AS(run_scripted_session(client, {}, {"X", "t"}), infinite::Error);
}

TEST_CASE("mock fixture parsing") {
  const auto r = parse_mock_fixture(
      R"([{"delay_ms": 53000, "status": 200, "body": {"choices":[{"message":{"content":"a"}}]}},
          {"delay_ms": 10, "status": 429, "body": "busy"}])");
  REQUIRE(r.size() == 2);
  CHECK(r[0].delay_ms == 53000);
  CHECK(json::parse(r[0].body)["choices"][0]["message"]["content"] == "a");
  CHECK(r[1].body == "busy");
  CHECK_THROWS_AS(parse_mock_fixture("{}"), infinite::Error);
  CHECK_THROWS_AS(parse_mock_fixture(R"([{"delay_ms": -1}])"), infinite::Error);
}

TEST_CASE("real HTTP transport against a local server") {
  httplib::Server srv;
  int calls = 0;
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const json body = json::parse(req.body);
    if (body["messages"].back()["content"] == "busy") {
      res.status = 503;
      return;
    }
    res.set_content(completion_body("echo: " + body["messages"].back()["content"].get<std::string>()),
                    "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  ChatClient client(endpoint("http://127.0.0.1:" + std::to_string(port) + "/v1", 10.0));
  const auto ok = client.send_query({{"user", "hello"}});
  CHECK(ok.status == ResponseStatus::answer);
  CHECK(*ok.text == "echo: hello");
  CHECK(ok.latency_s > 0.0);
  CHECK(client.send_query({{"user", "busy"}}).status == ResponseStatus::server_busy);
  CHECK(calls == 2);
  srv.stop();
  th.join();

  ChatClient dead(endpoint("http://127.0.0.1:" + std::to_string(port) + "/v1", 2.0));
  const auto gone = dead.send_query({{"user", "hello"}});
  CHECK(gone.status == ResponseStatus::transport_error);
  CHECK_FALSE(gone.http_status.has_value());
}

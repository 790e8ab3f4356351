#include <sstream>

#include "infinite/error.hpp"
#include "infinite/json_io.hpp"
#include "infinite/service.hpp"

// Keep last: resolv.h defines a _res macro.
#include <httplib.h>

namespace infinite::service {

using json = nlohmann::json;

namespace {

int http_status_for(const std::string& code) {
  if (code == "unknown_session" || code == "unknown_variable") return 404;
  if (code == "illegal_transition" || code == "session_incomplete" || code == "session_closed" ||
      code == "no_predictions") {
    return 409;
  }
  if (code == "no_endpoint") return 503;
  return 400;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::string& detail) {
  send_json(res, {{"code", code}, {"message", message}, {"detail", detail}}, status);
}

// Runs a handler and converts every failure into the error body.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status_for(e.code()), e.code(), e.what(), e.detail());
    } catch (const json::exception& e) {
      send_error(res, 400, "malformed_request", "request body is not valid JSON for this endpoint", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", "internal error", e.what());
    }
  };
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

HttpApi::HttpApi(EvaluationService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;

  s.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json b = body_of(req);
    const std::string id = service_.create_session(b.at("framework_label").get<std::string>(),
                                                   b.at("task_label").get<std::string>(),
                                                   b.value("endpoint", std::string{}));
    send_json(res, {{"session_id", id}}, 201);
  }));

  s.Post(R"(/sessions/([0-9a-f]+)/prompts)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json b = body_of(req);
    const auto r =
        service_.post_prompt(req.matches[1], b.at("text").get<std::string>(), b.value("new_attempt", false));
    send_json(res, to_json(r));
  }));

  s.Post(R"(/sessions/([0-9a-f]+)/outcome)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const json b = body_of(req);
    const auto state = service_.tag_outcome(req.matches[1], session::parse_outcome_tag(b.at("tag").get<std::string>()));
    send_json(res, {{"ok", true}, {"state", session::to_string(state)}});
  }));

  s.Get(R"(/sessions/([0-9a-f]+)/stats)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, service_.live_stats(req.matches[1]));
  }));

  s.Post(R"(/sessions/([0-9a-f]+)/predictions)",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json b = body_of(req);
           const auto reports = service_.submit_predictions(req.matches[1], b.at("predictions_csv").get<std::string>(),
                                                            b.at("truth_csv").get<std::string>());
           json out = json::object();
           for (const auto& v : reports) out[v.variable] = to_json(v.report);
           send_json(res, {{"metrics", out}});
         }));

  s.Get(R"(/sessions/([0-9a-f]+)/ini)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(service_.ini(req.matches[1])));
  }));

  s.Get("/compare", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::vector<std::string> ids;
    std::stringstream ss(req.get_param_value("ids"));
    for (std::string id; std::getline(ss, id, ',');) {
      if (!id.empty()) ids.push_back(id);
    }
    send_json(res, service_.compare(ids));
  }));

  s.Get(R"(/plots/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::optional<report::PlotWindow> window;
    if (req.has_param("window")) window = report::parse_window(req.get_param_value("window"));
    res.set_content(service_.plot_csv(req.matches[1], req.get_param_value("variable"), window), "text/csv");
  }));
}

HttpApi::~HttpApi() { stop(); }

bool HttpApi::listen(const std::string& address, int port) { return server_->listen(address, port); }

int HttpApi::bind_any_port(const std::string& address) { return server_->bind_to_any_port(address); }

bool HttpApi::serve() { return server_->listen_after_bind(); }

void HttpApi::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace infinite::service

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "infinite/config.hpp"
#include "infinite/indices.hpp"
#include "infinite/llm_client.hpp"
#include "infinite/report.hpp"
#include "infinite/session.hpp"

namespace httplib {
class Server;
}

namespace infinite::service {

struct ServiceOptions {
  std::filesystem::path data_dir;
  std::map<std::string, llm::EndpointSpec> endpoints;
  indices::IndexConfig index;
};

/// Session store and evaluation workflow behind the HTTP API. Requests for
/// different sessions run concurrently; requests for one session are
/// serialized. Every change is persisted under data_dir/sessions.
class EvaluationService {
 public:
  /// Sessions already present in data_dir are reloaded.
  explicit EvaluationService(ServiceOptions options, std::shared_ptr<llm::Transport> transport = nullptr,
                             std::shared_ptr<const llm::Clock> clock = nullptr);
  ~EvaluationService();

  /// `endpoint` names an entry of the registry; when empty the framework
  /// label is tried, then the only registered endpoint.
  std::string create_session(const std::string& framework_label, const std::string& task_label,
                             const std::string& endpoint = {});

  llm::TimedResponse post_prompt(const std::string& session_id, const std::string& text, bool new_attempt);

  /// Returns the session state after tagging; an accepted tag closes the session.
  session::SessionState tag_outcome(const std::string& session_id, session::OutcomeTag tag);

  nlohmann::json live_stats(const std::string& session_id) const;

  std::vector<report::VariableReport> submit_predictions(const std::string& session_id, const std::string& pred_csv,
                                                         const std::string& truth_csv);

  indices::InIReport ini(const std::string& session_id) const;
  report::FrameworkResult result(const std::string& session_id) const;

  nlohmann::json compare(const std::vector<std::string>& session_ids) const;

  std::string plot_csv(const std::string& session_id, const std::string& variable,
                       std::optional<report::PlotWindow> window) const;

  session::SessionLog log(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& session_id) const;
  void persist(const Entry& e) const;
  std::filesystem::path session_dir() const;

  ServiceOptions options_;
  std::shared_ptr<llm::Transport> transport_;
  std::shared_ptr<const llm::Clock> clock_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// REST binding:
///   POST /sessions                    {framework_label, task_label, endpoint?}
///   POST /sessions/{id}/prompts       {text, new_attempt}
///   POST /sessions/{id}/outcome       {tag}
///   GET  /sessions/{id}/stats
///   POST /sessions/{id}/predictions   {predictions_csv, truth_csv}
///   GET  /sessions/{id}/ini
///   GET  /compare?ids=a,b,...
///   GET  /plots/{id}?variable=temp&window=100:200
/// Errors are {code, message, detail}.
class HttpApi {
 public:
  explicit HttpApi(EvaluationService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds and serves until stop(); returns false when binding fails.
  bool listen(const std::string& address, int port);
  /// Binds an ephemeral port and returns it (or -1); then call serve().
  int bind_any_port(const std::string& address);
  bool serve();
  void stop();

 private:
  EvaluationService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace infinite::service

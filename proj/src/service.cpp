#include "infinite/service.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "infinite/error.hpp"
#include "infinite/json_io.hpp"
#include "infinite/series_io.hpp"

namespace infinite::service {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct EvaluationService::Entry {
  mutable std::mutex mu;
  std::optional<session::SessionLog> log;
  std::string endpoint;
  llm::Conversation conversation;
  std::optional<std::vector<io::NamedSeries>> pred;
  std::optional<std::vector<io::NamedSeries>> truth;
};

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write", p.string());
  out << content;
}

// Answered exchanges in order; server-busy queries leave no trace in the context.
llm::Conversation conversation_of(const session::SessionLog& log) {
  llm::Conversation c;
  std::optional<std::string> pending;
  for (const auto& e : log.events()) {
    if (const auto* q = std::get_if<session::QuerySent>(&e.payload)) {
      pending = q->prompt;
    } else if (const auto* r = std::get_if<session::ResponseReceived>(&e.payload)) {
      c.push_back({"user", *pending});
      c.push_back({"assistant", r->text.value_or(std::string{})});
    }
  }
  return c;
}

}  // namespace

EvaluationService::EvaluationService(ServiceOptions options, std::shared_ptr<llm::Transport> transport,
                                     std::shared_ptr<const llm::Clock> clock)
    : options_(std::move(options)), transport_(std::move(transport)), clock_(std::move(clock)) {
  options_.index.validate();
  fs::create_directories(session_dir());
  for (const auto& item : fs::directory_iterator(session_dir())) {
    if (item.path().extension() != ".jsonl") continue;
    auto e = std::make_shared<Entry>();
    e->log = session::load(item.path());
    const fs::path base = session_dir() / e->log->session_id();
    if (fs::exists(base.string() + ".meta.json")) {
      e->endpoint = json::parse(read_file(base.string() + ".meta.json")).value("endpoint", std::string{});
    }
    if (fs::exists(base.string() + ".pred.csv") && fs::exists(base.string() + ".truth.csv")) {
      e->pred = io::read_series_csv(base.string() + ".pred.csv");
      e->truth = io::read_series_csv(base.string() + ".truth.csv");
    }
    e->conversation = conversation_of(*e->log);
    sessions_.emplace(e->log->session_id(), std::move(e));
  }
}

EvaluationService::~EvaluationService() = default;

fs::path EvaluationService::session_dir() const { return options_.data_dir / "sessions"; }

std::shared_ptr<EvaluationService::Entry> EvaluationService::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error("unknown_session", "unknown session", session_id);
  return it->second;
}

void EvaluationService::persist(const Entry& e) const {
  session::save(*e.log, session_dir() / (e.log->session_id() + ".jsonl"));
}

std::string EvaluationService::create_session(const std::string& framework_label, const std::string& task_label,
                                              const std::string& endpoint) {
  std::string chosen = endpoint;
  if (!chosen.empty()) {
    if (!options_.endpoints.contains(chosen)) throw Error("unknown_endpoint", "unknown endpoint", chosen);
  } else if (options_.endpoints.contains(framework_label)) {
    chosen = framework_label;
  } else if (options_.endpoints.size() == 1) {
    chosen = options_.endpoints.begin()->first;
  }
  auto e = std::make_shared<Entry>();
  e->log = session::SessionLog::open(framework_label, task_label);
  e->endpoint = chosen;
  const std::string id = e->log->session_id();
  write_file(session_dir() / (id + ".meta.json"), json{{"endpoint", chosen}}.dump());
  persist(*e);
  std::lock_guard lock(mu_);
  sessions_.emplace(id, std::move(e));
  return id;
}

llm::TimedResponse EvaluationService::post_prompt(const std::string& session_id, const std::string& text,
                                                  bool new_attempt) {
  if (text.empty()) throw Error("invalid_prompt", "prompt text must not be empty");
  const auto e = find(session_id);
  std::lock_guard lock(e->mu);
  if (e->endpoint.empty()) throw Error("no_endpoint", "session has no model endpoint configured");

  // Check legality before spending a model call.
  session::SessionState state = e->log->state();
  if (new_attempt) {
    const auto next = session::next_state(state, session::AttemptStarted{});
    if (!next) throw Error("illegal_transition", "cannot start a new attempt in state " + session::to_string(state));
    state = *next;
  }
  if (!session::next_state(state, session::QuerySent{text})) {
    throw Error("illegal_transition", "cannot send a query in state " + session::to_string(state));
  }

  if (new_attempt) e->log->append(session::AttemptStarted{});
  e->log->append(session::QuerySent{text});
  const llm::ChatClient client(options_.endpoints.at(e->endpoint), transport_, clock_);
  llm::Conversation convo = e->conversation;
  convo.push_back({"user", text});
  llm::TimedResponse r = client.send_query(convo);
  if (r.status == llm::ResponseStatus::answer) {
    e->log->append(session::ResponseReceived::with_text(r.latency_s, *r.text));
    e->conversation = std::move(convo);
    e->conversation.push_back({"assistant", *r.text});
  } else {
    const auto cause = r.status == llm::ResponseStatus::transport_error ? session::BusyCause::transport_error
                       : r.timed_out                                   ? session::BusyCause::timeout
                                                                       : session::BusyCause::server_busy;
    e->log->append(session::SbDetected{r.latency_s, cause, r.detail});
  }
  persist(*e);
  return r;
}

session::SessionState EvaluationService::tag_outcome(const std::string& session_id, session::OutcomeTag tag) {
  const auto e = find(session_id);
  std::lock_guard lock(e->mu);
  e->log->append(session::OutcomeTagged{tag});
  if (tag == session::OutcomeTag::accepted) e->log->close("accepted");
  persist(*e);
  return e->log->state();
}

json EvaluationService::live_stats(const std::string& session_id) const {
  const auto e = find(session_id);
  std::lock_guard lock(e->mu);
  const indices::SessionStats s = session::tally(*e->log);
  json provisional = json::object();
  if (s.total_queries_n > 0) provisional["e_sbr"] = indices::e_sbr(s.sb_count, s.total_queries_n);
  std::vector<double> times = s.response_times_s;
  if (options_.index.count_sb_latency) times.insert(times.end(), s.sb_times_s.begin(), s.sb_times_s.end());
  if (!times.empty()) {
    const double art = indices::artpq(times);
    provisional["artpq_s"] = art;
    provisional["e_art"] = indices::e_art(art, options_.index);
    if (provisional.contains("e_sbr")) {
      provisional["e"] = indices::efficiency(provisional["e_sbr"].get<double>(), provisional["e_art"].get<double>());
    }
  }
  if (s.attempts_q > 0) provisional["c"] = indices::consistency(s.attempts_q, options_.index.m);
  return {{"session_id", session_id},
          {"framework_label", e->log->framework_label()},
          {"state", session::to_string(e->log->state())},
          {"stats", to_json(s)},
          {"provisional", provisional}};
}

std::vector<report::VariableReport> EvaluationService::submit_predictions(const std::string& session_id,
                                                                          const std::string& pred_csv,
                                                                          const std::string& truth_csv) {
  const auto e = find(session_id);
  auto pred = io::parse_series_csv(pred_csv);
  auto truth = io::parse_series_csv(truth_csv);
  auto reports = report::score(pred, truth, options_.index.mask_eps);
  std::lock_guard lock(e->mu);
  const fs::path base = session_dir() / session_id;
  write_file(base.string() + ".pred.csv", io::series_csv(pred, "_pred"));
  write_file(base.string() + ".truth.csv", io::series_csv(truth));
  e->pred = std::move(pred);
  e->truth = std::move(truth);
  return reports;
}

report::FrameworkResult EvaluationService::result(const std::string& session_id) const {
  const auto e = find(session_id);
  std::lock_guard lock(e->mu);
  if (!e->log->accepted()) throw Error("session_incomplete", "session incomplete: no accepted outcome yet");
  if (!e->pred) throw Error("session_incomplete", "session incomplete: no predictions submitted");
  return report::evaluate_framework(*e->log, *e->pred, *e->truth, options_.index);
}

indices::InIReport EvaluationService::ini(const std::string& session_id) const { return result(session_id).ini; }

json EvaluationService::compare(const std::vector<std::string>& session_ids) const {
  if (session_ids.empty()) throw Error("no_sessions", "compare needs at least one session id");
  std::vector<report::FrameworkResult> results;
  for (const auto& id : session_ids) results.push_back(result(id));
  json tables = json::object();
  for (const std::string& metric : report::metric_names()) {
    tables[metric] = report::to_json(report::comparison_table(results, metric));
  }
  const auto ranked = report::rank(results);
  json details = json::array();
  for (const auto& r : ranked) details.push_back(to_json(r));
  return {{"ranking", report::ranking_json(ranked)}, {"tables", tables}, {"results", details}};
}

std::string EvaluationService::plot_csv(const std::string& session_id, const std::string& variable,
                                        std::optional<report::PlotWindow> window) const {
  const auto e = find(session_id);
  std::lock_guard lock(e->mu);
  if (!e->pred) throw Error("no_predictions", "no predictions submitted for this session");
  const auto aligned = io::align(*e->pred, *e->truth);
  const auto it = variable.empty() ? aligned.begin()
                                   : std::find_if(aligned.begin(), aligned.end(),
                                                  [&](const io::AlignedSeries& a) { return a.name == variable; });
  if (it == aligned.end()) throw Error("unknown_variable", "no such variable", variable);
  const report::PlotTrace trace{e->log->framework_label(), it->pred};
  return report::plot_series_csv(it->truth, std::span(&trace, 1), window);
}

session::SessionLog EvaluationService::log(const std::string& session_id) const {
  const auto e = find(session_id);
  std::lock_guard lock(e->mu);
  return *e->log;
}

std::vector<std::string> EvaluationService::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace infinite::service

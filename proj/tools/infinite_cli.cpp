// infinite: command-line front end for recording sessions, scoring
// predictions, computing the inference index, training the reference
// forecaster, reporting and serving the evaluation API.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "infinite/config.hpp"
#include "infinite/error.hpp"
#include "infinite/json_io.hpp"
#include "infinite/llm_client.hpp"
#include "infinite/lstm.hpp"
#include "infinite/report.hpp"
#include "infinite/series_io.hpp"
#include "infinite/service.hpp"
#include "infinite/session.hpp"
#include "infinite/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace infinite;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read file", p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write file", p.string());
  out << j.dump(2) << '\n';
}

config::HarnessConfig load_or_default(const std::string& path) {
  return path.empty() ? config::HarnessConfig{} : config::load_config(path);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Per-variable metric table, metrics as rows, 4 decimals.
std::string render_metrics(const std::vector<report::VariableReport>& reports) {
  report::FrameworkResult single;
  single.framework_label = "model";
  single.metrics = reports;
  std::string out;
  std::vector<report::ComparisonTable> tables;
  for (const auto& m : report::metric_names()) tables.push_back(report::comparison_table(std::span(&single, 1), m));
  report::ComparisonTable t;
  t.metric = "metric";
  t.columns = tables.front().columns;
  for (const auto& tb : tables) {
    t.rows.push_back(tb.metric);
    t.cells.push_back(tb.cells.front());
  }
  return report::render_table(t, 4);
}

std::vector<std::string> read_script(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<std::string> prompts;
  if (path.extension() == ".json") {
    try {
      prompts = json::parse(text).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw Error("invalid_script", "script JSON must be an array of strings", e.what());
    }
  } else {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) prompts.push_back(line);
    }
  }
  if (prompts.empty()) throw Error("empty_script", "script contains no prompts", path.string());
  return prompts;
}

session::SessionLog interactive_session(const llm::ChatClient& client, const std::string& framework,
                                        const std::string& task, const fs::path& out) {
  using namespace session;
  SessionLog log = SessionLog::open(framework, task);
  llm::Conversation convo;
  std::string last_prompt;
  auto ask = [](const std::string& q) {
    std::cout << q << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return std::string(":quit");
    return line;
  };
  while (!log.closed()) {
    save(log, out);
    switch (log.state()) {
      case SessionState::opened:
      case SessionState::rejected: {
        const std::string p = ask("new attempt, prompt (or :quit)> ");
        if (p == ":quit") {
          log.close("evaluator quit");
          break;
        }
        if (p.empty()) break;
        log.append(AttemptStarted{});
        last_prompt = p;
        log.append(QuerySent{p});
        convo.push_back({"user", p});
        break;
      }
      case SessionState::busy: {
        const std::string a = ask("server busy; [r]etry or :quit> ");
        if (a == ":quit") {
          log.close("evaluator quit after server-busy");
          break;
        }
        log.append(QuerySent{last_prompt});
        break;
      }
      case SessionState::answered: {
        const std::string t =
            ask("tag: accepted | rejected_wrong_output | rejected_runtime_error | rejected_misunderstood> ");
        try {
          log.append(OutcomeTagged{parse_outcome_tag(t)});
        } catch (const Error& e) {
          std::cout << e.what() << '\n';
        }
        break;
      }
      case SessionState::accepted:
        log.close("accepted");
        break;
      default:
        break;
    }
    if (log.state() == SessionState::awaiting_reply) {
      std::cout << "waiting for " << framework << "...\n";
      const llm::TimedResponse r = client.send_query(convo);
      std::cout << "[" << fixed(r.latency_s, 1) << " s, " << llm::to_string(r.status) << "]\n";
      if (r.status == llm::ResponseStatus::answer) {
        std::cout << *r.text << '\n';
        log.append(ResponseReceived::with_text(r.latency_s, *r.text));
        convo.push_back({"assistant", *r.text});
      } else {
        std::cout << r.detail << '\n';
        const auto cause = r.status == llm::ResponseStatus::transport_error ? BusyCause::transport_error
                           : r.timed_out                                   ? BusyCause::timeout
                                                                           : BusyCause::server_busy;
        log.append(SbDetected{r.latency_s, cause, r.detail});
      }
    }
  }
  save(log, out);
  return log;
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"infinite: evaluate LLM code generation with the inference index"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Harness configuration file (JSON)")->check(CLI::ExistingFile);

  // record
  auto* record = app.add_subcommand("record", "Record a session against a model endpoint");
  std::string endpoint_name, script_path, session_out, framework_label, task_label = "lstm-weather",
                                                                        final_tag = "accepted", mock_fixture;
  bool interactive = false;
  record->add_option("--endpoint", endpoint_name, "Endpoint name from the configuration")->required();
  auto* script_opt = record->add_option("--script", script_path, "Prompts: .json array or one per line")
                         ->check(CLI::ExistingFile);
  auto* interactive_opt = record->add_flag("--interactive", interactive, "Type prompts and tags at the terminal");
  script_opt->excludes(interactive_opt);
  record->add_option("--session", session_out, "Session log to write (JSONL)")->required();
  record->add_option("--framework", framework_label, "Framework label (defaults to the endpoint name)");
  record->add_option("--task", task_label, "Task label");
  record->add_option("--final-tag", final_tag, "Outcome tag for the last scripted prompt");
  record->add_option("--mock-fixture", mock_fixture, "Replay a mock endpoint fixture instead of the network")
      ->check(CLI::ExistingFile);

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Score predictions against ground truth");
  std::string pred_path, truth_path, out_dir;
  double mask_eps = -1.0;
  bool print_json = false;
  metrics_cmd->add_option("--pred", pred_path, "Prediction CSV")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--truth", truth_path, "Ground-truth CSV")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--mask-eps", mask_eps, "Near-zero MAPE mask (target units)");
  metrics_cmd->add_option("--out-dir", out_dir, "Directory for metrics.json");
  metrics_cmd->add_flag("--json", print_json, "Print JSON instead of a table");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Compute the inference index for a recorded session");
  std::string session_path;
  eval_cmd->add_option("--session", session_path, "Session log (JSONL)")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--pred", pred_path, "Prediction CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", truth_path, "Ground-truth CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--mask-eps", mask_eps, "Near-zero MAPE mask (target units)");
  eval_cmd->add_option("--out-dir", out_dir, "Directory for eval.json");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the reference LSTM forecaster");
  std::string data_path;
  long long seed = -1;
  int epochs = 0;
  train_cmd->add_option("--data", data_path, "Weather CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", seed, "Random seed");
  train_cmd->add_option("--epochs", epochs, "Override the epoch count");
  train_cmd->add_option("--mask-eps", mask_eps, "Near-zero MAPE mask (target units)");
  train_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Compare evaluations: tables, plot series, ranking");
  std::vector<std::string> eval_files, windows;
  report_cmd->add_option("--eval", eval_files, "eval.json from the eval command (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--window", windows, "Focus window start:end (repeatable)");
  report_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the local evaluation API");
  int port = -1;
  serve_cmd->add_option("--port", port, "Port");
  serve_cmd->add_option("--out-dir", out_dir, "Data directory (overrides service.data_dir)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic sinusoid weather CSV");
  std::string synth_out;
  std::size_t rows = 5000;
  synth_cmd->add_option("--out", synth_out, "Output CSV")->required();
  synth_cmd->add_option("--rows", rows, "Row count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"code", "bad_flags"}, {"message", e.what()}, {"detail", e.get_name()}}.dump() << '\n';
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    config::HarnessConfig cfg = load_or_default(config_path);
    if (mask_eps >= 0.0) cfg.index.mask_eps = mask_eps;
    cfg.index.validate();

    if (*record) {
      if (script_path.empty() && !interactive) throw Error("bad_flags", "record needs --script or --interactive");
      const auto it = cfg.endpoints.find(endpoint_name);
      if (it == cfg.endpoints.end()) throw Error("unknown_endpoint", "endpoint not in configuration", endpoint_name);
      std::shared_ptr<llm::Transport> transport;
      std::shared_ptr<llm::ManualClock> clock;
      if (!mock_fixture.empty()) {
        clock = std::make_shared<llm::ManualClock>();
        transport = std::make_shared<llm::MockTransport>(llm::load_mock_fixture(mock_fixture), clock);
      }
      const llm::ChatClient client(it->second, transport, clock);
      const std::string label = framework_label.empty() ? endpoint_name : framework_label;
      session::SessionLog log = interactive
                                    ? interactive_session(client, label, task_label, session_out)
                                    : llm::run_scripted_session(client, read_script(script_path),
                                                                {label, task_label, session::parse_outcome_tag(final_tag)});
      session::save(log, session_out);
      const auto stats = session::tally(log);
      std::cout << "session " << log.session_id() << ": Q=" << stats.attempts_q << " N=" << stats.total_queries_n
                << " SB=" << stats.sb_count << (log.accepted() ? " accepted" : " not accepted") << '\n';
      return 0;
    }

    if (*metrics_cmd) {
      const auto reports =
          report::score(io::read_series_csv(pred_path), io::read_series_csv(truth_path), cfg.index.mask_eps);
      json j = json::object();
      for (const auto& v : reports) j[v.variable] = to_json(v.report);
      if (print_json) {
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << render_metrics(reports);
      }
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_json(fs::path(out_dir) / "metrics.json", j);
      }
      return 0;
    }

    if (*eval_cmd) {
      const session::SessionLog log = session::load(session_path);
      const report::FrameworkResult r = report::evaluate_framework(log, io::read_series_csv(pred_path),
                                                                   io::read_series_csv(truth_path), cfg.index);
      const auto& i = r.ini;
      std::cout << r.framework_label << ": E_SBR " << fixed(i.e_sbr, 2) << "  E_ART " << fixed(i.e_art, 2) << "  E "
                << fixed(i.e, 2) << "  C " << fixed(i.c, 2) << "  A " << fixed(i.a, 2) << "  InI " << fixed(i.ini, 2)
                << "\n(ARTpQ " << fixed(i.artpq_s, 2) << " s, MAPE_av " << fixed(i.mape_av_pct, 2) << " %)\n";
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        json j = to_json(r);
        j["pred_path"] = fs::absolute(pred_path).string();
        j["truth_path"] = fs::absolute(truth_path).string();
        write_json(fs::path(out_dir) / "eval.json", j);
      }
      return 0;
    }

    if (*train_cmd) {
      if (seed >= 0) cfg.forecast.seed = static_cast<std::uint64_t>(seed);
      if (epochs > 0) cfg.forecast.epochs = epochs;
      const auto t0 = std::chrono::steady_clock::now();
      const forecast::WeatherDataset ds = forecast::load_weather_csv(data_path);
      const forecast::LstmModel model = forecast::train(ds, cfg.forecast);
      const auto split = forecast::split_train_test(ds.features, cfg.forecast.train_fraction, cfg.forecast.timesteps);
      const auto pred = forecast::predict(model, split.test);
      const auto truth = forecast::window_truth(model, split.test);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      std::vector<io::NamedSeries> pred_cols, truth_cols;
      for (std::size_t k = 0; k < pred.size(); ++k) {
        pred_cols.push_back({model.target_names[k], {pred[k].values().begin(), pred[k].values().end()}});
        truth_cols.push_back({model.target_names[k], {truth[k].values().begin(), truth[k].values().end()}});
      }
      const fs::path dir(out_dir);
      fs::create_directories(dir);
      forecast::save_model(model, dir / "model.json");
      io::write_series_csv(dir / "predictions.csv", pred_cols, "_pred");
      io::write_series_csv(dir / "truth.csv", truth_cols);
      const auto reports = report::score(pred_cols, truth_cols, cfg.index.mask_eps);
      json j = json::object();
      for (const auto& v : reports) j[v.variable] = to_json(v.report);
      write_json(dir / "metrics.json", j);

      std::cout << "trained on " << split.train.rows() << " rows, tested on " << split.test.rows() << " rows ("
                << pred.front().size() << " predictions) in " << fixed(secs, 1) << " s\n";
      std::cout << "epoch loss:";
      for (double l : model.history.epoch_loss) std::cout << ' ' << l;
      std::cout << '\n' << render_metrics(reports);
      return 0;
    }

    if (*report_cmd) {
      std::vector<report::FrameworkResult> results;
      std::vector<json> raw;
      for (const auto& f : eval_files) {
        raw.push_back(json::parse(read_text(f)));
        results.push_back(framework_result_from_json(raw.back()));
        results.back().validate();
      }
      const fs::path dir(out_dir);
      fs::create_directories(dir / "plots");
      json tables = json::object();
      for (const auto& m : report::metric_names()) tables[m] = report::to_json(report::comparison_table(results, m));
      write_json(dir / "tables.json", tables);
      const auto ranked = report::rank(results);
      write_json(dir / "ranking.json", report::ranking_json(ranked));

      std::vector<report::PlotWindow> plot_windows;
      for (const auto& w : windows) plot_windows.push_back(report::parse_window(w));
      const auto truth = io::read_series_csv(raw.front().at("truth_path").get<std::string>());
      for (const auto& t : truth) {
        std::vector<report::PlotTrace> traces;
        for (std::size_t k = 0; k < results.size(); ++k) {
          for (const auto& p : io::read_series_csv(raw[k].at("pred_path").get<std::string>())) {
            if (p.name == t.name) traces.push_back({results[k].framework_label, metrics::Series(p.values)});
          }
        }
        report::emit_plot_series(metrics::Series(t.values), traces, plot_windows, dir / "plots" / t.name);
      }

      for (const char* m : {"mape_masked", "r2"}) {
        std::cout << report::render_table(report::comparison_table(results, m), 4) << '\n';
      }
      std::cout << "ranking by InI:\n";
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        std::cout << "  " << i + 1 << ". " << ranked[i].framework_label << "  " << fixed(ranked[i].ini.ini, 2) << '\n';
      }
      return 0;
    }

    if (*serve_cmd) {
      if (port >= 0) cfg.service.port = port;
      if (!out_dir.empty()) cfg.service.data_dir = out_dir;
      cfg.validate();
      service::EvaluationService svc({cfg.service.data_dir, cfg.endpoints, cfg.index});
      service::HttpApi api(svc);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::atomic<bool> done{false};
      std::thread watcher([&] {
        while (!g_stop && !done) std::this_thread::sleep_for(std::chrono::milliseconds(50));
        api.stop();
      });
      std::cout << "serving on http://" << cfg.service.bind_address << ':' << cfg.service.port << " (data in "
                << cfg.service.data_dir << ")\n"
                << std::flush;
      const bool ok = api.listen(cfg.service.bind_address, cfg.service.port);
      done = true;
      watcher.join();
      if (!ok && !g_stop) throw Error("bind_failed", "cannot bind the service address", std::to_string(cfg.service.port));
      return 0;
    }

    if (*synth_cmd) {
      std::ofstream out(synth_out, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("io_error", "cannot write file", synth_out);
      out << forecast::synthetic_weather_csv(rows);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << json{{"code", e.code()}, {"message", e.what()}, {"detail", e.detail()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"code", "internal"}, {"message", e.what()}, {"detail", ""}}.dump() << '\n';
    return 1;
  }
  return 0;
}

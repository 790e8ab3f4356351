#include "infinite/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "infinite/error.hpp"

namespace infinite::report {

using json = nlohmann::json;

void FrameworkResult::validate() const {
  const double expected = masked_mape_average(metrics);
  if (std::abs(expected - ini.mape_av_pct) > 1e-9) {
    throw Error("inconsistent_result", "InI MAPE average does not match the per-variable masked MAPEs",
                framework_label);
  }
}

std::vector<VariableReport> score(const std::vector<io::NamedSeries>& pred, const std::vector<io::NamedSeries>& truth,
                                  double mask_eps) {
  std::vector<VariableReport> out;
  for (const io::AlignedSeries& a : io::align(pred, truth)) {
    out.push_back({a.name, metrics::metric_report(a.pred, a.truth, mask_eps)});
  }
  return out;
}

double masked_mape_average(std::span<const VariableReport> reports) {
  std::vector<double> values;
  for (const VariableReport& v : reports) {
    if (!v.report.mape_masked_pct) {
      throw Error("mape_undefined", "masked MAPE is undefined for '" + v.variable + "' (every point masked)");
    }
    values.push_back(*v.report.mape_masked_pct);
  }
  return indices::mape_average(values);
}

FrameworkResult evaluate_framework(const session::SessionLog& log, const std::vector<io::NamedSeries>& pred,
                                   const std::vector<io::NamedSeries>& truth, const indices::IndexConfig& cfg) {
  if (!log.accepted()) throw Error("session_incomplete", "session has no accepted outcome");
  FrameworkResult r;
  r.framework_label = log.framework_label();
  r.session_id = log.session_id();
  r.metrics = score(pred, truth, cfg.mask_eps);
  r.ini = indices::evaluate(session::derive_stats(log), masked_mape_average(r.metrics), cfg);
  return r;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"mse", "mae",  "mb",   "mape", "mape_masked",
                                                 "mfe", "mfb", "r2", "pearson_r"};
  return names;
}

namespace {

std::optional<double> pick(const metrics::MetricReport& r, std::string_view metric) {
  if (metric == "mse") return r.mse;
  if (metric == "mae") return r.mae;
  if (metric == "mb") return r.mb;
  if (metric == "mape") return r.mape_pct;
  if (metric == "mape_masked") return r.mape_masked_pct;
  if (metric == "mfe") return r.mfe_pct;
  if (metric == "mfb") return r.mfb_pct;
  if (metric == "r2") return r.r2;
  if (metric == "pearson_r") return r.pearson_r;
  throw Error("unknown_metric", "unknown metric '" + std::string(metric) + "'");
}

}  // namespace

ComparisonTable comparison_table(std::span<const FrameworkResult> results, std::string_view metric) {
  if (std::find(metric_names().begin(), metric_names().end(), metric) == metric_names().end()) {
    throw Error("unknown_metric", "unknown metric '" + std::string(metric) + "'");
  }
  if (results.empty()) throw Error("no_results", "comparison needs at least one result");
  ComparisonTable t;
  t.metric = std::string(metric);
  for (const FrameworkResult& r : results) {
    for (const VariableReport& v : r.metrics) {
      if (std::find(t.columns.begin(), t.columns.end(), v.variable) == t.columns.end()) t.columns.push_back(v.variable);
    }
  }
  for (const FrameworkResult& r : results) {
    t.rows.push_back(r.framework_label);
    std::vector<std::optional<double>> row;
    for (const std::string& col : t.columns) {
      const auto it = std::find_if(r.metrics.begin(), r.metrics.end(),
                                   [&](const VariableReport& v) { return v.variable == col; });
      row.push_back(it == r.metrics.end() ? std::nullopt : pick(it->report, metric));
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

std::string render_table(const ComparisonTable& table, int decimals) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({table.metric});
  for (const auto& c : table.columns) grid.back().push_back(c);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<std::string> line{table.rows[r]};
    for (const auto& cell : table.cells[r]) {
      if (!cell) {
        line.emplace_back("n/a");
      } else if (std::isinf(*cell)) {
        line.emplace_back(*cell > 0 ? "inf" : "-inf");
      } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, *cell);
        std::string text = buf;
        if (text.front() == '-' && text.find_first_not_of("-0.") == std::string::npos) text.erase(0, 1);
        line.push_back(std::move(text));
      }
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::string out;
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c > 0) out += "  ";
      const std::size_t pad = width[c] - line[c].size();
      if (c == 0) {
        out += line[c] + std::string(pad, ' ');
      } else {
        out += std::string(pad, ' ') + line[c];
      }
    }
    out += '\n';
  }
  return out;
}

PlotWindow parse_window(std::string_view text) {
  const std::size_t colon = text.find(':');
  PlotWindow w;
  auto parse = [&](std::string_view part, std::size_t& v) {
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    return !part.empty() && ec == std::errc{} && ptr == part.data() + part.size();
  };
  if (colon == std::string_view::npos || !parse(text.substr(0, colon), w.start) ||
      !parse(text.substr(colon + 1), w.end) || w.start >= w.end) {
    throw Error("invalid_window", "window must be start:end with start < end", std::string(text));
  }
  return w;
}

std::string plot_series_csv(const metrics::Series& truth, std::span<const PlotTrace> predictions,
                            std::optional<PlotWindow> window) {
  for (const PlotTrace& p : predictions) {
    if (p.values.size() != truth.size()) {
      throw Error("length_mismatch", "prediction '" + p.label + "' length differs from the truth series");
    }
  }
  const PlotWindow w = window.value_or(PlotWindow{0, truth.size()});
  if (w.start >= w.end || w.end > truth.size()) {
    throw Error("window_out_of_range", "plot window lies outside the series",
                std::to_string(w.start) + ":" + std::to_string(w.end) + " of " + std::to_string(truth.size()));
  }
  std::string out = "index,truth";
  for (const PlotTrace& p : predictions) out += "," + p.label;
  out += '\n';
  char buf[32];
  for (std::size_t i = w.start; i < w.end; ++i) {
    out += std::to_string(i);
    out += ',';
    out.append(buf, std::to_chars(buf, buf + sizeof buf, truth[i]).ptr);
    for (const PlotTrace& p : predictions) {
      out += ',';
      out.append(buf, std::to_chars(buf, buf + sizeof buf, p.values[i]).ptr);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::filesystem::path> emit_plot_series(const metrics::Series& truth,
                                                    std::span<const PlotTrace> predictions,
                                                    std::span<const PlotWindow> windows,
                                                    const std::filesystem::path& prefix) {
  // Render everything first so a bad window leaves no partial output.
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  files.emplace_back(prefix.string() + "_full.csv", plot_series_csv(truth, predictions));
  for (const PlotWindow& w : windows) {
    files.emplace_back(prefix.string() + "_" + std::to_string(w.start) + "_" + std::to_string(w.end) + ".csv",
                       plot_series_csv(truth, predictions, w));
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [path, content] : files) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write plot series", path.string());
    out << content;
    written.push_back(path);
  }
  return written;
}

std::vector<FrameworkResult> rank(std::vector<FrameworkResult> results) {
  std::stable_sort(results.begin(), results.end(), [](const FrameworkResult& a, const FrameworkResult& b) {
    if (a.ini.ini != b.ini.ini) return a.ini.ini > b.ini.ini;
    return a.framework_label < b.framework_label;
  });
  return results;
}

json to_json(const ComparisonTable& table) {
  json cells = json::array();
  for (const auto& row : table.cells) {
    json r = json::array();
    for (const auto& c : row) {
      if (!c) {
        r.push_back(nullptr);
      } else if (std::isinf(*c)) {
        r.push_back(*c > 0 ? "Infinity" : "-Infinity");
      } else {
        r.push_back(*c);
      }
    }
    cells.push_back(std::move(r));
  }
  return {{"metric", table.metric}, {"rows", table.rows}, {"columns", table.columns}, {"cells", cells}};
}

json ranking_json(std::span<const FrameworkResult> ranked) {
  json out = json::array();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    out.push_back({{"rank", i + 1},
                   {"framework_label", r.framework_label},
                   {"session_id", r.session_id},
                   {"ini", r.ini.ini},
                   {"e", r.ini.e},
                   {"c", r.ini.c},
                   {"a", r.ini.a}});
  }
  return out;
}

}  // namespace infinite::report

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "infinite/indices.hpp"
#include "infinite/metrics.hpp"
#include "infinite/series_io.hpp"
#include "infinite/session.hpp"

namespace infinite::report {

struct VariableReport {
  std::string variable;
  metrics::MetricReport report;
  friend bool operator==(const VariableReport&, const VariableReport&) = default;
};

/// Everything known about one framework's run.
struct FrameworkResult {
  std::string framework_label;
  std::vector<VariableReport> metrics;
  indices::InIReport ini;
  std::string session_id;

  /// ini.mape_av_pct must equal the mean of the per-variable masked MAPEs.
  void validate() const;
  friend bool operator==(const FrameworkResult&, const FrameworkResult&) = default;
};

/// Scores every predicted variable against its truth column.
std::vector<VariableReport> score(const std::vector<io::NamedSeries>& pred, const std::vector<io::NamedSeries>& truth,
                                  double mask_eps);

/// Mean of the masked MAPEs; throws when any variable has none.
double masked_mape_average(std::span<const VariableReport> reports);

/// Full evaluation of an accepted session against uploaded predictions.
FrameworkResult evaluate_framework(const session::SessionLog& log, const std::vector<io::NamedSeries>& pred,
                                   const std::vector<io::NamedSeries>& truth, const indices::IndexConfig& cfg);

/// Metric names usable in comparison tables.
const std::vector<std::string>& metric_names();

struct ComparisonTable {
  std::string metric;
  std::vector<std::string> rows;     // frameworks
  std::vector<std::string> columns;  // variables
  std::vector<std::vector<std::optional<double>>> cells;
};

ComparisonTable comparison_table(std::span<const FrameworkResult> results, std::string_view metric);

/// Fixed-point text rendering; empty cells print as "n/a".
std::string render_table(const ComparisonTable& table, int decimals = 4);

/// Half-open range [start, end) of test-series positions.
struct PlotWindow {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const PlotWindow&, const PlotWindow&) = default;
};

/// Parses "start:end".
PlotWindow parse_window(std::string_view text);

struct PlotTrace {
  std::string label;
  metrics::Series values;
};

/// CSV with columns index, truth, one per prediction, restricted to `window`
/// (whole series when empty).
std::string plot_series_csv(const metrics::Series& truth, std::span<const PlotTrace> predictions,
                            std::optional<PlotWindow> window = std::nullopt);

/// Writes <prefix>_full.csv plus <prefix>_<start>_<end>.csv per window and
/// returns the paths written.
std::vector<std::filesystem::path> emit_plot_series(const metrics::Series& truth,
                                                    std::span<const PlotTrace> predictions,
                                                    std::span<const PlotWindow> windows,
                                                    const std::filesystem::path& prefix);

/// Stable sort by InI descending, ties by label.
std::vector<FrameworkResult> rank(std::vector<FrameworkResult> results);

nlohmann::json to_json(const ComparisonTable& table);
nlohmann::json ranking_json(std::span<const FrameworkResult> ranked);

}  // namespace infinite::report

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infinite/metrics.hpp"

namespace infinite::io {

struct NamedSeries {
  std::string name;
  std::vector<double> values;
  friend bool operator==(const NamedSeries&, const NamedSeries&) = default;
};

/// Writes "index,<name><suffix>,..." with one row per position. Values are
/// printed with enough digits to round-trip.
std::string series_csv(const std::vector<NamedSeries>& columns, std::string_view suffix = {});
void write_series_csv(const std::filesystem::path& path, const std::vector<NamedSeries>& columns,
                      std::string_view suffix = {});

/// Reads a CSV of numeric columns. A leading "index" column is skipped and a
/// trailing "_pred" is stripped from column names.
std::vector<NamedSeries> parse_series_csv(std::string_view text);
std::vector<NamedSeries> read_series_csv(const std::filesystem::path& path);

/// Pairs every predicted variable with the same-named truth column.
struct AlignedSeries {
  std::string name;
  metrics::Series pred;
  metrics::Series truth;
};
std::vector<AlignedSeries> align(const std::vector<NamedSeries>& pred, const std::vector<NamedSeries>& truth);

}  // namespace infinite::io

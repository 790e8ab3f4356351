#include "infinite/series_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "infinite/error.hpp"

namespace infinite::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string series_csv(const std::vector<NamedSeries>& columns, std::string_view suffix) {
  std::size_t rows = columns.empty() ? 0 : columns.front().values.size();
  for (const NamedSeries& c : columns) {
    if (c.values.size() != rows) throw Error("length_mismatch", "CSV columns must have equal lengths");
  }
  std::string out = "index";
  for (const NamedSeries& c : columns) {
    out += ',';
    out += c.name;
    out += suffix;
  }
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    out += std::to_string(r);
    for (const NamedSeries& c : columns) {
      out += ',';
      append_number(out, c.values[r]);
    }
    out += '\n';
  }
  return out;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<NamedSeries>& columns,
                      std::string_view suffix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write CSV", path.string());
  out << series_csv(columns, suffix);
}

std::vector<NamedSeries> parse_series_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty()) throw Error("empty_file", "series CSV is empty");

  const auto header = fields(lines.front());
  const bool has_index = !header.empty() && header.front() == "index";
  std::vector<NamedSeries> out;
  for (std::size_t c = has_index ? 1 : 0; c < header.size(); ++c) {
    std::string name(header[c]);
    if (name.size() > 5 && name.ends_with("_pred")) name.resize(name.size() - 5);
    if (name.empty()) throw Error("malformed_header", "series CSV has an empty column name");
    out.push_back({std::move(name), {}});
  }
  if (out.empty()) throw Error("malformed_header", "series CSV has no value columns");

  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto f = fields(lines[l]);
    if (f.size() != header.size()) {
      throw Error("malformed_row", "row has the wrong number of fields", "line " + std::to_string(l + 1));
    }
    for (std::size_t c = has_index ? 1 : 0, k = 0; c < f.size(); ++c, ++k) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f[c].data(), f[c].data() + f[c].size(), v);
      if (f[c].empty() || ec != std::errc{} || ptr != f[c].data() + f[c].size() || !std::isfinite(v)) {
        throw Error("non_numeric_value", "non-numeric value in series CSV",
                    "line " + std::to_string(l + 1) + ", column " + std::string(header[c]));
      }
      out[k].values.push_back(v);
    }
  }
  if (out.front().values.empty()) throw Error("empty_file", "series CSV has no data rows");
  return out;
}

std::vector<NamedSeries> read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read CSV", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_series_csv(buf.str());
}

std::vector<AlignedSeries> align(const std::vector<NamedSeries>& pred, const std::vector<NamedSeries>& truth) {
  std::vector<AlignedSeries> out;
  for (const NamedSeries& p : pred) {
    const auto it = std::find_if(truth.begin(), truth.end(), [&](const NamedSeries& t) { return t.name == p.name; });
    if (it == truth.end()) throw Error("missing_truth_column", "no truth column for variable '" + p.name + "'");
    if (it->values.size() != p.values.size()) {
      throw Error("length_mismatch", "prediction and truth lengths differ for '" + p.name + "'",
                  std::to_string(p.values.size()) + " vs " + std::to_string(it->values.size()));
    }
    out.push_back({p.name, metrics::Series(p.values), metrics::Series(it->values)});
  }
  return out;
}

}  // namespace infinite::io

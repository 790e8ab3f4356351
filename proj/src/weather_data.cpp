#include "infinite/weather_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

#include "infinite/error.hpp"

namespace infinite::forecast {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool matches(const std::string& name, const std::vector<std::string>& aliases) {
  return std::any_of(aliases.begin(), aliases.end(), [&](const std::string& a) { return lower(a) == name; });
}

std::optional<std::size_t> find_column(const std::vector<std::string>& names, const std::vector<std::string>& aliases) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (matches(names[i], aliases)) return i;
  }
  return std::nullopt;
}

}  // namespace

std::pair<double, double> wind_components(double degrees) {
  double d = std::fmod(degrees, 360.0);
  if (d < 0.0) d += 360.0;
  const double rad = d * std::numbers::pi / 180.0;
  return {std::sin(rad), std::cos(rad)};
}

WeatherDataset parse_weather_csv(std::string_view text, const ColumnAliases& aliases) {
  std::vector<std::string_view> lines;
  {
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      pos = end + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  }
  if (lines.empty()) throw Error("empty_file", "weather CSV is empty");

  std::vector<std::string> header;
  for (std::string_view f : split_fields(lines.front())) header.push_back(lower(f));
  if (lines.size() < 2) throw Error("empty_file", "weather CSV has a header but no data rows");

  const auto temp = find_column(header, aliases.temp);
  const auto hum = find_column(header, aliases.hum);
  const auto wind = find_column(header, aliases.windvel);
  if (!temp || !hum || !wind) {
    std::string missing;
    if (!temp) missing += " temp";
    if (!hum) missing += " hum";
    if (!wind) missing += " windvel";
    throw Error("missing_target_columns", "weather CSV lacks target columns:" + missing);
  }
  const auto dir = find_column(header, aliases.wind_dir);
  const auto dsin = find_column(header, aliases.wind_sin);
  const auto dcos = find_column(header, aliases.wind_cos);
  if (dsin.has_value() != dcos.has_value()) {
    throw Error("invalid_columns", "wind direction sine and cosine columns must appear together");
  }

  // Output layout: every kept numeric column in file order, with the
  // direction column expanded in place into its sine and cosine.
  struct Source {
    std::size_t column;
    int part;  // 0 plain value, 1 sine of direction, 2 cosine of direction
  };
  std::vector<Source> sources;
  WeatherDataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (matches(header[c], aliases.ignore)) continue;
    if (dir && c == *dir) {
      sources.push_back({c, 1});
      ds.column_names.push_back(header[c] + "_sin");
      sources.push_back({c, 2});
      ds.column_names.push_back(header[c] + "_cos");
      continue;
    }
    sources.push_back({c, 0});
    ds.column_names.push_back(header[c]);
  }

  const Index n_rows = static_cast<Index>(lines.size() - 1);
  ds.features.resize(n_rows, static_cast<Index>(sources.size()));
  std::vector<double> values(header.size());
  for (Index r = 0; r < n_rows; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    const auto fields = split_fields(lines[static_cast<std::size_t>(r) + 1]);
    if (fields.size() != header.size()) {
      throw Error("malformed_row", "row has the wrong number of fields",
                  "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + ", got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (matches(header[c], aliases.ignore)) continue;
      const std::string_view f = fields[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw Error("non_numeric_value", "non-numeric value in column '" + header[c] + "' at line " +
                                             std::to_string(line_no),
                    "line " + std::to_string(line_no) + ", column " + header[c] + ": '" + std::string(f) + "'");
      }
      values[c] = v;
    }
    for (std::size_t k = 0; k < sources.size(); ++k) {
      const Source& s = sources[k];
      double v = values[s.column];
      if (s.part != 0) {
        const auto [sn, cs] = wind_components(v);
        v = s.part == 1 ? sn : cs;
      }
      ds.features(r, static_cast<Index>(k)) = v;
    }
    if (dsin) {
      const double sn = values[*dsin];
      const double cs = values[*dcos];
      if (std::abs(sn * sn + cs * cs - 1.0) > 1e-9) {
        throw Error("invalid_wind_components", "wind sine/cosine do not lie on the unit circle",
                    "line " + std::to_string(line_no));
      }
    }
  }

  auto out_index = [&](std::size_t column) {
    for (std::size_t k = 0; k < sources.size(); ++k) {
      if (sources[k].column == column) return static_cast<Index>(k);
    }
    throw Error("internal", "target column was dropped");
  };
  ds.target_columns = {out_index(*temp), out_index(*hum), out_index(*wind)};
  ds.target_names = {"temp", "hum", "windvel"};
  return ds;
}

WeatherDataset load_weather_csv(const std::filesystem::path& path, const ColumnAliases& aliases) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read weather CSV", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_weather_csv(buf.str(), aliases);
}

Index train_row_count(Index rows, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("invalid_fraction", "train fraction must lie in (0, 1)");
  }
  // The epsilon absorbs representation error, e.g. 48210 * 0.9.
  return static_cast<Index>(std::floor(static_cast<double>(rows) * train_fraction + 1e-9));
}

TrainTestSplit split_train_test(const MatrixXd& rows, double train_fraction, Index timesteps) {
  const Index n_train = train_row_count(rows.rows(), train_fraction);
  const Index n_test = rows.rows() - n_train;
  if (n_train <= timesteps || n_test <= timesteps || n_test < 1 || n_train < 1) {
    throw Error("too_few_rows", "not enough rows to window both the training and test splits",
                std::to_string(rows.rows()) + " rows, " + std::to_string(timesteps) + " timesteps");
  }
  return {rows.topRows(n_train), rows.bottomRows(n_test)};
}

MinMaxScaler::MinMaxScaler(VectorXd min, VectorXd max) : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw Error("invalid_scaler", "scaler min/max sizes differ");
}

MinMaxScaler MinMaxScaler::fit(const MatrixXd& train, std::vector<std::string>* warnings) {
  if (train.rows() == 0) throw Error("empty_input", "cannot fit a scaler on zero rows");
  MinMaxScaler s(train.colwise().minCoeff().transpose(), train.colwise().maxCoeff().transpose());
  if (warnings) {
    for (Index c = 0; c < train.cols(); ++c) {
      if (s.max_(c) == s.min_(c)) warnings->push_back("column " + std::to_string(c) + " is constant; using unit scale");
    }
  }
  return s;
}

double MinMaxScaler::range(Index column) const {
  const double r = max_(column) - min_(column);
  return r > 0.0 ? r : 1.0;
}

MatrixXd MinMaxScaler::transform(const MatrixXd& m) const {
  if (!fitted()) throw Error("scaler_not_fitted", "scaler has not been fitted");
  if (m.cols() != min_.size()) throw Error("dimension_mismatch", "column count differs from the fitted scaler");
  MatrixXd out(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) out.col(c) = (m.col(c).array() - min_(c)) / range(c);
  return out;
}

MatrixXd MinMaxScaler::inverse_transform(const MatrixXd& m) const {
  if (!fitted()) throw Error("scaler_not_fitted", "scaler has not been fitted");
  if (m.cols() != min_.size()) throw Error("dimension_mismatch", "column count differs from the fitted scaler");
  MatrixXd out(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) out.col(c) = m.col(c).array() * range(c) + min_(c);
  return out;
}

double MinMaxScaler::inverse_column(Index column, double scaled) const {
  if (!fitted()) throw Error("scaler_not_fitted", "scaler has not been fitted");
  return scaled * range(column) + min_(column);
}

MatrixXd Windows::window(Index k) const {
  const Index features = steps.empty() ? 0 : steps.front().rows();
  MatrixXd w(timesteps(), features);
  for (Index t = 0; t < timesteps(); ++t) w.row(t) = steps[static_cast<std::size_t>(t)].col(k).transpose();
  return w;
}

Windows make_windows(const MatrixXd& rows, Index timesteps, std::span<const Index> target_columns) {
  if (timesteps < 1) throw Error("invalid_timesteps", "timesteps must be >= 1");
  if (rows.rows() <= timesteps) {
    throw Error("too_few_rows", "need more rows than timesteps to build a window",
                std::to_string(rows.rows()) + " rows, " + std::to_string(timesteps) + " timesteps");
  }
  const Index count = rows.rows() - timesteps;
  Windows w;
  w.steps.reserve(static_cast<std::size_t>(timesteps));
  for (Index t = 0; t < timesteps; ++t) w.steps.push_back(rows.middleRows(t, count).transpose());
  w.targets.resize(count, static_cast<Index>(target_columns.size()));
  for (std::size_t j = 0; j < target_columns.size(); ++j) {
    if (target_columns[j] < 0 || target_columns[j] >= rows.cols()) {
      throw Error("dimension_mismatch", "target column out of range");
    }
    w.targets.col(static_cast<Index>(j)) = rows.col(target_columns[j]).tail(count);
  }
  return w;
}

}  // namespace infinite::forecast

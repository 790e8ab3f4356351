#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace infinite::forecast {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Column-name aliases used to locate the forecast targets and the wind
/// direction in a weather CSV. Matching is case-insensitive.
struct ColumnAliases {
  std::vector<std::string> temp{"temp", "temperature", "t_avg", "avg_temp"};
  std::vector<std::string> hum{"hum", "humidity", "rh", "relative_humidity"};
  std::vector<std::string> windvel{"windvel", "wind_vel", "wind-vel", "windspeed", "wind_speed"};
  std::vector<std::string> wind_dir{"winddir", "wind_dir", "wdir", "wind_direction", "direction"};
  std::vector<std::string> wind_sin{"winddir_sin", "wind_sin", "wdir_sin"};
  std::vector<std::string> wind_cos{"winddir_cos", "wind_cos", "wdir_cos"};
  /// Non-numeric columns that are dropped, e.g. timestamps.
  std::vector<std::string> ignore{"date", "time", "datetime", "timestamp", "dt"};
};

/// Rows are 10-minute time steps in chronological order; columns are features.
struct WeatherDataset {
  MatrixXd features;
  std::vector<std::string> column_names;
  std::vector<Index> target_columns;
  std::vector<std::string> target_names;

  Index rows() const noexcept { return features.rows(); }
};

WeatherDataset parse_weather_csv(std::string_view text, const ColumnAliases& aliases = {});
WeatherDataset load_weather_csv(const std::filesystem::path& path, const ColumnAliases& aliases = {});

/// Direction in degrees to (sin, cos); 0 and 360 map to the same pair.
std::pair<double, double> wind_components(double degrees);

struct TrainTestSplit {
  MatrixXd train;
  MatrixXd test;
};

/// Number of leading rows kept for training: floor(rows * fraction).
Index train_row_count(Index rows, double train_fraction);

/// Contiguous chronological split. Both parts must hold more than
/// `timesteps` rows so each yields at least one window.
TrainTestSplit split_train_test(const MatrixXd& rows, double train_fraction, Index timesteps = 0);

/// Per-column min-max scaling fitted on training rows only.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(VectorXd min, VectorXd max);

  /// Constant columns fall back to a unit scale; their names are reported
  /// through `warnings` when given.
  static MinMaxScaler fit(const MatrixXd& train, std::vector<std::string>* warnings = nullptr);

  /// Values outside the training range map outside [0, 1]; nothing is clipped.
  MatrixXd transform(const MatrixXd& m) const;
  MatrixXd inverse_transform(const MatrixXd& m) const;
  double inverse_column(Index column, double scaled) const;

  bool fitted() const noexcept { return min_.size() > 0; }
  const VectorXd& min() const noexcept { return min_; }
  const VectorXd& max() const noexcept { return max_; }

 private:
  double range(Index column) const;
  VectorXd min_;
  VectorXd max_;
};

/// Sliding windows stored step-major: steps[t] is features x count and its
/// column k is row k + t of the source matrix.
struct Windows {
  std::vector<MatrixXd> steps;
  /// count x targets; row k holds the target columns of row k + timesteps.
  MatrixXd targets;

  Index count() const noexcept { return targets.rows(); }
  Index timesteps() const noexcept { return static_cast<Index>(steps.size()); }
  /// Window k as timesteps x features.
  MatrixXd window(Index k) const;
};

Windows make_windows(const MatrixXd& rows, Index timesteps, std::span<const Index> target_columns);

}  // namespace infinite::forecast

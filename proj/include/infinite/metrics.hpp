#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace infinite::metrics {

/// Default near-zero mask for MAPE, in the units of the observed variable.
inline constexpr double kDefaultMaskEps = 0.1;

/// A non-empty series of finite values. Construction validates.
class Series {
 public:
  explicit Series(std::vector<double> values);
  Series(std::initializer_list<double> values) : Series(std::vector<double>(values)) {}

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const Series&, const Series&) = default;

 private:
  std::vector<double> values_;
};

struct MapeResult {
  /// Mean |pred-obs|/|obs| * 100 over every point. +inf when some obs is
  /// exactly zero with a nonzero error.
  double raw_pct = 0.0;
  /// Same mean over points with |obs| >= mask_eps; empty when nothing survives.
  std::optional<double> masked_pct;
  std::size_t n_masked = 0;
};

struct FractionalResult {
  /// Empty when every point had pred + obs == 0.
  std::optional<double> mfe_pct;
  std::optional<double> mfb_pct;
  std::size_t n_excluded = 0;
};

/// The eight error metrics for one variable. Statistics that are undefined
/// for the input (constant series, everything masked) are empty optionals.
struct MetricReport {
  double mse = 0.0;
  double mae = 0.0;
  double mb = 0.0;
  double mape_pct = 0.0;
  std::optional<double> mape_masked_pct;
  std::optional<double> mfe_pct;
  std::optional<double> mfb_pct;
  std::optional<double> r2;
  std::optional<double> pearson_r;
  std::size_t n = 0;
  std::size_t n_masked = 0;
  std::size_t n_fractional_excluded = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

double mse(const Series& pred, const Series& obs);
double mae(const Series& pred, const Series& obs);

/// Mean of (pred - obs): positive means the model overpredicts.
double mean_bias(const Series& pred, const Series& obs);

MapeResult mape(const Series& pred, const Series& obs, double mask_eps = kDefaultMaskEps);

/// Factor-2 fractional error and bias, in percent:
///   MFB = mean( (p - o) / ((p + o) / 2) ) * 100
///   MFE = mean( |p - o| / ((p + o) / 2) ) * 100
/// Points with p + o == 0 are excluded and counted.
FractionalResult mfe_mfb(const Series& pred, const Series& obs);

/// 1 - SS_res / SS_tot. Empty for constant observations.
std::optional<double> r_squared(const Series& pred, const Series& obs);

/// Sample Pearson correlation. Empty when either series is constant.
std::optional<double> pearson_r(const Series& pred, const Series& obs);

MetricReport metric_report(const Series& pred, const Series& obs,
                           double mask_eps = kDefaultMaskEps);

}  // namespace infinite::metrics

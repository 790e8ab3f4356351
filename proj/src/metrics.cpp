#include "infinite/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "infinite/error.hpp"

namespace infinite::metrics {

Series::Series(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error("empty_series", "series must contain at least one value");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error("non_finite_value", "series contains a non-finite value",
                  "index " + std::to_string(i));
    }
  }
}

namespace {

void require_same_length(const Series& pred, const Series& obs) {
  if (pred.size() != obs.size()) {
    throw Error("length_mismatch", "prediction and observation lengths differ",
                std::to_string(pred.size()) + " vs " + std::to_string(obs.size()));
  }
}

double mean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

double mse(const Series& pred, const Series& obs) {
  require_same_length(pred, obs);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - obs[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double mae(const Series& pred, const Series& obs) {
  require_same_length(pred, obs);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - obs[i]);
  return sum / static_cast<double>(pred.size());
}

double mean_bias(const Series& pred, const Series& obs) {
  require_same_length(pred, obs);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += pred[i] - obs[i];
  return sum / static_cast<double>(pred.size());
}

MapeResult mape(const Series& pred, const Series& obs, double mask_eps) {
  require_same_length(pred, obs);
  if (!(mask_eps >= 0.0)) throw Error("invalid_mask_eps", "mask_eps must be >= 0");

  MapeResult out;
  double raw_sum = 0.0;
  bool raw_infinite = false;
  double kept_sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double err = std::abs(pred[i] - obs[i]);
    const double denom = std::abs(obs[i]);
    if (denom == 0.0) {
      // 0/0 is a perfect prediction of zero; x/0 cannot be expressed.
      if (err != 0.0) raw_infinite = true;
    } else {
      raw_sum += err / denom;
    }
    // Exact zeros are always masked so the masked mean stays finite.
    if (denom == 0.0 || denom < mask_eps) {
      ++out.n_masked;
    } else {
      kept_sum += err / denom;
      ++kept;
    }
  }
  out.raw_pct = raw_infinite ? std::numeric_limits<double>::infinity()
                             : raw_sum / static_cast<double>(pred.size()) * 100.0;
  if (kept > 0) out.masked_pct = kept_sum / static_cast<double>(kept) * 100.0;
  return out;
}

FractionalResult mfe_mfb(const Series& pred, const Series& obs) {
  require_same_length(pred, obs);
  FractionalResult out;
  double fe = 0.0;
  double fb = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double half_sum = (pred[i] + obs[i]) / 2.0;
    if (half_sum == 0.0) {
      ++out.n_excluded;
      continue;
    }
    const double d = pred[i] - obs[i];
    fb += d / half_sum;
    fe += std::abs(d) / std::abs(half_sum);
    ++kept;
  }
  if (kept > 0) {
    out.mfe_pct = fe / static_cast<double>(kept) * 100.0;
    out.mfb_pct = fb / static_cast<double>(kept) * 100.0;
  }
  return out;
}

std::optional<double> r_squared(const Series& pred, const Series& obs) {
  require_same_length(pred, obs);
  const double obs_mean = mean(obs.values());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = obs[i] - pred[i];
    const double t = obs[i] - obs_mean;
    ss_res += r * r;
    ss_tot += t * t;
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

std::optional<double> pearson_r(const Series& pred, const Series& obs) {
  require_same_length(pred, obs);
  const double mp = mean(pred.values());
  const double mo = mean(obs.values());
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i] - mp;
    const double dy = obs[i] - mo;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  // Rounding can push |r| a hair past 1 for perfectly linear data.
  return std::fmax(-1.0, std::fmin(1.0, r));
}

MetricReport metric_report(const Series& pred, const Series& obs, double mask_eps) {
  require_same_length(pred, obs);
  MetricReport r;
  r.n = pred.size();
  r.mse = mse(pred, obs);
  r.mae = mae(pred, obs);
  r.mb = mean_bias(pred, obs);
  const MapeResult m = mape(pred, obs, mask_eps);
  r.mape_pct = m.raw_pct;
  r.mape_masked_pct = m.masked_pct;
  r.n_masked = m.n_masked;
  const FractionalResult f = mfe_mfb(pred, obs);
  r.mfe_pct = f.mfe_pct;
  r.mfb_pct = f.mfb_pct;
  r.n_fractional_excluded = f.n_excluded;
  r.r2 = r_squared(pred, obs);
  r.pearson_r = pearson_r(pred, obs);
  return r;
}

}  // namespace infinite::metrics

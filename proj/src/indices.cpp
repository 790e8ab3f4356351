#include "infinite/indices.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "infinite/error.hpp"

namespace infinite::indices {

void IndexConfig::validate() const {
  if (!(art1_s > 0.0)) throw Error("invalid_config", "art1_s must be > 0");
  if (!(art2_s > art1_s)) throw Error("invalid_config", "art2_s must be greater than art1_s");
  if (!(m > 0.0)) throw Error("invalid_config", "m must be > 0");
  if (w_e < 0.0 || w_c < 0.0 || w_a < 0.0) {
    throw Error("invalid_config", "weights must be non-negative");
  }
  const double sum = w_e + w_c + w_a;
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error("invalid_weights", "weights must sum to 1", "sum = " + std::to_string(sum));
  }
  if (!(mape_clamp_pct > 0.0)) throw Error("invalid_config", "mape_clamp_pct must be > 0");
  if (!(mask_eps >= 0.0)) throw Error("invalid_config", "mask_eps must be >= 0");
}

double artpq(std::span<const double> response_times_s) {
  if (response_times_s.empty()) {
    throw Error("no_response_times", "average response time needs at least one answered query");
  }
  double sum = 0.0;
  for (double t : response_times_s) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw Error("invalid_response_time", "response times must be finite and > 0");
    }
    sum += t;
  }
  return sum / static_cast<double>(response_times_s.size());
}

double e_sbr(int sb_count, int total_queries) {
  if (total_queries < 1) throw Error("no_queries", "total queries must be >= 1");
  if (sb_count < 0 || sb_count > total_queries) {
    throw Error("invalid_sb_count", "server-busy count must lie in [0, total queries]");
  }
  return 1.0 - static_cast<double>(sb_count) / static_cast<double>(total_queries);
}

double e_art(double artpq_s, const IndexConfig& cfg) {
  if (artpq_s <= cfg.art1_s) return 1.0;
  if (artpq_s < cfg.art2_s) return 0.5;
  return 0.0;
}

double efficiency(double e_sbr, double e_art) { return (e_sbr + e_art) / 2.0; }

double consistency(int attempts_q, double m) {
  if (attempts_q < 1) throw Error("invalid_attempts", "attempt count must be >= 1");
  if (!(m > 0.0)) throw Error("invalid_config", "m must be > 0");
  return 1.0 / (1.0 + m * std::log(static_cast<double>(attempts_q)));
}

double accuracy(double mape_av_pct, double clamp_pct) {
  if (!(mape_av_pct >= 0.0)) throw Error("invalid_mape", "MAPE must be >= 0");
  return 1.0 - std::min(mape_av_pct, clamp_pct) / 100.0;
}

double ini(double e, double c, double a, const IndexConfig& cfg) {
  cfg.validate();
  for (double v : {e, c, a}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("index_out_of_range", "component indices must lie in [0, 1]");
  }
  return cfg.w_e * e + cfg.w_c * c + cfg.w_a * a;
}

double mape_average(std::span<const double> per_variable_mape_pct) {
  if (per_variable_mape_pct.empty()) throw Error("no_mape", "need at least one MAPE value");
  double sum = 0.0;
  for (double v : per_variable_mape_pct) sum += v;
  return sum / static_cast<double>(per_variable_mape_pct.size());
}

SessionSummary summarize(const SessionStats& stats, const IndexConfig& cfg) {
  if (stats.attempts_q < 1) throw Error("invalid_attempts", "attempt count must be >= 1");
  if (stats.total_queries_n < stats.attempts_q) {
    throw Error("invalid_stats", "total queries must be >= attempts");
  }
  std::vector<double> times = stats.response_times_s;
  if (cfg.count_sb_latency) times.insert(times.end(), stats.sb_times_s.begin(), stats.sb_times_s.end());
  return SessionSummary{stats.attempts_q, stats.total_queries_n, stats.sb_count, artpq(times)};
}

InIReport evaluate(const SessionSummary& s, double mape_av_pct, const IndexConfig& cfg) {
  cfg.validate();
  if (s.attempts_q < 1) throw Error("invalid_attempts", "attempt count must be >= 1");
  if (s.total_queries_n < s.attempts_q) throw Error("invalid_stats", "total queries must be >= attempts");
  if (!(s.artpq_s >= 0.0)) throw Error("invalid_response_time", "ARTpQ must be >= 0");

  InIReport r;
  r.artpq_s = s.artpq_s;
  r.mape_av_pct = mape_av_pct;
  r.e_sbr = e_sbr(s.sb_count, s.total_queries_n);
  r.e_art = e_art(s.artpq_s, cfg);
  r.e = efficiency(r.e_sbr, r.e_art);
  r.c = consistency(s.attempts_q, cfg.m);
  r.a = accuracy(mape_av_pct, cfg.mape_clamp_pct);
  r.ini = ini(r.e, r.c, r.a, cfg);
  return r;
}

InIReport evaluate(const SessionStats& stats, double mape_av_pct, const IndexConfig& cfg) {
  return evaluate(summarize(stats, cfg), mape_av_pct, cfg);
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

}  // namespace infinite::indices

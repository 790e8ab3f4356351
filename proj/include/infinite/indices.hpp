#pragma once

#include <span>
#include <vector>

namespace infinite::indices {

/// Tunables of the inference index. Thresholds are in seconds.
struct IndexConfig {
  double art1_s = 10.0;
  double art2_s = 30.0;
  /// Consistency decay multiplier applied to ln(Q).
  double m = 1.0;
  double w_e = 1.0 / 3.0;
  double w_c = 1.0 / 3.0;
  double w_a = 1.0 / 3.0;
  /// MAPE values above this saturate the accuracy index at zero.
  double mape_clamp_pct = 100.0;
  double mask_eps = 0.1;
  /// Include server-busy round trips in the average response time.
  bool count_sb_latency = false;

  /// Throws infinite::Error naming the violated constraint.
  void validate() const;
};

/// Counts taken from a recorded session.
struct SessionStats {
  int attempts_q = 0;
  int total_queries_n = 0;
  int sb_count = 0;
  /// Latencies of answered queries only.
  std::vector<double> response_times_s;
  /// Latencies of server-busy queries; used only with count_sb_latency.
  std::vector<double> sb_times_s;

  friend bool operator==(const SessionStats&, const SessionStats&) = default;
};

/// The row shape used when the average response time is already known.
struct SessionSummary {
  int attempts_q = 0;
  int total_queries_n = 0;
  int sb_count = 0;
  double artpq_s = 0.0;
};

struct InIReport {
  double e_sbr = 0.0;
  double e_art = 0.0;
  double e = 0.0;
  double c = 0.0;
  double a = 0.0;
  double ini = 0.0;
  double artpq_s = 0.0;
  double mape_av_pct = 0.0;

  friend bool operator==(const InIReport&, const InIReport&) = default;
};

/// Average response time per query, seconds.
double artpq(std::span<const double> response_times_s);

double e_sbr(int sb_count, int total_queries);

/// Step index over the response-time thresholds: 1, 0.5 or 0.
double e_art(double artpq_s, const IndexConfig& cfg = {});

double efficiency(double e_sbr, double e_art);

/// 1 / (1 + m ln Q)
double consistency(int attempts_q, double m = 1.0);

/// 1 - min(MAPE, clamp) / 100
double accuracy(double mape_av_pct, double clamp_pct = 100.0);

double ini(double e, double c, double a, const IndexConfig& cfg = {});

/// Arithmetic mean of per-variable MAPEs (percent).
double mape_average(std::span<const double> per_variable_mape_pct);

SessionSummary summarize(const SessionStats& stats, const IndexConfig& cfg = {});

InIReport evaluate(const SessionSummary& summary, double mape_av_pct, const IndexConfig& cfg = {});
InIReport evaluate(const SessionStats& stats, double mape_av_pct, const IndexConfig& cfg = {});

/// Round half away from zero to the given number of decimals, for display.
double round_to(double value, int decimals);

}  // namespace infinite::indices

#pragma once

// Brute-force reference implementations used only by tests. Written as
// plain loops in long double, sharing no code with the library.

#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline long double mean_of(const Vec& v) {
  long double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

inline double mse(const Vec& p, const Vec& o) {
  long double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += (static_cast<long double>(p[i]) - o[i]) * (static_cast<long double>(p[i]) - o[i]);
  return static_cast<double>(s / p.size());
}

inline double mae(const Vec& p, const Vec& o) {
  long double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += fabsl(static_cast<long double>(p[i]) - o[i]);
  return static_cast<double>(s / p.size());
}

inline double mb(const Vec& p, const Vec& o) {
  long double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += static_cast<long double>(p[i]) - o[i];
  return static_cast<double>(s / p.size());
}

inline double mape(const Vec& p, const Vec& o) {
  long double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += fabsl((static_cast<long double>(p[i]) - o[i]) / o[i]);
  return static_cast<double>(100 * s / p.size());
}

inline double mfe(const Vec& p, const Vec& o) {
  long double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += 2 * fabsl(static_cast<long double>(p[i]) - o[i]) / (static_cast<long double>(p[i]) + o[i]);
  return static_cast<double>(100 * s / p.size());
}

inline double mfb(const Vec& p, const Vec& o) {
  long double s = 0;
  for (size_t i = 0; i < p.size(); ++i) s += 2 * (static_cast<long double>(p[i]) - o[i]) / (static_cast<long double>(p[i]) + o[i]);
  return static_cast<double>(100 * s / p.size());
}

inline double r2(const Vec& p, const Vec& o) {
  const long double m = mean_of(o);
  long double res = 0, tot = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    res += (static_cast<long double>(o[i]) - p[i]) * (static_cast<long double>(o[i]) - p[i]);
    tot += (o[i] - m) * (o[i] - m);
  }
  return static_cast<double>(1 - res / tot);
}

inline double pearson(const Vec& p, const Vec& o) {
  const long double mp = mean_of(p), mo = mean_of(o);
  long double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    sxy += (p[i] - mp) * (o[i] - mo);
    sxx += (p[i] - mp) * (p[i] - mp);
    syy += (o[i] - mo) * (o[i] - mo);
  }
  return static_cast<double>(sxy / sqrtl(sxx * syy));
}

inline bool close_rel(double got, double want, double rel) {
  return std::fabs(got - want) <= rel * std::max(1.0, std::fabs(want));
}

}  // namespace oracle

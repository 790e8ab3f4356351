#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "infinite/error.hpp"
#include "infinite/metrics.hpp"
#include "oracle.hpp"

using namespace infinite::metrics;
using doctest::Approx;

namespace {

std::vector<double> random_positive(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(0.5, 50.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("mse worked examples") {
  CHECK(mse({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(mse({2, 4}, {1, 2}) == 2.5);
  CHECK(mse({1, 2, 3}, {3, 2, 1}) == Approx(8.0 / 3.0));
}

TEST_CASE("mae worked examples") {
  CHECK(mae({5, 5}, {5, 5}) == 0.0);
  CHECK(mae({2, 4}, {1, 2}) == 1.5);
  CHECK(mae({1, 2, 3}, {3, 2, 1}) == Approx(4.0 / 3.0));
}

TEST_CASE("mean bias is pred minus obs") {
  CHECK(mean_bias({1, 2}, {1, 2}) == 0.0);
  CHECK(mean_bias({2, 4}, {1, 2}) == 1.5);
  CHECK(mean_bias({1, 2, 3}, {3, 2, 1}) == 0.0);
}

TEST_CASE("mape raw and masked") {
  auto same = mape({1, 2}, {1, 2});
  CHECK(same.raw_pct == 0.0);
  REQUIRE(same.masked_pct);
  CHECK(*same.masked_pct == 0.0);

  CHECK(mape({2, 4}, {1, 2}, 0.0).raw_pct == 100.0);

  SUBCASE("near-zero observation blows up raw only") {
    auto r = mape({1.0, 2.0, 3.0}, {1e-9, 2.0, 3.0}, 0.1);
    CHECK(r.raw_pct > 1e8);
    REQUIRE(r.masked_pct);
    CHECK(*r.masked_pct < 1e3);
    CHECK(r.n_masked == 1);
  }
  SUBCASE("exact zero observation is infinite, never NaN") {
    auto r = mape({1.0, 2.0}, {0.0, 2.0}, 0.0);
    CHECK(std::isinf(r.raw_pct));
    CHECK_FALSE(std::isnan(r.raw_pct));
    REQUIRE(r.masked_pct);
    CHECK(*r.masked_pct == 0.0);
  }
  SUBCASE("zero observation with zero error contributes zero") {
    CHECK(mape({0.0, 2.0}, {0.0, 2.0}, 0.0).raw_pct == 0.0);
  }
  SUBCASE("everything masked leaves masked undefined") {
    auto r = mape({1.0, 1.0}, {0.01, 0.02}, 0.1);
    CHECK_FALSE(r.masked_pct.has_value());
    CHECK(r.n_masked == 2);
  }
}

TEST_CASE("mfe and mfb") {
  auto same = mfe_mfb({1, 2}, {1, 2});
  CHECK(*same.mfe_pct == 0.0);
  CHECK(*same.mfb_pct == 0.0);

  auto r = mfe_mfb({2, 4}, {1, 2});
  CHECK(*r.mfe_pct == Approx(200.0 / 3.0));
  CHECK(*r.mfb_pct == Approx(200.0 / 3.0));

  auto one = mfe_mfb({1}, {3});
  CHECK(*one.mfe_pct == Approx(100.0));
  CHECK(*one.mfb_pct == Approx(-100.0));

  auto ex = mfe_mfb({1, -2}, {1, 2});
  CHECK(ex.n_excluded == 1);
  CHECK(*ex.mfe_pct == 0.0);

  auto none = mfe_mfb({-1}, {1});
  CHECK_FALSE(none.mfe_pct.has_value());
  CHECK_FALSE(none.mfb_pct.has_value());
}

TEST_CASE("r squared") {
  CHECK(*r_squared({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(*r_squared({2, 4}, {1, 2}) == Approx(-9.0));
  CHECK(*r_squared({2, 2, 2}, {1, 2, 3}) == Approx(0.0));
  CHECK_FALSE(r_squared({1, 2, 3}, {2, 2, 2}).has_value());
}

TEST_CASE("pearson") {
  CHECK(*pearson_r({2, 4}, {1, 2}) == Approx(1.0));
  CHECK(*pearson_r({1, 2, 3}, {3, 2, 1}) == Approx(-1.0));
  CHECK(*pearson_r({1, 5, 2}, {1, 5, 2}) == Approx(1.0));
  CHECK_FALSE(pearson_r({1, 1, 1}, {1, 2, 3}).has_value());
  CHECK_FALSE(pearson_r({1, 2, 3}, {4, 4, 4}).has_value());
}

TEST_CASE("metric report assembles the individual metrics") {
  auto r = metric_report({2, 4}, {1, 2});
  CHECK(r.mse == 2.5);
  CHECK(r.mae == 1.5);
  CHECK(r.mb == 1.5);
  CHECK(r.mape_pct == 100.0);
  CHECK(*r.mape_masked_pct == 100.0);
  CHECK(*r.mfe_pct == Approx(200.0 / 3.0));
  CHECK(*r.r2 == Approx(-9.0));
  CHECK(*r.pearson_r == Approx(1.0));
  CHECK(r.n == 2);

  auto id = metric_report({3, 1, 4}, {3, 1, 4});
  CHECK(id.mse == 0.0);
  CHECK(id.mae == 0.0);
  CHECK(id.mb == 0.0);
  CHECK(id.mape_pct == 0.0);
  CHECK(*id.mfb_pct == 0.0);
  CHECK(*id.r2 == 1.0);
  CHECK(*id.pearson_r == Approx(1.0));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(Series(std::vector<double>{}), infinite::Error);
  CHECK_THROWS_AS(Series({1.0, std::numeric_limits<double>::quiet_NaN()}), infinite::Error);
  CHECK_THROWS_AS(Series({std::numeric_limits<double>::infinity()}), infinite::Error);
  try {
    mse({1, 2}, {1, 2, 3});
    FAIL("expected length mismatch");
  } catch (const infinite::Error& e) {
    CHECK(e.code() == "length_mismatch");
  }
}

TEST_CASE("metrics agree with the brute-force oracle on random series") {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> len(2, 200);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = len(rng);
    const auto o = random_positive(rng, n);
    const auto p = random_positive(rng, n);
    const Series ps(p), os(o);
    const auto r = metric_report(ps, os, 0.0);
    CAPTURE(trial);
    CHECK(oracle::close_rel(r.mse, oracle::mse(p, o), 1e-10));
    CHECK(oracle::close_rel(r.mae, oracle::mae(p, o), 1e-10));
    CHECK(oracle::close_rel(r.mb, oracle::mb(p, o), 1e-10));
    CHECK(oracle::close_rel(r.mape_pct, oracle::mape(p, o), 1e-10));
    CHECK(oracle::close_rel(*r.mfe_pct, oracle::mfe(p, o), 1e-10));
    CHECK(oracle::close_rel(*r.mfb_pct, oracle::mfb(p, o), 1e-10));
    CHECK(oracle::close_rel(*r.r2, oracle::r2(p, o), 1e-10));
    CHECK(oracle::close_rel(*r.pearson_r, oracle::pearson(p, o), 1e-10));
  }
}

TEST_CASE("pearson is invariant under positive affine maps") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-1000.0, 1000.0);
  const auto o = random_positive(rng, 150);
  const auto p = random_positive(rng, 150);
  const double base = *pearson_r(Series(p), Series(o));
  for (int k = 0; k < 100; ++k) {
    const double a = scale(rng), b = shift(rng);
    std::vector<double> q(p);
    for (auto& x : q) x = a * x + b;
    CHECK(*pearson_r(Series(q), Series(o)) == Approx(base).epsilon(1e-9));
    for (auto& x : q) x = -x;
    CHECK(*pearson_r(Series(q), Series(o)) == Approx(-base).epsilon(1e-9));
  }
}

TEST_CASE("property: errors are non-negative and bounded") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 200; ++k) {
    const auto o = random_positive(rng, 30);
    const auto p = random_positive(rng, 30);
    const auto r = metric_report(Series(p), Series(o));
    CHECK(r.mse >= 0.0);
    CHECK(r.mae >= 0.0);
    CHECK(r.mae * r.mae <= r.mse * (1 + 1e-12));
    CHECK(std::fabs(r.mb) <= r.mae * (1 + 1e-12));
    CHECK(*r.mfe_pct <= 200.0);
    CHECK(std::fabs(*r.mfb_pct) <= *r.mfe_pct * (1 + 1e-12));
    CHECK(*r.r2 <= 1.0);
    CHECK(std::fabs(*r.pearson_r) <= 1.0);
  }
}

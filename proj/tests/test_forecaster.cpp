#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "infinite/error.hpp"
#include "infinite/lstm.hpp"
#include "infinite/metrics.hpp"
#include "infinite/synthetic.hpp"
#include "infinite/weather_data.hpp"

using namespace infinite::forecast;
using Eigen::MatrixXd;

namespace {

std::string code_of(auto&& f) {
  try {
    f();
  } catch (const infinite::Error& e) {
    return e.code();
  }
  return "";
}

LstmParams random_params(Index in, Index hid, Index out, std::mt19937_64& rng, double scale = 0.8) {
  LstmParams p = LstmParams::zeros(in, hid, out);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (MatrixXd* t : p.tensors()) {
    for (Index k = 0; k < t->size(); ++k) t->data()[k] = u(rng);
  }
  return p;
}

// Step-by-step scalar evaluation of one window, written without Eigen
// algebra.
std::vector<double> scalar_forward(const LstmParams& p, Activation act, const MatrixXd& window) {
  const Index H = p.hidden(), F = p.inputs(), T = p.targets();
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto fn = [act](double x) { return act == Activation::relu ? (x > 0 ? x : 0.0) : std::tanh(x); };
  std::vector<double> h(H, 0.0), c(H, 0.0);
  for (Index t = 0; t < window.rows(); ++t) {
    std::vector<double> hn(H), cn(H);
    for (Index j = 0; j < H; ++j) {
      double zi = p.b_i(j, 0), zf = p.b_f(j, 0), zo = p.b_o(j, 0), zg = p.b_g(j, 0);
      for (Index k = 0; k < F; ++k) {
        zi += p.w_i(j, k) * window(t, k);
        zf += p.w_f(j, k) * window(t, k);
        zo += p.w_o(j, k) * window(t, k);
        zg += p.w_g(j, k) * window(t, k);
      }
      for (Index k = 0; k < H; ++k) {
        zi += p.u_i(j, k) * h[k];
        zf += p.u_f(j, k) * h[k];
        zo += p.u_o(j, k) * h[k];
        zg += p.u_g(j, k) * h[k];
      }
      cn[j] = sig(zf) * c[j] + sig(zi) * fn(zg);
      hn[j] = sig(zo) * fn(cn[j]);
    }
    h = hn;
    c = cn;
  }
  std::vector<double> y(T);
  for (Index r = 0; r < T; ++r) {
    y[r] = p.b_out(r, 0);
    for (Index j = 0; j < H; ++j) y[r] += p.w_out(r, j) * h[j];
  }
  return y;
}

double loss_of(const LstmParams& p, Activation act, const std::vector<MatrixXd>& steps, const MatrixXd& y) {
  return mse_loss(lstm_forward(p, act, steps).prediction, y);
}

}  // namespace

TEST_CASE("wind direction components") {
  const auto [s90, c90] = wind_components(90.0);
  CHECK(s90 == doctest::Approx(1.0));
  CHECK(std::fabs(c90) < 1e-12);
  const auto a = wind_components(0.0);
  const auto b = wind_components(360.0);
  CHECK(a == b);
  CHECK(a.first == 0.0);
  CHECK(a.second == 1.0);
  for (double d = 0; d < 720; d += 7.5) {
    const auto [s, c] = wind_components(d);
    CHECK(s * s + c * c == doctest::Approx(1.0));
  }
}

TEST_CASE("weather csv ingestion") {
  const std::string csv =
      "Time,Temp,Low_Temp,Hum,WindVel,WindDir\n"
      "00:00,10.5,9.0,80,2.0,90\n"
      "00:10,10.7,9.1,79,2.5,360\n"
      "00:20,10.9,9.3,78,3.0,0\n";
  const WeatherDataset ds = parse_weather_csv(csv);
  CHECK(ds.rows() == 3);
  CHECK(ds.column_names == std::vector<std::string>{"temp", "low_temp", "hum", "windvel", "winddir_sin", "winddir_cos"});
  CHECK(ds.target_names == std::vector<std::string>{"temp", "hum", "windvel"});
  CHECK(ds.target_columns == std::vector<Index>{0, 2, 3});
  CHECK(ds.features(0, 4) == doctest::Approx(1.0));
  CHECK(ds.features(1, 4) == ds.features(2, 4));
  CHECK(ds.features(1, 5) == 1.0);

  SUBCASE("non-numeric cell names row and column") {
    const std::string bad = "temp,low_temp,hum,windvel,winddir\n1,2,3,4,5\n1,n/a,3,4,5\n";
    try {
      parse_weather_csv(bad);
      FAIL("expected error");
    } catch (const infinite::Error& e) {
      CHECK(e.code() == "non_numeric_value");
      const std::string msg = std::string(e.what()) + " " + e.detail();
      CHECK(msg.find("3") != std::string::npos);
      CHECK(msg.find("low_temp") != std::string::npos);
    }
  }
  SUBCASE("missing target column") {
    CHECK(code_of([] { parse_weather_csv("temp,hum\n1,2\n"); }) != "");
  }
  SUBCASE("precomputed components must lie on the unit circle") {
    CHECK_NOTHROW(parse_weather_csv("temp,hum,windvel,winddir_sin,winddir_cos\n1,2,3,0,1\n"));
    CHECK_THROWS_AS(parse_weather_csv("temp,hum,windvel,winddir_sin,winddir_cos\n1,2,3,0.5,0.5\n"), infinite::Error);
  }
}

TEST_CASE("chronological split") {
  CHECK(train_row_count(48'210, 0.9) == 43'389);
  CHECK(48'210 - train_row_count(48'210, 0.9) == 4'821);
  CHECK(train_row_count(10, 0.9) == 9);
  MatrixXd m(10, 2);
  for (Index r = 0; r < 10; ++r) m.row(r) << r, -r;
  const auto s = split_train_test(m, 0.9);
  CHECK(s.train.rows() == 9);
  CHECK(s.test.rows() == 1);
  CHECK(s.test(0, 0) == 9.0);
  CHECK_THROWS_AS(split_train_test(m, 0.9, 3), infinite::Error);
  CHECK_THROWS_AS(split_train_test(m, 1.0), infinite::Error);
}

TEST_CASE("min-max scaler") {
  MatrixXd train(3, 2);
  train << 0, 7, 5, 7, 10, 7;
  std::vector<std::string> warnings;
  const MinMaxScaler sc = MinMaxScaler::fit(train, &warnings);
  const MatrixXd t = sc.transform(train);
  CHECK(t(0, 0) == 0.0);
  CHECK(t(1, 0) == 0.5);
  CHECK(t(2, 0) == 1.0);
  CHECK(warnings.size() == 1);
  CHECK(t(0, 1) == 0.0);
  MatrixXd probe(1, 2);
  probe << 12, 7;
  CHECK(sc.transform(probe)(0, 0) == doctest::Approx(1.2));
  CHECK(sc.inverse_transform(sc.transform(train)).isApprox(train));
  CHECK(sc.inverse_column(0, 0.25) == 2.5);
}

TEST_CASE("sliding windows") {
  MatrixXd m(10, 3);
  for (Index r = 0; r < 10; ++r) m.row(r) << r, 10 * r, 100 * r;
  const std::vector<Index> targets{0, 2};
  const Windows w = make_windows(m, 3, targets);
  CHECK(w.count() == 7);
  CHECK(w.timesteps() == 3);
  CHECK(w.targets(0, 0) == 3.0);
  CHECK(w.targets(0, 1) == 300.0);
  CHECK(w.targets(6, 0) == 9.0);
  const MatrixXd win = w.window(2);
  CHECK(win.rows() == 3);
  CHECK(win(0, 0) == 2.0);
  CHECK(win(2, 1) == 40.0);
  CHECK(w.steps[1](2, 4) == 500.0);
  MatrixXd big = MatrixXd::Zero(4'821, 3);
  CHECK(make_windows(big, 3, targets).count() == 4'818);
}

TEST_CASE("forward pass matches a scalar-loop evaluation") {
  std::mt19937_64 rng(11);
  for (Activation act : {Activation::relu, Activation::tanh}) {
    for (int trial = 0; trial < 20; ++trial) {
      const LstmParams p = random_params(2, 2, 3, rng);
      MatrixXd window(3, 2);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (Index k = 0; k < window.size(); ++k) window.data()[k] = u(rng);
      const auto want = scalar_forward(p, act, window);
      const MatrixXd got = lstm_forward(p, act, window).prediction;
      for (Index r = 0; r < 3; ++r) CHECK(std::fabs(got(r, 0) - want[r]) < 1e-12);
    }
  }
}

TEST_CASE("zero weights predict the output bias") {
  LstmParams p = LstmParams::zeros(4, 5, 3);
  p.b_out << 0.1, -0.2, 0.3;
  const MatrixXd window = MatrixXd::Random(3, 4);
  CHECK(lstm_forward(p, Activation::relu, window).prediction.isApprox(p.b_out));
}

TEST_CASE("batched forward equals per-window forward") {
  std::mt19937_64 rng(5);
  const LstmParams p = random_params(3, 4, 2, rng);
  MatrixXd rows = MatrixXd::Random(12, 3);
  const std::vector<Index> targets{0, 1};
  const Windows w = make_windows(rows, 3, targets);
  const MatrixXd batch = lstm_forward(p, Activation::tanh, w.steps).prediction;
  for (Index k = 0; k < w.count(); ++k) {
    const MatrixXd one = lstm_forward(p, Activation::tanh, w.window(k)).prediction;
    CHECK((batch.col(k) - one).norm() < 1e-13);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (Activation act : {Activation::relu, Activation::tanh}) {
    for (int trial = 0; trial < 50; ++trial) {
      LstmParams p = random_params(2, 2, 3, rng);
      std::vector<MatrixXd> steps(3, MatrixXd(2, 4));
      for (auto& s : steps)
        for (Index k = 0; k < s.size(); ++k) s.data()[k] = u(rng);
      MatrixXd y(3, 4);
      for (Index k = 0; k < y.size(); ++k) y.data()[k] = u(rng);

      const ForwardTrace tr = lstm_forward(p, act, steps);
      const LstmParams g = lstm_gradients(p, act, steps, tr, y);
      const auto pt = p.tensors();
      const auto gt = g.tensors();
      for (std::size_t t = 0; t < pt.size(); ++t) {
        for (Index k = 0; k < pt[t]->size(); ++k) {
          double& w = pt[t]->data()[k];
          const double keep = w;
          w = keep + 1e-5;
          const double up = loss_of(p, act, steps, y);
          w = keep - 1e-5;
          const double down = loss_of(p, act, steps, y);
          w = keep;
          const double numeric = (up - down) / 2e-5;
          const double analytic = gt[t]->data()[k];
          const double rel = std::fabs(numeric - analytic) / std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
          worst = std::max(worst, rel);
        }
      }
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("adam takes bias-corrected steps") {
  LstmParams p = LstmParams::zeros(1, 1, 1);
  LstmParams g = LstmParams::zeros(1, 1, 1);
  g.b_out(0, 0) = 0.5;
  AdamOptimizer opt(p, 0.001, 0.9, 0.999, 1e-8);
  opt.step(p, g);
  // First step moves by lr * g / (|g| + eps) ≈ lr.
  CHECK(p.b_out(0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(p.w_i(0, 0) == 0.0);
  CHECK(opt.steps_taken() == 1);
}

TEST_CASE("glorot initialization is seeded") {
  const auto a = LstmParams::glorot(4, 10, 3, 42);
  const auto b = LstmParams::glorot(4, 10, 3, 42);
  const auto c = LstmParams::glorot(4, 10, 3, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.b_f.isConstant(1.0));
  CHECK(a.b_i.isZero());
  const double limit = std::sqrt(6.0 / (4 + 10));
  CHECK(a.w_i.cwiseAbs().maxCoeff() <= limit);
  CHECK(a.parameter_count() == 4 * (10 * 4 + 10 * 10 + 10) + 3 * 10 + 3);
}

TEST_CASE("single-feature sinusoid: loss falls and test error is small") {
  const Index n = 2'000;
  MatrixXd rows(n, 1);
  for (Index r = 0; r < n; ++r) rows(r, 0) = 10.0 + 5.0 * std::sin(2 * std::numbers::pi * r / 144.0);
  const auto split = split_train_test(rows, 0.9, 3);
  const MinMaxScaler sc = MinMaxScaler::fit(split.train);
  const std::vector<Index> target{0};
  const Windows train = make_windows(sc.transform(split.train), 3, target);
  const Windows test = make_windows(sc.transform(split.test), 3, target);
  ForecastConfig cfg;
  cfg.units = 10;
  LstmParams p = LstmParams::glorot(1, cfg.units, 1, cfg.seed);
  const TrainingHistory h = train_windows(p, train, cfg);
  REQUIRE(h.epoch_loss.size() == 10);
  CHECK(h.epoch_loss.back() < h.epoch_loss.front());
  const MatrixXd pred = lstm_forward(p, cfg.activation, test.steps).prediction;
  std::vector<double> pv, ov;
  for (Index k = 0; k < test.count(); ++k) {
    pv.push_back(sc.inverse_column(0, pred(0, k)));
    ov.push_back(sc.inverse_column(0, test.targets(k, 0)));
  }
  const auto m = infinite::metrics::mape(infinite::metrics::Series(pv), infinite::metrics::Series(ov));
  CHECK(*m.masked_pct < 5.0);
}

TEST_CASE("full pipeline on the synthetic weather series") {
  const WeatherDataset ds = parse_weather_csv(synthetic_weather_csv(3'000));
  ForecastConfig cfg;
  const LstmModel a = train(ds, cfg);
  const LstmModel b = train(ds, cfg);
  CHECK(a.params == b.params);
  CHECK(a.history.epoch_loss == b.history.epoch_loss);

  const auto split = split_train_test(ds.features, cfg.train_fraction, cfg.timesteps);
  // Scaler is fitted on the training rows only.
  CHECK(a.scaler.min() == split.train.colwise().minCoeff().transpose());
  CHECK(a.scaler.max() == split.train.colwise().maxCoeff().transpose());

  const auto pred = predict(a, split.test);
  const auto truth = window_truth(a, split.test);
  REQUIRE(pred.size() == 3);
  CHECK(pred[0].size() == static_cast<std::size_t>(split.test.rows() - 3));
  CHECK(truth[0][0] == split.test(3, ds.target_columns[0]));
  for (std::size_t k = 0; k < 3; ++k) {
    const auto m = infinite::metrics::mape(pred[k], truth[k]);
    CAPTURE(k);
    CHECK(*m.masked_pct < 5.0);
  }
  CHECK(predict(b, split.test)[0] == pred[0]);

  const auto path = std::filesystem::temp_directory_path() / "infinite_model_test.json";
  save_model(a, path);
  const LstmModel back = load_model(path);
  CHECK(back.params == a.params);
  CHECK(predict(back, split.test)[2] == pred[2]);
  CHECK(back.history.epoch_loss == a.history.epoch_loss);
}

TEST_CASE("configuration validation and divergence") {
  ForecastConfig c;
  CHECK_NOTHROW(c.validate());
  c.units = 0;
  CHECK_THROWS_AS(c.validate(), infinite::Error);
  ForecastConfig lr;
  lr.learning_rate = -1;
  CHECK_THROWS_AS(lr.validate(), infinite::Error);
  CHECK(parse_activation("tanh") == Activation::tanh);
  CHECK_THROWS_AS(parse_activation("gelu"), infinite::Error);

  MatrixXd rows(40, 1);
  for (Index r = 0; r < 40; ++r) rows(r, 0) = r % 7;
  const std::vector<Index> target{0};
  const Windows w = make_windows(rows, 3, target);
  ForecastConfig wild;
  wild.learning_rate = 1e6;
  wild.epochs = 50;
  LstmParams p = LstmParams::glorot(1, 4, 1, 1);
  p.w_out.setConstant(1e300);
  CHECK(code_of([&] { train_windows(p, w, wild); }) == "training_diverged");
}

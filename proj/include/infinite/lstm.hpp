#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "infinite/metrics.hpp"
#include "infinite/weather_data.hpp"

namespace infinite::forecast {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Baseline hyperparameters: one LSTM layer of 10 units, ReLU, Adam at
/// 1e-3, batch 16, 10 epochs, min-max scaling, 90/10 split, 3 timesteps.
struct ForecastConfig {
  int units = 10;
  Activation activation = Activation::relu;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 16;
  int epochs = 10;
  double train_fraction = 0.9;
  int timesteps = 3;
  std::uint64_t seed = 42;
  bool shuffle = false;
  /// Tail of the training windows held out for a validation loss; 0 disables.
  double validation_fraction = 0.0;

  void validate() const;
};

/// Gate weights act as W x + U h + b with W hidden x inputs and U hidden x
/// hidden; the output layer maps the last hidden state to the targets.
struct LstmParams {
  Eigen::MatrixXd w_i, w_f, w_o, w_g;
  Eigen::MatrixXd u_i, u_f, u_o, u_g;
  Eigen::MatrixXd b_i, b_f, b_o, b_g;  // hidden x 1
  Eigen::MatrixXd w_out;               // targets x hidden
  Eigen::MatrixXd b_out;               // targets x 1

  static constexpr std::size_t kTensorCount = 14;
  static const std::array<const char*, kTensorCount>& tensor_names();

  static LstmParams zeros(Index inputs, Index hidden, Index targets);
  /// Glorot-uniform weights from `seed`, zero biases except a forget bias of 1.
  static LstmParams glorot(Index inputs, Index hidden, Index targets, std::uint64_t seed);

  std::array<Eigen::MatrixXd*, kTensorCount> tensors();
  std::array<const Eigen::MatrixXd*, kTensorCount> tensors() const;

  Index inputs() const noexcept { return w_i.cols(); }
  Index hidden() const noexcept { return w_i.rows(); }
  Index targets() const noexcept { return w_out.rows(); }
  Index parameter_count() const;

  /// Throws when the tensor shapes disagree.
  void check_shapes() const;

  friend bool operator==(const LstmParams&, const LstmParams&);
};

/// Activations of every step for a batch; index 0 of h and c is the zero state.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> i, f, o, g, g_pre, c, h;  // hidden x batch
  Eigen::MatrixXd prediction;                             // targets x batch
};

/// `steps[t]` is inputs x batch.
ForwardTrace lstm_forward(const LstmParams& p, Activation act, std::span<const Eigen::MatrixXd> steps);

/// Single window given as timesteps x inputs.
ForwardTrace lstm_forward(const LstmParams& p, Activation act, const Eigen::MatrixXd& window);

/// Mean of squared errors over every target and batch column.
double mse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);

/// Gradient of mse_loss with respect to every parameter, by backpropagation
/// through time. `target` is targets x batch.
LstmParams lstm_gradients(const LstmParams& p, Activation act, std::span<const Eigen::MatrixXd> steps,
                          const ForwardTrace& trace, const Eigen::MatrixXd& target);

class AdamOptimizer {
 public:
  AdamOptimizer(const LstmParams& shape, double lr, double beta1, double beta2, double epsilon);
  void step(LstmParams& params, const LstmParams& grads);
  long steps_taken() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  long t_ = 0;
  LstmParams m_, v_;
};

struct TrainingHistory {
  std::vector<double> epoch_loss;
  std::vector<double> validation_loss;
};

/// Trains on prepared (already scaled) windows.
TrainingHistory train_windows(LstmParams& params, const Windows& windows, const ForecastConfig& cfg);

/// A trained forecaster with its scaler and a snapshot of its settings.
struct LstmModel {
  ForecastConfig config;
  LstmParams params;
  MinMaxScaler scaler;
  std::vector<std::string> column_names;
  std::vector<Index> target_columns;
  std::vector<std::string> target_names;
  TrainingHistory history;
};

/// Splits chronologically, fits the scaler on training rows, windows and trains.
LstmModel train(const WeatherDataset& ds, const ForecastConfig& cfg);

/// One denormalized prediction per window of `test_rows` (raw units), one
/// series per target.
std::vector<metrics::Series> predict(const LstmModel& model, const Eigen::MatrixXd& test_rows);

/// Observed targets aligned with predict(): rows timesteps.. of `test_rows`.
std::vector<metrics::Series> window_truth(const LstmModel& model, const Eigen::MatrixXd& test_rows);

inline constexpr int kModelFormatVersion = 1;

void save_model(const LstmModel& model, const std::filesystem::path& path);
LstmModel load_model(const std::filesystem::path& path);

}  // namespace infinite::forecast

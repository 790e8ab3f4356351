#include "infinite/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "infinite/error.hpp"

namespace infinite::forecast {

using Eigen::MatrixXd;
using json = nlohmann::json;

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw Error("invalid_config", "activation must be relu or tanh", name);
}

void ForecastConfig::validate() const {
  if (units < 1) throw Error("invalid_config", "units must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("invalid_config", "learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error("invalid_config", "Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw Error("invalid_config", "epsilon must be > 0");
  if (batch_size < 1) throw Error("invalid_config", "batch_size must be >= 1");
  if (epochs < 1) throw Error("invalid_config", "epochs must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("invalid_config", "train_fraction must lie in (0, 1)");
  if (timesteps < 1) throw Error("invalid_config", "timesteps must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error("invalid_config", "validation_fraction must lie in [0, 1)");
  }
}

const std::array<const char*, LstmParams::kTensorCount>& LstmParams::tensor_names() {
  static const std::array<const char*, kTensorCount> names = {
      "w_i", "w_f", "w_o", "w_g", "u_i", "u_f", "u_o", "u_g", "b_i", "b_f", "b_o", "b_g", "w_out", "b_out"};
  return names;
}

std::array<MatrixXd*, LstmParams::kTensorCount> LstmParams::tensors() {
  return {&w_i, &w_f, &w_o, &w_g, &u_i, &u_f, &u_o, &u_g, &b_i, &b_f, &b_o, &b_g, &w_out, &b_out};
}

std::array<const MatrixXd*, LstmParams::kTensorCount> LstmParams::tensors() const {
  return {&w_i, &w_f, &w_o, &w_g, &u_i, &u_f, &u_o, &u_g, &b_i, &b_f, &b_o, &b_g, &w_out, &b_out};
}

LstmParams LstmParams::zeros(Index inputs, Index hidden, Index targets) {
  if (inputs < 1 || hidden < 1 || targets < 1) throw Error("dimension_mismatch", "LSTM dimensions must be >= 1");
  LstmParams p;
  for (MatrixXd* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_g}) *w = MatrixXd::Zero(hidden, inputs);
  for (MatrixXd* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_g}) *u = MatrixXd::Zero(hidden, hidden);
  for (MatrixXd* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_g}) *b = MatrixXd::Zero(hidden, 1);
  p.w_out = MatrixXd::Zero(targets, hidden);
  p.b_out = MatrixXd::Zero(targets, 1);
  return p;
}

LstmParams LstmParams::glorot(Index inputs, Index hidden, Index targets, std::uint64_t seed) {
  LstmParams p = zeros(inputs, hidden, targets);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](MatrixXd& m) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index c = 0; c < m.cols(); ++c)
      for (Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  };
  for (MatrixXd* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_g, &p.u_i, &p.u_f, &p.u_o, &p.u_g, &p.w_out}) fill(*w);
  p.b_f.setOnes();
  return p;
}

Index LstmParams::parameter_count() const {
  Index n = 0;
  for (const MatrixXd* t : tensors()) n += t->size();
  return n;
}

void LstmParams::check_shapes() const {
  const Index h = hidden();
  const Index x = inputs();
  bool ok = h > 0 && x > 0 && targets() > 0;
  for (const MatrixXd* w : {&w_i, &w_f, &w_o, &w_g}) ok = ok && w->rows() == h && w->cols() == x;
  for (const MatrixXd* u : {&u_i, &u_f, &u_o, &u_g}) ok = ok && u->rows() == h && u->cols() == h;
  for (const MatrixXd* b : {&b_i, &b_f, &b_o, &b_g}) ok = ok && b->rows() == h && b->cols() == 1;
  ok = ok && w_out.cols() == h && b_out.rows() == w_out.rows() && b_out.cols() == 1;
  if (!ok) throw Error("dimension_mismatch", "LSTM parameter shapes are inconsistent");
}

bool operator==(const LstmParams& a, const LstmParams& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k]->rows() != tb[k]->rows() || ta[k]->cols() != tb[k]->cols() || *ta[k] != *tb[k]) return false;
  }
  return true;
}

namespace {

MatrixXd sigmoid(const MatrixXd& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

MatrixXd activate(const MatrixXd& z, Activation act) {
  if (act == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

// Derivative expressed through the pre-activation.
MatrixXd activate_grad(const MatrixXd& z, Activation act) {
  if (act == Activation::relu) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - z.array().tanh().square()).matrix();
}

MatrixXd affine(const MatrixXd& w, const MatrixXd& x, const MatrixXd& u, const MatrixXd& h, const MatrixXd& b) {
  MatrixXd z = w * x + u * h;
  z.colwise() += b.col(0);
  return z;
}

}  // namespace

ForwardTrace lstm_forward(const LstmParams& p, Activation act, std::span<const MatrixXd> steps) {
  p.check_shapes();
  if (steps.empty()) throw Error("dimension_mismatch", "window has no time steps");
  const Index batch = steps.front().cols();
  ForwardTrace tr;
  tr.h.push_back(MatrixXd::Zero(p.hidden(), batch));
  tr.c.push_back(MatrixXd::Zero(p.hidden(), batch));
  for (const MatrixXd& x : steps) {
    if (x.rows() != p.inputs() || x.cols() != batch) {
      throw Error("dimension_mismatch", "input step shape does not match the model",
                  std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
    const MatrixXd& h = tr.h.back();
    tr.i.push_back(sigmoid(affine(p.w_i, x, p.u_i, h, p.b_i)));
    tr.f.push_back(sigmoid(affine(p.w_f, x, p.u_f, h, p.b_f)));
    tr.o.push_back(sigmoid(affine(p.w_o, x, p.u_o, h, p.b_o)));
    tr.g_pre.push_back(affine(p.w_g, x, p.u_g, h, p.b_g));
    tr.g.push_back(activate(tr.g_pre.back(), act));
    MatrixXd c = tr.f.back().cwiseProduct(tr.c.back()) + tr.i.back().cwiseProduct(tr.g.back());
    MatrixXd hn = tr.o.back().cwiseProduct(activate(c, act));
    tr.c.push_back(std::move(c));
    tr.h.push_back(std::move(hn));
  }
  tr.prediction = p.w_out * tr.h.back();
  tr.prediction.colwise() += p.b_out.col(0);
  return tr;
}

ForwardTrace lstm_forward(const LstmParams& p, Activation act, const MatrixXd& window) {
  std::vector<MatrixXd> steps;
  for (Index t = 0; t < window.rows(); ++t) steps.push_back(window.row(t).transpose());
  return lstm_forward(p, act, steps);
}

double mse_loss(const MatrixXd& prediction, const MatrixXd& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw Error("dimension_mismatch", "prediction and target shapes differ");
  }
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

LstmParams lstm_gradients(const LstmParams& p, Activation act, std::span<const MatrixXd> steps,
                          const ForwardTrace& tr, const MatrixXd& target) {
  const std::size_t T = steps.size();
  LstmParams g = LstmParams::zeros(p.inputs(), p.hidden(), p.targets());
  const MatrixXd dpred = 2.0 * (tr.prediction - target) / static_cast<double>(target.size());
  g.w_out = dpred * tr.h[T].transpose();
  g.b_out = dpred.rowwise().sum();

  MatrixXd dh = p.w_out.transpose() * dpred;
  MatrixXd dc = MatrixXd::Zero(p.hidden(), dpred.cols());
  for (std::size_t k = T; k-- > 0;) {
    // Step k consumed h[k], c[k] and produced c[k + 1], h[k + 1].
    const MatrixXd& c = tr.c[k + 1];
    const MatrixXd& i = tr.i[k];
    const MatrixXd& f = tr.f[k];
    const MatrixXd& o = tr.o[k];
    const MatrixXd& gg = tr.g[k];

    const MatrixXd d_o = dh.cwiseProduct(activate(c, act));
    dc += dh.cwiseProduct(o).cwiseProduct(activate_grad(c, act));

    const MatrixXd da_i = dc.cwiseProduct(gg).cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
    const MatrixXd da_f = dc.cwiseProduct(tr.c[k]).cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
    const MatrixXd da_o = d_o.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());
    const MatrixXd da_g = dc.cwiseProduct(i).cwiseProduct(activate_grad(tr.g_pre[k], act));

    const MatrixXd& x = steps[k];
    const MatrixXd& h_prev = tr.h[k];
    g.w_i += da_i * x.transpose();
    g.w_f += da_f * x.transpose();
    g.w_o += da_o * x.transpose();
    g.w_g += da_g * x.transpose();
    g.u_i += da_i * h_prev.transpose();
    g.u_f += da_f * h_prev.transpose();
    g.u_o += da_o * h_prev.transpose();
    g.u_g += da_g * h_prev.transpose();
    g.b_i += da_i.rowwise().sum();
    g.b_f += da_f.rowwise().sum();
    g.b_o += da_o.rowwise().sum();
    g.b_g += da_g.rowwise().sum();

    dh = p.u_i.transpose() * da_i + p.u_f.transpose() * da_f + p.u_o.transpose() * da_o + p.u_g.transpose() * da_g;
    dc = dc.cwiseProduct(f);
  }
  return g;
}

AdamOptimizer::AdamOptimizer(const LstmParams& shape, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(LstmParams::zeros(shape.inputs(), shape.hidden(), shape.targets())),
      v_(LstmParams::zeros(shape.inputs(), shape.hidden(), shape.targets())) {}

void AdamOptimizer::step(LstmParams& params, const LstmParams& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    *m[k] = beta1_ * *m[k] + (1.0 - beta1_) * *g[k];
    *v[k] = beta2_ * *v[k] + (1.0 - beta2_) * g[k]->cwiseProduct(*g[k]);
    const auto m_hat = m[k]->array() / c1;
    const auto v_hat = v[k]->array() / c2;
    p[k]->array() -= lr_ * m_hat / (v_hat.sqrt() + epsilon_);
  }
}

namespace {

struct Batch {
  std::vector<MatrixXd> steps;
  MatrixXd target;  // targets x batch
};

Batch gather(const Windows& w, std::span<const Index> idx) {
  Batch b;
  const Index n = static_cast<Index>(idx.size());
  for (const MatrixXd& s : w.steps) {
    MatrixXd x(s.rows(), n);
    for (Index j = 0; j < n; ++j) x.col(j) = s.col(idx[static_cast<std::size_t>(j)]);
    b.steps.push_back(std::move(x));
  }
  b.target.resize(w.targets.cols(), n);
  for (Index j = 0; j < n; ++j) b.target.col(j) = w.targets.row(idx[static_cast<std::size_t>(j)]).transpose();
  return b;
}

double evaluate_loss(const LstmParams& p, Activation act, const Windows& w, std::span<const Index> idx) {
  if (idx.empty()) return 0.0;
  const Batch b = gather(w, idx);
  return mse_loss(lstm_forward(p, act, b.steps).prediction, b.target);
}

}  // namespace

TrainingHistory train_windows(LstmParams& params, const Windows& windows, const ForecastConfig& cfg) {
  cfg.validate();
  params.check_shapes();
  if (windows.timesteps() < 1 || windows.count() < 1) throw Error("too_few_rows", "no training windows");
  if (windows.steps.front().rows() != params.inputs() || windows.targets.cols() != params.targets()) {
    throw Error("dimension_mismatch", "windows do not match the model dimensions");
  }

  const Index total = windows.count();
  const Index n_val = static_cast<Index>(std::floor(static_cast<double>(total) * cfg.validation_fraction));
  const Index n_train = total - n_val;
  if (n_train < 1) throw Error("too_few_rows", "validation split leaves no training windows");

  std::vector<Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<Index> val_idx(static_cast<std::size_t>(n_val));
  std::iota(val_idx.begin(), val_idx.end(), n_train);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  AdamOptimizer adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  TrainingHistory history;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double weighted = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++batch_no) {
      const std::size_t n = std::min(batch, order.size() - start);
      const Batch b = gather(windows, std::span<const Index>(order).subspan(start, n));
      const ForwardTrace tr = lstm_forward(params, cfg.activation, b.steps);
      const double loss = mse_loss(tr.prediction, b.target);
      if (!std::isfinite(loss)) {
        throw Error("training_diverged", "training loss is not finite",
                    "epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(batch_no + 1));
      }
      weighted += loss * static_cast<double>(n);
      adam.step(params, lstm_gradients(params, cfg.activation, b.steps, tr, b.target));
    }
    history.epoch_loss.push_back(weighted / static_cast<double>(n_train));
    if (n_val > 0) history.validation_loss.push_back(evaluate_loss(params, cfg.activation, windows, val_idx));
  }
  return history;
}

LstmModel train(const WeatherDataset& ds, const ForecastConfig& cfg) {
  cfg.validate();
  if (ds.target_columns.empty()) throw Error("missing_target_columns", "dataset has no target columns");
  const TrainTestSplit split = split_train_test(ds.features, cfg.train_fraction, cfg.timesteps);

  LstmModel model;
  model.config = cfg;
  model.column_names = ds.column_names;
  model.target_columns = ds.target_columns;
  model.target_names = ds.target_names;
  model.scaler = MinMaxScaler::fit(split.train);
  const Windows w = make_windows(model.scaler.transform(split.train), cfg.timesteps, ds.target_columns);
  model.params = LstmParams::glorot(ds.features.cols(), cfg.units, static_cast<Index>(ds.target_columns.size()),
                                    cfg.seed);
  model.history = train_windows(model.params, w, cfg);
  return model;
}

std::vector<metrics::Series> predict(const LstmModel& model, const MatrixXd& test_rows) {
  if (!model.scaler.fitted()) throw Error("scaler_not_fitted", "model has no fitted scaler");
  const Windows w = make_windows(model.scaler.transform(test_rows), model.config.timesteps, model.target_columns);
  const MatrixXd pred = lstm_forward(model.params, model.config.activation, w.steps).prediction;
  std::vector<metrics::Series> out;
  for (Index j = 0; j < pred.rows(); ++j) {
    std::vector<double> v(static_cast<std::size_t>(pred.cols()));
    for (Index k = 0; k < pred.cols(); ++k) {
      v[static_cast<std::size_t>(k)] = model.scaler.inverse_column(model.target_columns[static_cast<std::size_t>(j)],
                                                                   pred(j, k));
    }
    out.emplace_back(std::move(v));
  }
  return out;
}

std::vector<metrics::Series> window_truth(const LstmModel& model, const MatrixXd& test_rows) {
  const Index t = model.config.timesteps;
  if (test_rows.rows() <= t) throw Error("too_few_rows", "need more test rows than timesteps");
  std::vector<metrics::Series> out;
  for (Index col : model.target_columns) {
    const Eigen::VectorXd tail = test_rows.col(col).tail(test_rows.rows() - t);
    out.emplace_back(std::vector<double>(tail.data(), tail.data() + tail.size()));
  }
  return out;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw Error("corrupt_model", "matrix data length does not match its shape");
  }
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace

void save_model(const LstmModel& model, const std::filesystem::path& path) {
  const ForecastConfig& c = model.config;
  json j;
  j["format"] = "infinite-lstm";
  j["version"] = kModelFormatVersion;
  j["config"] = {{"units", c.units},
                 {"activation", to_string(c.activation)},
                 {"learning_rate", c.learning_rate},
                 {"beta1", c.beta1},
                 {"beta2", c.beta2},
                 {"epsilon", c.epsilon},
                 {"batch_size", c.batch_size},
                 {"epochs", c.epochs},
                 {"train_fraction", c.train_fraction},
                 {"timesteps", c.timesteps},
                 {"seed", c.seed},
                 {"shuffle", c.shuffle},
                 {"validation_fraction", c.validation_fraction}};
  j["columns"] = model.column_names;
  j["target_columns"] = model.target_columns;
  j["target_names"] = model.target_names;
  j["scaler"] = {{"min", std::vector<double>(model.scaler.min().data(), model.scaler.min().data() + model.scaler.min().size())},
                 {"max", std::vector<double>(model.scaler.max().data(), model.scaler.max().data() + model.scaler.max().size())}};
  json weights;
  const auto tensors = model.params.tensors();
  for (std::size_t k = 0; k < tensors.size(); ++k) weights[LstmParams::tensor_names()[k]] = matrix_to_json(*tensors[k]);
  j["weights"] = std::move(weights);
  j["history"] = {{"epoch_loss", model.history.epoch_loss}, {"validation_loss", model.history.validation_loss}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write model file", path.string());
  out << j.dump(1) << '\n';
}

LstmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read model file", path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != "infinite-lstm") throw Error("corrupt_model", "not a model file");
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error("unsupported_version", "unsupported model file version");
    }
    LstmModel m;
    const json& c = j.at("config");
    m.config.units = c.at("units").get<int>();
    m.config.activation = parse_activation(c.at("activation").get<std::string>());
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.beta1 = c.at("beta1").get<double>();
    m.config.beta2 = c.at("beta2").get<double>();
    m.config.epsilon = c.at("epsilon").get<double>();
    m.config.batch_size = c.at("batch_size").get<int>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.train_fraction = c.at("train_fraction").get<double>();
    m.config.timesteps = c.at("timesteps").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.shuffle = c.at("shuffle").get<bool>();
    m.config.validation_fraction = c.at("validation_fraction").get<double>();
    m.config.validate();
    m.column_names = j.at("columns").get<std::vector<std::string>>();
    m.target_columns = j.at("target_columns").get<std::vector<Index>>();
    m.target_names = j.at("target_names").get<std::vector<std::string>>();
    const auto mn = j.at("scaler").at("min").get<std::vector<double>>();
    const auto mx = j.at("scaler").at("max").get<std::vector<double>>();
    m.scaler = MinMaxScaler(Eigen::Map<const Eigen::VectorXd>(mn.data(), static_cast<Index>(mn.size())),
                            Eigen::Map<const Eigen::VectorXd>(mx.data(), static_cast<Index>(mx.size())));
    auto tensors = m.params.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      *tensors[k] = matrix_from_json(j.at("weights").at(LstmParams::tensor_names()[k]));
    }
    m.params.check_shapes();
    m.history.epoch_loss = j.at("history").at("epoch_loss").get<std::vector<double>>();
    m.history.validation_loss = j.at("history").at("validation_loss").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    throw Error("corrupt_model", "malformed model file", e.what());
  }
}

}  // namespace infinite::forecast

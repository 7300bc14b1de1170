#ifndef EPFW_NN_HPP
#define EPFW_NN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epfw/core.hpp"
#include "epfw/features.hpp"
#include "epfw/panel.hpp"
#include "epfw/rng.hpp"

namespace epfw {

EPFW_DEFINE_ERROR(NonFiniteLoss);
EPFW_DEFINE_ERROR(EmptySpace);

enum class Activation { Relu, Tanh, Sigmoid };
enum class Preprocess { ZScore, MinMax, None };

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw InvalidConfig("unknown activation '" + s + "'");
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

/// Derivative expressed through the activation value (cheaper and exact).
inline double activate_grad(Activation a, double value) {
  switch (a) {
    case Activation::Relu: return value > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - value * value;
    case Activation::Sigmoid: return value * (1.0 - value);
  }
  return 1.0;
}

struct NetworkSpec {
  int input_size = 0;
  std::vector<int> hidden = {64, 64};
  std::vector<Activation> activation = {Activation::Relu, Activation::Relu};
  int output_size = 24;
  double l1 = 0.0;          // weight penalty
  double dropout = 0.0;     // hidden-unit drop rate during training
  double learning_rate = 1e-3;
  Preprocess preprocess = Preprocess::ZScore;
  bool batch_norm = false;  // accepted, not implemented (see validate)
  std::uint64_t init_seed = 0;

  void validate() const {
    if (input_size < 1 || output_size < 1) throw InvalidConfig("net: sizes must be >= 1");
    if (hidden.size() != activation.size())
      throw InvalidConfig("net: one activation per hidden layer");
    for (int h : hidden)
      if (h < 1) throw InvalidConfig("net: hidden sizes must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidConfig("net: dropout in [0,1)");
    if (learning_rate <= 0.0) throw InvalidConfig("net: learning rate > 0");
    if (batch_norm)
      std::cerr << "warning: batch_norm requested but not implemented; ignored\n";
  }
};

/// Fully-connected net. Layer k maps layers()[k] -> layers()[k+1]; hidden
/// layers apply their activation, the output layer is linear.
struct Network {
  NetworkSpec spec;
  std::vector<Eigen::MatrixXd> W;  // W[k]: out x in
  std::vector<Eigen::VectorXd> b;

  std::vector<int> layers() const {
    std::vector<int> s = {spec.input_size};
    s.insert(s.end(), spec.hidden.begin(), spec.hidden.end());
    s.push_back(spec.output_size);
    return s;
  }

  std::size_t n_layers() const { return W.size(); }
};

inline Network make_network(const NetworkSpec& spec) {
  spec.validate();
  Network net;
  net.spec = spec;
  Rng rng(spec.init_seed);
  const auto sizes = net.layers();
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const int in = sizes[k], out = sizes[k + 1];
    // Glorot-style scale keeps early activations in range
    const double scale = std::sqrt(2.0 / (in + out));
    Eigen::MatrixXd w(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) w(i, j) = scale * rng.normal();
    net.W.push_back(std::move(w));
    net.b.push_back(Eigen::VectorXd::Zero(out));
  }
  return net;
}

/// Inference pass; dropout is never applied here.
inline Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.spec.input_size)
    throw DimensionMismatch("forward: input size mismatch");
  Eigen::VectorXd a = x;
  for (std::size_t k = 0; k < net.n_layers(); ++k) {
    a = (net.W[k] * a + net.b[k]).eval();
    if (k + 1 < net.n_layers())
      for (Eigen::Index i = 0; i < a.size(); ++i)
        a(i) = activate(net.spec.activation[k], a(i));
  }
  return a;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  double loss = 0.0;  // data loss + L1 penalty
};

/// Batch loss: mean over samples of the squared error summed over outputs,
/// plus l1 * sum |W|. `dropout_masks` (training only) holds one inverted
/// mask per hidden layer per sample; pass nullptr for the deterministic path.
inline Gradients backprop_grad(const Network& net, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& Y,
                               const std::vector<std::vector<Eigen::VectorXd>>* dropout_masks = nullptr) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw DimensionMismatch("backprop: empty batch");
  if (X.cols() != net.spec.input_size || Y.cols() != net.spec.output_size ||
      Y.rows() != n)
    throw DimensionMismatch("backprop: batch shape mismatch");

  Gradients g;
  for (std::size_t k = 0; k < net.n_layers(); ++k) {
    g.W.emplace_back(Eigen::MatrixXd::Zero(net.W[k].rows(), net.W[k].cols()));
    g.b.emplace_back(Eigen::VectorXd::Zero(net.b[k].size()));
  }

  const std::size_t L = net.n_layers();
  double data_loss = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    std::vector<Eigen::VectorXd> act(L + 1);
    act[0] = X.row(s).transpose();
    for (std::size_t k = 0; k < L; ++k) {
      act[k + 1] = net.W[k] * act[k] + net.b[k];
      if (k + 1 < L) {
        for (Eigen::Index i = 0; i < act[k + 1].size(); ++i)
          act[k + 1](i) = activate(net.spec.activation[k], act[k + 1](i));
        if (dropout_masks != nullptr)
          act[k + 1] = act[k + 1].cwiseProduct((*dropout_masks)[s][k]);
      }
    }
    const Eigen::VectorXd err = act[L] - Y.row(s).transpose();
    data_loss += err.squaredNorm();

    Eigen::VectorXd delta = 2.0 * err / static_cast<double>(n);
    for (std::size_t k = L; k-- > 0;) {
      g.W[k] += delta * act[k].transpose();
      g.b[k] += delta;
      if (k > 0) {
        delta = (net.W[k].transpose() * delta).eval();
        for (Eigen::Index i = 0; i < delta.size(); ++i)
          delta(i) *= activate_grad(net.spec.activation[k - 1], act[k](i));
        if (dropout_masks != nullptr)
          delta = delta.cwiseProduct((*dropout_masks)[s][k - 1]);
      }
    }
  }

  double l1_pen = 0.0;
  if (net.spec.l1 > 0.0) {
    for (std::size_t k = 0; k < L; ++k) {
      l1_pen += net.spec.l1 * net.W[k].cwiseAbs().sum();
      for (Eigen::Index i = 0; i < net.W[k].rows(); ++i)
        for (Eigen::Index j = 0; j < net.W[k].cols(); ++j) {
          const double w = net.W[k](i, j);
          if (w != 0.0) g.W[k](i, j) += net.spec.l1 * (w > 0.0 ? 1.0 : -1.0);
        }
    }
  }
  g.loss = data_loss / static_cast<double>(n) + l1_pen;
  return g;
}

/// Data loss only (no penalty, no dropout) — the early-stopping criterion.
inline double eval_loss(const Network& net, const Eigen::MatrixXd& X,
                        const Eigen::MatrixXd& Y) {
  double loss = 0.0;
  for (Eigen::Index s = 0; s < X.rows(); ++s)
    loss += (forward(net, X.row(s).transpose()) - Y.row(s).transpose()).squaredNorm();
  return loss / static_cast<double>(X.rows());
}

struct TrainOptions {
  int max_epochs = 200;
  int batch_size = 32;
  int patience = 10;
  std::uint64_t shuffle_seed = 1;
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch, penalized batch average
  std::vector<double> val_loss;    // per epoch
  int best_epoch = -1;
  double best_val = std::numeric_limits<double>::infinity();
};

/// Adam mini-batch training with early stopping on validation loss; returns
/// the best-validation weights in `net`.
inline TrainHistory train(Network& net, const Eigen::MatrixXd& Xtr,
                          const Eigen::MatrixXd& Ytr, const Eigen::MatrixXd& Xval,
                          const Eigen::MatrixXd& Yval,
                          const TrainOptions& opt = {}) {
  if (Xtr.rows() == 0 || Xval.rows() == 0)
    throw DimensionMismatch("train: empty train or validation set");
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  for (std::size_t k = 0; k < net.n_layers(); ++k) {
    mW.push_back(Eigen::MatrixXd::Zero(net.W[k].rows(), net.W[k].cols()));
    vW.push_back(Eigen::MatrixXd::Zero(net.W[k].rows(), net.W[k].cols()));
    mb.push_back(Eigen::VectorXd::Zero(net.b[k].size()));
    vb.push_back(Eigen::VectorXd::Zero(net.b[k].size()));
  }

  Rng rng(opt.shuffle_seed);
  TrainHistory hist;
  std::vector<Eigen::MatrixXd> bestW = net.W;
  std::vector<Eigen::VectorXd> bestb = net.b;
  int stall = 0;
  long t = 0;

  std::vector<int> order(static_cast<std::size_t>(Xtr.rows()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
      const Eigen::Index bs = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd Xb(bs, Xtr.cols()), Yb(bs, Ytr.cols());
      for (Eigen::Index i = 0; i < bs; ++i) {
        Xb.row(i) = Xtr.row(order[start + static_cast<std::size_t>(i)]);
        Yb.row(i) = Ytr.row(order[start + static_cast<std::size_t>(i)]);
      }

      std::vector<std::vector<Eigen::VectorXd>> masks;
      const std::vector<std::vector<Eigen::VectorXd>>* mask_ptr = nullptr;
      if (net.spec.dropout > 0.0) {
        masks.resize(static_cast<std::size_t>(bs));
        for (auto& per_sample : masks) {
          per_sample.resize(net.spec.hidden.size());
          for (std::size_t k = 0; k < net.spec.hidden.size(); ++k) {
            per_sample[k].resize(net.spec.hidden[k]);
            for (int i = 0; i < net.spec.hidden[k]; ++i)
              per_sample[k](i) = rng.bernoulli(net.spec.dropout)
                                     ? 0.0
                                     : 1.0 / (1.0 - net.spec.dropout);
          }
        }
        mask_ptr = &masks;
      }

      const auto g = backprop_grad(net, Xb, Yb, mask_ptr);
      if (!std::isfinite(g.loss))
        throw NonFiniteLoss("training diverged at epoch " + std::to_string(epoch));
      epoch_loss += g.loss;
      ++n_batches;

      ++t;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      for (std::size_t k = 0; k < net.n_layers(); ++k) {
        mW[k] = beta1 * mW[k] + (1.0 - beta1) * g.W[k];
        vW[k] = beta2 * vW[k] + (1.0 - beta2) * g.W[k].cwiseProduct(g.W[k]);
        net.W[k] -= net.spec.learning_rate *
                    (mW[k] / c1).cwiseQuotient(((vW[k] / c2).cwiseSqrt().array() + adam_eps).matrix());
        mb[k] = beta1 * mb[k] + (1.0 - beta1) * g.b[k];
        vb[k] = beta2 * vb[k] + (1.0 - beta2) * g.b[k].cwiseProduct(g.b[k]);
        net.b[k] -= net.spec.learning_rate *
                    (mb[k] / c1).cwiseQuotient(((vb[k] / c2).cwiseSqrt().array() + adam_eps).matrix());
      }
    }

    hist.train_loss.push_back(epoch_loss / std::max(1, n_batches));
    const double vl = eval_loss(net, Xval, Yval);
    if (!std::isfinite(vl))
      throw NonFiniteLoss("validation loss non-finite at epoch " + std::to_string(epoch));
    hist.val_loss.push_back(vl);
    if (vl < hist.best_val) {
      hist.best_val = vl;
      hist.best_epoch = epoch;
      bestW = net.W;
      bestb = net.b;
      stall = 0;
    } else if (++stall > opt.patience) {
      break;
    }
  }
  net.W = std::move(bestW);
  net.b = std::move(bestb);
  return hist;
}

// ---------------------------------------------------------------------------
// Feature layout for the day-ahead DNN: eleven binary group flags.

inline constexpr int kDnnFlagCount = 11;

/// Groups gated by the mask: 0-3 price lags (d-1, d-2, d-3, d-7), 4-6 first
/// half of the exogenous list at (d, d-1, d-7), 7-9 second half likewise,
/// 10 weekday one-hot. Empty groups contribute nothing.
struct DnnFeatureMask {
  std::array<bool, kDnnFlagCount> on{};

  static DnnFeatureMask all() {
    DnnFeatureMask m;
    m.on.fill(true);
    return m;
  }
};

namespace nn_detail {

inline void split_exo(const std::vector<std::string>& exo,
                      std::vector<std::string>& a, std::vector<std::string>& b) {
  const std::size_t half = (exo.size() + 1) / 2;
  a.assign(exo.begin(), exo.begin() + static_cast<std::ptrdiff_t>(half));
  b.assign(exo.begin() + static_cast<std::ptrdiff_t>(half), exo.end());
}

}  // namespace nn_detail

inline std::vector<double> dnn_row(const PanelView& view,
                                   const std::vector<std::string>& exo,
                                   const DnnFeatureMask& mask) {
  const Date d = view.forecast_day();
  std::vector<std::string> exo_a, exo_b;
  nn_detail::split_exo(exo, exo_a, exo_b);

  std::vector<double> row;
  const std::array<std::int64_t, 4> price_lags = {1, 2, 3, 7};
  for (int g = 0; g < 4; ++g) {
    if (!mask.on[static_cast<std::size_t>(g)]) continue;
    for (int h = 0; h < 24; ++h) row.push_back(view.at("price", d - price_lags[g], h));
  }
  const std::array<std::int64_t, 3> exo_lags = {0, 1, 7};
  for (int g = 0; g < 3; ++g)
    if (mask.on[static_cast<std::size_t>(4 + g)])
      for (const auto& e : exo_a)
        for (int h = 0; h < 24; ++h) row.push_back(view.at(e, d - exo_lags[g], h));
  for (int g = 0; g < 3; ++g)
    if (mask.on[static_cast<std::size_t>(7 + g)])
      for (const auto& e : exo_b)
        for (int h = 0; h < 24; ++h) row.push_back(view.at(e, d - exo_lags[g], h));
  if (mask.on[10]) {
    const int wd = weekday_monday0(d);
    for (int k = 0; k < 7; ++k) row.push_back(k == wd ? 1.0 : 0.0);
  }
  return row;
}

inline std::size_t dnn_row_size(std::size_t n_exo, const DnnFeatureMask& mask) {
  const std::size_t half = (n_exo + 1) / 2;
  std::size_t n = 0;
  for (int g = 0; g < 4; ++g)
    if (mask.on[static_cast<std::size_t>(g)]) n += 24;
  for (int g = 4; g < 7; ++g)
    if (mask.on[static_cast<std::size_t>(g)]) n += 24 * half;
  for (int g = 7; g < 10; ++g)
    if (mask.on[static_cast<std::size_t>(g)]) n += 24 * (n_exo - half);
  if (mask.on[10]) n += 7;
  return n;
}

// ---------------------------------------------------------------------------
// Random hyperparameter search.

struct SearchSpace {
  std::vector<std::vector<int>> hidden_choices = {{32}, {64}, {64, 32}, {64, 64}};
  std::vector<Activation> activation_choices = {Activation::Relu, Activation::Tanh,
                                                Activation::Sigmoid};
  double lr_lo = 1e-4, lr_hi = 1e-2;       // log-uniform
  double dropout_lo = 0.0, dropout_hi = 0.3;
  double l1_lo = 0.0, l1_hi = 1e-3;
  std::vector<Preprocess> preprocess_choices = {Preprocess::ZScore, Preprocess::MinMax,
                                                Preprocess::None};
  bool search_features = true;  // sample the 11 binary flags

  void validate() const {
    if (hidden_choices.empty() || activation_choices.empty() ||
        preprocess_choices.empty())
      throw EmptySpace("search: empty choice list");
    if (lr_lo <= 0.0 || lr_hi < lr_lo) throw EmptySpace("search: bad lr range");
  }
};

struct SearchResult {
  NetworkSpec spec;        // input_size left 0; caller sets it from the mask
  DnnFeatureMask mask;
  double objective = std::numeric_limits<double>::infinity();
  int sample_index = -1;
};

/// Uniformly samples `budget` configurations (seeded) and keeps the one with
/// the smallest objective; ties go to the earlier sample.
inline SearchResult random_search(
    const SearchSpace& space, int budget, std::uint64_t seed,
    const std::function<double(const NetworkSpec&, const DnnFeatureMask&)>& objective) {
  space.validate();
  if (budget < 1) throw EmptySpace("search: budget must be >= 1");

  Rng rng(seed);
  SearchResult best;
  for (int i = 0; i < budget; ++i) {
    NetworkSpec spec;
    spec.hidden = space.hidden_choices[rng.uniform_int(space.hidden_choices.size())];
    const Activation act =
        space.activation_choices[rng.uniform_int(space.activation_choices.size())];
    spec.activation.assign(spec.hidden.size(), act);
    spec.learning_rate = rng.log_uniform(space.lr_lo, space.lr_hi);
    spec.dropout = rng.uniform(space.dropout_lo, space.dropout_hi);
    spec.l1 = rng.uniform(space.l1_lo, space.l1_hi);
    spec.preprocess =
        space.preprocess_choices[rng.uniform_int(space.preprocess_choices.size())];
    spec.init_seed = rng.next_u64();

    DnnFeatureMask mask = DnnFeatureMask::all();
    if (space.search_features) {
      for (auto& f : mask.on) f = rng.bernoulli(0.5);
      bool any = false;
      for (int g = 0; g < 4; ++g) any = any || mask.on[static_cast<std::size_t>(g)];
      if (!any) mask.on[0] = true;  // always keep some price history
    }

    const double obj = objective(spec, mask);
    if (obj < best.objective) {
      best.spec = spec;
      best.mask = mask;
      best.objective = obj;
      best.sample_index = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Panel-level DNN forecaster.

struct DnnModel {
  Network net;
  DnnFeatureMask mask;
  std::vector<std::string> exo;
  // input preprocessing (fitted on the training rows) and target scaling
  Eigen::VectorXd in_shift, in_scale;
  double y_mean = 0.0, y_sd = 1.0;
};

namespace nn_detail {

inline Eigen::MatrixXd rows_for(const HourlyPanel& panel, Date first, Date last,
                                const std::vector<std::string>& exo,
                                const DnnFeatureMask& mask) {
  const std::int64_t n = last - first + 1;
  Eigen::MatrixXd X;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = dnn_row(PanelView(panel, first + i), exo, mask);
    if (i == 0) X.resize(n, static_cast<Eigen::Index>(row.size()));
    for (std::size_t j = 0; j < row.size(); ++j)
      X(i, static_cast<Eigen::Index>(j)) = row[j];
  }
  return X;
}

inline Eigen::MatrixXd targets_for(const HourlyPanel& panel, Date first, Date last) {
  const std::int64_t n = last - first + 1;
  Eigen::MatrixXd Y(n, 24);
  for (std::int64_t i = 0; i < n; ++i)
    for (int h = 0; h < 24; ++h) Y(i, h) = panel.at("price", first + i, h);
  return Y;
}

inline void fit_preprocess(DnnModel& model, const Eigen::MatrixXd& X) {
  const Eigen::Index p = X.cols();
  model.in_shift = Eigen::VectorXd::Zero(p);
  model.in_scale = Eigen::VectorXd::Ones(p);
  switch (model.net.spec.preprocess) {
    case Preprocess::ZScore:
      for (Eigen::Index j = 0; j < p; ++j) {
        model.in_shift(j) = X.col(j).mean();
        const double sd = std::sqrt(
            (X.col(j).array() - model.in_shift(j)).square().sum() / X.rows());
        model.in_scale(j) = sd > 0.0 ? sd : 1.0;
      }
      break;
    case Preprocess::MinMax:
      for (Eigen::Index j = 0; j < p; ++j) {
        const double lo = X.col(j).minCoeff(), hi = X.col(j).maxCoeff();
        model.in_shift(j) = lo;
        model.in_scale(j) = hi > lo ? hi - lo : 1.0;
      }
      break;
    case Preprocess::None:
      break;
  }
}

inline Eigen::MatrixXd apply_preprocess(const DnnModel& model, Eigen::MatrixXd X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    X.col(j) = (X.col(j).array() - model.in_shift(j)) / model.in_scale(j);
  return X;
}

}  // namespace nn_detail

/// Trains a day-ahead DNN on the split's train range, early-stopping on the
/// validation range. The spec's input_size is derived from the mask.
inline DnnModel fit_dnn(const HourlyPanel& panel, const SplitSpec& split,
                        const std::vector<std::string>& exo, NetworkSpec spec,
                        const DnnFeatureMask& mask, const TrainOptions& opt = {}) {
  split.validate();
  const Date first_ok = panel.first_day() + 7;
  const Date tr_first = std::max(split.train_first, first_ok);

  DnnModel model;
  model.mask = mask;
  model.exo = exo;
  Eigen::MatrixXd Xtr = nn_detail::rows_for(panel, tr_first, split.train_last, exo, mask);
  Eigen::MatrixXd Xval =
      nn_detail::rows_for(panel, split.val_first, split.val_last, exo, mask);
  Eigen::MatrixXd Ytr = nn_detail::targets_for(panel, tr_first, split.train_last);
  Eigen::MatrixXd Yval = nn_detail::targets_for(panel, split.val_first, split.val_last);

  spec.input_size = static_cast<int>(Xtr.cols());
  spec.output_size = 24;
  model.net = make_network(spec);

  nn_detail::fit_preprocess(model, Xtr);
  Xtr = nn_detail::apply_preprocess(model, std::move(Xtr));
  Xval = nn_detail::apply_preprocess(model, std::move(Xval));

  model.y_mean = Ytr.mean();
  const double var = (Ytr.array() - model.y_mean).square().sum() /
                     static_cast<double>(Ytr.size());
  model.y_sd = var > 0.0 ? std::sqrt(var) : 1.0;
  Ytr = ((Ytr.array() - model.y_mean) / model.y_sd).matrix();
  Yval = ((Yval.array() - model.y_mean) / model.y_sd).matrix();

  TrainOptions topt = opt;
  topt.shuffle_seed = spec.init_seed ^ 0x5bf03635u;
  train(model.net, Xtr, Ytr, Xval, Yval, topt);
  return model;
}

inline std::array<double, 24> forecast_dnn(const DnnModel& model,
                                           const HourlyPanel& panel, Date day) {
  const auto row = dnn_row(PanelView(panel, day), model.exo, model.mask);
  Eigen::VectorXd x =
      Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
  x = (x.array() - model.in_shift.array()) / model.in_scale.array();
  const Eigen::VectorXd out = forward(model.net, x);
  std::array<double, 24> f{};
  for (int h = 0; h < 24; ++h) f[h] = out(h) * model.y_sd + model.y_mean;
  return f;
}

/// Four-member ensemble: one random search + final training per seed; the
/// ensemble forecast is the members' arithmetic mean.
inline std::vector<DnnModel> fit_ens_dnn(const HourlyPanel& panel,
                                         const SplitSpec& split,
                                         const std::vector<std::string>& exo,
                                         const SearchSpace& space, int budget,
                                         const std::array<std::uint64_t, 4>& seeds,
                                         const TrainOptions& opt = {}) {
  std::vector<DnnModel> members;
  for (std::uint64_t seed : seeds) {
    const auto best = random_search(
        space, budget, seed,
        [&](const NetworkSpec& cand, const DnnFeatureMask& mask) {
          TrainOptions quick = opt;
          quick.max_epochs = std::max(1, opt.max_epochs / 4);
          const auto m = fit_dnn(panel, split, exo, cand, mask, quick);
          Eigen::MatrixXd Xv =
              nn_detail::rows_for(panel, split.val_first, split.val_last, exo, mask);
          Xv = nn_detail::apply_preprocess(m, std::move(Xv));
          Eigen::MatrixXd Yv =
              nn_detail::targets_for(panel, split.val_first, split.val_last);
          Yv = ((Yv.array() - m.y_mean) / m.y_sd).matrix();
          return eval_loss(m.net, Xv, Yv);
        });
    members.push_back(fit_dnn(panel, split, exo, best.spec, best.mask, opt));
  }
  return members;
}

}  // namespace epfw

#endif  // EPFW_NN_HPP

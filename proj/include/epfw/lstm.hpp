#ifndef EPFW_LSTM_HPP
#define EPFW_LSTM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epfw/core.hpp"
#include "epfw/nn.hpp"
#include "epfw/panel.hpp"
#include "epfw/rng.hpp"

namespace epfw {

struct LstmSpec {
  int input_size = 0;
  int hidden_size = 32;
  int output_size = 24;
  double learning_rate = 1e-3;
  std::uint64_t init_seed = 0;

  void validate() const {
    if (input_size < 1 || hidden_size < 1 || output_size < 1)
      throw InvalidConfig("lstm: sizes must be >= 1");
    if (learning_rate <= 0.0) throw InvalidConfig("lstm: learning rate > 0");
  }
};

/// Single-layer LSTM cell: input, candidate, forget and output gates with
/// input->hidden and hidden->hidden weights, plus a linear readout head.
struct LstmNetwork {
  LstmSpec spec;
  Eigen::MatrixXd W_xi, W_hi, W_xc, W_hc, W_xf, W_hf, W_xo, W_ho;
  Eigen::VectorXd b_i, b_c, b_f, b_o;
  Eigen::MatrixXd W_y;  // output_size x hidden_size
  Eigen::VectorXd b_y;

  std::vector<Eigen::MatrixXd*> weight_list() {
    return {&W_xi, &W_hi, &W_xc, &W_hc, &W_xf, &W_hf, &W_xo, &W_ho, &W_y};
  }
  std::vector<Eigen::VectorXd*> bias_list() { return {&b_i, &b_c, &b_f, &b_o, &b_y}; }
};

struct LstmState {
  Eigen::VectorXd C, h;
};

inline LstmState lstm_initial_state(const LstmSpec& spec) {
  return {Eigen::VectorXd::Zero(spec.hidden_size), Eigen::VectorXd::Zero(spec.hidden_size)};
}

inline LstmNetwork make_lstm(const LstmSpec& spec) {
  spec.validate();
  LstmNetwork net;
  net.spec = spec;
  Rng rng(spec.init_seed);
  const int in = spec.input_size, hid = spec.hidden_size, out = spec.output_size;
  auto init = [&](Eigen::MatrixXd& m, int rows, int cols) {
    const double scale = std::sqrt(1.0 / cols);
    m.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  };
  init(net.W_xi, hid, in);
  init(net.W_hi, hid, hid);
  init(net.W_xc, hid, in);
  init(net.W_hc, hid, hid);
  init(net.W_xf, hid, in);
  init(net.W_hf, hid, hid);
  init(net.W_xo, hid, in);
  init(net.W_ho, hid, hid);
  init(net.W_y, out, hid);
  net.b_i = Eigen::VectorXd::Zero(hid);
  net.b_c = Eigen::VectorXd::Zero(hid);
  net.b_f = Eigen::VectorXd::Ones(hid);  // open forget gate at start
  net.b_o = Eigen::VectorXd::Zero(hid);
  net.b_y = Eigen::VectorXd::Zero(out);
  return net;
}

namespace lstm_detail {

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

/// Everything one step produces, kept for backpropagation through time.
struct StepCache {
  Eigen::VectorXd x, h_prev, C_prev;
  Eigen::VectorXd i, f, o, cstar, C, tanhC, h;
};

}  // namespace lstm_detail

/// One recurrence step:
///   i = sigma(W_xi x + W_hi h + b_i)      c* = tanh(W_xc x + W_hc h + b_c)
///   f = sigma(W_xf x + W_hf h + b_f)      C' = f.C + i.c*
///   o = sigma(W_xo x + W_ho h + b_o)      h' = o.tanh(C')
inline LstmState lstm_step(const LstmNetwork& net, const LstmState& state,
                           const Eigen::VectorXd& x,
                           lstm_detail::StepCache* cache = nullptr) {
  if (x.size() != net.spec.input_size || state.h.size() != net.spec.hidden_size)
    throw DimensionMismatch("lstm_step: dimension mismatch");
  using lstm_detail::sigmoid;
  const Eigen::VectorXd i = sigmoid(net.W_xi * x + net.W_hi * state.h + net.b_i);
  const Eigen::VectorXd cstar =
      (net.W_xc * x + net.W_hc * state.h + net.b_c).array().tanh().matrix();
  const Eigen::VectorXd f = sigmoid(net.W_xf * x + net.W_hf * state.h + net.b_f);
  const Eigen::VectorXd o = sigmoid(net.W_xo * x + net.W_ho * state.h + net.b_o);

  LstmState next;
  next.C = f.cwiseProduct(state.C) + i.cwiseProduct(cstar);
  const Eigen::VectorXd tanhC = next.C.array().tanh().matrix();
  next.h = o.cwiseProduct(tanhC);

  if (cache != nullptr)
    *cache = {x, state.h, state.C, i, f, o, cstar, next.C, tanhC, next.h};
  return next;
}

/// Runs the sequence from a zero state and applies the linear head.
inline Eigen::VectorXd lstm_forward(const LstmNetwork& net,
                                    const std::vector<Eigen::VectorXd>& sequence) {
  if (sequence.empty()) throw DimensionMismatch("lstm_forward: empty sequence");
  LstmState s = lstm_initial_state(net.spec);
  for (const auto& x : sequence) s = lstm_step(net, s, x);
  return net.W_y * s.h + net.b_y;
}

struct LstmGradients {
  std::vector<Eigen::MatrixXd> W;  // aligned with weight_list()
  std::vector<Eigen::VectorXd> b;  // aligned with bias_list()
  double loss = 0.0;
};

/// BPTT gradients of the batch loss: mean over sequences of the squared
/// error summed over the 24 outputs.
inline LstmGradients lstm_backprop(LstmNetwork& net,
                                   const std::vector<std::vector<Eigen::VectorXd>>& batch,
                                   const std::vector<Eigen::VectorXd>& targets) {
  if (batch.empty() || batch.size() != targets.size())
    throw DimensionMismatch("lstm_backprop: batch/target mismatch");

  LstmGradients g;
  for (auto* w : net.weight_list()) g.W.emplace_back(Eigen::MatrixXd::Zero(w->rows(), w->cols()));
  for (auto* b : net.bias_list()) g.b.emplace_back(Eigen::VectorXd::Zero(b->size()));
  // gradient slots, matching weight_list/bias_list order
  auto& gW_xi = g.W[0];
  auto& gW_hi = g.W[1];
  auto& gW_xc = g.W[2];
  auto& gW_hc = g.W[3];
  auto& gW_xf = g.W[4];
  auto& gW_hf = g.W[5];
  auto& gW_xo = g.W[6];
  auto& gW_ho = g.W[7];
  auto& gW_y = g.W[8];
  auto& gb_i = g.b[0];
  auto& gb_c = g.b[1];
  auto& gb_f = g.b[2];
  auto& gb_o = g.b[3];
  auto& gb_y = g.b[4];

  const double n = static_cast<double>(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& seq = batch[s];
    std::vector<lstm_detail::StepCache> caches(seq.size());
    LstmState st = lstm_initial_state(net.spec);
    for (std::size_t t = 0; t < seq.size(); ++t)
      st = lstm_step(net, st, seq[t], &caches[t]);

    const Eigen::VectorXd yhat = net.W_y * st.h + net.b_y;
    const Eigen::VectorXd err = yhat - targets[s];
    g.loss += err.squaredNorm() / n;

    const Eigen::VectorXd dy = 2.0 * err / n;
    gW_y += dy * st.h.transpose();
    gb_y += dy;

    Eigen::VectorXd dh = net.W_y.transpose() * dy;
    Eigen::VectorXd dC = Eigen::VectorXd::Zero(net.spec.hidden_size);
    for (std::size_t t = seq.size(); t-- > 0;) {
      const auto& c = caches[t];
      const Eigen::VectorXd do_ = dh.cwiseProduct(c.tanhC);
      dC += dh.cwiseProduct(c.o).cwiseProduct(
          (1.0 - c.tanhC.array().square()).matrix());
      const Eigen::VectorXd di = dC.cwiseProduct(c.cstar);
      const Eigen::VectorXd dcstar = dC.cwiseProduct(c.i);
      const Eigen::VectorXd df = dC.cwiseProduct(c.C_prev);
      const Eigen::VectorXd dC_prev = dC.cwiseProduct(c.f);

      const Eigen::VectorXd da_i =
          di.cwiseProduct(c.i).cwiseProduct((1.0 - c.i.array()).matrix());
      const Eigen::VectorXd da_f =
          df.cwiseProduct(c.f).cwiseProduct((1.0 - c.f.array()).matrix());
      const Eigen::VectorXd da_o =
          do_.cwiseProduct(c.o).cwiseProduct((1.0 - c.o.array()).matrix());
      const Eigen::VectorXd da_c =
          dcstar.cwiseProduct((1.0 - c.cstar.array().square()).matrix());

      gW_xi += da_i * c.x.transpose();
      gW_hi += da_i * c.h_prev.transpose();
      gW_xc += da_c * c.x.transpose();
      gW_hc += da_c * c.h_prev.transpose();
      gW_xf += da_f * c.x.transpose();
      gW_hf += da_f * c.h_prev.transpose();
      gW_xo += da_o * c.x.transpose();
      gW_ho += da_o * c.h_prev.transpose();
      gb_i += da_i;
      gb_c += da_c;
      gb_f += da_f;
      gb_o += da_o;

      dh = net.W_hi.transpose() * da_i + net.W_hc.transpose() * da_c +
           net.W_hf.transpose() * da_f + net.W_ho.transpose() * da_o;
      dC = dC_prev;
    }
  }
  return g;
}

inline double lstm_eval_loss(const LstmNetwork& net,
                             const std::vector<std::vector<Eigen::VectorXd>>& batch,
                             const std::vector<Eigen::VectorXd>& targets) {
  double loss = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s)
    loss += (lstm_forward(net, batch[s]) - targets[s]).squaredNorm();
  return loss / static_cast<double>(batch.size());
}

/// Full-batch Adam with early stopping on validation loss; restores the
/// best-validation weights.
inline TrainHistory train_lstm(LstmNetwork& net,
                               const std::vector<std::vector<Eigen::VectorXd>>& train_seqs,
                               const std::vector<Eigen::VectorXd>& train_targets,
                               const std::vector<std::vector<Eigen::VectorXd>>& val_seqs,
                               const std::vector<Eigen::VectorXd>& val_targets,
                               int max_epochs = 150, int patience = 10) {
  if (train_seqs.empty() || val_seqs.empty())
    throw DimensionMismatch("train_lstm: empty train or validation set");
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  auto weights = net.weight_list();
  auto biases = net.bias_list();
  std::vector<Eigen::MatrixXd> mW, vW, bestW;
  std::vector<Eigen::VectorXd> mb, vb, bestb;
  for (auto* w : weights) {
    mW.emplace_back(Eigen::MatrixXd::Zero(w->rows(), w->cols()));
    vW.emplace_back(Eigen::MatrixXd::Zero(w->rows(), w->cols()));
    bestW.push_back(*w);
  }
  for (auto* b : biases) {
    mb.emplace_back(Eigen::VectorXd::Zero(b->size()));
    vb.emplace_back(Eigen::VectorXd::Zero(b->size()));
    bestb.push_back(*b);
  }

  TrainHistory hist;
  int stall = 0;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    const auto g = lstm_backprop(net, train_seqs, train_targets);
    if (!std::isfinite(g.loss))
      throw NonFiniteLoss("lstm training diverged at epoch " + std::to_string(epoch));
    hist.train_loss.push_back(g.loss);

    const double c1 = 1.0 - std::pow(beta1, epoch + 1.0);
    const double c2 = 1.0 - std::pow(beta2, epoch + 1.0);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      mW[k] = beta1 * mW[k] + (1.0 - beta1) * g.W[k];
      vW[k] = beta2 * vW[k] + (1.0 - beta2) * g.W[k].cwiseProduct(g.W[k]);
      *weights[k] -= net.spec.learning_rate *
                     (mW[k] / c1).cwiseQuotient(((vW[k] / c2).cwiseSqrt().array() + adam_eps).matrix());
    }
    for (std::size_t k = 0; k < biases.size(); ++k) {
      mb[k] = beta1 * mb[k] + (1.0 - beta1) * g.b[k];
      vb[k] = beta2 * vb[k] + (1.0 - beta2) * g.b[k].cwiseProduct(g.b[k]);
      *biases[k] -= net.spec.learning_rate *
                    (mb[k] / c1).cwiseQuotient(((vb[k] / c2).cwiseSqrt().array() + adam_eps).matrix());
    }

    const double vl = lstm_eval_loss(net, val_seqs, val_targets);
    if (!std::isfinite(vl))
      throw NonFiniteLoss("lstm validation loss non-finite at epoch " +
                          std::to_string(epoch));
    hist.val_loss.push_back(vl);
    if (vl < hist.best_val) {
      hist.best_val = vl;
      hist.best_epoch = epoch;
      for (std::size_t k = 0; k < weights.size(); ++k) bestW[k] = *weights[k];
      for (std::size_t k = 0; k < biases.size(); ++k) bestb[k] = *biases[k];
      stall = 0;
    } else if (++stall > patience) {
      break;
    }
  }
  for (std::size_t k = 0; k < weights.size(); ++k) *weights[k] = bestW[k];
  for (std::size_t k = 0; k < biases.size(); ++k) *biases[k] = bestb[k];
  return hist;
}

// ---------------------------------------------------------------------------
// Panel-level forecaster: 7 daily steps over the past week of prices plus
// next-day exogenous values, one 24-hour output through the head.

struct LstmModel {
  LstmNetwork net;
  std::vector<std::string> exo;
  double x_mean = 0.0, x_sd = 1.0;  // shared input scaling
  double y_mean = 0.0, y_sd = 1.0;
};

namespace lstm_detail {

/// Step t (t=0..6) sees the prices of day-7+t and the exogenous values of
/// day-6+t, so the last step carries the delivery day's fundamentals while
/// prices stop at day-1.
inline std::vector<Eigen::VectorXd> sequence_for(const PanelView& view,
                                                 const std::vector<std::string>& exo,
                                                 double x_mean, double x_sd) {
  const Date d = view.forecast_day();
  std::vector<Eigen::VectorXd> seq;
  for (int t = 0; t < 7; ++t) {
    Eigen::VectorXd x(24 * (1 + static_cast<Eigen::Index>(exo.size())));
    Eigen::Index k = 0;
    for (int h = 0; h < 24; ++h) x(k++) = view.at("price", d - 7 + t, h);
    for (const auto& e : exo)
      for (int h = 0; h < 24; ++h) x(k++) = view.at(e, d - 6 + t, h);
    seq.push_back(((x.array() - x_mean) / x_sd).matrix());
  }
  return seq;
}

}  // namespace lstm_detail

inline LstmModel fit_lstm(const HourlyPanel& panel, const SplitSpec& split,
                          const std::vector<std::string>& exo, LstmSpec spec,
                          int max_epochs = 80, int patience = 8) {
  split.validate();
  const Date first_ok = panel.first_day() + 7;
  const Date tr_first = std::max(split.train_first, first_ok);
  if (tr_first > split.train_last)
    throw InsufficientHistory("lstm: training range before panel start");

  LstmModel model;
  model.exo = exo;
  spec.input_size = 24 * (1 + static_cast<int>(exo.size()));

  // pooled scaling over the training days' raw inputs and targets
  double sum = 0.0, sq = 0.0, ysum = 0.0, ysq = 0.0;
  std::size_t count = 0, ycount = 0;
  for (Date d = tr_first; d <= split.train_last; d = d + 1) {
    const auto seq = lstm_detail::sequence_for(PanelView(panel, d), exo, 0.0, 1.0);
    for (const auto& x : seq) {
      sum += x.sum();
      sq += x.squaredNorm();
      count += static_cast<std::size_t>(x.size());
    }
    for (int h = 0; h < 24; ++h) {
      const double y = panel.at("price", d, h);
      ysum += y;
      ysq += y * y;
      ycount += 1;
    }
  }
  model.x_mean = sum / static_cast<double>(count);
  const double xvar = sq / static_cast<double>(count) - model.x_mean * model.x_mean;
  model.x_sd = xvar > 0.0 ? std::sqrt(xvar) : 1.0;
  model.y_mean = ysum / static_cast<double>(ycount);
  const double yvar = ysq / static_cast<double>(ycount) - model.y_mean * model.y_mean;
  model.y_sd = yvar > 0.0 ? std::sqrt(yvar) : 1.0;

  auto gather = [&](Date first, Date last,
                    std::vector<std::vector<Eigen::VectorXd>>& seqs,
                    std::vector<Eigen::VectorXd>& targets) {
    for (Date d = first; d <= last; d = d + 1) {
      seqs.push_back(lstm_detail::sequence_for(PanelView(panel, d), exo,
                                               model.x_mean, model.x_sd));
      Eigen::VectorXd y(24);
      for (int h = 0; h < 24; ++h)
        y(h) = (panel.at("price", d, h) - model.y_mean) / model.y_sd;
      targets.push_back(std::move(y));
    }
  };
  std::vector<std::vector<Eigen::VectorXd>> tr_seqs, val_seqs;
  std::vector<Eigen::VectorXd> tr_targets, val_targets;
  gather(tr_first, split.train_last, tr_seqs, tr_targets);
  gather(split.val_first, split.val_last, val_seqs, val_targets);

  model.net = make_lstm(spec);
  train_lstm(model.net, tr_seqs, tr_targets, val_seqs, val_targets, max_epochs,
             patience);
  return model;
}

inline std::array<double, 24> forecast_lstm(const LstmModel& model,
                                            const HourlyPanel& panel, Date day) {
  const auto seq = lstm_detail::sequence_for(PanelView(panel, day), model.exo,
                                             model.x_mean, model.x_sd);
  const Eigen::VectorXd out = lstm_forward(model.net, seq);
  std::array<double, 24> f{};
  for (int h = 0; h < 24; ++h) f[h] = out(h) * model.y_sd + model.y_mean;
  return f;
}

}  // namespace epfw

#endif  // EPFW_LSTM_HPP

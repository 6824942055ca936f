#pragma once

// Adam training of MLP surrogates and library-based architecture selection.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "assent/core/random.hpp"
#include "assent/surrogate/mlp.hpp"

namespace assent {

struct Sample {
  std::vector<double> input;
  std::vector<double> output;
};
using Dataset = std::vector<Sample>;

struct TrainConfig {
  double learning_rate = 1e-4;
  /// Learning rate is halved after this many epochs without a training-loss
  /// improvement.
  std::size_t plateau_epochs = 10;
  double min_learning_rate = 1e-8;
  std::size_t max_epochs = 100000;
  /// Stop after this many epochs without a validation improvement; the best
  /// validation weights are returned.
  std::size_t patience = 50;
  /// A loss counts as improved when it drops below best * (1 - rel_tolerance)
  /// - abs_tolerance.
  double rel_tolerance = 1e-6;
  double abs_tolerance = 1e-14;
  std::size_t full_batch_below = 256;
  std::size_t batch_size = 64;
  double validation_fraction = 0.2;
  double l2 = 0.0;
  bool normalize_inputs = true;
  bool normalize_outputs = true;
  std::uint64_t rng_seed = 0;
  unsigned jobs = 1;  // concurrent library candidates

  void validate() const {
    if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
      throw std::invalid_argument("validation_fraction must be in (0, 0.5]");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  }
};

struct TrainResult {
  MLPModel model;
  double validation_mse = 0.0;
  /// Set when the data was too small for a held-out split; validation_mse is
  /// then the training MSE.
  bool validation_is_training = false;
  std::size_t epochs = 0;
};

namespace detail {

struct Matrices {
  Eigen::MatrixXd x;  // input_dim x n, scaled
  Eigen::MatrixXd y;  // output_dim x n, scaled
};

inline Matrices to_matrices(const Dataset& data, const std::vector<std::size_t>& idx,
                            const MLPModel& m) {
  Matrices out{Eigen::MatrixXd(m.input_size(), idx.size()),
               Eigen::MatrixXd(m.output_size(), idx.size())};
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& s = data[idx[c]];
    for (std::size_t j = 0; j < m.input_size(); ++j) out.x(j, c) = m.input_scaler.apply(j, s.input[j]);
    for (std::size_t j = 0; j < m.output_size(); ++j) out.y(j, c) = m.output_scaler.apply(j, s.output[j]);
  }
  return out;
}

inline double mse(const MLPModel& m, const Matrices& d) {
  if (d.x.cols() == 0) return 0.0;
  Eigen::MatrixXd a = d.x;
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    Eigen::MatrixXd z = (m.weights[i] * a).colwise() + m.biases[i];
    a = i + 1 < m.weights.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return (a - d.y).squaredNorm() / double(d.y.size());
}

struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

/// Gradient of mean squared error (over samples and outputs) on one batch.
inline double loss_and_gradient(const MLPModel& m, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& y, double l2, Gradients& g) {
  const std::size_t L = m.weights.size();
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = x, acts[i] = post-activation of layer i
  acts.reserve(L + 1);
  acts.push_back(x);
  for (std::size_t i = 0; i < L; ++i) {
    Eigen::MatrixXd z = (m.weights[i] * acts.back()).colwise() + m.biases[i];
    acts.push_back(i + 1 < L ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
  }
  const double n = double(x.cols());
  const double denom = n * double(y.rows());
  Eigen::MatrixXd delta = (acts.back() - y) * (2.0 / denom);
  double loss = (acts.back() - y).squaredNorm() / denom;
  g.w.resize(L);
  g.b.resize(L);
  for (std::size_t i = L; i-- > 0;) {
    g.w[i] = delta * acts[i].transpose();
    g.b[i] = delta.rowwise().sum();
    if (l2 > 0.0) {
      g.w[i] += (l2 / n) * m.weights[i];
      loss += 0.5 * (l2 / n) * m.weights[i].squaredNorm();
    }
    if (i > 0) {
      delta = (m.weights[i].transpose() * delta).cwiseProduct(
          (acts[i].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

inline void glorot_init(MLPModel& m, Engine& rng) {
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    const double fan_in = double(m.weights[i].cols());
    const double fan_out = double(m.weights[i].rows());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index r = 0; r < m.weights[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < m.weights[i].cols(); ++c)
        m.weights[i](r, c) = uniform_real(rng, -limit, limit);
    m.biases[i].setZero();
    }
  }
}

}  // namespace detail

/// Trains a ReLU network with the given hidden layer sizes. When `warm_start`
/// has the same shape its weights seed the optimizer instead of a fresh
/// Glorot initialization.
inline TrainResult train(const Dataset& data, const std::vector<std::size_t>& hidden,
                         const TrainConfig& cfg, const MLPModel* warm_start = nullptr) {
  cfg.validate();
  if (data.size() < 5) throw std::invalid_argument("train: need at least 5 samples");
  const std::size_t in_dim = data.front().input.size();
  const std::size_t out_dim = data.front().output.size();
  for (const auto& s : data)
    if (s.input.size() != in_dim || s.output.size() != out_dim)
      throw std::invalid_argument("train: ragged dataset");

  std::vector<std::size_t> sizes{in_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out_dim);

  Engine rng(cfg.rng_seed);
  MLPModel model = MLPModel::zeros(sizes);
  model.normalize_inputs = cfg.normalize_inputs;
  model.normalize_outputs = cfg.normalize_outputs;
  {
    std::vector<std::vector<double>> xs, ys;
    for (const auto& s : data) {
      xs.push_back(s.input);
      ys.push_back(s.output);
    }
    model.input_scaler = cfg.normalize_inputs ? AffineScaler::fit_range(xs, in_dim)
                                              : AffineScaler::identity(in_dim);
    model.output_scaler = cfg.normalize_outputs ? AffineScaler::fit_range(ys, out_dim)
                                                : AffineScaler::identity(out_dim);
  }
  detail::glorot_init(model, rng);
  const bool warm = warm_start && warm_start->layer_sizes == sizes && warm_start->finite();
  if (warm) {
    model.weights = warm_start->weights;
    model.biases = warm_start->biases;
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * double(data.size())));
  TrainResult result;
  std::vector<std::size_t> train_idx, val_idx;
  if (n_val < 2) {
    train_idx = order;
    val_idx = order;
    result.validation_is_training = true;
  } else {
    val_idx.assign(order.end() - std::ptrdiff_t(n_val), order.end());
    train_idx.assign(order.begin(), order.end() - std::ptrdiff_t(n_val));
  }
  const auto train_m = detail::to_matrices(data, train_idx, model);
  const auto val_m = detail::to_matrices(data, val_idx, model);
  if (!warm) {
    // Start from the best constant predictor: zero output weights and the
    // mean training target as output bias.
    model.weights.back().setZero();
    model.biases.back() = train_m.y.rowwise().mean();
  }

  // Adam state.
  const std::size_t L = model.weights.size();
  std::vector<Eigen::MatrixXd> mw(L), vw(L);
  std::vector<Eigen::VectorXd> mb(L), vb(L);
  for (std::size_t i = 0; i < L; ++i) {
    mw[i] = Eigen::MatrixXd::Zero(model.weights[i].rows(), model.weights[i].cols());
    vw[i] = mw[i];
    mb[i] = Eigen::VectorXd::Zero(model.biases[i].size());
    vb[i] = mb[i];
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr = cfg.learning_rate;
  std::uint64_t step = 0;

  MLPModel best = model;
  double best_val = detail::mse(model, val_m);
  double best_train = std::numeric_limits<double>::infinity();
  std::size_t since_val = 0, since_train = 0;
  const bool full_batch = train_idx.size() < cfg.full_batch_below;
  std::vector<std::size_t> batch_order(train_idx.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);
  detail::Gradients g;

  std::size_t epoch = 0;
  for (; epoch < cfg.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    const std::size_t bs = full_batch ? train_idx.size() : cfg.batch_size;
    if (!full_batch) shuffle(batch_order, rng);
    for (std::size_t start = 0; start < batch_order.size(); start += bs) {
      const std::size_t cnt = std::min(bs, batch_order.size() - start);
      double loss;
      if (full_batch) {
        loss = detail::loss_and_gradient(model, train_m.x, train_m.y, cfg.l2, g);
      } else {
        Eigen::MatrixXd bx(train_m.x.rows(), cnt), by(train_m.y.rows(), cnt);
        for (std::size_t c = 0; c < cnt; ++c) {
          bx.col(c) = train_m.x.col(batch_order[start + c]);
          by.col(c) = train_m.y.col(batch_order[start + c]);
        }
        loss = detail::loss_and_gradient(model, bx, by, cfg.l2, g);
      }
      epoch_loss += loss * double(cnt) / double(batch_order.size());
      ++step;
      const double c1 = 1.0 - std::pow(beta1, double(step));
      const double c2 = 1.0 - std::pow(beta2, double(step));
      for (std::size_t i = 0; i < L; ++i) {
        mw[i] = beta1 * mw[i] + (1 - beta1) * g.w[i];
        vw[i] = beta2 * vw[i] + (1 - beta2) * g.w[i].cwiseAbs2();
        mb[i] = beta1 * mb[i] + (1 - beta1) * g.b[i];
        vb[i] = beta2 * vb[i] + (1 - beta2) * g.b[i].cwiseAbs2();
        model.weights[i].array() -=
            lr * (mw[i].array() / c1) / ((vw[i].array() / c2).sqrt() + eps);
        model.biases[i].array() -=
            lr * (mb[i].array() / c1) / ((vb[i].array() / c2).sqrt() + eps);
      }
    }
    if (!model.finite()) break;

    const double train_loss = full_batch ? epoch_loss : detail::mse(model, train_m);
    auto improved = [&](double v, double best) {
      return v < best * (1.0 - cfg.rel_tolerance) - cfg.abs_tolerance;
    };
    if (improved(train_loss, best_train)) {
      best_train = train_loss;
      since_train = 0;
    } else if (++since_train >= cfg.plateau_epochs) {
      lr *= 0.5;
      since_train = 0;
      if (lr < cfg.min_learning_rate) break;
    }

    const double val = detail::mse(model, val_m);
    if (improved(val, best_val)) {
      best_val = val;
      best = model;
      since_val = 0;
    } else if (++since_val >= cfg.patience) {
      break;
    }
  }
  result.model = std::move(best);
  result.validation_mse = best_val;
  result.epochs = epoch;
  return result;
}

struct SelectionResult {
  TrainResult best;
  std::size_t library_index = 0;
  std::vector<double> validation_mse;  // per library entry
};

/// Trains every library candidate and keeps the least validation MSE
/// (earlier entry on ties).
inline SelectionResult select_architecture(const std::vector<std::vector<std::size_t>>& library,
                                           const Dataset& data, const TrainConfig& cfg) {
  if (library.empty()) throw std::invalid_argument("select_architecture: empty library");
  std::vector<TrainResult> results(library.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.jobs, unsigned(library.size())));
  if (workers == 1) {
    for (std::size_t k = 0; k < library.size(); ++k) results[k] = train(data, library[k], cfg);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < library.size(); k = next++)
          results[k] = train(data, library[k], cfg);
      });
    for (auto& t : pool) t.join();
  }
  SelectionResult sel;
  for (std::size_t k = 0; k < library.size(); ++k) {
    sel.validation_mse.push_back(results[k].validation_mse);
    if (results[k].validation_mse < results[sel.library_index].validation_mse) sel.library_index = k;
  }
  sel.best = std::move(results[sel.library_index]);
  return sel;
}

}  // namespace assent

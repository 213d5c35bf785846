#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mcaeeg/cnn3d.hpp"
#include "mcaeeg/error.hpp"
#include "mcaeeg/random.hpp"
#include "mcaeeg/tensor.hpp"

namespace mcaeeg::cnn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(const ModelParams& params, AdamConfig cfg = {}) : cfg_(cfg) {
    for (const auto& p : params.tensors) {
      m_.emplace_back(p.value.shape());
      v_.emplace_back(p.value.shape());
    }
  }

  void step(ModelParams& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.tensors.size(); ++k) {
      auto& p = params.tensors[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
        v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[k][i] / c1;
        const double vhat = v_[k][i] / c2;
        p.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
  void push_back(Tensor x, int y) {
    inputs.push_back(std::move(x));
    labels.push_back(y);
  }
};

struct TrainConfig {
  AdamConfig adam{};
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;

  void validate() const {
    if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw ConfigError("TrainConfig: train_fraction must lie in (0, 1)");
    }
    if (!(adam.lr > 0.0)) throw ConfigError("TrainConfig: learning rate must be positive");
  }
};

struct EpochStats {
  std::size_t epoch;
  double loss;      // mean mini-batch loss over the epoch
  double accuracy;  // training accuracy measured during the epoch
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Binary metrics with label 1 ("high") as the positive class.
struct Metrics {
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  Confusion confusion;

  static Metrics from_confusion(const Confusion& c) {
    Metrics m;
    m.confusion = c;
    const double total = static_cast<double>(c.tp + c.fp + c.fn + c.tn);
    m.accuracy = static_cast<double>(c.tp + c.tn) / total;
    m.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
  }
};

inline Metrics evaluate(const Network& net, const Dataset& data) {
  if (data.size() == 0) throw InvalidArgument("evaluate: empty dataset");
  Confusion c;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int pred = net.predict(data.inputs[i]);
    const int truth = data.labels[i];
    if (pred == 1 && truth == 1) ++c.tp;
    else if (pred == 1 && truth == 0) ++c.fp;
    else if (pred == 0 && truth == 1) ++c.fn;
    else ++c.tn;
  }
  return Metrics::from_confusion(c);
}

/// Seeded mini-batch Adam. The network's parameters are updated in place;
/// the final parameters and per-epoch statistics are returned.
inline TrainResult train(Network& net, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw InvalidArgument("train: empty dataset");
  bool has0 = false, has1 = false;
  for (int y : data.labels) {
    has0 |= y == 0;
    has1 |= y == 1;
  }
  if (!(has0 && has1)) throw InvalidArgument("train: dataset must contain both classes");

  Rng rng(cfg.seed);
  Adam opt(net.params(), cfg.adam);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<Tensor> batch;
  std::vector<int> labels, preds;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0, correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(data.inputs[order[i]]);
        labels.push_back(data.labels[order[i]]);
      }
      preds.clear();
      loss_sum += net.backward(batch, labels, &preds);
      for (std::size_t i = 0; i < batch.size(); ++i) correct += preds[i] == labels[i];
      opt.step(net.params());
      ++batches;
    }
    if (!net.params().all_finite()) throw Error("train: parameters became non-finite");
    result.history.push_back({epoch, loss_sum / static_cast<double>(batches),
                              static_cast<double>(correct) / static_cast<double>(data.size())});
  }
  result.params = net.params();
  return result;
}

}  // namespace mcaeeg::cnn

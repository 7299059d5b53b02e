// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "datl/config.hpp"
#include "datl/dataset.hpp"
#include "datl/error.hpp"
#include "datl/model.hpp"
#include "datl/rng.hpp"

namespace datl {

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 64;
  double base_learning_rate = 0.1;
  std::size_t warmup_steps = 0;
  double momentum = 0.9;  // Nesterov
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size == 0) throw Error("train config: batch_size must be positive");
    if (!(base_learning_rate > 0.0) || !std::isfinite(base_learning_rate))
      throw Error("train config: base_learning_rate must be positive");
    if (warmup_steps > steps) throw Error("train config: warmup_steps exceeds steps");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("train config: momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
      throw Error("train config: weight_decay must be nonnegative");
  }

  /// Reads `<prefix>steps`, `<prefix>batch_size`, `<prefix>learning_rate`,
  /// `<prefix>warmup_steps`, `<prefix>momentum`, `<prefix>weight_decay` and
  /// `<prefix>seed`; absent keys keep the values of `defaults`.
  static TrainConfig from_config(const KeyValueConfig& cfg, const std::string& prefix,
                                 const TrainConfig& defaults) {
    TrainConfig c;
    c.steps = cfg.get<std::size_t>(prefix + "steps", defaults.steps);
    c.batch_size = cfg.get<std::size_t>(prefix + "batch_size", defaults.batch_size);
    c.base_learning_rate = cfg.get<double>(prefix + "learning_rate", defaults.base_learning_rate);
    c.warmup_steps = cfg.get<std::size_t>(prefix + "warmup_steps", defaults.warmup_steps);
    c.momentum = cfg.get<double>(prefix + "momentum", defaults.momentum);
    c.weight_decay = cfg.get<double>(prefix + "weight_decay", defaults.weight_decay);
    c.seed = cfg.get<std::uint64_t>(prefix + "seed", defaults.seed);
    c.validate();
    return c;
  }

  static TrainConfig from_config(const KeyValueConfig& cfg, const std::string& prefix = "");

  std::string to_config(const std::string& prefix = "") const {
    return prefix + "steps=" + std::to_string(steps) + "\n" + prefix + "batch_size=" + std::to_string(batch_size) +
           "\n" + prefix + "learning_rate=" + io::format_double(base_learning_rate) + "\n" + prefix +
           "warmup_steps=" + std::to_string(warmup_steps) + "\n" + prefix +
           "momentum=" + io::format_double(momentum) + "\n" + prefix +
           "weight_decay=" + io::format_double(weight_decay) + "\n" + prefix + "seed=" + std::to_string(seed) + "\n";
  }
};

inline TrainConfig TrainConfig::from_config(const KeyValueConfig& cfg, const std::string& prefix) {
  return from_config(cfg, prefix, TrainConfig{});
}

/// Linear ramp from 0 over `warmup_steps`, then cosine decay to 0 at `steps`.
inline double learning_rate_at(const TrainConfig& config, std::size_t step) {
  if (step >= config.steps)
    throw Error("step " + std::to_string(step) + " outside schedule of " + std::to_string(config.steps) + " steps");
  const double base = config.base_learning_rate;
  if (step < config.warmup_steps) return base * double(step) / double(config.warmup_steps);
  const double phase = double(step - config.warmup_steps) / double(config.steps - config.warmup_steps);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

template <typename Real>
struct LossAndGrad {
  double loss = 0.0;
  std::vector<Real> grad;
};

/// Weighted cross-entropy over a batch of rows of `data`.
///
/// Each example's target is the uniform distribution over its label set. The
/// loss is sum_i w_i * xent_i / sum_i w_i, plus weight_decay/2 * |theta|^2;
/// `grad` is its exact gradient in the model's parameter layout.
template <typename Real>
LossAndGrad<Real> weighted_xent_loss_and_grad(const BasicClassifier<Real>& model, const DatasetStore& data,
                                              std::span<const std::size_t> rows, std::span<const double> weights,
                                              double weight_decay = 0.0) {
  if (weights.size() != rows.size()) throw Error("weights length differs from batch size");
  if (data.dim() != model.input_dim()) throw Error("dimension mismatch between batch and model");
  double weight_sum = 0.0;
  for (double w : weights) {
    if (std::isnan(w)) throw Error("NaN example weight");
    if (w < 0.0) throw Error("negative example weight");
    weight_sum += w;
  }
  if (!(weight_sum > 0.0)) throw Error("example weights sum to zero");

  const std::size_t d = model.input_dim(), h = model.hidden_dim(), k = model.output_dim(), f = model.head_fan_in();
  const auto theta = model.parameters();
  LossAndGrad<Real> out;
  out.grad.assign(theta.size(), Real(0));
  Real* g = out.grad.data();
  Real* g_ow = g + model.output_weight_offset();
  Real* g_ob = g + model.output_bias_offset();
  const Real* ow = theta.data() + model.output_weight_offset();

  std::vector<Real> hidden, logits, dhidden(f);
  double loss = 0.0;
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const double w = weights[b];
    if (w == 0.0) continue;
    const auto x = data.row(rows[b]);
    for (float v : x)
      if (std::isnan(v)) throw Error("NaN feature in example '" + data.example_id(rows[b]) + "'");
    const auto& set = data.labels(rows[b]);
    if (set.empty()) throw Error("example '" + data.example_id(rows[b]) + "' has no labels");
    for (LabelIndex y : set)
      if (static_cast<std::size_t>(y) >= k) throw Error("label outside model output space");

    model.forward(x, hidden, logits);
    const Real top = *std::max_element(logits.begin(), logits.end());
    Real z = 0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(logits[c] - top);
    const Real log_z = top + std::log(z);
    const Real q = Real(1) / static_cast<Real>(set.size());
    double xent = 0.0;
    for (LabelIndex y : set) xent -= double(q) * double(logits[static_cast<std::size_t>(y)] - log_z);
    loss += w * xent;

    const Real scale = static_cast<Real>(w / weight_sum);
    // dL/dlogit_c = (p_c - q_c) * w_i / sum(w)
    std::vector<Real>& dlogit = logits;
    for (std::size_t c = 0; c < k; ++c) dlogit[c] = std::exp(logits[c] - log_z);
    for (LabelIndex y : set) dlogit[static_cast<std::size_t>(y)] -= q;
    for (auto& v : dlogit) v *= scale;

    std::fill(dhidden.begin(), dhidden.end(), Real(0));
    for (std::size_t c = 0; c < k; ++c) {
      const Real dc = dlogit[c];
      g_ob[c] += dc;
      Real* gw = g_ow + c * f;
      const Real* wc = ow + c * f;
      for (std::size_t j = 0; j < f; ++j) {
        gw[j] += dc * hidden[j];
        dhidden[j] += dc * wc[j];
      }
    }
    if (h) {
      Real* g_hw = g;
      Real* g_hb = g + model.hidden_bias_offset();
      for (std::size_t j = 0; j < h; ++j) {
        const Real da = dhidden[j] * (Real(1) - hidden[j] * hidden[j]);
        g_hb[j] += da;
        Real* gw = g_hw + j * d;
        for (std::size_t i = 0; i < d; ++i) gw[i] += da * static_cast<Real>(x[i]);
      }
    }
  }
  out.loss = loss / weight_sum;
  if (weight_decay > 0.0) {
    double sq = 0.0;
    for (std::size_t p = 0; p < theta.size(); ++p) {
      sq += double(theta[p]) * double(theta[p]);
      out.grad[p] += static_cast<Real>(weight_decay) * theta[p];
    }
    out.loss += 0.5 * weight_decay * sq;
  }
  return out;
}

/// Loss-only counterpart; used as the finite-difference oracle's objective.
template <typename Real>
double weighted_xent_loss(const BasicClassifier<Real>& model, const DatasetStore& data,
                          std::span<const std::size_t> rows, std::span<const double> weights,
                          double weight_decay = 0.0) {
  return weighted_xent_loss_and_grad(model, data, rows, weights, weight_decay).loss;
}

/// Called after every update with (step, batch loss, model).
template <typename Real>
using TrainObserver = std::function<void(std::size_t, double, const BasicClassifier<Real>&)>;

inline constexpr double kDivergenceLoss = 1e6;

/// Runs exactly `config.steps` Nesterov-momentum SGD updates on mini-batches
/// drawn from seeded per-epoch shuffles of `dataset`. With per-example weights
/// the loss is the Σw-normalized weighted cross-entropy; zero-weight examples
/// are left out of the shuffle pool.
template <typename Real>
BasicClassifier<Real> train(BasicClassifier<Real> model, const DatasetStore& dataset,
                            std::optional<std::span<const double>> example_weights, const TrainConfig& config,
                            const TrainObserver<Real>& observer = {}) {
  config.validate();
  if (config.steps == 0) return model;
  if (!dataset.labeled()) throw Error("training requires a labeled dataset");
  if (dataset.dim() != model.input_dim())
    throw Error("dimension mismatch: dataset D=" + std::to_string(dataset.dim()) +
                ", model D=" + std::to_string(model.input_dim()));
  if (dataset.num_labels() != model.output_dim())
    throw Error("label count mismatch: dataset K=" + std::to_string(dataset.num_labels()) +
                ", model K=" + std::to_string(model.output_dim()));
  if (example_weights && example_weights->size() != dataset.size())
    throw Error("per-example weights length differs from dataset size");

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (!example_weights || (*example_weights)[i] > 0.0) pool.push_back(i);
  if (pool.empty()) throw Error("no trainable examples (empty dataset or all-zero weights)");

  const std::size_t n = pool.size();
  std::vector<std::size_t> order = pool;
  std::size_t cursor = n;  // forces a shuffle before the first batch
  std::uint64_t epoch = 0;
  std::vector<std::size_t> rows(config.batch_size);
  std::vector<double> weights(config.batch_size, 1.0);
  std::vector<Real> velocity(model.parameter_count(), Real(0));
  const Real mu = static_cast<Real>(config.momentum);

  for (std::size_t step = 0; step < config.steps; ++step) {
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == n) {
        order = pool;
        CounterRng rng(config.seed, /*stream=*/epoch++);
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        cursor = 0;
      }
      rows[b] = order[cursor++];
      weights[b] = example_weights ? (*example_weights)[rows[b]] : 1.0;
    }
    const auto lg = weighted_xent_loss_and_grad(model, dataset, rows, weights, config.weight_decay);
    if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLoss)
      throw DivergenceError("training diverged at step " + std::to_string(step) +
                            ": loss=" + io::format_double(lg.loss) +
                            ", lr=" + io::format_double(learning_rate_at(config, step)));
    const Real lr = static_cast<Real>(learning_rate_at(config, step));
    auto theta = model.parameters();
    for (std::size_t p = 0; p < theta.size(); ++p) {
      velocity[p] = mu * velocity[p] + lg.grad[p];
      theta[p] -= lr * (lg.grad[p] + mu * velocity[p]);
    }
    if (observer) observer(step, lg.loss, model);
  }
  if (!model.all_finite()) throw DivergenceError("training produced non-finite parameters");
  return model;
}

/// Keeps the hidden layer of `pretrained`, swaps in a freshly initialized
/// output layer sized for `target`'s label space (seeded from config.seed),
/// then trains every parameter on `target`.
template <typename Real>
BasicClassifier<Real> replace_head(const BasicClassifier<Real>& pretrained, const LabelSpace& labels,
                                   std::uint64_t seed) {
  auto fresh = initialize_classifier<Real>(pretrained.input_dim(), pretrained.hidden_dim(), labels,
                                           derive_seed(seed, 0x4EAD));
  const auto body = pretrained.body_parameters();
  std::copy(body.begin(), body.end(), fresh.parameters().begin());
  return fresh;
}

template <typename Real>
BasicClassifier<Real> replace_head_and_finetune(const BasicClassifier<Real>& pretrained, const DatasetStore& target,
                                                const TrainConfig& config) {
  if (target.dim() != pretrained.input_dim())
    throw Error("dimension mismatch: target D=" + std::to_string(target.dim()) +
                ", pretrained D=" + std::to_string(pretrained.input_dim()));
  auto model = replace_head(pretrained, target.label_space(), config.seed);
  return train(std::move(model), target, std::nullopt, config);
}

/// True when a fine-tune keeps anything from pre-training (H > 0).
template <typename Real>
bool has_transferable_layers(const BasicClassifier<Real>& model) {
  return model.hidden_dim() > 0;
}

struct EvalResult {
  double top1 = 0.0;
  double mean_per_class = 0.0;
};

/// Top-1 accuracy and unweighted mean of per-class accuracies. A prediction
/// is correct when the argmax label is in the example's label set; a
/// multi-label example counts toward each of its classes.
template <typename Real>
EvalResult evaluate(const BasicClassifier<Real>& model, const DatasetStore& test) {
  if (test.empty()) throw Error("cannot evaluate on an empty test set");
  if (!test.labeled()) throw Error("evaluation requires a labeled test set");
  if (test.num_labels() != model.output_dim()) throw Error("label count mismatch between model and test set");
  std::vector<std::size_t> seen(model.output_dim(), 0), hit(model.output_dim(), 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto pred = static_cast<LabelIndex>(predict(model, test.row(i)));
    const auto& set = test.labels(i);
    const bool ok = std::find(set.begin(), set.end(), pred) != set.end();
    correct += ok;
    for (LabelIndex y : set) {
      ++seen[static_cast<std::size_t>(y)];
      hit[static_cast<std::size_t>(y)] += ok;
    }
  }
  double acc_sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) continue;
    acc_sum += double(hit[c]) / double(seen[c]);
    ++classes;
  }
  return {double(correct) / double(test.size()), acc_sum / double(classes)};
}

}  // namespace datl

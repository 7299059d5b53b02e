// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "datl/dataset.hpp"
#include "datl/error.hpp"
#include "datl/io.hpp"
#include "datl/label_space.hpp"
#include "datl/rng.hpp"
#include "json.hpp"

namespace datl {

/// Softmax classifier over a label space, either linear (hidden_dim == 0) or
/// with one tanh hidden layer.
///
/// Parameters live in one flat vector in this order:
///   hidden.weight [H x D] row-major, hidden.bias [H]   (absent when H == 0)
///   output.weight [K x F] row-major, output.bias [K]   (F = H, or D when H == 0)
/// Gradients share the same layout.
template <typename Real>
class BasicClassifier {
 public:
  using value_type = Real;

  BasicClassifier() = default;

  BasicClassifier(std::size_t input_dim, std::size_t hidden_dim, LabelSpace labels)
      : input_dim_(input_dim), hidden_dim_(hidden_dim), labels_(std::move(labels)) {
    if (input_dim_ == 0) throw Error("classifier input dimension must be positive");
    if (labels_.size() == 0) throw Error("classifier needs at least one output label");
    params_.assign(parameter_count(), Real(0));
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t output_dim() const noexcept { return labels_.size(); }
  std::size_t head_fan_in() const noexcept { return hidden_dim_ ? hidden_dim_ : input_dim_; }
  const LabelSpace& label_space() const noexcept { return labels_; }

  std::size_t parameter_count() const noexcept {
    const std::size_t hidden = hidden_dim_ ? hidden_dim_ * input_dim_ + hidden_dim_ : 0;
    return hidden + output_dim() * head_fan_in() + output_dim();
  }

  // Offsets into the flat parameter vector.
  std::size_t hidden_bias_offset() const noexcept { return hidden_dim_ * input_dim_; }
  std::size_t output_weight_offset() const noexcept {
    return hidden_dim_ ? hidden_dim_ * input_dim_ + hidden_dim_ : 0;
  }
  std::size_t output_bias_offset() const noexcept { return output_weight_offset() + output_dim() * head_fan_in(); }

  std::span<Real> parameters() noexcept { return params_; }
  std::span<const Real> parameters() const noexcept { return params_; }

  /// Parameters of the retained (non-head) layers.
  std::span<const Real> body_parameters() const noexcept {
    return std::span<const Real>(params_).first(output_weight_offset());
  }

  bool all_finite() const {
    return std::all_of(params_.begin(), params_.end(), [](Real v) { return std::isfinite(v); });
  }

  /// Hidden activations (or the input itself for linear models) followed by logits.
  template <typename In>
  void forward(std::span<const In> x, std::vector<Real>& hidden, std::vector<Real>& logits) const {
    if (x.size() != input_dim_)
      throw Error("dimension mismatch: input has " + std::to_string(x.size()) + " features, model expects " +
                  std::to_string(input_dim_));
    const std::size_t f = head_fan_in();
    hidden.resize(f);
    if (hidden_dim_) {
      const Real* w = params_.data();
      const Real* b = params_.data() + hidden_bias_offset();
      for (std::size_t j = 0; j < hidden_dim_; ++j) {
        Real acc = b[j];
        const Real* wj = w + j * input_dim_;
        for (std::size_t i = 0; i < input_dim_; ++i) acc += wj[i] * static_cast<Real>(x[i]);
        hidden[j] = std::tanh(acc);
      }
    } else {
      for (std::size_t i = 0; i < input_dim_; ++i) hidden[i] = static_cast<Real>(x[i]);
    }
    logits.resize(output_dim());
    const Real* w = params_.data() + output_weight_offset();
    const Real* b = params_.data() + output_bias_offset();
    for (std::size_t k = 0; k < output_dim(); ++k) {
      Real acc = b[k];
      const Real* wk = w + k * f;
      for (std::size_t j = 0; j < f; ++j) acc += wk[j] * hidden[j];
      logits[k] = acc;
    }
  }

  template <typename In>
  std::vector<Real> logits(std::span<const In> x) const {
    std::vector<Real> hidden, out;
    forward(x, hidden, out);
    return out;
  }

  /// Same architecture and values in another scalar type.
  template <typename Other>
  BasicClassifier<Other> cast() const {
    BasicClassifier<Other> out(input_dim_, hidden_dim_, labels_);
    std::transform(params_.begin(), params_.end(), out.parameters().begin(),
                   [](Real v) { return static_cast<Other>(v); });
    return out;
  }

  friend bool operator==(const BasicClassifier&, const BasicClassifier&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  LabelSpace labels_;
  std::vector<Real> params_;
};

using ClassifierModel = BasicClassifier<float>;

namespace detail {

template <typename Real>
void fill_uniform(std::span<Real> out, double bound, CounterRng& rng) {
  for (auto& v : out) v = static_cast<Real>((2.0 * rng.uniform() - 1.0) * bound);
}

}  // namespace detail

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
template <typename Real = float>
BasicClassifier<Real> initialize_classifier(std::size_t input_dim, std::size_t hidden_dim, LabelSpace labels,
                                            std::uint64_t seed) {
  BasicClassifier<Real> model(input_dim, hidden_dim, std::move(labels));
  auto p = model.parameters();
  CounterRng rng(seed, /*stream=*/0x1417);
  if (hidden_dim) {
    detail::fill_uniform(p.first(hidden_dim * input_dim), 1.0 / std::sqrt(double(input_dim)), rng);
  }
  const std::size_t off = model.output_weight_offset();
  detail::fill_uniform(p.subspan(off, model.output_dim() * model.head_fan_in()),
                       1.0 / std::sqrt(double(model.head_fan_in())), rng);
  return model;
}

/// Numerically stable softmax of logits / temperature.
template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits, double temperature = 1.0) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw Error("temperature must be positive and finite");
  for (Real v : logits)
    if (!std::isfinite(v)) throw Error("non-finite logit");
  std::vector<Real> out(logits.size());
  if (logits.empty()) return out;
  const Real top = *std::max_element(logits.begin(), logits.end());
  Real sum = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp((logits[k] - top) / static_cast<Real>(temperature));
    sum += out[k];
  }
  for (auto& v : out) v /= sum;
  return out;
}

/// Class probabilities for one example; logits are divided by `temperature`
/// before the softmax.
template <typename Real, typename In>
std::vector<Real> forward_softmax(const BasicClassifier<Real>& model, std::span<const In> x,
                                  double temperature = 1.0) {
  const auto z = model.logits(x);
  return softmax<Real>(z, temperature);
}

template <typename Real>
std::size_t predict(const BasicClassifier<Real>& model, std::span<const float> x) {
  const auto z = model.logits(x);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

// ---------------------------------------------------------------------------
// Model files: model.json + params.bin (+ labelspace.txt for the label names)

inline void save_model(const ClassifierModel& model, const std::filesystem::path& dir) {
  io::ensure_dir(dir);
  const auto d = model.input_dim(), h = model.hidden_dim(), k = model.output_dim(), f = model.head_fan_in();
  nlohmann::ordered_json meta;
  meta["input_dim"] = d;
  meta["hidden_dim"] = h;
  meta["output_dim"] = k;
  meta["activation"] = "tanh";
  meta["label_space_id"] = model.label_space().fingerprint();
  auto layout = nlohmann::json::array();
  if (h) {
    layout.push_back({{"name", "hidden.weight"}, {"shape", {h, d}}});
    layout.push_back({{"name", "hidden.bias"}, {"shape", {h}}});
  }
  layout.push_back({{"name", "output.weight"}, {"shape", {k, f}}});
  layout.push_back({{"name", "output.bias"}, {"shape", {k}}});
  meta["layout"] = layout;
  io::write_text(dir / "model.json", meta.dump(2) + "\n");
  io::write_f32(dir / "params.bin", model.parameters());
  io::write_text(dir / "labelspace.txt", detail::labelspace_text(model.label_space()));
}

inline ClassifierModel load_model(const std::filesystem::path& dir) {
  const auto meta_path = dir / "model.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_text(meta_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(meta_path.string(), e.byte, "malformed header", true);
  }
  std::size_t d = 0, h = 0, k = 0;
  std::string space_id;
  try {
    d = meta.at("input_dim").get<std::size_t>();
    h = meta.at("hidden_dim").get<std::size_t>();
    k = meta.at("output_dim").get<std::size_t>();
    space_id = meta.at("label_space_id").get<std::string>();
    if (meta.value("activation", std::string("tanh")) != "tanh") throw Error("unsupported activation");
  } catch (const std::exception& e) {
    throw FormatError(meta_path.string(), 1, std::string("malformed header: ") + e.what());
  }
  auto labels = detail::parse_labelspace(dir / "labelspace.txt", k);
  if (labels.fingerprint() != space_id)
    throw FormatError(meta_path.string(), 1, "label_space_id does not match labelspace.txt");
  ClassifierModel model(d, h, std::move(labels));
  const auto values = io::read_f32(dir / "params.bin", model.parameter_count());
  std::copy(values.begin(), values.end(), model.parameters().begin());
  if (!model.all_finite()) throw FormatError((dir / "params.bin").string(), 0, "non-finite parameter");
  return model;
}

}  // namespace datl

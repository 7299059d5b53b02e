// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "datl/dataset.hpp"
#include "datl/error.hpp"
#include "datl/io.hpp"
#include "datl/model.hpp"

namespace datl {

enum class DistributionKind { SourcePrior, TargetEstimate, ImportanceWeights };

inline std::string to_string(DistributionKind k) {
  switch (k) {
    case DistributionKind::SourcePrior: return "SourcePrior";
    case DistributionKind::TargetEstimate: return "TargetEstimate";
    case DistributionKind::ImportanceWeights: return "ImportanceWeights";
  }
  return "?";
}

inline DistributionKind parse_distribution_kind(const std::string& s) {
  if (s == "SourcePrior") return DistributionKind::SourcePrior;
  if (s == "TargetEstimate") return DistributionKind::TargetEstimate;
  if (s == "ImportanceWeights") return DistributionKind::ImportanceWeights;
  throw Error("unknown distribution kind '" + s + "'");
}

inline constexpr double kDefaultEstimationTemperature = 2.0;

/// One nonnegative value per source label: P_s(y), an estimate of P_t(y), or
/// the importance weights P_t(y)/P_s(y).
class LabelDistribution {
 public:
  LabelDistribution() = default;

  LabelDistribution(std::vector<double> values, DistributionKind kind) : values_(std::move(values)), kind_(kind) {
    for (double v : values_)
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error("label distribution values must be finite and >= 0");
    if (kind_ == DistributionKind::TargetEstimate && std::abs(sum() - 1.0) > 1e-6)
      throw Error("target estimate must sum to 1 (got " + io::format_double(sum()) + ")");
    if (kind_ == DistributionKind::SourcePrior)
      for (double v : values_)
        if (v > 1.0) throw Error("source prior entries must lie in [0, 1]");
  }

  std::size_t size() const noexcept { return values_.size(); }
  DistributionKind kind() const noexcept { return kind_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t y) const { return values_.at(y); }
  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }
  bool normalized() const { return std::abs(sum() - 1.0) <= 1e-6; }

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;

 private:
  std::vector<double> values_;
  DistributionKind kind_ = DistributionKind::ImportanceWeights;
};

/// Non-fatal findings of the weight computation, for the run log.
struct WeightDiagnostics {
  /// Labels with P_s(y) = 0 and P_t(y) > 1e-3.
  std::vector<LabelIndex> unsupported_labels;
  /// Total P_t mass on labels with P_s(y) = 0.
  double lost_mass = 0.0;
  std::vector<std::string> warnings;
};

/// P_s(y) = (#examples carrying y) / N.
inline LabelDistribution estimate_source_prior(const DatasetStore& source) {
  if (source.empty()) throw Error("cannot estimate a source prior from an empty dataset");
  if (!source.labeled()) throw Error("source prior requires a labeled dataset");
  std::vector<double> counts(source.num_labels(), 0.0);
  for (const auto& set : source.labels())
    for (LabelIndex y : set) counts[static_cast<std::size_t>(y)] += 1.0;
  for (auto& c : counts) c /= double(source.size());
  return {std::move(counts), DistributionKind::SourcePrior};
}

/// Mean of temperature-smoothed source-model predictions over the target
/// examples. Target labels are never read.
template <typename Real>
LabelDistribution estimate_target_distribution(const BasicClassifier<Real>& model, const DatasetStore& target,
                                               double temperature = kDefaultEstimationTemperature) {
  if (target.empty()) throw Error("cannot estimate a target distribution from an empty dataset");
  if (target.dim() != model.input_dim())
    throw Error("dimension mismatch: target D=" + std::to_string(target.dim()) +
                ", model D=" + std::to_string(model.input_dim()));
  // Fixed-size shards summed in order keep the result bit-stable however the
  // shards are computed.
  constexpr std::size_t kShard = 1024;
  std::vector<double> total(model.output_dim(), 0.0), shard(model.output_dim());
  for (std::size_t begin = 0; begin < target.size(); begin += kShard) {
    std::fill(shard.begin(), shard.end(), 0.0);
    const std::size_t end = std::min(target.size(), begin + kShard);
    for (std::size_t i = begin; i < end; ++i) {
      // Softmax in double regardless of the model's scalar type keeps the
      // average normalized for large label spaces.
      const auto z = model.logits(target.row(i));
      const std::vector<double> zd(z.begin(), z.end());
      const auto p = softmax<double>(zd, temperature);
      for (std::size_t y = 0; y < p.size(); ++y) shard[y] += p[y];
    }
    for (std::size_t y = 0; y < total.size(); ++y) total[y] += shard[y];
  }
  for (auto& v : total) v /= double(target.size());
  return {std::move(total), DistributionKind::TargetEstimate};
}

/// w(y) = P_t(y) / P_s(y), and 0 where P_s(y) = 0.
inline LabelDistribution importance_weights(const LabelDistribution& pt, const LabelDistribution& ps,
                                            WeightDiagnostics* diagnostics = nullptr) {
  if (pt.size() != ps.size())
    throw Error("shape mismatch: P_t has " + std::to_string(pt.size()) + " labels, P_s has " +
                std::to_string(ps.size()));
  if (pt.kind() != DistributionKind::TargetEstimate) throw Error("importance_weights: first argument must be P_t");
  if (ps.kind() != DistributionKind::SourcePrior) throw Error("importance_weights: second argument must be P_s");
  std::vector<double> w(pt.size(), 0.0);
  WeightDiagnostics diag;
  for (std::size_t y = 0; y < w.size(); ++y) {
    if (ps[y] > 0.0) {
      w[y] = pt[y] / ps[y];
    } else {
      diag.lost_mass += pt[y];
      if (pt[y] > 1e-3) diag.unsupported_labels.push_back(static_cast<LabelIndex>(y));
    }
  }
  if (!diag.unsupported_labels.empty()) {
    std::string msg = "labels with target mass but no source examples (weight set to 0):";
    for (LabelIndex y : diag.unsupported_labels) msg += " " + std::to_string(y);
    msg += "; lost mass " + io::format_double(diag.lost_mass);
    diag.warnings.push_back(std::move(msg));
  }
  if (diagnostics) *diagnostics = std::move(diag);
  return {std::move(w), DistributionKind::ImportanceWeights};
}

/// Weight of each example: the mean of w over its label set.
inline std::vector<double> per_example_weights(const DatasetStore& source, const LabelDistribution& w) {
  if (w.size() != source.num_labels())
    throw Error("label spaces differ: weights cover " + std::to_string(w.size()) + " labels, dataset has " +
                std::to_string(source.num_labels()));
  std::vector<double> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto& set = source.labels(i);
    if (set.empty()) throw Error("example '" + source.example_id(i) + "' has an empty label set");
    double s = 0.0;
    for (LabelIndex y : set) s += w[static_cast<std::size_t>(y)];
    out[i] = s / double(set.size());
  }
  return out;
}

enum class WeightScheme { Adaptive, Uniform, Reversed };

inline std::string to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::Adaptive: return "adaptive";
    case WeightScheme::Uniform: return "uniform";
    case WeightScheme::Reversed: return "reversed";
  }
  return "?";
}

inline WeightScheme parse_scheme(const std::string& s) {
  if (s == "adaptive") return WeightScheme::Adaptive;
  if (s == "uniform") return WeightScheme::Uniform;
  if (s == "reversed") return WeightScheme::Reversed;
  throw Error("unknown weighting scheme '" + s + "'");
}

/// Labels ordered by descending value, ties by ascending index.
inline std::vector<LabelIndex> rank_labels(const std::vector<double>& values) {
  std::vector<LabelIndex> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](LabelIndex a, LabelIndex b) {
    return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
  });
  return order;
}

/// Restricts the support to the top_k labels by weight (all labels when
/// top_k is absent), then applies the scheme on the support:
///   Adaptive  - weights unchanged;
///   Uniform   - every support label gets the mean support weight;
///   Reversed  - the label ranked r-th gets the value ranked (n-1-r)-th.
inline LabelDistribution transform_weights(const LabelDistribution& w, WeightScheme scheme,
                                           std::optional<std::size_t> top_k = std::nullopt) {
  const std::size_t k = w.size();
  const std::size_t keep = top_k.value_or(k);
  if (keep < 1 || keep > k)
    throw Error("top_k " + std::to_string(keep) + " outside [1, " + std::to_string(k) + "]");
  const auto ranked = rank_labels(w.values());
  std::vector<LabelIndex> support(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep));

  std::vector<double> out(k, 0.0);
  switch (scheme) {
    case WeightScheme::Adaptive:
      for (LabelIndex y : support) out[static_cast<std::size_t>(y)] = w[static_cast<std::size_t>(y)];
      break;
    case WeightScheme::Uniform: {
      double mean = 0.0;
      for (LabelIndex y : support) mean += w[static_cast<std::size_t>(y)];
      mean /= double(support.size());
      const double c = mean > 0.0 ? mean : 1.0;
      for (LabelIndex y : support) out[static_cast<std::size_t>(y)] = c;
      break;
    }
    case WeightScheme::Reversed:
      for (std::size_t r = 0; r < support.size(); ++r)
        out[static_cast<std::size_t>(support[r])] = w[static_cast<std::size_t>(support[support.size() - 1 - r])];
      break;
  }
  return {std::move(out), DistributionKind::ImportanceWeights};
}

/// Desired label mass of the reweighted source: P_s(y) * w(y), normalized.
/// Where w = P_t/P_s this recovers P_t on labels with source support.
inline LabelDistribution desired_label_mass(const LabelDistribution& w, const LabelDistribution& ps) {
  if (w.size() != ps.size()) throw Error("shape mismatch between weights and prior");
  std::vector<double> m(w.size());
  double s = 0.0;
  for (std::size_t y = 0; y < m.size(); ++y) s += (m[y] = w[y] * ps[y]);
  if (!(s > 0.0)) throw Error("weights have no mass on labels present in the source");
  for (auto& v : m) v /= s;
  return {std::move(m), DistributionKind::TargetEstimate};
}

// ---------------------------------------------------------------------------
// weights.tsv

struct WeightFileHeader {
  DistributionKind kind = DistributionKind::ImportanceWeights;
  double temperature = kDefaultEstimationTemperature;
  std::string source_id = "-";
  std::string target_id = "-";
  double lost_mass = 0.0;
};

inline void save_weights(const LabelDistribution& dist, const LabelSpace& space, const WeightFileHeader& header,
                         const std::filesystem::path& path) {
  if (dist.size() != space.size()) throw Error("distribution and label space sizes differ");
  std::string out = "# kind=" + to_string(dist.kind()) + " temperature=" + io::format_double(header.temperature) +
                    " source=" + header.source_id + " target=" + header.target_id +
                    " lost_mass=" + io::format_double(header.lost_mass) + "\n";
  for (std::size_t y = 0; y < dist.size(); ++y)
    out += std::to_string(y) + '\t' + space.name(static_cast<LabelIndex>(y)) + '\t' + io::format_double(dist[y]) +
           '\n';
  io::write_text(path, out);
}

inline LabelDistribution load_weights(const std::filesystem::path& path, WeightFileHeader* header = nullptr) {
  const auto lines = io::read_lines(path);
  const auto file = path.string();
  if (lines.empty() || lines[0].rfind("# ", 0) != 0) throw FormatError(file, 1, "malformed header");
  WeightFileHeader h;
  bool have_kind = false;
  for (auto field : detail::split(std::string_view(lines[0]).substr(2), ' ')) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw FormatError(file, 1, "malformed header field");
    const std::string key(field.substr(0, eq)), val(field.substr(eq + 1));
    try {
      if (key == "kind") {
        h.kind = parse_distribution_kind(val);
        have_kind = true;
      } else if (key == "temperature") {
        if (!detail::parse_number(val, h.temperature)) throw Error("bad temperature");
      } else if (key == "source") {
        h.source_id = val;
      } else if (key == "target") {
        h.target_id = val;
      } else if (key == "lost_mass") {
        if (!detail::parse_number(val, h.lost_mass)) throw Error("bad lost_mass");
      }
    } catch (const Error& e) {
      throw FormatError(file, 1, e.what());
    }
  }
  if (!have_kind) throw FormatError(file, 1, "header lacks kind");
  std::vector<double> values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = detail::split(lines[i], '\t');
    std::size_t idx = 0;
    double v = 0.0;
    if (f.size() != 3 || !detail::parse_number(f[0], idx) || !detail::parse_number(f[2], v))
      throw FormatError(file, i + 1, "expected label_index<TAB>label_name<TAB>value");
    if (idx != values.size()) throw FormatError(file, i + 1, "label indices must be dense and ordered");
    values.push_back(v);
  }
  if (header) *header = h;
  try {
    return {std::move(values), h.kind};
  } catch (const Error& e) {
    throw FormatError(file, 0, e.what());
  }
}

}  // namespace datl

// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "datl/dataset.hpp"
#include "datl/error.hpp"
#include "datl/manifest.hpp"
#include "datl/rng.hpp"
#include "datl/weights.hpp"

namespace datl {

// Manifest sizes matching full-scale pre-training sets, and the desk-scale default.
inline constexpr std::uint64_t kJftScaleManifestSize = 80'000'000;
inline constexpr std::uint64_t kImageNetScaleManifestSize = 2'000'000;
inline constexpr std::uint64_t kDeskScaleManifestSize = 10'000;

namespace detail {

inline constexpr std::uint64_t kSameDistributionStream = 0x5A3E;

/// Round half to even.
inline std::uint64_t round_half_even(double x) {
  const double fl = std::floor(x);
  const double frac = x - fl;
  auto r = static_cast<std::uint64_t>(fl);
  if (frac > 0.5 || (frac == 0.5 && (r % 2 == 1))) ++r;
  return r;
}

inline std::vector<ManifestEntry> entries_in_row_order(const DatasetStore& source,
                                                       const std::vector<std::uint64_t>& counts) {
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i]) entries.push_back({source.example_id(i), counts[i]});
  return entries;
}

}  // namespace detail

/// Draws `n` i.i.d. examples with probability proportional to
/// `example_weights` (with replacement). Draw i depends only on (seed, i), so
/// any range of draws can be generated independently. Entries follow source
/// row order with repeats folded into counts.
inline SamplingManifest same_distribution_sample(const DatasetStore& source, std::span<const double> example_weights,
                                                 std::uint64_t n, std::uint64_t seed) {
  if (example_weights.size() != source.size()) throw Error("example weights length differs from source size");
  if (n == 0) throw Error("manifest size must be positive");
  std::vector<double> cdf(example_weights.size());
  double total = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    const double w = example_weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("example weights must be finite and nonnegative");
    if (w > 0.0) last_positive = i;
    cdf[i] = (total += w);
  }
  if (!(total > 0.0)) throw Error("all example weights are zero");

  const CounterRng rng(seed, detail::kSameDistributionStream);
  std::vector<std::uint64_t> counts(source.size(), 0);
  for (std::uint64_t draw = 0; draw < n; ++draw) {
    const double u = rng.uniform_at(draw) * total;
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (idx > last_positive) idx = last_positive;
    ++counts[idx];
  }
  return SamplingManifest(detail::entries_in_row_order(source, counts), source.id(), seed,
                          SamplingStrategy::SameDistribution);
}

/// One step of the elastic recursion, for inspection and tests.
struct ElasticStep {
  LabelIndex label = 0;
  std::uint64_t desired = 0;
  std::uint64_t available = 0;
  std::uint64_t taken = 0;
};

/// Label each example is attributed to: its highest-weight label, ties to the
/// lower index.
inline std::vector<LabelIndex> attribute_examples(const DatasetStore& source, const std::vector<double>& weights) {
  std::vector<LabelIndex> out(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto& set = source.labels(i);
    if (set.empty()) throw Error("example '" + source.example_id(i) + "' has no label to attribute");
    LabelIndex best = set.front();  // sets are sorted ascending
    for (LabelIndex y : set)
      if (weights[static_cast<std::size_t>(y)] > weights[static_cast<std::size_t>(best)]) best = y;
    out[i] = best;
  }
  return out;
}

/// Sampling without replacement that greedily exhausts the heaviest labels.
///
/// Labels are visited in descending weight order (ties by index) while a
/// budget B (initially n) and the remaining normalized label mass M are
/// tracked. Label y with n_y attributed examples gets desired count
/// d_y = round_half_even(B * p_y / M); it contributes all n_y examples when
/// d_y >= n_y and a uniform d_y-subset otherwise. Any budget left after the
/// pass is filled by a second pass over labels that still have examples, in
/// the same order, so the manifest holds exactly min(n, |source|) examples.
///
/// p_y is `label_weights` normalized: pass the desired label distribution
/// (see desired_label_mass) to target the same class statistics as the
/// with-replacement sampler.
inline SamplingManifest elastic_sample(const DatasetStore& source, const LabelDistribution& label_weights,
                                       std::uint64_t n, std::uint64_t seed,
                                       std::vector<ElasticStep>* trace = nullptr) {
  if (label_weights.size() != source.num_labels()) throw Error("label weights do not match the source label space");
  if (n == 0) throw Error("manifest size must be positive");
  const auto& w = label_weights.values();
  double mass = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(mass > 0.0)) throw Error("all label weights are zero");

  const auto owner = attribute_examples(source, w);
  std::vector<std::vector<std::size_t>> pools(source.num_labels());
  for (std::size_t i = 0; i < source.size(); ++i) pools[static_cast<std::size_t>(owner[i])].push_back(i);
  // Each pool gets its own seeded shuffle; taking a prefix of it is a uniform
  // subset without replacement, and the second pass continues that prefix.
  for (std::size_t y = 0; y < pools.size(); ++y) {
    CounterRng rng(seed, /*stream=*/y);
    auto& p = pools[y];
    for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  }

  const auto order = rank_labels(w);
  std::vector<std::size_t> taken(pools.size(), 0);
  std::uint64_t budget = n;
  for (LabelIndex y : order) {
    const auto yi = static_cast<std::size_t>(y);
    if (budget == 0 || !(mass > 0.0)) break;
    if (w[yi] <= 0.0) continue;
    const std::uint64_t desired = detail::round_half_even(double(budget) * w[yi] / mass);
    const std::uint64_t available = pools[yi].size();
    const std::uint64_t take = std::min({desired, available, budget});
    taken[yi] = take;
    budget -= take;
    mass -= w[yi];
    if (trace) trace->push_back({y, desired, available, take});
  }
  for (LabelIndex y : order) {
    if (budget == 0) break;
    const auto yi = static_cast<std::size_t>(y);
    const std::uint64_t extra = std::min<std::uint64_t>(budget, pools[yi].size() - taken[yi]);
    if (extra == 0) continue;
    taken[yi] += extra;
    budget -= extra;
    if (trace) trace->push_back({y, 0, pools[yi].size(), extra});
  }

  std::vector<std::uint64_t> counts(source.size(), 0);
  for (std::size_t y = 0; y < pools.size(); ++y)
    for (std::size_t j = 0; j < taken[y]; ++j) counts[pools[y][j]] = 1;
  return SamplingManifest(detail::entries_in_row_order(source, counts), source.id(), seed, SamplingStrategy::Elastic);
}

/// Rows of the manifest carrying each label, repeats included.
inline std::vector<std::uint64_t> manifest_label_histogram(const SamplingManifest& manifest,
                                                           const DatasetStore& source) {
  manifest.check_against(source);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < source.size(); ++i) row_of.emplace(source.example_id(i), i);
  std::vector<std::uint64_t> hist(source.num_labels(), 0);
  for (const auto& e : manifest.entries())
    for (LabelIndex y : source.labels(row_of.at(e.example_id))) hist[static_cast<std::size_t>(y)] += e.count;
  return hist;
}

/// TSV summary: per-label rows then the unique-count line.
inline std::string manifest_report_tsv(const SamplingManifest& manifest, const DatasetStore& source) {
  const auto hist = manifest_label_histogram(manifest, source);
  std::string out = "label_index\tlabel_name\tcount\tfraction\n";
  for (std::size_t y = 0; y < hist.size(); ++y)
    out += std::to_string(y) + '\t' + source.label_space().name(static_cast<LabelIndex>(y)) + '\t' +
           std::to_string(hist[y]) + '\t' +
           io::format_double(manifest.total_size() ? double(hist[y]) / double(manifest.total_size()) : 0.0) + '\n';
  out += "# strategy=" + to_string(manifest.strategy()) + " total=" + std::to_string(manifest.total_size()) +
         " unique=" + std::to_string(unique_example_count(manifest)) + "\n";
  return out;
}

}  // namespace datl

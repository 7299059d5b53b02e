// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "datl/config.hpp"
#include "datl/dataset.hpp"
#include "datl/error.hpp"
#include "datl/rng.hpp"
#include "datl/weights.hpp"

namespace datl::synthetic {

/// Isotropic Gaussian mixture shared by a source and a target that differ
/// only in their label priors, so P(x|y) is identical across the two.
///
/// Class means sit on a seeded random sphere of `radius`. With
/// `group_count` > 0 the classes are split into contiguous blocks; each block
/// gets a center on a sphere of `group_radius` and its class means are
/// scattered around that center at distance `radius` (fine-grained classes
/// inside coarse groups).
struct MixtureSpec {
  std::size_t num_classes = 2;
  std::size_t dim = 2;
  double radius = 3.0;
  double covariance_scale = 1.0;
  std::vector<double> source_prior;
  std::vector<double> target_prior;
  std::uint64_t seed = 0;
  std::size_t group_count = 0;
  double group_radius = 0.0;

  void validate() const {
    if (num_classes < 1 || dim < 1) throw Error("mixture spec: K and D must be >= 1");
    if (!(covariance_scale > 0.0) || !std::isfinite(covariance_scale))
      throw Error("mixture spec: covariance_scale must be positive");
    if (!(radius >= 0.0) || !(group_radius >= 0.0)) throw Error("mixture spec: radii must be nonnegative");
    if (group_count > num_classes) throw Error("mixture spec: more groups than classes");
    for (const auto* prior : {&source_prior, &target_prior}) {
      if (prior->size() != num_classes) throw Error("mixture spec: prior length differs from K");
      double s = 0.0;
      for (double p : *prior) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw Error("mixture spec: prior entries must be >= 0");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) throw Error("mixture spec: prior must sum to 1");
    }
  }

  /// Group of class y (meaningful when group_count > 0).
  std::size_t group_of(std::size_t y) const { return group_count ? y * group_count / num_classes : 0; }

  std::vector<std::size_t> classes_in_group(std::size_t g) const {
    std::vector<std::size_t> out;
    for (std::size_t y = 0; y < num_classes; ++y)
      if (group_of(y) == g) out.push_back(y);
    return out;
  }

  /// Keys: num_classes, dim, radius, covariance_scale, source_prior,
  /// target_prior (comma lists or `uniform`), seed, group_count, group_radius.
  static MixtureSpec from_config(const KeyValueConfig& cfg, const std::string& prefix = "") {
    MixtureSpec s;
    s.num_classes = cfg.get<std::size_t>(prefix + "num_classes", s.num_classes);
    s.dim = cfg.get<std::size_t>(prefix + "dim", s.dim);
    s.radius = cfg.get<double>(prefix + "radius", s.radius);
    s.covariance_scale = cfg.get<double>(prefix + "covariance_scale", s.covariance_scale);
    s.seed = cfg.get<std::uint64_t>(prefix + "seed", s.seed);
    s.group_count = cfg.get<std::size_t>(prefix + "group_count", 0);
    s.group_radius = cfg.get<double>(prefix + "group_radius", 0.0);
    const auto prior = [&](const std::string& key) {
      if (cfg.get<std::string>(key, "uniform") == "uniform")
        return std::vector<double>(s.num_classes, 1.0 / double(s.num_classes));
      return cfg.get_list<double>(key, {});
    };
    s.source_prior = prior(prefix + "source_prior");
    s.target_prior = prior(prefix + "target_prior");
    s.validate();
    return s;
  }
};

namespace detail {

inline constexpr std::uint64_t kMeanStream = 0xC1A55;
inline constexpr std::uint64_t kGroupStream = 0x6A0;

inline std::vector<double> random_direction(CounterRng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      sq += x * x;
    }
  } while (sq == 0.0);
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace detail

/// K x D class means, row-major.
inline std::vector<double> class_means(const MixtureSpec& spec) {
  spec.validate();
  std::vector<double> means(spec.num_classes * spec.dim, 0.0);
  std::vector<std::vector<double>> centers;
  if (spec.group_count) {
    CounterRng rng(spec.seed, detail::kGroupStream);
    for (std::size_t g = 0; g < spec.group_count; ++g) {
      auto c = detail::random_direction(rng, spec.dim);
      for (auto& x : c) x *= spec.group_radius;
      centers.push_back(std::move(c));
    }
  }
  CounterRng rng(spec.seed, detail::kMeanStream);
  for (std::size_t y = 0; y < spec.num_classes; ++y) {
    const auto dir = detail::random_direction(rng, spec.dim);
    for (std::size_t d = 0; d < spec.dim; ++d)
      means[y * spec.dim + d] = spec.radius * dir[d] + (spec.group_count ? centers[spec.group_of(y)][d] : 0.0);
  }
  return means;
}

/// The one class-conditional sampler used for every split: x ~ N(mean_y, s*I).
inline void sample_features(const MixtureSpec& spec, const std::vector<double>& means, std::size_t label,
                            CounterRng& rng, std::vector<float>& out) {
  const double sd = std::sqrt(spec.covariance_scale);
  for (std::size_t d = 0; d < spec.dim; ++d)
    out.push_back(static_cast<float>(means[label * spec.dim + d] + sd * rng.normal()));
}

inline std::size_t sample_label(const std::vector<double>& prior, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t y = 0; y < prior.size(); ++y) {
    if (prior[y] <= 0.0) continue;
    last = y;
    acc += prior[y];
    if (u < acc) return y;
  }
  return last;
}

enum class Split : std::uint64_t { Source = 1, TargetTrain = 2, TargetTest = 3 };

inline DatasetStore generate_split(const MixtureSpec& spec, const std::vector<double>& means, Split split,
                                   std::size_t count) {
  const auto& prior = split == Split::Source ? spec.source_prior : spec.target_prior;
  const char* tag = split == Split::Source ? "src" : split == Split::TargetTrain ? "trn" : "tst";
  CounterRng rng(spec.seed, static_cast<std::uint64_t>(split));
  std::vector<std::string> ids;
  std::vector<float> features;
  std::vector<LabelSet> labels;
  features.reserve(count * spec.dim);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t y = sample_label(prior, rng);
    sample_features(spec, means, y, rng, features);
    ids.push_back(std::string(tag) + "-" + std::to_string(i));
    labels.push_back({static_cast<LabelIndex>(y)});
  }
  return DatasetStore(std::string("synthetic-") + tag + "-" + std::to_string(spec.seed),
                      LabelSpace::flat(spec.num_classes), spec.dim, std::move(ids), std::move(features),
                      std::move(labels));
}

struct GeneratedData {
  DatasetStore source;
  DatasetStore target_train;
  DatasetStore target_test;
};

/// Single-label source, target-train and target-test splits drawn from the
/// spec; a pure function of (spec, counts).
inline GeneratedData generate(const MixtureSpec& spec, std::size_t n_source, std::size_t n_target_train,
                              std::size_t n_target_test) {
  if (n_source < 1 || n_target_train < 1 || n_target_test < 1) throw Error("generate: counts must be >= 1");
  const auto means = class_means(spec);
  return {generate_split(spec, means, Split::Source, n_source),
          generate_split(spec, means, Split::TargetTrain, n_target_train),
          generate_split(spec, means, Split::TargetTest, n_target_test)};
}

/// target_prior / source_prior, 0 where the source prior is 0.
inline LabelDistribution oracle_importance_weights(const MixtureSpec& spec) {
  spec.validate();
  std::vector<double> w(spec.num_classes, 0.0);
  for (std::size_t y = 0; y < w.size(); ++y)
    if (spec.source_prior[y] > 0.0) w[y] = spec.target_prior[y] / spec.source_prior[y];
  return {std::move(w), DistributionKind::ImportanceWeights};
}

/// Exact posterior P(y | x) under a prior; the mixture shares one isotropic
/// covariance so this is a softmax of log prior - |x - mean|^2 / (2 s).
inline std::vector<double> posterior(const MixtureSpec& spec, const std::vector<double>& means,
                                     const std::vector<double>& prior, std::span<const float> x) {
  std::vector<double> logp(spec.num_classes, -INFINITY);
  double top = -INFINITY;
  for (std::size_t y = 0; y < spec.num_classes; ++y) {
    if (prior[y] <= 0.0) continue;
    double sq = 0.0;
    for (std::size_t d = 0; d < spec.dim; ++d) {
      const double diff = double(x[d]) - means[y * spec.dim + d];
      sq += diff * diff;
    }
    logp[y] = std::log(prior[y]) - sq / (2.0 * spec.covariance_scale);
    top = std::max(top, logp[y]);
  }
  double z = 0.0;
  for (auto& v : logp) z += (v = std::exp(v - top));
  for (auto& v : logp) v /= z;
  return logp;
}

/// Fine labels with the group labels appended as their parents; fine label
/// indices are unchanged, so stores from `generate` can adopt it directly.
inline LabelSpace group_hierarchy(const MixtureSpec& spec) {
  if (!spec.group_count) return LabelSpace::flat(spec.num_classes);
  auto names = LabelSpace::flat(spec.num_classes).names();
  std::vector<LabelIndex> parents(spec.num_classes + spec.group_count, kNoParent);
  for (std::size_t y = 0; y < spec.num_classes; ++y)
    parents[y] = static_cast<LabelIndex>(spec.num_classes + spec.group_of(y));
  for (std::size_t g = 0; g < spec.group_count; ++g) names.push_back("group_" + std::to_string(g));
  return LabelSpace(std::move(names), std::move(parents));
}

/// fine label -> group index, for coarsen_labels.
inline std::vector<LabelIndex> group_map(const MixtureSpec& spec) {
  std::vector<LabelIndex> out(spec.num_classes);
  for (std::size_t y = 0; y < spec.num_classes; ++y) out[y] = static_cast<LabelIndex>(spec.group_of(y));
  return out;
}

/// Relabels every example through `grouping` (fine label -> coarse label).
/// A coarse label with a single member keeps its name; merged ones are named
/// `coarse_<c>`. Parent links survive only when the grouping is one-to-one.
inline DatasetStore coarsen_labels(const DatasetStore& store, const std::vector<LabelIndex>& grouping) {
  const auto& fine = store.label_space();
  if (grouping.size() != fine.size())
    throw Error("grouping covers " + std::to_string(grouping.size()) + " of " + std::to_string(fine.size()) +
                " labels");
  LabelIndex max_coarse = -1;
  for (LabelIndex c : grouping) {
    if (c < 0) throw Error("grouping leaves a label unmapped");
    max_coarse = std::max(max_coarse, c);
  }
  const auto n_coarse = static_cast<std::size_t>(max_coarse + 1);
  std::vector<std::vector<LabelIndex>> members(n_coarse);
  for (std::size_t y = 0; y < grouping.size(); ++y)
    members[static_cast<std::size_t>(grouping[y])].push_back(static_cast<LabelIndex>(y));

  const bool one_to_one = std::all_of(members.begin(), members.end(), [](const auto& m) { return m.size() == 1; });
  std::vector<std::string> names(n_coarse);
  std::vector<LabelIndex> parents(n_coarse, kNoParent);
  for (std::size_t c = 0; c < n_coarse; ++c) {
    names[c] = members[c].size() == 1 ? fine.name(members[c][0]) : "coarse_" + std::to_string(c);
    if (one_to_one) {
      const LabelIndex p = fine.parent(members[c][0]);
      parents[c] = p == kNoParent ? kNoParent : grouping[static_cast<std::size_t>(p)];
    }
  }

  std::vector<LabelSet> labels;
  labels.reserve(store.size());
  for (const auto& set : store.labels()) {
    LabelSet mapped;
    for (LabelIndex y : set) mapped.push_back(grouping[static_cast<std::size_t>(y)]);
    labels.push_back(std::move(mapped));
  }
  std::vector<LabelIndex> origin;
  if (one_to_one && !store.label_origin().empty()) {
    origin.resize(n_coarse);
    for (std::size_t c = 0; c < n_coarse; ++c)
      origin[c] = store.label_origin()[static_cast<std::size_t>(members[c][0])];
  }
  return DatasetStore(store.id(), LabelSpace(std::move(names), std::move(parents)), store.dim(),
                      store.example_ids(), store.features(), std::move(labels), store.labeled(), std::move(origin));
}

}  // namespace datl::synthetic

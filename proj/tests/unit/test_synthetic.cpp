// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "datl/synthetic.hpp"
#include "datl/weights.hpp"

namespace datl::synthetic {
namespace {

MixtureSpec two_class(std::vector<double> source, std::vector<double> target, std::uint64_t seed = 1) {
  MixtureSpec s;
  s.num_classes = source.size();
  s.dim = 3;
  s.radius = 4.0;
  s.source_prior = std::move(source);
  s.target_prior = std::move(target);
  s.seed = seed;
  return s;
}

TEST(MixtureSpec, Validation) {
  EXPECT_THROW(two_class({0.5, 0.6}, {0.5, 0.5}).validate(), Error);
  EXPECT_THROW(two_class({0.5, 0.5}, {1.0}).validate(), Error);
  auto s = two_class({0.5, 0.5}, {0.5, 0.5});
  s.covariance_scale = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s = two_class({0.5, 0.5}, {0.5, 0.5});
  s.dim = 0;
  EXPECT_THROW(generate(s, 1, 1, 1), Error);
  EXPECT_THROW(generate(two_class({0.5, 0.5}, {0.5, 0.5}), 0, 1, 1), Error);
}

TEST(MixtureSpec, FromConfig) {
  const auto cfg = KeyValueConfig::parse(
      "num_classes=4\ndim=5\nradius=2\nsource_prior=uniform\ntarget_prior=0.4,0.3,0.2,0.1\n"
      "group_count=2\ngroup_radius=8\nseed=3\n");
  const auto s = MixtureSpec::from_config(cfg);
  EXPECT_EQ(s.source_prior, std::vector<double>(4, 0.25));
  EXPECT_EQ(s.target_prior[3], 0.1);
  EXPECT_EQ(s.group_of(1), 0u);
  EXPECT_EQ(s.group_of(2), 1u);
  EXPECT_NO_THROW(cfg.reject_unknown());
}

TEST(OracleWeights, RatiosByDefinition) {
  EXPECT_EQ(oracle_importance_weights(two_class({0.3, 0.7}, {0.3, 0.7})).values(), (std::vector<double>{1, 1}));
  const auto w = oracle_importance_weights(two_class({0.5, 0.5}, {0.9, 0.1}));
  EXPECT_DOUBLE_EQ(w[0], 1.8);
  EXPECT_DOUBLE_EQ(w[1], 0.2);
  const auto w2 = oracle_importance_weights(two_class({0.5, 0.5}, {0.25, 0.75}));
  EXPECT_DOUBLE_EQ(w2[0], 0.5);
  const auto w3 = oracle_importance_weights(two_class({0.25, 0.75}, {0.5, 0.5}));
  EXPECT_DOUBLE_EQ(w3[0], 2.0);
  EXPECT_NEAR(w3[1], 0.6667, 1e-4);
  EXPECT_EQ(oracle_importance_weights(two_class({0.0, 1.0}, {0.5, 0.5}))[0], 0.0);
}

TEST(OracleWeights, EqualPriorsGiveExactOnes) {
  for (std::size_t k : {1u, 3u, 7u, 10u}) {
    MixtureSpec s;
    s.num_classes = k;
    s.dim = 2;
    s.source_prior = s.target_prior = std::vector<double>(k, 1.0 / double(k));
    // Equal but not exactly representable priors still give ones.
    s.source_prior.back() = s.target_prior.back() = 1.0 - (1.0 / double(k)) * double(k - 1);
    EXPECT_EQ(oracle_importance_weights(s).values(), std::vector<double>(k, 1.0));
  }
}

TEST(Generate, DeterministicSingleLabel) {
  const auto spec = two_class({0.5, 0.5}, {0.9, 0.1});
  const auto a = generate(spec, 50, 20, 10);
  const auto b = generate(spec, 50, 20, 10);
  EXPECT_EQ(a.source, b.source);
  EXPECT_EQ(a.target_test, b.target_test);
  EXPECT_EQ(a.source.size(), 50u);
  for (const auto& set : a.source.labels()) EXPECT_EQ(set.size(), 1u);
  EXPECT_NE(generate(two_class({0.5, 0.5}, {0.9, 0.1}, 2), 50, 20, 10).source.features(), a.source.features());
}

TEST(Generate, LabelFrequenciesMatchPriors) {
  MixtureSpec s;
  s.num_classes = 4;
  s.dim = 2;
  s.source_prior = {0.1, 0.2, 0.3, 0.4};
  s.target_prior = {0.7, 0.0, 0.05, 0.25};
  s.seed = 99;
  const std::size_t n = 10000;
  const auto data = generate(s, n, n, 1);
  for (const auto& [store, prior] : {std::pair{&data.source, &s.source_prior}, {&data.target_train, &s.target_prior}}) {
    const auto freq = estimate_source_prior(*store);
    for (std::size_t y = 0; y < 4; ++y) {
      const double p = (*prior)[y];
      const double sigma = std::sqrt(p * (1 - p) / double(n));
      EXPECT_LE(std::abs(freq[y] - p), 3.0 * sigma + 1e-12) << "label " << y;
    }
  }
}

TEST(Generate, SharedClassConditionals) {
  // Per-class feature means agree between source and target within 3 sigma.
  MixtureSpec s;
  s.num_classes = 3;
  s.dim = 4;
  s.radius = 5.0;
  s.covariance_scale = 2.0;
  s.source_prior = {0.6, 0.3, 0.1};
  s.target_prior = {0.1, 0.3, 0.6};
  s.seed = 5;
  const auto data = generate(s, 6000, 6000, 1);
  const auto means = class_means(s);
  auto class_mean = [&](const DatasetStore& st, std::size_t y, std::vector<double>& out) {
    out.assign(s.dim, 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (std::size_t(st.labels(i)[0]) != y) continue;
      ++n;
      for (std::size_t d = 0; d < s.dim; ++d) out[d] += st.row(i)[d];
    }
    for (auto& v : out) v /= double(n);
    return n;
  };
  for (std::size_t y = 0; y < 3; ++y) {
    std::vector<double> ms, mt;
    const auto ns = class_mean(data.source, y, ms), nt = class_mean(data.target_train, y, mt);
    const double sigma = std::sqrt(s.covariance_scale * (1.0 / double(ns) + 1.0 / double(nt)));
    for (std::size_t d = 0; d < s.dim; ++d) {
      EXPECT_LE(std::abs(ms[d] - mt[d]), 3.0 * sigma);
      EXPECT_LE(std::abs(ms[d] - means[y * s.dim + d]), 3.0 * std::sqrt(s.covariance_scale / double(ns)));
    }
  }
}

TEST(Generate, MeansOnSphereAndGroups) {
  MixtureSpec s;
  s.num_classes = 6;
  s.dim = 5;
  s.radius = 1.5;
  s.group_count = 2;
  s.group_radius = 10.0;
  s.source_prior = s.target_prior = std::vector<double>(6, 1.0 / 6.0);
  const auto m = class_means(s);
  auto dist = [&](std::size_t a, std::size_t b) {
    double sq = 0;
    for (std::size_t d = 0; d < s.dim; ++d) sq += (m[a * s.dim + d] - m[b * s.dim + d]) * (m[a * s.dim + d] - m[b * s.dim + d]);
    return std::sqrt(sq);
  };
  // Classes of one group are within 2 * radius of each other.
  EXPECT_LE(dist(0, 1), 3.0 + 1e-12);
  EXPECT_LE(dist(3, 5), 3.0 + 1e-12);
  s.group_count = 0;
  const auto flat = class_means(s);
  for (std::size_t y = 0; y < 6; ++y) {
    double sq = 0;
    for (std::size_t d = 0; d < s.dim; ++d) sq += flat[y * s.dim + d] * flat[y * s.dim + d];
    EXPECT_NEAR(std::sqrt(sq), 1.5, 1e-12);
  }
}

TEST(Generate, GroupHierarchyAdoptsFineIndices) {
  MixtureSpec s;
  s.num_classes = 4;
  s.dim = 2;
  s.group_count = 2;
  s.group_radius = 3.0;
  s.source_prior = s.target_prior = std::vector<double>(4, 0.25);
  const auto h = group_hierarchy(s);
  EXPECT_EQ(h.size(), 6u);
  EXPECT_EQ(h.parent(1), 4);
  EXPECT_EQ(h.parent(2), 5);
  const auto data = generate(s, 20, 1, 1);
  const auto hier = data.source.with_label_space(h);
  EXPECT_EQ(filter_by_label_subtree(hier, {4}).num_labels(), 3u);
}

TEST(Coarsen, IdentityGroupingIsIdentity) {
  MixtureSpec s = two_class({0.2, 0.8}, {0.5, 0.5});
  const auto data = generate(s, 30, 1, 1);
  EXPECT_EQ(coarsen_labels(data.source, {0, 1}), data.source);
}

TEST(Coarsen, MergesLabels) {
  MixtureSpec s;
  s.num_classes = 4;
  s.dim = 2;
  s.source_prior = s.target_prior = std::vector<double>(4, 0.25);
  const auto data = generate(s, 100, 1, 1);
  const auto coarse = coarsen_labels(data.source, {0, 0, 1, 1});
  EXPECT_EQ(coarse.num_labels(), 2u);
  EXPECT_EQ(coarse.size(), data.source.size());
  for (std::size_t i = 0; i < coarse.size(); ++i)
    EXPECT_EQ(coarse.labels(i)[0], data.source.labels(i)[0] / 2);
  EXPECT_EQ(coarse.label_space().name(0), "coarse_0");
  EXPECT_THROW(coarsen_labels(data.source, {0, 0, 1}), Error);
  EXPECT_THROW(coarsen_labels(data.source, {0, -1, 1, 1}), Error);
}

}  // namespace
}  // namespace datl::synthetic

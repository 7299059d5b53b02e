// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "datl/dedup.hpp"
#include "test_support.hpp"

namespace datl {
namespace {

using testing::make_store;
using testing::TempDir;

DatasetStore rows(const std::string& id, const std::vector<std::vector<float>>& xs, std::string prefix = "r") {
  std::vector<std::string> ids;
  std::vector<float> f;
  std::vector<LabelSet> labels;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ids.push_back(prefix + std::to_string(i));
    f.insert(f.end(), xs[i].begin(), xs[i].end());
    labels.push_back({0});
  }
  return DatasetStore(id, LabelSpace::flat(1), xs.empty() ? 2 : xs[0].size(), ids, f, labels);
}

std::set<std::string> removed_ids(const DedupResult& r) {
  std::set<std::string> out;
  for (const auto& m : r.removed) out.insert(m.source_id);
  return out;
}

TEST(Dedup, IdenticalRowRemovedAtAnyThreshold) {
  const auto src = rows("src", {{0.3f, -1.7f}, {1.0f, 0.0f}}, "s");
  const auto tgt = rows("tgt", {{0.3f, -1.7f}}, "t");
  for (double th : {0.5, 0.95, 1.0}) {
    const auto r = near_duplicate_filter(src, tgt, th);
    ASSERT_EQ(r.removed.size(), 1u);
    EXPECT_EQ(r.removed[0].source_id, "s0");
    EXPECT_EQ(r.removed[0].target_id, "t0");
    EXPECT_EQ(r.removed[0].similarity, 1.0);
    EXPECT_EQ(r.filtered.example_ids(), (std::vector<std::string>{"s1"}));
  }
}

TEST(Dedup, OrthogonalRowKept) {
  const auto src = rows("src", {{1.0f, 0.0f}}, "s");
  const auto tgt = rows("tgt", {{0.0f, 2.0f}}, "t");
  const auto r = near_duplicate_filter(src, tgt, 0.9);
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.filtered.size(), 1u);
}

TEST(Dedup, ZeroNormReportedAndNeverMatches) {
  const auto src = rows("src", {{0.0f, 0.0f}, {1.0f, 1.0f}}, "s");
  const auto tgt = rows("tgt", {{0.0f, 0.0f}, {2.0f, 2.0f}}, "t");
  const auto r = near_duplicate_filter(src, tgt, 0.5);
  EXPECT_EQ(removed_ids(r), (std::set<std::string>{"s1"}));
  EXPECT_EQ(r.zero_norm_ids, (std::vector<std::string>{"s0", "t0"}));
}

TEST(Dedup, ChecksTrainAndTestTargets) {
  const auto src = rows("src", {{1.0f, 0.0f}, {0.0f, 1.0f}, {1.0f, 1.0f}}, "s");
  const std::vector<DatasetStore> targets{rows("train", {{2.0f, 0.0f}}, "a"), rows("test", {{0.0f, 3.0f}}, "b")};
  const auto r = near_duplicate_filter(src, targets, 0.99);
  EXPECT_EQ(removed_ids(r), (std::set<std::string>{"s0", "s1"}));
  EXPECT_EQ(r.removed[1].target_id, "b0");
}

TEST(Dedup, Errors) {
  const auto src = rows("src", {{1.0f, 0.0f}});
  EXPECT_THROW(near_duplicate_filter(src, rows("t", {{1.0f, 0.0f, 0.0f}}), 0.9), Error);
  EXPECT_THROW(near_duplicate_filter(src, src, 0.0), Error);
  EXPECT_THROW(near_duplicate_filter(src, src, 1.5), Error);
}

class DedupProperties : public ::testing::Test {
 protected:
  void SetUp() override {
    // Targets plus perturbed copies of some of them hidden in the source.
    std::mt19937 gen(5);
    std::normal_distribution<float> n;
    std::vector<std::vector<float>> t, s;
    for (int i = 0; i < 40; ++i) {
      std::vector<float> x(8);
      for (auto& v : x) v = n(gen);
      t.push_back(x);
    }
    for (int i = 0; i < 600; ++i) {
      std::vector<float> x(8);
      if (i % 6 == 0) {
        x = t[std::size_t(i / 6) % t.size()];
        const float eps = 0.05f * float(i % 7);
        for (auto& v : x) v += eps * n(gen);
      } else {
        for (auto& v : x) v = n(gen);
      }
      s.push_back(x);
    }
    source = rows("src", s, "s");
    target = rows("tgt", t, "t");
  }
  DatasetStore source, target;
};

TEST_F(DedupProperties, Idempotent) {
  for (double th : {0.8, 0.95, 0.99}) {
    const auto once = near_duplicate_filter(source, target, th);
    EXPECT_FALSE(once.removed.empty());
    const auto twice = near_duplicate_filter(once.filtered, target, th);
    EXPECT_TRUE(twice.removed.empty());
    EXPECT_EQ(twice.filtered, once.filtered);
  }
}

TEST_F(DedupProperties, MonotoneInThreshold) {
  std::set<std::string> previous;
  for (double th : {1.0, 0.99, 0.95, 0.9, 0.7, 0.5}) {
    const auto ids = removed_ids(near_duplicate_filter(source, target, th));
    EXPECT_TRUE(std::includes(ids.begin(), ids.end(), previous.begin(), previous.end())) << th;
    previous = ids;
  }
}

TEST(Dedup, RemovedFileFormat) {
  TempDir dir("dedup");
  save_removed({{"s1", "t9", 0.5}}, dir / "removed.tsv");
  EXPECT_EQ(io::read_text(dir / "removed.tsv"), "s1\tt9\t0.5\n");
}

}  // namespace
}  // namespace datl

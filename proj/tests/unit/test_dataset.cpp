// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "datl/dataset.hpp"
#include "datl/manifest.hpp"
#include "test_support.hpp"

namespace datl {
namespace {

using testing::make_store;
using testing::TempDir;

// transport <- vehicle <- {car, aircraft}; animal <- bird
LabelSpace hierarchy() {
  return LabelSpace({"transport", "vehicle", "car", "aircraft", "animal", "bird"}, {-1, 0, 1, 1, -1, 4});
}

TEST(LabelSpace, RejectsCyclesAndDanglingParents) {
  EXPECT_THROW(LabelSpace({"a", "b"}, {1, 0}), Error);
  EXPECT_THROW(LabelSpace({"a"}, {0}), Error);
  EXPECT_THROW(LabelSpace({"a", "b"}, {-1, 5}), Error);
  EXPECT_THROW(LabelSpace({"a", "b\tc"}, {}), Error);
  EXPECT_NO_THROW(hierarchy());
}

TEST(LabelSpace, SubtreeMembership) {
  const auto s = hierarchy();
  EXPECT_TRUE(s.in_subtree(2, 0));
  EXPECT_TRUE(s.in_subtree(3, 1));
  EXPECT_FALSE(s.in_subtree(5, 0));
  const auto mask = s.subtree_mask({1});
  EXPECT_EQ(mask, (std::vector<bool>{false, true, true, true, false, false}));
  EXPECT_THROW(s.subtree_mask({9}), Error);
}

TEST(DatasetStore, EnforcesInvariants) {
  const auto space = LabelSpace::flat(2);
  EXPECT_THROW(DatasetStore("d", space, 2, {"a", "b", "c"}, std::vector<float>(8), {{0}, {1}, {0}}), Error);
  EXPECT_THROW(DatasetStore("d", space, 1, {"a", "a"}, {1, 2}, {{0}, {1}}), Error);
  EXPECT_THROW(DatasetStore("d", space, 1, {"a", "b"}, {1, 2}, {{0}, {2}}), Error);
  // Empty label set: rejected in a labeled store, accepted in an unlabeled one.
  EXPECT_THROW(DatasetStore("d", space, 1, {"a", "b"}, {1, 2}, {{0}, {}}), Error);
  EXPECT_NO_THROW(DatasetStore("d", space, 1, {"a", "b"}, {1, 2}, {{0}, {}}, false));
}

TEST(DatasetIo, RoundTripThreeExamples) {
  TempDir dir("ds");
  const auto store = make_store("three", LabelSpace::flat(2), 2, {{0}, {1}, {0, 1}});
  save_dataset(store, dir.path());
  const auto back = load_dataset(dir.path());
  EXPECT_EQ(back.size(), 3u);
  EXPECT_EQ(back, store);
}

TEST(DatasetIo, RoundTripEmptyStoreAndHierarchy) {
  TempDir dir("ds-empty");
  const DatasetStore empty("empty", hierarchy(), 4, {}, {}, {});
  save_dataset(empty, dir.path());
  EXPECT_EQ(std::filesystem::file_size(dir / "features.bin"), 0u);
  EXPECT_EQ(load_dataset(dir.path()), empty);
}

TEST(DatasetIo, RoundTripFilteredStoreKeepsLabelMap) {
  TempDir dir("ds-filtered");
  const auto store = make_store("h", hierarchy(), 3, {{2}, {5}, {3, 5}, {1}});
  const auto filtered = filter_by_label_subtree(store, {1});
  save_dataset(filtered, dir.path());
  const auto back = load_dataset(dir.path());
  EXPECT_EQ(back, filtered);
  EXPECT_EQ(back.label_origin(), (std::vector<LabelIndex>{1, 2, 3}));
}

TEST(DatasetIo, RoundTripPreservesSpecialFloats) {
  TempDir dir("ds-bits");
  const DatasetStore s("bits", LabelSpace::flat(1), 3, {"x"}, {-0.0f, 1e-45f, 3.4028235e38f}, {{0}});
  save_dataset(s, dir.path());
  EXPECT_EQ(load_dataset(dir.path()), s);
}

class DatasetLoadErrors : public ::testing::Test {
 protected:
  void SetUp() override { save_dataset(make_store("base", LabelSpace::flat(2), 2, {{0}, {1}, {0}}), dir.path()); }
  void append(const std::string& file, const std::string& text) {
    std::ofstream(dir / file, std::ios::app | std::ios::binary) << text;
  }
  std::string load_error() {
    try {
      load_dataset(dir.path());
    } catch (const FormatError& e) {
      return e.what();
    }
    return "";
  }
  TempDir dir{"ds-err"};
};

TEST_F(DatasetLoadErrors, FeatureRowsExceedIds) {
  std::ofstream(dir / "features.bin", std::ios::app | std::ios::binary).write("\0\0\0\0\0\0\0\0", 8);
  const auto msg = load_error();
  EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
  EXPECT_NE(msg.find("features.bin:@24"), std::string::npos) << msg;
}

TEST_F(DatasetLoadErrors, DanglingLabelIndex) {
  io::write_text(dir / "labels.txt", "0\n2\n0\n");
  const auto msg = load_error();
  EXPECT_NE(msg.find("dangling label index"), std::string::npos) << msg;
  EXPECT_NE(msg.find("labels.txt:2"), std::string::npos) << msg;
}

TEST_F(DatasetLoadErrors, DuplicateIds) {
  io::write_text(dir / "ids.txt", "e1\ne2\ne1\n");
  const auto msg = load_error();
  EXPECT_NE(msg.find("duplicate id"), std::string::npos) << msg;
  EXPECT_NE(msg.find("ids.txt:3"), std::string::npos) << msg;
}

TEST_F(DatasetLoadErrors, MalformedHeader) {
  io::write_text(dir / "meta.json", "{\"id\": \"base\", \"num_examples\": 3");
  EXPECT_NE(load_error().find("malformed header"), std::string::npos);
  io::write_text(dir / "meta.json", "{\"id\": \"base\"}");
  EXPECT_NE(load_error().find("malformed header"), std::string::npos);
}

TEST_F(DatasetLoadErrors, IdCountMismatch) {
  append("ids.txt", "e4\n");
  EXPECT_NE(load_error().find("dimension mismatch"), std::string::npos);
}

TEST(FilterBySubtree, KeepsOnlySubtreeExamples) {
  const LabelSpace space({"animal", "bird", "car"}, {-1, 0, -1});
  const auto store = make_store("s", space, 2, {{1}, {2}});
  const auto out = filter_by_label_subtree(store, {0});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.example_id(0), "e1");
  EXPECT_EQ(out.label_space().names(), (std::vector<std::string>{"animal", "bird"}));
  EXPECT_EQ(out.labels(0), (LabelSet{1}));  // bird, re-indexed
  EXPECT_EQ(out.label_space().parent(1), 0);
}

TEST(FilterBySubtree, UnionOfVehicleRoots) {
  const auto store = make_store("s", hierarchy(), 2, {{2}, {3}, {5}, {2, 5}, {0}});
  const auto out = filter_by_label_subtree(store, {2, 3});
  EXPECT_EQ(out.example_ids(), (std::vector<std::string>{"e1", "e2", "e4"}));
  EXPECT_EQ(out.label_space().names(), (std::vector<std::string>{"car", "aircraft"}));
  EXPECT_EQ(out.labels(2), (LabelSet{0}));  // bird dropped from the straddling example
}

TEST(FilterBySubtree, AllRootsIsIdentityUpToReindexing) {
  const auto store = make_store("s", hierarchy(), 2, {{2}, {3}, {5}, {2, 5}, {0}});
  const auto out = filter_by_label_subtree(store, store.label_space().roots());
  EXPECT_EQ(out.size(), store.size());
  EXPECT_EQ(out.labels(), store.labels());
  EXPECT_EQ(out.label_space(), store.label_space());
}

TEST(FilterBySubtree, Idempotent) {
  const auto store = make_store("s", hierarchy(), 2, {{2}, {3}, {5}, {2, 5}, {0}, {1, 4}});
  for (const std::vector<std::string>& roots :
       {std::vector<std::string>{"vehicle"}, {"car", "bird"}, {"transport"}, {"animal", "aircraft"}}) {
    const auto once = filter_by_label_subtree(store, labels_by_name(store.label_space(), roots));
    const auto twice = filter_by_label_subtree(once, labels_by_name(once.label_space(), roots));
    EXPECT_EQ(once, twice);
  }
}

TEST(FilterBySubtree, UnknownRoot) {
  const auto store = make_store("s", hierarchy(), 2, {{2}});
  EXPECT_THROW(filter_by_label_subtree(store, {17}), Error);
}

TEST(Materialize, ExpandsCountsWithOrdinalSuffix) {
  const auto src = make_store("src", LabelSpace::flat(2), 2, {{0}, {1}});
  const SamplingManifest m({{"e1", 2}, {"e2", 1}}, "src", 1, SamplingStrategy::SameDistribution);
  const auto out = materialize_manifest(m, src);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out.example_ids(), (std::vector<std::string>{"e1#0", "e1#1", "e2#0"}));
  EXPECT_TRUE(std::equal(out.row(1).begin(), out.row(1).end(), src.row(0).begin()));
  EXPECT_EQ(out.size(), m.total_size());
}

TEST(Materialize, ElasticAndEmptyManifests) {
  const auto src = make_store("src", LabelSpace::flat(2), 2, {{0}, {1}, {1}});
  const SamplingManifest elastic({{"e1", 1}, {"e3", 1}}, "src", 1, SamplingStrategy::Elastic);
  EXPECT_EQ(materialize_manifest(elastic, src).size(), 2u);
  const SamplingManifest empty({}, "src", 1, SamplingStrategy::Elastic);
  EXPECT_TRUE(materialize_manifest(empty, src).empty());
  const SamplingManifest bad({{"nope", 1}}, "src", 1, SamplingStrategy::Elastic);
  EXPECT_THROW(materialize_manifest(bad, src), Error);
}

TEST(Manifest, Invariants) {
  EXPECT_THROW(SamplingManifest({{"a", 2}}, "s", 0, SamplingStrategy::Elastic), Error);
  EXPECT_THROW(SamplingManifest({{"a", 0}}, "s", 0, SamplingStrategy::SameDistribution), Error);
  EXPECT_THROW(SamplingManifest({{"a", 1}, {"a", 1}}, "s", 0, SamplingStrategy::SameDistribution), Error);
  const SamplingManifest m({{"a", 2}, {"b", 3}}, "s", 0, SamplingStrategy::SameDistribution);
  EXPECT_EQ(m.total_size(), 5u);
  EXPECT_EQ(unique_example_count(m), 2u);
}

TEST(ManifestIo, RoundTripAndHeader) {
  TempDir dir("manifest");
  const SamplingManifest m({{"a", 2}, {"b", 3}}, "src", 18446744073709551615ULL, SamplingStrategy::SameDistribution);
  save_manifest(m, dir / "manifest.tsv");
  EXPECT_EQ(io::read_lines(dir / "manifest.tsv").front(),
            "# strategy=same seed=18446744073709551615 total=5 source=src");
  EXPECT_EQ(load_manifest(dir / "manifest.tsv"), m);
}

TEST(ManifestIo, RejectsInconsistentTotal) {
  TempDir dir("manifest-bad");
  io::write_text(dir / "m.tsv", "# strategy=elastic seed=1 total=3 source=s\na\t1\nb\t1\n");
  EXPECT_THROW(load_manifest(dir / "m.tsv"), FormatError);
  io::write_text(dir / "m.tsv", "a\t1\n");
  EXPECT_THROW(load_manifest(dir / "m.tsv"), FormatError);
}

}  // namespace
}  // namespace datl

// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "datl/error.hpp"
#include "datl/io.hpp"
#include "datl/label_space.hpp"
#include "json.hpp"

namespace datl {

using LabelSet = std::vector<LabelIndex>;

namespace detail {

inline void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of("\t\n\r") != std::string::npos)
    throw Error(std::string("invalid ") + what + " '" + s + "'");
}

}  // namespace detail

/// Pre-featurized dataset split: one row of `dim` float features, one unique
/// id and one (possibly multi-) label set per example. Immutable once built;
/// the constructor checks every invariant.
///
/// Unlabeled stores (targets whose labels must not be read) may carry empty
/// label sets. `label_origin`, when non-empty, maps each label to its index in
/// the space this store was filtered from.
class DatasetStore {
 public:
  DatasetStore() = default;

  DatasetStore(std::string id, LabelSpace label_space, std::size_t dim, std::vector<std::string> example_ids,
               std::vector<float> features, std::vector<LabelSet> labels, bool labeled = true,
               std::vector<LabelIndex> label_origin = {})
      : id_(std::move(id)),
        label_space_(std::move(label_space)),
        dim_(dim),
        example_ids_(std::move(example_ids)),
        features_(std::move(features)),
        labels_(std::move(labels)),
        labeled_(labeled),
        label_origin_(std::move(label_origin)) {
    for (auto& set : labels_) {
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    validate();
  }

  const std::string& id() const noexcept { return id_; }
  const LabelSpace& label_space() const noexcept { return label_space_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return example_ids_.size(); }
  bool empty() const noexcept { return example_ids_.empty(); }
  bool labeled() const noexcept { return labeled_; }
  std::size_t num_labels() const noexcept { return label_space_.size(); }

  const std::vector<std::string>& example_ids() const noexcept { return example_ids_; }
  const std::string& example_id(std::size_t i) const { return example_ids_.at(i); }
  const std::vector<float>& features() const noexcept { return features_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(features_).subspan(i * dim_, dim_);
  }
  const std::vector<LabelSet>& labels() const noexcept { return labels_; }
  const LabelSet& labels(std::size_t i) const { return labels_.at(i); }
  const std::vector<LabelIndex>& label_origin() const noexcept { return label_origin_; }

  /// Same content under a different dataset id.
  DatasetStore with_id(std::string id) const {
    DatasetStore copy = *this;
    copy.id_ = std::move(id);
    return copy;
  }

  /// Same examples under a different (compatible) label space.
  DatasetStore with_label_space(LabelSpace space) const {
    return DatasetStore(id_, std::move(space), dim_, example_ids_, features_, labels_, labeled_, label_origin_);
  }

  /// Bit-exact equality (features compared by representation).
  friend bool operator==(const DatasetStore& a, const DatasetStore& b) {
    return a.id_ == b.id_ && a.label_space_ == b.label_space_ && a.dim_ == b.dim_ &&
           a.example_ids_ == b.example_ids_ && a.labels_ == b.labels_ && a.labeled_ == b.labeled_ &&
           a.label_origin_ == b.label_origin_ && a.features_.size() == b.features_.size() &&
           std::memcmp(a.features_.data(), b.features_.data(), a.features_.size() * sizeof(float)) == 0;
  }

 private:
  void validate() const {
    detail::check_token(id_, "dataset id");
    if (id_.find_first_of(" ") != std::string::npos) throw Error("dataset id must not contain spaces");
    const std::size_t n = example_ids_.size();
    if (features_.size() != n * dim_ || labels_.size() != n)
      throw Error("dimension mismatch: " + std::to_string(n) + " ids, " + std::to_string(labels_.size()) +
                  " label rows, " + std::to_string(features_.size()) + " feature values at D=" +
                  std::to_string(dim_));
    std::unordered_set<std::string> seen;
    seen.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      detail::check_token(example_ids_[i], "example id");
      if (!seen.insert(example_ids_[i]).second) throw Error("duplicate example id '" + example_ids_[i] + "'");
      if (labeled_ && labels_[i].empty())
        throw Error("example '" + example_ids_[i] + "' has no labels in a labeled store");
      for (LabelIndex y : labels_[i])
        if (!label_space_.contains(y))
          throw Error("dangling label index " + std::to_string(y) + " on example '" + example_ids_[i] + "'");
    }
    if (!label_origin_.empty() && label_origin_.size() != label_space_.size())
      throw Error("label origin map length differs from label count");
  }

  std::string id_ = "dataset";
  LabelSpace label_space_;
  std::size_t dim_ = 0;
  std::vector<std::string> example_ids_;
  std::vector<float> features_;
  std::vector<LabelSet> labels_;
  bool labeled_ = true;
  std::vector<LabelIndex> label_origin_;
};

// ---------------------------------------------------------------------------
// On-disk format

namespace detail {

inline std::string labelspace_text(const LabelSpace& space) {
  std::string out;
  for (std::size_t y = 0; y < space.size(); ++y)
    out += std::to_string(y) + '\t' + space.name(static_cast<LabelIndex>(y)) + '\t' +
           std::to_string(space.parent(static_cast<LabelIndex>(y))) + '\n';
  return out;
}

inline LabelSpace parse_labelspace(const std::filesystem::path& path, std::size_t expected) {
  const auto lines = io::read_lines(path);
  if (lines.size() != expected)
    throw FormatError(path.string(), std::min(lines.size(), expected) + 1,
                      "dimension mismatch: expected " + std::to_string(expected) + " labels, found " +
                          std::to_string(lines.size()));
  std::vector<std::string> names;
  std::vector<LabelIndex> parents;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split(lines[i], '\t');
    LabelIndex idx = 0;
    LabelIndex parent = 0;
    if (fields.size() != 3 || !parse_number(fields[0], idx) || !parse_number(fields[2], parent))
      throw FormatError(path.string(), i + 1, "malformed label line");
    if (idx != static_cast<LabelIndex>(i)) throw FormatError(path.string(), i + 1, "label indices must be dense");
    if (parent != kNoParent && (parent < 0 || static_cast<std::size_t>(parent) >= expected))
      throw FormatError(path.string(), i + 1, "dangling label index " + std::to_string(parent) + " as parent");
    names.emplace_back(fields[1]);
    parents.push_back(parent);
  }
  try {
    return LabelSpace(std::move(names), std::move(parents));
  } catch (const Error& e) {
    throw FormatError(path.string(), 0, e.what());
  }
}

}  // namespace detail

/// Writes `meta.json`, `features.bin`, `ids.txt`, `labels.txt`,
/// `labelspace.txt` and, for filtered stores, `labelmap.txt`.
inline void save_dataset(const DatasetStore& store, const std::filesystem::path& dir) {
  io::ensure_dir(dir);
  nlohmann::ordered_json meta;
  meta["id"] = store.id();
  meta["num_examples"] = store.size();
  meta["feature_dim"] = store.dim();
  meta["num_labels"] = store.num_labels();
  meta["labeled"] = store.labeled();
  io::write_text(dir / "meta.json", meta.dump(2) + "\n");
  io::write_f32(dir / "features.bin", store.features());

  std::string ids;
  std::string labels;
  for (std::size_t i = 0; i < store.size(); ++i) {
    ids += store.example_id(i) + '\n';
    const auto& set = store.labels(i);
    for (std::size_t j = 0; j < set.size(); ++j) labels += (j ? " " : "") + std::to_string(set[j]);
    labels += '\n';
  }
  io::write_text(dir / "ids.txt", ids);
  io::write_text(dir / "labels.txt", labels);
  io::write_text(dir / "labelspace.txt", detail::labelspace_text(store.label_space()));

  const auto map_path = dir / "labelmap.txt";
  if (!store.label_origin().empty()) {
    std::string map;
    for (std::size_t y = 0; y < store.label_origin().size(); ++y)
      map += std::to_string(y) + '\t' + std::to_string(store.label_origin()[y]) + '\n';
    io::write_text(map_path, map);
  } else {
    std::filesystem::remove(map_path);
  }
}

inline DatasetStore load_dataset(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_text(meta_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(meta_path.string(), e.byte, "malformed header: " + std::string(e.what()), true);
  }
  std::size_t n = 0, d = 0, k = 0;
  bool labeled = true;
  std::string id;
  try {
    id = meta.at("id").get<std::string>();
    n = meta.at("num_examples").get<std::size_t>();
    d = meta.at("feature_dim").get<std::size_t>();
    k = meta.at("num_labels").get<std::size_t>();
    labeled = meta.at("labeled").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_path.string(), 1, "malformed header: " + std::string(e.what()));
  }

  auto space = detail::parse_labelspace(dir / "labelspace.txt", k);
  auto features = io::read_f32(dir / "features.bin", n * d);

  const auto ids_path = dir / "ids.txt";
  auto ids = io::read_lines(ids_path);
  if (ids.size() != n)
    throw FormatError(ids_path.string(), std::min(ids.size(), n) + 1,
                      "dimension mismatch: header says " + std::to_string(n) + " examples, found " +
                          std::to_string(ids.size()) + " ids");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i)
    if (!seen.insert(ids[i]).second) throw FormatError(ids_path.string(), i + 1, "duplicate id '" + ids[i] + "'");

  const auto labels_path = dir / "labels.txt";
  const auto label_lines = io::read_lines(labels_path);
  if (label_lines.size() != n)
    throw FormatError(labels_path.string(), std::min(label_lines.size(), n) + 1,
                      "dimension mismatch: header says " + std::to_string(n) + " examples, found " +
                          std::to_string(label_lines.size()) + " label lines");
  std::vector<LabelSet> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto tok : detail::split(label_lines[i], ' ')) {
      if (detail::trim(tok).empty()) continue;
      LabelIndex y = 0;
      if (!detail::parse_number(tok, y)) throw FormatError(labels_path.string(), i + 1, "malformed label index");
      if (y < 0 || static_cast<std::size_t>(y) >= k)
        throw FormatError(labels_path.string(), i + 1, "dangling label index " + std::to_string(y));
      labels[i].push_back(y);
    }
    if (labeled && labels[i].empty())
      throw FormatError(labels_path.string(), i + 1, "empty label set in a labeled dataset");
  }

  std::vector<LabelIndex> origin;
  const auto map_path = dir / "labelmap.txt";
  if (std::filesystem::exists(map_path)) {
    const auto lines = io::read_lines(map_path);
    if (lines.size() != k) throw FormatError(map_path.string(), lines.size() + 1, "dimension mismatch");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto f = detail::split(lines[i], '\t');
      LabelIndex a = 0, b = 0;
      if (f.size() != 2 || !detail::parse_number(f[0], a) || !detail::parse_number(f[1], b) ||
          a != static_cast<LabelIndex>(i) || b < 0)
        throw FormatError(map_path.string(), i + 1, "malformed label map line");
      origin.push_back(b);
    }
  }

  try {
    return DatasetStore(std::move(id), std::move(space), d, std::move(ids), std::move(features),
                        std::move(labels), labeled, std::move(origin));
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(meta_path.string(), 0, e.what());
  }
}

// ---------------------------------------------------------------------------
// Derived stores

/// Keeps the examples carrying at least one label inside the union of the
/// subtrees rooted at `roots`. Retained examples keep only their in-subtree
/// labels, and the label space shrinks to the subtree labels (ascending
/// original index, re-indexed densely). The mapping back to the original
/// space is recorded in `label_origin`, composed with any existing mapping.
inline DatasetStore filter_by_label_subtree(const DatasetStore& store, const std::vector<LabelIndex>& roots) {
  const auto& space = store.label_space();
  const auto mask = space.subtree_mask(roots);

  std::vector<LabelIndex> remap(space.size(), kNoParent);
  std::vector<std::string> names;
  std::vector<LabelIndex> origin;
  for (std::size_t y = 0; y < space.size(); ++y) {
    if (!mask[y]) continue;
    remap[y] = static_cast<LabelIndex>(names.size());
    names.push_back(space.name(static_cast<LabelIndex>(y)));
    origin.push_back(store.label_origin().empty() ? static_cast<LabelIndex>(y) : store.label_origin()[y]);
  }
  std::vector<LabelIndex> parents;
  for (std::size_t y = 0; y < space.size(); ++y) {
    if (!mask[y]) continue;
    const LabelIndex p = space.parent(static_cast<LabelIndex>(y));
    parents.push_back(p != kNoParent && mask[static_cast<std::size_t>(p)] ? remap[static_cast<std::size_t>(p)]
                                                                          : kNoParent);
  }

  std::vector<std::string> ids;
  std::vector<float> features;
  std::vector<LabelSet> labels;
  for (std::size_t i = 0; i < store.size(); ++i) {
    LabelSet kept;
    for (LabelIndex y : store.labels(i))
      if (mask[static_cast<std::size_t>(y)]) kept.push_back(remap[static_cast<std::size_t>(y)]);
    if (kept.empty()) continue;
    ids.push_back(store.example_id(i));
    const auto r = store.row(i);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(std::move(kept));
  }
  return DatasetStore(store.id(), LabelSpace(std::move(names), std::move(parents)), store.dim(), std::move(ids),
                      std::move(features), std::move(labels), store.labeled(), std::move(origin));
}

/// Root labels by name; convenient when the same subtree must be selected in
/// spaces with different indexing.
inline std::vector<LabelIndex> labels_by_name(const LabelSpace& space, const std::vector<std::string>& names) {
  std::vector<LabelIndex> out;
  for (const auto& n : names) {
    const auto y = space.find(n);
    if (!y) throw Error("unknown label '" + n + "'");
    out.push_back(*y);
  }
  return out;
}

/// Row-subset of a store, in the given order.
inline DatasetStore select_rows(const DatasetStore& store, const std::vector<std::size_t>& rows, std::string id) {
  std::vector<std::string> ids;
  std::vector<float> features;
  std::vector<LabelSet> labels;
  ids.reserve(rows.size());
  features.reserve(rows.size() * store.dim());
  for (std::size_t r : rows) {
    ids.push_back(store.example_id(r));
    const auto row = store.row(r);
    features.insert(features.end(), row.begin(), row.end());
    labels.push_back(store.labels(r));
  }
  return DatasetStore(std::move(id), store.label_space(), store.dim(), std::move(ids), std::move(features),
                      std::move(labels), store.labeled(), store.label_origin());
}

}  // namespace datl

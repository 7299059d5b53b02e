// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "datl/config.hpp"
#include "datl/error.hpp"

namespace datl {

using LabelIndex = std::int32_t;
inline constexpr LabelIndex kNoParent = -1;

/// Dense label set 0..K-1 with display names and an optional forest of
/// parent links (e.g. bird -> animal, car -> vehicle -> transport).
class LabelSpace {
 public:
  LabelSpace() = default;

  LabelSpace(std::vector<std::string> names, std::vector<LabelIndex> parents)
      : names_(std::move(names)), parents_(std::move(parents)) {
    if (parents_.empty()) parents_.assign(names_.size(), kNoParent);
    validate();
  }

  /// K unrelated labels named `<prefix><i>`.
  static LabelSpace flat(std::size_t k, const std::string& prefix = "class_") {
    std::vector<std::string> names(k);
    for (std::size_t i = 0; i < k; ++i) names[i] = prefix + std::to_string(i);
    return LabelSpace(std::move(names), {});
  }

  std::size_t size() const noexcept { return names_.size(); }
  bool contains(LabelIndex y) const noexcept { return y >= 0 && static_cast<std::size_t>(y) < size(); }
  const std::string& name(LabelIndex y) const { return names_.at(static_cast<std::size_t>(y)); }
  LabelIndex parent(LabelIndex y) const { return parents_.at(static_cast<std::size_t>(y)); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<LabelIndex>& parents() const noexcept { return parents_; }

  std::optional<LabelIndex> find(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<LabelIndex>(it - names_.begin());
  }

  /// True when `root` is `y` or one of its ancestors.
  bool in_subtree(LabelIndex y, LabelIndex root) const {
    for (LabelIndex cur = y; cur != kNoParent; cur = parent(cur))
      if (cur == root) return true;
    return false;
  }

  /// Membership mask of the union of subtrees rooted at `roots`.
  std::vector<bool> subtree_mask(const std::vector<LabelIndex>& roots) const {
    std::vector<bool> is_root(size(), false);
    for (LabelIndex r : roots) {
      if (!contains(r)) throw Error("unknown root label " + std::to_string(r));
      is_root[static_cast<std::size_t>(r)] = true;
    }
    std::vector<bool> mask(size(), false);
    for (std::size_t y = 0; y < size(); ++y) {
      for (LabelIndex cur = static_cast<LabelIndex>(y); cur != kNoParent; cur = parent(cur)) {
        if (is_root[static_cast<std::size_t>(cur)]) {
          mask[y] = true;
          break;
        }
      }
    }
    return mask;
  }

  std::vector<LabelIndex> roots() const {
    std::vector<LabelIndex> out;
    for (std::size_t y = 0; y < size(); ++y)
      if (parents_[y] == kNoParent) out.push_back(static_cast<LabelIndex>(y));
    return out;
  }

  /// Content fingerprint used to match models against datasets.
  std::string fingerprint() const {
    std::string blob;
    for (std::size_t y = 0; y < size(); ++y)
      blob += names_[y] + '\t' + std::to_string(parents_[y]) + '\n';
    return fnv1a_hex(blob);
  }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  void validate() const {
    if (parents_.size() != names_.size()) throw Error("label space: parent list length differs from names");
    for (std::size_t y = 0; y < size(); ++y) {
      const auto& n = names_[y];
      if (n.empty() || n.find_first_of("\t\n\r") != std::string::npos)
        throw Error("label space: invalid name for label " + std::to_string(y));
      const LabelIndex p = parents_[y];
      if (p != kNoParent && !contains(p))
        throw Error("label space: label " + std::to_string(y) + " has dangling parent " + std::to_string(p));
    }
    // Every chain must reach a root within K hops.
    for (std::size_t y = 0; y < size(); ++y) {
      LabelIndex cur = static_cast<LabelIndex>(y);
      for (std::size_t hops = 0; cur != kNoParent; ++hops) {
        if (hops > size()) throw Error("label space: parent cycle through label " + std::to_string(y));
        cur = parents_[static_cast<std::size_t>(cur)];
      }
    }
  }

  std::vector<std::string> names_;
  std::vector<LabelIndex> parents_;
};

}  // namespace datl

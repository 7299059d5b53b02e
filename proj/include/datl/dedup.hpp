// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "datl/dataset.hpp"
#include "datl/error.hpp"
#include "datl/io.hpp"

namespace datl {

inline constexpr double kDefaultDuplicateThreshold = 0.95;

struct DuplicateMatch {
  std::string source_id;
  std::string target_id;
  double similarity = 0.0;
};

struct DedupResult {
  DatasetStore filtered;
  std::vector<DuplicateMatch> removed;
  /// Ids (source or target) whose feature vector has zero norm; they are
  /// treated as similarity 0 to everything.
  std::vector<std::string> zero_norm_ids;
};

namespace detail {

inline std::vector<double> row_norms(const DatasetStore& s, std::vector<std::string>& zero_norm) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double sq = 0.0;
    for (float v : s.row(i)) sq += double(v) * double(v);
    out[i] = std::sqrt(sq);
    if (out[i] == 0.0) zero_norm.push_back(s.example_id(i));
  }
  return out;
}

}  // namespace detail

/// Drops every source example whose best cosine similarity to any example of
/// any target store is >= threshold. Brute force over blocks of source rows.
inline DedupResult near_duplicate_filter(const DatasetStore& source, std::span<const DatasetStore> targets,
                                         double threshold = kDefaultDuplicateThreshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("duplicate threshold must lie in (0, 1]");
  for (const auto& t : targets)
    if (t.dim() != source.dim())
      throw Error("dimension mismatch: source D=" + std::to_string(source.dim()) + ", target '" + t.id() +
                  "' D=" + std::to_string(t.dim()));

  DedupResult result;
  const auto source_norm = detail::row_norms(source, result.zero_norm_ids);
  std::vector<std::vector<double>> target_norm;
  for (const auto& t : targets) target_norm.push_back(detail::row_norms(t, result.zero_norm_ids));

  constexpr std::size_t kBlock = 256;
  std::vector<std::size_t> keep;
  std::vector<double> best(kBlock);
  std::vector<const std::string*> best_id(kBlock);
  for (std::size_t begin = 0; begin < source.size(); begin += kBlock) {
    const std::size_t end = std::min(source.size(), begin + kBlock);
    std::fill(best.begin(), best.end(), -2.0);
    std::fill(best_id.begin(), best_id.end(), nullptr);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto& tgt = targets[t];
      for (std::size_t j = 0; j < tgt.size(); ++j) {
        const double tn = target_norm[t][j];
        const auto tr = tgt.row(j);
        for (std::size_t i = begin; i < end; ++i) {
          double sim = 0.0;
          if (tn > 0.0 && source_norm[i] > 0.0) {
            const auto sr = source.row(i);
            double dot = 0.0;
            for (std::size_t d = 0; d < sr.size(); ++d) dot += double(sr[d]) * double(tr[d]);
            sim = dot / (source_norm[i] * tn);
            // Identical directions can land a few ulps below 1.
            if (sim > 1.0 - 1e-12) sim = 1.0;
          }
          if (sim > best[i - begin]) {
            best[i - begin] = sim;
            best_id[i - begin] = &tgt.example_id(j);
          }
        }
      }
    }
    for (std::size_t i = begin; i < end; ++i) {
      if (best_id[i - begin] && best[i - begin] >= threshold)
        result.removed.push_back({source.example_id(i), *best_id[i - begin], best[i - begin]});
      else
        keep.push_back(i);
    }
  }
  result.filtered = select_rows(source, keep, source.id());
  return result;
}

inline DedupResult near_duplicate_filter(const DatasetStore& source, const DatasetStore& target,
                                         double threshold = kDefaultDuplicateThreshold) {
  return near_duplicate_filter(source, std::span<const DatasetStore>(&target, 1), threshold);
}

inline void save_removed(const std::vector<DuplicateMatch>& removed, const std::filesystem::path& path) {
  std::string out;
  for (const auto& m : removed) out += m.source_id + '\t' + m.target_id + '\t' + io::format_double(m.similarity) + '\n';
  io::write_text(path, out);
}

}  // namespace datl

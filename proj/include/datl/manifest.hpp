// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "datl/dataset.hpp"
#include "datl/error.hpp"
#include "datl/io.hpp"

namespace datl {

enum class SamplingStrategy { SameDistribution, Elastic };

inline std::string to_string(SamplingStrategy s) {
  return s == SamplingStrategy::SameDistribution ? "same" : "elastic";
}

inline SamplingStrategy parse_strategy(const std::string& s) {
  if (s == "same" || s == "SameDistribution") return SamplingStrategy::SameDistribution;
  if (s == "elastic" || s == "Elastic") return SamplingStrategy::Elastic;
  throw Error("unknown sampling strategy '" + s + "'");
}

struct ManifestEntry {
  std::string example_id;
  std::uint64_t count = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// A constructed pre-training dataset: source example ids with repeat counts.
class SamplingManifest {
 public:
  SamplingManifest() = default;

  SamplingManifest(std::vector<ManifestEntry> entries, std::string source_dataset_id, std::uint64_t seed,
                   SamplingStrategy strategy)
      : entries_(std::move(entries)),
        source_dataset_id_(std::move(source_dataset_id)),
        seed_(seed),
        strategy_(strategy) {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_) {
      detail::check_token(e.example_id, "example id");
      if (e.count == 0) throw Error("manifest entry '" + e.example_id + "' has zero count");
      if (!seen.insert(e.example_id).second) throw Error("manifest lists '" + e.example_id + "' twice");
      if (strategy_ == SamplingStrategy::Elastic && e.count != 1)
        throw Error("elastic manifest entry '" + e.example_id + "' repeats");
      total_size_ += e.count;
    }
  }

  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  const std::string& source_dataset_id() const noexcept { return source_dataset_id_; }
  std::uint64_t total_size() const noexcept { return total_size_; }
  std::uint64_t seed() const noexcept { return seed_; }
  SamplingStrategy strategy() const noexcept { return strategy_; }

  /// Throws unless every entry names an example of `source`.
  void check_against(const DatasetStore& source) const {
    if (source.id() != source_dataset_id_)
      throw Error("manifest refers to dataset '" + source_dataset_id_ + "', got '" + source.id() + "'");
    std::unordered_set<std::string> ids(source.example_ids().begin(), source.example_ids().end());
    for (const auto& e : entries_)
      if (!ids.count(e.example_id)) throw Error("unknown example_id '" + e.example_id + "' in manifest");
  }

  friend bool operator==(const SamplingManifest&, const SamplingManifest&) = default;

 private:
  std::vector<ManifestEntry> entries_;
  std::string source_dataset_id_;
  std::uint64_t total_size_ = 0;
  std::uint64_t seed_ = 0;
  SamplingStrategy strategy_ = SamplingStrategy::SameDistribution;
};

/// Number of distinct base example ids in the manifest.
inline std::size_t unique_example_count(const SamplingManifest& manifest) {
  // Entries are unique by construction.
  return manifest.entries().size();
}

inline std::string repetition_id(const std::string& id, std::uint64_t k) { return id + "#" + std::to_string(k); }

/// Expands the manifest into rows: an entry with count c becomes c rows with
/// ids `<id>#0` .. `<id>#<c-1>`.
inline DatasetStore materialize_manifest(const SamplingManifest& manifest, const DatasetStore& source) {
  manifest.check_against(source);
  std::unordered_map<std::string, std::size_t> row_of;
  row_of.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) row_of.emplace(source.example_id(i), i);

  std::vector<std::string> ids;
  std::vector<float> features;
  std::vector<LabelSet> labels;
  ids.reserve(manifest.total_size());
  features.reserve(manifest.total_size() * source.dim());
  labels.reserve(manifest.total_size());
  for (const auto& e : manifest.entries()) {
    const std::size_t r = row_of.at(e.example_id);
    const auto row = source.row(r);
    for (std::uint64_t k = 0; k < e.count; ++k) {
      ids.push_back(repetition_id(e.example_id, k));
      features.insert(features.end(), row.begin(), row.end());
      labels.push_back(source.labels(r));
    }
  }
  return DatasetStore(source.id() + "@" + to_string(manifest.strategy()) + "-" + std::to_string(manifest.seed()),
                      source.label_space(), source.dim(), std::move(ids), std::move(features), std::move(labels),
                      source.labeled(), source.label_origin());
}

inline void save_manifest(const SamplingManifest& manifest, const std::filesystem::path& path) {
  std::string out = "# strategy=" + to_string(manifest.strategy()) + " seed=" + std::to_string(manifest.seed()) +
                    " total=" + std::to_string(manifest.total_size()) + " source=" + manifest.source_dataset_id() +
                    "\n";
  for (const auto& e : manifest.entries()) out += e.example_id + '\t' + std::to_string(e.count) + '\n';
  io::write_text(path, out);
}

inline SamplingManifest load_manifest(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  const auto file = path.string();
  if (lines.empty() || lines[0].rfind("# ", 0) != 0) throw FormatError(file, 1, "malformed header");
  std::string strategy, source;
  std::uint64_t seed = 0, total = 0;
  bool have_seed = false, have_total = false;
  for (auto field : detail::split(std::string_view(lines[0]).substr(2), ' ')) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw FormatError(file, 1, "malformed header field");
    const auto key = field.substr(0, eq);
    const auto val = field.substr(eq + 1);
    if (key == "strategy") {
      strategy = std::string(val);
    } else if (key == "seed") {
      have_seed = detail::parse_number(val, seed);
    } else if (key == "total") {
      have_total = detail::parse_number(val, total);
    } else if (key == "source") {
      source = std::string(val);
    } else {
      throw FormatError(file, 1, "unknown header field '" + std::string(key) + "'");
    }
  }
  if (strategy.empty() || source.empty() || !have_seed || !have_total)
    throw FormatError(file, 1, "malformed header: need strategy, seed, total and source");

  std::vector<ManifestEntry> entries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = detail::split(lines[i], '\t');
    ManifestEntry e;
    if (f.size() != 2 || !detail::parse_number(f[1], e.count))
      throw FormatError(file, i + 1, "expected example_id<TAB>count");
    e.example_id = std::string(f[0]);
    entries.push_back(std::move(e));
  }
  SamplingStrategy parsed;
  try {
    parsed = parse_strategy(strategy);
  } catch (const Error& e) {
    throw FormatError(file, 1, e.what());
  }
  try {
    SamplingManifest m(std::move(entries), source, seed, parsed);
    if (m.total_size() != total)
      throw FormatError(file, 1, "header total " + std::to_string(total) + " differs from summed counts " +
                                     std::to_string(m.total_size()));
    return m;
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(file, 0, e.what());
  }
}

}  // namespace datl

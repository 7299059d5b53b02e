// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end desk-scale experiments on synthetic mixtures: weighting-scheme
// ablation, manifest-size sweep, subset comparison and coarse-vs-fine
// pre-training. Each run is estimate -> transform -> sample -> pretrain ->
// finetune -> evaluate; the generated data is fixed per experiment and only
// the pipeline seed varies across repetitions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "datl/config.hpp"
#include "datl/dataset.hpp"
#include "datl/io.hpp"
#include "datl/manifest.hpp"
#include "datl/model.hpp"
#include "datl/rng.hpp"
#include "datl/samplers.hpp"
#include "datl/synthetic.hpp"
#include "datl/trainer.hpp"
#include "datl/weights.hpp"

namespace datl {

// ---------------------------------------------------------------------------
// Statistics

struct ArmStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
};

inline ArmStats arm_stats(const std::vector<double>& xs) {
  ArmStats s;
  s.n = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / double(xs.size() - 1));
  }
  return s;
}

inline double pooled_sd(const ArmStats& a, const ArmStats& b) { return std::sqrt(0.5 * (a.sd * a.sd + b.sd * b.sd)); }

inline constexpr double kNoiseGateSd = 2.0;

enum class Verdict { Pass, Fail, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

/// a - b against the noise gate.
struct Comparison {
  std::string lhs, rhs;
  ArmStats a, b;
  double gap = 0.0;
  double pooled = 0.0;

  double gate() const { return kNoiseGateSd * pooled; }
  /// a exceeds b by more than the gate.
  bool significantly_greater() const { return gap > gate(); }
  /// a is not below b by more than the gate.
  bool not_worse() const { return gap >= -gate(); }
  std::string describe() const {
    auto f = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", v);
      return std::string(buf);
    };
    return lhs + "=" + f(a.mean) + " " + rhs + "=" + f(b.mean) + " gap=" + f(gap) + " gate=" + f(gate());
  }
};

// ---------------------------------------------------------------------------
// Configuration

/// Everything an experiment needs, read from a flat key=value config:
///
///   spec.*                 mixture (see MixtureSpec::from_config)
///   n_source, n_target_train, n_target_test
///   target_classes         fine labels of the target task (default: labels
///                          with positive target prior)
///   subtree_groups         hand-picked source groups (default: groups that
///                          hold target classes; flat specs use the classes)
///   hidden_dim             pretrained body width
///   estimator_hidden_dim   width of the source model used for P_t
///   estimator.*, pretrain.*, finetune.*   TrainConfig keys
///   temperature, top_k (0 = all labels), strategy, manifest_size
///   sizes                  size-sweep grid (default: doubling up to n_source)
///   coarse_factor          fine classes merged per coarse label
///   repeats, seed          R pipeline seeds derived from `seed`
struct ExperimentConfig {
  synthetic::MixtureSpec spec;
  std::size_t n_source = 2000;
  std::size_t n_target_train = 100;
  std::size_t n_target_test = 1000;
  std::vector<LabelIndex> target_classes;
  std::vector<LabelIndex> subtree_groups;
  std::size_t hidden_dim = 4;
  std::size_t estimator_hidden_dim = 0;
  TrainConfig estimator{400, 64, 0.1, 0, 0.9, 0.0, 0};
  TrainConfig pretrain{400, 64, 0.1, 0, 0.9, 0.0, 0};
  TrainConfig finetune{100, 32, 0.05, 0, 0.9, 0.0, 0};
  double temperature = kDefaultEstimationTemperature;
  std::size_t top_k = 0;
  SamplingStrategy strategy = SamplingStrategy::SameDistribution;
  std::uint64_t manifest_size = kDeskScaleManifestSize;
  std::vector<std::uint64_t> sizes;
  std::size_t coarse_factor = 2;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::string config_hash;

  static ExperimentConfig from_config(const KeyValueConfig& cfg) {
    ExperimentConfig c;
    c.spec = synthetic::MixtureSpec::from_config(cfg, "spec.");
    c.n_source = cfg.get<std::size_t>("n_source", c.n_source);
    c.n_target_train = cfg.get<std::size_t>("n_target_train", c.n_target_train);
    c.n_target_test = cfg.get<std::size_t>("n_target_test", c.n_target_test);
    c.target_classes = cfg.get_list<LabelIndex>("target_classes", {});
    c.subtree_groups = cfg.get_list<LabelIndex>("subtree_groups", {});
    c.hidden_dim = cfg.get<std::size_t>("hidden_dim", c.hidden_dim);
    c.estimator_hidden_dim = cfg.get<std::size_t>("estimator_hidden_dim", c.estimator_hidden_dim);
    c.estimator = TrainConfig::from_config(cfg, "estimator.", c.estimator);
    c.pretrain = TrainConfig::from_config(cfg, "pretrain.", c.pretrain);
    c.finetune = TrainConfig::from_config(cfg, "finetune.", c.finetune);
    c.temperature = cfg.get<double>("temperature", c.temperature);
    c.top_k = cfg.get<std::size_t>("top_k", c.top_k);
    c.strategy = parse_strategy(cfg.get<std::string>("strategy", to_string(c.strategy)));
    c.manifest_size = cfg.get<std::uint64_t>("manifest_size", c.manifest_size);
    c.sizes = cfg.get_list<std::uint64_t>("sizes", {});
    c.coarse_factor = cfg.get<std::size_t>("coarse_factor", c.coarse_factor);
    c.repeats = cfg.get<std::size_t>("repeats", c.repeats);
    c.seed = cfg.get<std::uint64_t>("seed", c.seed);
    cfg.reject_unknown();
    c.config_hash = fnv1a_hex(cfg.canonical());
    c.finalize();
    return c;
  }

  static ExperimentConfig load(const std::filesystem::path& path) { return from_config(KeyValueConfig::load(path)); }

  /// Fills defaults that depend on the spec and checks consistency.
  void finalize() {
    spec.validate();
    if (target_classes.empty())
      for (std::size_t y = 0; y < spec.num_classes; ++y)
        if (spec.target_prior[y] > 0.0) target_classes.push_back(static_cast<LabelIndex>(y));
    for (LabelIndex y : target_classes)
      if (y < 0 || std::size_t(y) >= spec.num_classes) throw Error("target class out of range");
    if (subtree_groups.empty() && spec.group_count) {
      for (LabelIndex y : target_classes) {
        const auto g = static_cast<LabelIndex>(spec.group_of(std::size_t(y)));
        if (std::find(subtree_groups.begin(), subtree_groups.end(), g) == subtree_groups.end())
          subtree_groups.push_back(g);
      }
    }
    for (LabelIndex g : subtree_groups)
      if (g < 0 || std::size_t(g) >= spec.group_count) throw Error("subtree group out of range");
    if (sizes.empty())
      for (std::uint64_t n = std::max<std::uint64_t>(1, n_source >> 5); n < n_source; n *= 2) sizes.push_back(n);
    if (sizes.empty() || sizes.back() != n_source) sizes.push_back(n_source);
    if (!std::is_sorted(sizes.begin(), sizes.end())) throw Error("sizes must be ascending");
    if (repeats < 1) throw Error("repeats must be >= 1");
    if (top_k > spec.num_classes) throw Error("top_k exceeds the number of source labels");
    if (coarse_factor < 1) throw Error("coarse_factor must be >= 1");
    if (n_source < 1 || n_target_train < 1 || n_target_test < 1) throw Error("dataset sizes must be >= 1");
    if (config_hash.empty()) config_hash = fnv1a_hex(to_config());
  }

  std::string to_config() const {
    auto list = [](const auto& xs) {
      std::string s;
      for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
      return s;
    };
    auto dlist = [](const std::vector<double>& xs) {
      std::string s;
      for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + io::format_double(xs[i]);
      return s;
    };
    std::string out;
    out += "spec.num_classes=" + std::to_string(spec.num_classes) + "\n";
    out += "spec.dim=" + std::to_string(spec.dim) + "\n";
    out += "spec.radius=" + io::format_double(spec.radius) + "\n";
    out += "spec.covariance_scale=" + io::format_double(spec.covariance_scale) + "\n";
    out += "spec.source_prior=" + dlist(spec.source_prior) + "\n";
    out += "spec.target_prior=" + dlist(spec.target_prior) + "\n";
    out += "spec.seed=" + std::to_string(spec.seed) + "\n";
    out += "spec.group_count=" + std::to_string(spec.group_count) + "\n";
    out += "spec.group_radius=" + io::format_double(spec.group_radius) + "\n";
    out += "n_source=" + std::to_string(n_source) + "\nn_target_train=" + std::to_string(n_target_train) +
           "\nn_target_test=" + std::to_string(n_target_test) + "\n";
    out += "target_classes=" + list(target_classes) + "\n";
    if (!subtree_groups.empty()) out += "subtree_groups=" + list(subtree_groups) + "\n";
    out += "hidden_dim=" + std::to_string(hidden_dim) + "\n";
    out += "estimator_hidden_dim=" + std::to_string(estimator_hidden_dim) + "\n";
    out += estimator.to_config("estimator.") + pretrain.to_config("pretrain.") + finetune.to_config("finetune.");
    out += "temperature=" + io::format_double(temperature) + "\ntop_k=" + std::to_string(top_k) + "\n";
    out += "strategy=" + to_string(strategy) + "\nmanifest_size=" + std::to_string(manifest_size) + "\n";
    out += "sizes=" + list(sizes) + "\ncoarse_factor=" + std::to_string(coarse_factor) + "\n";
    out += "repeats=" + std::to_string(repeats) + "\nseed=" + std::to_string(seed) + "\n";
    return out;
  }

  std::optional<std::size_t> top_k_limit() const {
    if (top_k == 0) return std::nullopt;
    return top_k;
  }

  std::vector<std::uint64_t> pipeline_seeds() const {
    std::vector<std::uint64_t> out;
    for (std::size_t r = 0; r < repeats; ++r) out.push_back(derive_seed(seed, r));
    return out;
  }
};

// ---------------------------------------------------------------------------
// Report

struct RunRecord {
  std::string arm;
  std::uint64_t size = 0;  // manifest size where it applies, else 0
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  double top1 = 0.0;
  double mean_per_class = 0.0;
  std::uint64_t pretrain_examples = 0;
  std::uint64_t unique_examples = 0;
};

struct ExperimentReport {
  std::string experiment;
  std::string config_hash;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<RunRecord> runs;

  /// Keeps runs keyed by (arm, size, repeat) so merge order never matters.
  void sort_runs() {
    std::sort(runs.begin(), runs.end(), [](const RunRecord& a, const RunRecord& b) {
      return std::tie(a.arm, a.size, a.repeat) < std::tie(b.arm, b.size, b.repeat);
    });
  }

  std::vector<double> values(const std::string& arm, std::uint64_t size = 0, bool per_class = false) const {
    std::vector<double> out;
    for (const auto& r : runs)
      if (r.arm == arm && r.size == size) out.push_back(per_class ? r.mean_per_class : r.top1);
    return out;
  }

  ArmStats stats(const std::string& arm, std::uint64_t size = 0) const { return arm_stats(values(arm, size)); }

  Comparison compare(const std::string& a, const std::string& b, std::uint64_t size_a = 0,
                     std::uint64_t size_b = 0) const {
    Comparison c;
    c.lhs = size_a ? a + "@" + std::to_string(size_a) : a;
    c.rhs = size_b ? b + "@" + std::to_string(size_b) : b;
    c.a = stats(a, size_a);
    c.b = stats(b, size_b);
    if (c.a.n == 0 || c.b.n == 0) throw Error("report has no runs for " + c.lhs + " or " + c.rhs);
    c.gap = c.a.mean - c.b.mean;
    c.pooled = pooled_sd(c.a, c.b);
    return c;
  }

  /// Distinct (arm, size) pairs in run order.
  std::vector<std::pair<std::string, std::uint64_t>> arms() const {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    for (const auto& r : runs)
      if (std::find(out.begin(), out.end(), std::pair{r.arm, r.size}) == out.end()) out.emplace_back(r.arm, r.size);
    return out;
  }

  bool operator==(const ExperimentReport& o) const {
    if (experiment != o.experiment || config_hash != o.config_hash || base_seed != o.base_seed || seeds != o.seeds ||
        runs.size() != o.runs.size())
      return false;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto &a = runs[i], &b = o.runs[i];
      if (std::tie(a.arm, a.size, a.repeat, a.seed, a.top1, a.mean_per_class, a.pretrain_examples,
                   a.unique_examples) != std::tie(b.arm, b.size, b.repeat, b.seed, b.top1, b.mean_per_class,
                                                  b.pretrain_examples, b.unique_examples))
        return false;
    }
    return true;
  }
};

inline constexpr const char* kRunsHeader =
    "experiment\tarm\tsize\trepeat\tseed\ttop1\tmean_per_class\tpretrain_examples\tunique_examples";

inline std::string report_tsv(const ExperimentReport& report) {
  std::string out = std::string(kRunsHeader) + "\n";
  for (const auto& r : report.runs)
    out += report.experiment + "\t" + r.arm + "\t" + std::to_string(r.size) + "\t" + std::to_string(r.repeat) +
           "\t" + std::to_string(r.seed) + "\t" + io::format_double(r.top1) + "\t" +
           io::format_double(r.mean_per_class) + "\t" + std::to_string(r.pretrain_examples) + "\t" +
           std::to_string(r.unique_examples) + "\n";
  return out;
}

inline nlohmann::json report_summary(const ExperimentReport& report) {
  nlohmann::json j;
  j["experiment"] = report.experiment;
  j["config_hash"] = report.config_hash;
  j["base_seed"] = report.base_seed;
  j["seeds"] = report.seeds;
  j["arms"] = nlohmann::json::array();
  for (const auto& [arm, size] : report.arms()) {
    const auto t = arm_stats(report.values(arm, size));
    const auto m = arm_stats(report.values(arm, size, true));
    j["arms"].push_back({{"arm", arm},
                         {"size", size},
                         {"runs", t.n},
                         {"top1_mean", t.mean},
                         {"top1_sd", t.sd},
                         {"mean_per_class_mean", m.mean},
                         {"mean_per_class_sd", m.sd}});
  }
  return j;
}

/// Writes runs.tsv and summary.json under `dir`.
inline void save_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  io::ensure_dir(dir);
  io::write_text(dir / "runs.tsv", report_tsv(report));
  io::write_text(dir / "summary.json", report_summary(report).dump(2) + "\n");
}

/// Rebuilds a report from runs.tsv plus the header fields of summary.json.
inline ExperimentReport load_report(const std::filesystem::path& dir) {
  ExperimentReport report;
  const auto summary_path = dir / "summary.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(summary_path));
    report.experiment = j.at("experiment").get<std::string>();
    report.config_hash = j.at("config_hash").get<std::string>();
    report.base_seed = j.at("base_seed").get<std::uint64_t>();
    report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(summary_path.string() + ": " + e.what());
  }
  const auto runs_path = (dir / "runs.tsv").string();
  const auto lines = io::read_lines(dir / "runs.tsv");
  if (lines.empty() || lines[0] != kRunsHeader) throw FormatError(runs_path, 1, "malformed header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = detail::split(lines[i], '\t');
    if (f.size() != 9) throw FormatError(runs_path, i + 1, "expected 9 fields");
    RunRecord r;
    r.arm = std::string(f[1]);
    bool ok = std::string(f[0]) == report.experiment && detail::parse_number(f[2], r.size) &&
              detail::parse_number(f[3], r.repeat) && detail::parse_number(f[4], r.seed) &&
              detail::parse_number(f[5], r.top1) && detail::parse_number(f[6], r.mean_per_class) &&
              detail::parse_number(f[7], r.pretrain_examples) && detail::parse_number(f[8], r.unique_examples);
    if (!ok) throw FormatError(runs_path, i + 1, "malformed run record");
    report.runs.push_back(std::move(r));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pipeline

/// Generated data shared by every arm and repeat of an experiment.
struct ExperimentData {
  synthetic::GeneratedData raw;
  DatasetStore target_train;  // restricted to the target classes
  DatasetStore target_test;
};

inline ExperimentData prepare_data(const ExperimentConfig& config) {
  auto raw = synthetic::generate(config.spec, config.n_source, config.n_target_train, config.n_target_test);
  auto train = filter_by_label_subtree(raw.target_train, config.target_classes);
  auto test = filter_by_label_subtree(raw.target_test, config.target_classes);
  if (train.size() != raw.target_train.size() || test.size() != raw.target_test.size())
    throw Error("target splits contain labels outside target_classes");
  return {std::move(raw), std::move(train), std::move(test)};
}

/// Per-stage seeds of one repetition.
struct PipelineSeeds {
  std::uint64_t estimator, sampler, pretrain, finetune;
  explicit PipelineSeeds(std::uint64_t seed)
      : estimator(derive_seed(seed, 1)),
        sampler(derive_seed(seed, 2)),
        pretrain(derive_seed(seed, 3)),
        finetune(derive_seed(seed, 4)) {}
};

/// Source model used to estimate P_t.
inline ClassifierModel train_estimator(const ExperimentConfig& config, const DatasetStore& source,
                                       std::uint64_t seed) {
  auto tc = config.estimator;
  tc.seed = seed;
  auto model = initialize_classifier(source.dim(), config.estimator_hidden_dim, source.label_space(), seed);
  return train(std::move(model), source, std::nullopt, tc);
}

/// w = P_t / P_s with the estimator's predictions on the unlabeled target.
inline LabelDistribution estimate_weights(const ExperimentConfig& config, const ExperimentData& data,
                                          std::uint64_t seed) {
  const auto& source = data.raw.source;
  const auto model = train_estimator(config, source, seed);
  const auto pt = estimate_target_distribution(model, data.raw.target_train, config.temperature);
  return importance_weights(pt, estimate_source_prior(source));
}

inline SamplingManifest sample_source(const DatasetStore& source, const LabelDistribution& w,
                                      SamplingStrategy strategy, std::uint64_t n, std::uint64_t seed) {
  if (strategy == SamplingStrategy::SameDistribution) {
    const auto ew = per_example_weights(source, w);
    return same_distribution_sample(source, ew, n, seed);
  }
  return elastic_sample(source, desired_label_mass(w, estimate_source_prior(source)), n, seed);
}

/// Pretrains on `pretrain_data` (steps = 0 leaves the initialization), then
/// replaces the head and fine-tunes on the target.
inline EvalResult pretrain_and_transfer(const ExperimentConfig& config, const ExperimentData& data,
                                        const DatasetStore& pretrain_data, const PipelineSeeds& seeds,
                                        std::size_t pretrain_steps) {
  auto tc = config.pretrain;
  tc.steps = pretrain_steps;
  tc.warmup_steps = std::min(tc.warmup_steps, tc.steps);
  tc.seed = seeds.pretrain;
  auto body = initialize_classifier(pretrain_data.dim(), config.hidden_dim, pretrain_data.label_space(),
                                    seeds.pretrain);
  body = train(std::move(body), pretrain_data, std::nullopt, tc);
  auto fc = config.finetune;
  fc.seed = seeds.finetune;
  const auto tuned = replace_head_and_finetune(body, data.target_train, fc);
  return evaluate(tuned, data.target_test);
}

inline RunRecord make_record(std::string arm, std::uint64_t size, std::size_t repeat, std::uint64_t seed,
                             const EvalResult& e, std::uint64_t examples, std::uint64_t unique) {
  return {std::move(arm), size, repeat, seed, e.top1, e.mean_per_class, examples, unique};
}

/// One arm trained on a materialized manifest.
inline RunRecord manifest_arm(const ExperimentConfig& config, const ExperimentData& data, const std::string& arm,
                              std::size_t repeat, std::uint64_t seed, const SamplingManifest& manifest,
                              std::uint64_t size_key) {
  const auto pretrain_data = materialize_manifest(manifest, data.raw.source);
  const auto e = pretrain_and_transfer(config, data, pretrain_data, PipelineSeeds(seed), config.pretrain.steps);
  return make_record(arm, size_key, repeat, seed, e, manifest.total_size(), unique_example_count(manifest));
}

inline ExperimentReport new_report(const ExperimentConfig& config, std::string name) {
  ExperimentReport r;
  r.experiment = std::move(name);
  r.config_hash = config.config_hash;
  r.base_seed = config.seed;
  r.seeds = config.pipeline_seeds();
  return r;
}

// ---------------------------------------------------------------------------
// Experiments

/// Adaptive / Uniform / Reversed weights (restricted to top_k labels when
/// set) feeding the configured sampler at `manifest_size`.
inline ExperimentReport run_weighting_ablation(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  auto report = new_report(config, "ablation");
  const auto top_k = config.top_k_limit();
  for (std::size_t r = 0; r < config.repeats; ++r) {
    const auto seed = report.seeds[r];
    const PipelineSeeds seeds(seed);
    const auto w = estimate_weights(config, data, seeds.estimator);
    for (auto scheme : {WeightScheme::Adaptive, WeightScheme::Uniform, WeightScheme::Reversed}) {
      const auto tw = transform_weights(w, scheme, top_k);
      const auto manifest = sample_source(data.raw.source, tw, config.strategy, config.manifest_size, seeds.sampler);
      report.runs.push_back(manifest_arm(config, data, to_string(scheme), r, seed, manifest, 0));
    }
  }
  report.sort_runs();
  return report;
}

/// Both samplers with adaptive weights at every size of the grid.
inline ExperimentReport run_size_sweep(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  auto report = new_report(config, "size-sweep");
  const auto top_k = config.top_k_limit();
  for (std::size_t r = 0; r < config.repeats; ++r) {
    const auto seed = report.seeds[r];
    const PipelineSeeds seeds(seed);
    const auto w = transform_weights(estimate_weights(config, data, seeds.estimator), WeightScheme::Adaptive, top_k);
    for (auto strategy : {SamplingStrategy::SameDistribution, SamplingStrategy::Elastic}) {
      for (auto n : config.sizes) {
        const auto manifest = sample_source(data.raw.source, w, strategy, n, seeds.sampler);
        report.runs.push_back(manifest_arm(config, data, to_string(strategy), r, seed, manifest, n));
      }
    }
  }
  report.sort_runs();
  return report;
}

/// Label space of the source with group labels as parents of fine labels,
/// and the hand-picked subtree roots in it.
inline std::pair<DatasetStore, std::vector<LabelIndex>> subtree_selection(const ExperimentConfig& config,
                                                                          const DatasetStore& source) {
  if (!config.spec.group_count) return {source, config.target_classes};
  std::vector<LabelIndex> roots;
  for (LabelIndex g : config.subtree_groups)
    roots.push_back(static_cast<LabelIndex>(config.spec.num_classes) + g);
  return {source.with_label_space(synthetic::group_hierarchy(config.spec)), roots};
}

/// The hand-picked subtree relabeled to coarse classes of `coarse_factor`
/// consecutive fine labels each.
inline DatasetStore coarse_subtree(const ExperimentConfig& config, const DatasetStore& subtree) {
  const auto& space = subtree.label_space();
  std::vector<LabelIndex> grouping(space.size());
  std::size_t fine = 0;
  for (std::size_t y = 0; y < space.size(); ++y)
    grouping[y] = static_cast<LabelIndex>((subtree.label_origin().empty() ||
                                           std::size_t(subtree.label_origin()[y]) < config.spec.num_classes)
                                              ? fine++ / config.coarse_factor
                                              : 0);
  // Group labels (no examples) fold into the first coarse class.
  return synthetic::coarsen_labels(subtree, grouping);
}

/// Arms: entire source, hand-picked subtree, adaptive transfer, random init,
/// and the subtree with coarsened labels.
inline ExperimentReport run_subset_comparison(const ExperimentConfig& config) {
  const auto data = prepare_data(config);
  auto report = new_report(config, "subset");
  const auto& source = data.raw.source;
  const auto [hier, roots] = subtree_selection(config, source);
  const auto subtree = filter_by_label_subtree(hier, roots);
  const auto coarse = coarse_subtree(config, subtree);
  const auto top_k = config.top_k_limit();
  for (std::size_t r = 0; r < config.repeats; ++r) {
    const auto seed = report.seeds[r];
    const PipelineSeeds seeds(seed);
    const auto steps = config.pretrain.steps;
    report.runs.push_back(make_record("entire", 0, r, seed, pretrain_and_transfer(config, data, source, seeds, steps),
                                      source.size(), source.size()));
    report.runs.push_back(make_record("subtree", 0, r, seed,
                                      pretrain_and_transfer(config, data, subtree, seeds, steps), subtree.size(),
                                      subtree.size()));
    report.runs.push_back(make_record("subtree-coarse", 0, r, seed,
                                      pretrain_and_transfer(config, data, coarse, seeds, steps), coarse.size(),
                                      coarse.size()));
    const auto w = transform_weights(estimate_weights(config, data, seeds.estimator), WeightScheme::Adaptive, top_k);
    const auto manifest = sample_source(source, w, config.strategy, config.manifest_size, seeds.sampler);
    report.runs.push_back(manifest_arm(config, data, "adaptive", r, seed, manifest, 0));
    report.runs.push_back(
        make_record("random-init", 0, r, seed, pretrain_and_transfer(config, data, source, seeds, 0), 0, 0));
  }
  report.sort_runs();
  return report;
}

inline ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config) {
  if (name == "ablation") return run_weighting_ablation(config);
  if (name == "size-sweep") return run_size_sweep(config);
  if (name == "subset") return run_subset_comparison(config);
  throw Error("unknown experiment '" + name + "' (expected ablation, size-sweep or subset)");
}

}  // namespace datl

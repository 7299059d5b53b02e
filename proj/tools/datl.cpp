// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

// datl: command-line front end for the data-selection pipeline.
//
//   datl generate         --config exp.kv --out DIR
//   datl pretrain         --source DIR [--manifest FILE] [--config train.kv] --out MODEL
//   datl estimate-weights --model MODEL --source DIR --target DIR --out DIR
//   datl sample           --source DIR --weights FILE --strategy same|elastic --size N --out DIR
//   datl dedup            --source DIR --target DIR [--target DIR...] --out DIR
//   datl finetune         --model MODEL --target DIR --test DIR [--config train.kv] --out MODEL
//   datl experiment       ablation|size-sweep|subset --config exp.kv --out DIR
//   datl report           DIR

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "datl/dedup.hpp"
#include "datl/experiments.hpp"

namespace {

using namespace datl;
namespace fs = std::filesystem;

void write_json(const fs::path& path, const nlohmann::json& j) { io::write_text(path, j.dump(2) + "\n"); }

KeyValueConfig load_optional_config(const std::string& path) {
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

std::string summary_tsv(const ExperimentReport& report) {
  std::string out = "arm\tsize\truns\ttop1_mean\ttop1_sd\tmean_per_class_mean\tmean_per_class_sd\n";
  for (const auto& [arm, size] : report.arms()) {
    const auto t = arm_stats(report.values(arm, size));
    const auto m = arm_stats(report.values(arm, size, true));
    out += arm + "\t" + std::to_string(size) + "\t" + std::to_string(t.n) + "\t" + io::format_double(t.mean) + "\t" +
           io::format_double(t.sd) + "\t" + io::format_double(m.mean) + "\t" + io::format_double(m.sd) + "\n";
  }
  return out;
}

// Shared options.
struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  double temperature = kDefaultEstimationTemperature;
  std::string scheme = "adaptive";
  std::size_t top_k = 0;
  std::string strategy = "same";
  std::optional<std::uint64_t> size;
  std::string source, target, test, model, weights, manifest, input;
  std::vector<std::string> targets;
  std::string experiment;
  double threshold = kDefaultDuplicateThreshold;
  bool materialize = false;
};

int cmd_generate(const Options& o) {
  auto cfg = KeyValueConfig::load(o.config);
  if (o.seed) cfg.set("spec.seed", std::to_string(*o.seed));
  const auto config = ExperimentConfig::from_config(cfg);
  const auto data = prepare_data(config);
  const fs::path out = o.out;
  save_dataset(data.raw.source, out / "source");
  save_dataset(data.target_train, out / "target_train");
  save_dataset(data.target_test, out / "target_test");
  write_json(out / "summary.json", {{"config_hash", config.config_hash},
                                    {"source", data.raw.source.size()},
                                    {"target_train", data.target_train.size()},
                                    {"target_test", data.target_test.size()},
                                    {"oracle_weights", synthetic::oracle_importance_weights(config.spec).values()}});
  std::cout << "source\t" << data.raw.source.size() << "\ntarget_train\t" << data.target_train.size()
            << "\ntarget_test\t" << data.target_test.size() << "\n";
  return 0;
}

int cmd_pretrain(const Options& o) {
  const auto cfg = load_optional_config(o.config);
  auto tc = TrainConfig::from_config(cfg);
  const auto hidden = cfg.get<std::size_t>("hidden_dim", 8);
  cfg.reject_unknown();
  if (o.seed) tc.seed = *o.seed;
  const auto source = load_dataset(o.source);
  std::optional<DatasetStore> materialized;
  if (!o.manifest.empty()) materialized = materialize_manifest(load_manifest(o.manifest), source);
  const auto& data = materialized ? *materialized : source;
  std::optional<std::vector<double>> example_weights;
  if (!o.weights.empty()) example_weights = per_example_weights(data, load_weights(o.weights));
  auto model = initialize_classifier(data.dim(), hidden, data.label_space(), tc.seed);
  double last_loss = 0.0;
  model = train<float>(std::move(model), data,
                example_weights ? std::optional<std::span<const double>>(*example_weights) : std::nullopt, tc,
                [&](std::size_t, double loss, const ClassifierModel&) { last_loss = loss; });
  save_model(model, o.out);
  const auto acc = evaluate(model, data);
  write_json(fs::path(o.out) / "train.json", {{"examples", data.size()},
                                              {"steps", tc.steps},
                                              {"final_batch_loss", last_loss},
                                              {"train_top1", acc.top1},
                                              {"train_mean_per_class", acc.mean_per_class}});
  std::cout << "examples\t" << data.size() << "\nfinal_batch_loss\t" << io::format_double(last_loss)
            << "\ntrain_top1\t" << io::format_double(acc.top1) << "\n";
  return 0;
}

int cmd_finetune(const Options& o) {
  const auto cfg = load_optional_config(o.config);
  auto tc = TrainConfig::from_config(cfg);
  cfg.reject_unknown();
  if (o.seed) tc.seed = *o.seed;
  const auto pretrained = load_model(o.model);
  const auto target = load_dataset(o.target);
  const auto tuned = replace_head_and_finetune(pretrained, target, tc);
  save_model(tuned, o.out);
  nlohmann::json j{{"target", target.id()}, {"steps", tc.steps}};
  if (!o.test.empty()) {
    const auto e = evaluate(tuned, load_dataset(o.test));
    j["top1"] = e.top1;
    j["mean_per_class"] = e.mean_per_class;
    std::cout << "top1\t" << io::format_double(e.top1) << "\nmean_per_class\t" << io::format_double(e.mean_per_class)
              << "\n";
  }
  write_json(fs::path(o.out) / "eval.json", j);
  return 0;
}

int cmd_estimate(const Options& o) {
  const auto model = load_model(o.model);
  const auto source = load_dataset(o.source);
  const auto target = load_dataset(o.target);
  if (!(model.label_space() == source.label_space()))
    throw Error("model label space differs from the source label space");
  const auto pt = estimate_target_distribution(model, target, o.temperature);
  const auto ps = estimate_source_prior(source);
  WeightDiagnostics diag;
  const auto w = importance_weights(pt, ps, &diag);
  const auto tw = transform_weights(w, parse_scheme(o.scheme), o.top_k ? std::optional(o.top_k) : std::nullopt);
  for (const auto& msg : diag.warnings) std::cerr << "warning: " << msg << "\n";

  const fs::path out = o.out;
  io::ensure_dir(out);
  WeightFileHeader h{DistributionKind::ImportanceWeights, o.temperature, source.id(), target.id(), diag.lost_mass};
  save_weights(tw, source.label_space(), h, out / "weights.tsv");
  h.kind = DistributionKind::TargetEstimate;
  save_weights(pt, source.label_space(), h, out / "target_estimate.tsv");
  h.kind = DistributionKind::SourcePrior;
  save_weights(ps, source.label_space(), h, out / "source_prior.tsv");
  write_json(out / "summary.json", {{"scheme", o.scheme},
                                    {"top_k", o.top_k},
                                    {"temperature", o.temperature},
                                    {"lost_mass", diag.lost_mass},
                                    {"unsupported_labels", diag.unsupported_labels},
                                    {"weights", tw.values()}});
  std::cout << io::read_text(out / "weights.tsv");
  return 0;
}

int cmd_sample(const Options& o) {
  const auto source = load_dataset(o.source);
  const auto w = load_weights(o.weights);
  const auto n = o.size.value_or(kDeskScaleManifestSize);
  const auto manifest = sample_source(source, w, parse_strategy(o.strategy), n, o.seed.value_or(0));
  const fs::path out = o.out;
  io::ensure_dir(out);
  save_manifest(manifest, out / "manifest.tsv");
  const auto report = manifest_report_tsv(manifest, source);
  io::write_text(out / "report.tsv", report);
  write_json(out / "summary.json", {{"strategy", o.strategy},
                                    {"seed", manifest.seed()},
                                    {"total", manifest.total_size()},
                                    {"unique", unique_example_count(manifest)},
                                    {"histogram", manifest_label_histogram(manifest, source)}});
  if (o.materialize) save_dataset(materialize_manifest(manifest, source), out / "dataset");
  std::cout << report;
  return 0;
}

int cmd_dedup(const Options& o) {
  const auto source = load_dataset(o.source);
  std::vector<DatasetStore> targets;
  for (const auto& t : o.targets) targets.push_back(load_dataset(t));
  const auto result = near_duplicate_filter(source, targets, o.threshold);
  const fs::path out = o.out;
  save_dataset(result.filtered, out / "filtered");
  save_removed(result.removed, out / "removed.tsv");
  write_json(out / "summary.json", {{"threshold", o.threshold},
                                    {"source", source.size()},
                                    {"kept", result.filtered.size()},
                                    {"removed", result.removed.size()},
                                    {"zero_norm_ids", result.zero_norm_ids}});
  for (const auto& id : result.zero_norm_ids) std::cerr << "warning: zero-norm feature vector: " << id << "\n";
  std::cout << "kept\t" << result.filtered.size() << "\nremoved\t" << result.removed.size() << "\n";
  return 0;
}

int cmd_experiment(const Options& o, const CLI::App& sub) {
  auto cfg = KeyValueConfig::load(o.config);
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  if (sub.count("--temperature")) cfg.set("temperature", io::format_double(o.temperature));
  if (sub.count("--top-k")) cfg.set("top_k", std::to_string(o.top_k));
  if (sub.count("--strategy")) cfg.set("strategy", o.strategy);
  if (o.size) cfg.set("manifest_size", std::to_string(*o.size));
  const auto config = ExperimentConfig::from_config(cfg);
  const auto report = run_experiment(o.experiment, config);
  save_report(report, o.out);
  io::write_text(fs::path(o.out) / "config.kv", config.to_config());
  std::cout << summary_tsv(report);
  return 0;
}

int cmd_report(const Options& o) {
  const auto report = load_report(o.input);
  std::cout << "# experiment=" << report.experiment << " config_hash=" << report.config_hash
            << " seed=" << report.base_seed << "\n"
            << summary_tsv(report);
  if (!o.out.empty()) {
    io::ensure_dir(o.out);
    io::write_text(fs::path(o.out) / "summary.tsv", summary_tsv(report));
    write_json(fs::path(o.out) / "summary.json", report_summary(report));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"datl - source data selection for transfer learning"};
  app.require_subcommand(1);
  Options o;

  auto seed = [&](CLI::App* s) {
    s->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { o.seed = v; }, "Random seed");
  };
  auto strategy = [&](CLI::App* s) {
    s->add_option("--strategy", o.strategy, "Sampler")->check(CLI::IsMember({"same", "elastic"}));
  };
  auto size = [&](CLI::App* s) {
    s->add_option_function<std::uint64_t>("--size", [&](std::uint64_t v) { o.size = v; }, "Manifest size");
  };

  auto* gen = app.add_subcommand("generate", "Write synthetic source / target datasets");
  gen->add_option("--config", o.config, "Experiment config")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output directory")->required();
  seed(gen);

  auto* pre = app.add_subcommand("pretrain", "Train a source model");
  pre->add_option("--source", o.source, "Source dataset")->required()->check(CLI::ExistingDirectory);
  pre->add_option("--manifest", o.manifest, "Train on this manifest of the source")->check(CLI::ExistingFile);
  pre->add_option("--weights", o.weights, "Per-label weights for a weighted loss")->check(CLI::ExistingFile);
  pre->add_option("--config", o.config, "Train config (key=value)")->check(CLI::ExistingFile);
  pre->add_option("--out", o.out, "Model directory")->required();
  seed(pre);

  auto* est = app.add_subcommand("estimate-weights", "Estimate label importance weights");
  est->add_option("--model", o.model, "Source-trained model")->required()->check(CLI::ExistingDirectory);
  est->add_option("--source", o.source, "Source dataset")->required()->check(CLI::ExistingDirectory);
  est->add_option("--target", o.target, "Target dataset (labels unused)")->required()->check(CLI::ExistingDirectory);
  est->add_option("--temperature", o.temperature, "Softmax temperature")->capture_default_str();
  est->add_option("--scheme", o.scheme, "Weighting scheme")
      ->check(CLI::IsMember({"adaptive", "uniform", "reversed"}))
      ->capture_default_str();
  est->add_option("--top-k", o.top_k, "Keep the k highest-weight labels (0 = all)");
  est->add_option("--out", o.out, "Output directory")->required();

  auto* smp = app.add_subcommand("sample", "Draw a manifest from the source");
  smp->add_option("--source", o.source, "Source dataset")->required()->check(CLI::ExistingDirectory);
  smp->add_option("--weights", o.weights, "weights.tsv")->required()->check(CLI::ExistingFile);
  smp->add_flag("--materialize", o.materialize, "Also write the materialized dataset");
  smp->add_option("--out", o.out, "Output directory")->required();
  strategy(smp);
  size(smp);
  seed(smp);

  auto* ddp = app.add_subcommand("dedup", "Remove near-duplicates of target examples from the source");
  ddp->add_option("--source", o.source, "Source dataset")->required()->check(CLI::ExistingDirectory);
  ddp->add_option("--target", o.targets, "Target dataset (repeatable)")->required()->check(CLI::ExistingDirectory);
  ddp->add_option("--threshold", o.threshold, "Cosine similarity threshold")->capture_default_str();
  ddp->add_option("--out", o.out, "Output directory")->required();

  auto* fin = app.add_subcommand("finetune", "Replace the head and fine-tune on a target");
  fin->add_option("--model", o.model, "Pretrained model")->required()->check(CLI::ExistingDirectory);
  fin->add_option("--target", o.target, "Target training set")->required()->check(CLI::ExistingDirectory);
  fin->add_option("--test", o.test, "Target test set")->check(CLI::ExistingDirectory);
  fin->add_option("--config", o.config, "Train config (key=value)")->check(CLI::ExistingFile);
  fin->add_option("--out", o.out, "Model directory")->required();
  seed(fin);

  auto* exp = app.add_subcommand("experiment", "Run a desk-scale experiment");
  exp->add_option("name", o.experiment, "Experiment")
      ->required()
      ->check(CLI::IsMember({"ablation", "size-sweep", "subset"}));
  exp->add_option("--config", o.config, "Experiment config")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", o.out, "Report directory")->required();
  exp->add_option("--temperature", o.temperature, "Softmax temperature");
  exp->add_option("--top-k", o.top_k, "Keep the k highest-weight labels (0 = all)");
  strategy(exp);
  size(exp);
  seed(exp);

  auto* rep = app.add_subcommand("report", "Summarize an experiment report directory");
  rep->add_option("dir", o.input, "Report directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--out", o.out, "Also write summary.tsv / summary.json here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_generate(o);
    if (pre->parsed()) return cmd_pretrain(o);
    if (est->parsed()) return cmd_estimate(o);
    if (smp->parsed()) return cmd_sample(o);
    if (ddp->parsed()) return cmd_dedup(o);
    if (fin->parsed()) return cmd_finetune(o);
    if (exp->parsed()) return cmd_experiment(o, *exp);
    if (rep->parsed()) return cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "datl: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

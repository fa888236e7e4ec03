// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

// motionmap: generate | train | evaluate | export | serve | check-manifest

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "motionmap/config.hpp"
#include "motionmap/error.hpp"
#include "motionmap/explorer.hpp"
#include "motionmap/export.hpp"
#include "motionmap/workflow.hpp"

namespace mm = motionmap;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--set", f.sets, "override a config field, e.g. --set data.tau=0.2")
      ->take_all();
}

mm::RunConfig resolve(const CommonFlags& f) {
  mm::RunConfig c = f.config.empty() ? mm::RunConfig{} : mm::load_config(f.config);
  for (const auto& s : f.sets) mm::apply_override(c, s);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.paths.out = *f.out;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MotionMap: multimodal human motion forecasting"};
  app.require_subcommand(1);

  CommonFlags common;
  std::optional<int> budget;
  std::optional<std::string> protocol;
  std::optional<int> port;
  std::optional<std::string> host;
  std::string checkpoint;
  std::string what = "all";
  int samples = 4;
  bool resume = false;
  std::string manifest_path;
  std::string export_dir;

  auto* gen = app.add_subcommand("generate", "generate the synthetic corpus and mining sidecar");
  add_common(gen, common);

  auto* train = app.add_subcommand("train", "run every training stage into one checkpoint");
  add_common(train, common);
  train->add_flag("--resume", resume, "continue from the last completed stage");

  auto* eval = app.add_subcommand("evaluate", "write the metrics report");
  add_common(eval, common);
  eval->add_option("--budget", budget, "forecast budget k")->check(CLI::PositiveNumber);
  eval->add_option("--protocol", protocol, "train-mined | test-mined")
      ->check(CLI::IsMember({"train-mined", "test-mined"}));

  auto* exp = app.add_subcommand("export", "write figure exports and their manifest");
  add_common(exp, common);
  exp->add_option("--what", what, "all or a comma list of density, overlays, forecasts");
  exp->add_option("--samples", samples, "held-out samples for overlays and forecasts")
      ->check(CLI::NonNegativeNumber);
  exp->add_option("--budget", budget, "forecast budget k")->check(CLI::PositiveNumber);

  auto* srv = app.add_subcommand("serve", "serve the explorer JSON API");
  add_common(srv, common);
  srv->add_option("--checkpoint", checkpoint, "checkpoint (default <out>/model.mmap)");
  srv->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  srv->add_option("--host", host, "bind address");

  auto* chk = app.add_subcommand("check-manifest", "compare the export manifest with the files");
  chk->add_option("--manifest", manifest_path, "manifest file")->required();
  chk->add_option("--dir", export_dir, "export directory (default: the manifest's)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (chk->parsed()) {
      const std::filesystem::path mp(manifest_path);
      const auto problems = mm::check_manifest(
          mm::load_manifest(mp), export_dir.empty() ? mp.parent_path() : std::filesystem::path(export_dir));
      for (const auto& p : problems) std::cout << p << "\n";
      if (problems.empty()) std::cout << "ok\n";
      return problems.empty() ? 0 : 1;
    }

    mm::RunConfig config = resolve(common);
    if (budget) config.evaluation.budget = *budget;
    if (protocol) config.evaluation.protocol = mm::parse_protocol(*protocol);
    if (port) config.serve.port = *port;
    if (host) config.serve.host = *host;
    config.validate();

    if (gen->parsed()) {
      const mm::Dataset d = mm::run_generate(config);
      std::cout << "corpus " << config.corpus_path().string() << ": " << d.corpus.sequences.size()
                << " sequences, " << d.train.size() << " train / " << d.test.size()
                << " test samples\n";
    } else if (train->parsed()) {
      std::filesystem::create_directories(config.out_dir());
      std::ofstream log(config.out_dir() / "train_log.jsonl", resume ? std::ios::app : std::ios::trunc);
      const auto progress = [&log](const std::string& stage, int epoch, double loss) {
        const std::string line =
            nlohmann::json{{"stage", stage}, {"epoch", epoch}, {"loss", loss}}.dump();
        log << line << "\n" << std::flush;
        std::cout << line << "\n" << std::flush;
      };
      const mm::TrainingState st = mm::run_train(config, resume, progress);
      std::cout << "checkpoint " << config.checkpoint_path().string() << " (stages:";
      for (const auto& s : st.stage_log) std::cout << " " << s;
      std::cout << ")\n";
    } else if (eval->parsed()) {
      const mm::EvaluationOutput out = mm::run_evaluate(config);
      std::cout << mm::metrics_table(out.report);
      std::cout << "wrote " << out.table.string() << " and " << out.jsonl.string() << "\n";
    } else if (exp->parsed()) {
      const auto manifest = mm::run_export(config, mm::parse_export_kinds(what), samples);
      std::cout << "wrote " << manifest.entries.size() << " exports to "
                << mm::export_dir(config).string() << "\n";
    } else if (srv->parsed()) {
      const std::filesystem::path ckpt =
          checkpoint.empty() ? config.checkpoint_path() : std::filesystem::path(checkpoint);
      const mm::Dataset data = mm::load_dataset(config);
      std::vector<mm::Sample> all = data.train;
      all.insert(all.end(), data.test.begin(), data.test.end());
      const mm::Explorer explorer = mm::load_explorer(ckpt, all);
      mm::serve(explorer, config.serve.host, config.serve.port, [&](int bound, const std::function<void()>&) {
        std::cout << "listening on http://" << config.serve.host << ":" << bound << "\n"
                  << std::flush;
      });
    }
  } catch (const mm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

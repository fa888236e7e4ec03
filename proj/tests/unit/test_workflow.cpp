// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "motionmap/error.hpp"
#include "motionmap/workflow.hpp"

using namespace motionmap;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("workflow") {

TEST_CASE("generate is deterministic and windows every sequence") {
  const RunConfig a = testing::tiny_config(testing::temp_dir("gen_a"));
  const RunConfig b = testing::tiny_config(testing::temp_dir("gen_b"));
  const Dataset d = run_generate(a);
  run_generate(b);
  CHECK(read_bytes(a.corpus_path()) == read_bytes(b.corpus_path()));
  CHECK(read_bytes(a.sidecar_path()) == read_bytes(b.sidecar_path()));
  int expected = 0;
  for (const auto& s : d.corpus.sequences) {
    expected += window_count(s.motion.frame_count(), a.data.obs_frames, a.data.future_frames,
                             a.data.stride);
  }
  CHECK(static_cast<int>(d.train.size() + d.test.size()) == expected);
  const Dataset back = load_dataset(a);
  CHECK(back.mining == d.mining);
  CHECK(back.train.size() == d.train.size());
  // Test sequences never contribute training windows.
  std::set<int> test_seq;
  for (const auto& s : d.test) test_seq.insert(s.source_sequence);
  for (const auto& s : d.train) CHECK(test_seq.count(s.source_sequence) == 0);

  RunConfig other = a;
  other.data.tau = 0.3;
  CHECK_THROWS_AS(load_dataset(other), ConfigError);
}

TEST_CASE("training records the stage order and a complete checkpoint") {
  const RunConfig& cfg = testing::tiny_run();
  const nn::Container c = nn::Container::load(cfg.checkpoint_path());
  const TrainingState st = from_container(c);
  CHECK(st.completed == Stage::kFinetune);
  CHECK(st.stage_log ==
        std::vector<std::string>{"autoencoder", "embedding", "codebook", "heatmap", "finetune"});
  CHECK(c.spec_hash == cfg.spec_hash());
  CHECK(to_container(st, c.spec_hash) == c);
  CHECK(st.autoencoder_loss.size() == static_cast<std::size_t>(cfg.autoencoder.epochs));
  CHECK(st.heatmap_loss.size() == static_cast<std::size_t>(cfg.motionmap.epochs));

  std::ifstream in(cfg.out_dir() / "train_manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  CHECK(manifest["stages"] == nlohmann::json(st.stage_log));

  // Every training future's cell holds a codebook entry and the counts add up.
  int total = 0;
  for (const auto& [cell, e] : st.models.codebook.entries()) total += e.count;
  CHECK(total == static_cast<int>(st.models.assignments.size()));
  for (const auto& a : st.models.assignments) CHECK(st.models.codebook.contains(a.cell));
}

TEST_CASE("resuming after the first stage skips it") {
  const RunConfig& base = testing::tiny_run();
  RunConfig cfg = base;
  cfg.paths.out = testing::temp_dir("resume").string();
  fs::copy_file(base.corpus_path(), cfg.corpus_path());
  fs::copy_file(base.sidecar_path(), cfg.sidecar_path());
  nn::Container c = nn::Container::load(base.checkpoint_path());
  c.put_text("stage", "autoencoder");
  c.put_text("stage_log", R"(["autoencoder"])");
  c.save(cfg.checkpoint_path());
  const AutoencoderModel ae_before = from_container(c).models.autoencoder;

  std::vector<std::string> stages;
  const TrainingState st = run_train(cfg, true, [&](const std::string& s, int, double) {
    if (stages.empty() || stages.back() != s) stages.push_back(s);
  });
  CHECK(stages == std::vector<std::string>{"embedding", "codebook", "heatmap", "finetune"});
  CHECK(st.stage_log.front() == "autoencoder");
  CHECK(st.stage_log.size() == 5);
  // Fine-tuning changes only fusion and decoder weights.
  CHECK(st.models.autoencoder.params().at("ex.Wi") == ae_before.params().at("ex.Wi"));

  RunConfig changed = cfg;
  changed.data.stride = 11;
  CHECK_THROWS_AS(run_train(changed, true, {}), ConfigError);
}

TEST_CASE("a resumed run equals an uninterrupted one") {
  const RunConfig& base = testing::tiny_run();
  RunConfig cfg = base;
  cfg.paths.out = testing::temp_dir("resume_eq").string();
  fs::copy_file(base.corpus_path(), cfg.corpus_path());
  fs::copy_file(base.sidecar_path(), cfg.sidecar_path());
  struct Interrupted {};
  CHECK_THROWS_AS(run_train(cfg, false,
                            [](const std::string& stage, int, double) {
                              if (stage == "finetune") throw Interrupted{};
                            }),
                  Interrupted);
  CHECK(nn::Container::load(cfg.checkpoint_path()).text("stage") == "heatmap");
  run_train(cfg, true, {});
  CHECK(load_models(cfg.checkpoint_path()).autoencoder ==
        load_models(base.checkpoint_path()).autoencoder);
}

TEST_CASE("divergence halts with the stage name") {
  RunConfig cfg = testing::tiny_config(testing::temp_dir("diverge"));
  cfg.motionmap.step_size = 1e300;
  cfg.motionmap.clip_norm = 0.0;
  run_generate(cfg);
  try {
    run_train(cfg, false, {});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("stage heatmap") != std::string::npos);
  }
  CHECK(from_container(nn::Container::load(cfg.checkpoint_path())).completed == Stage::kCodebook);
  CHECK_THROWS_AS(load_models(cfg.checkpoint_path()), FormatError);
}

TEST_CASE("evaluation refuses a checkpoint from another configuration") {
  const RunConfig& base = testing::tiny_run();
  RunConfig cfg = base;
  cfg.autoencoder.epochs = 5;
  CHECK_THROWS_AS(run_evaluate(cfg), ConfigError);
}

TEST_CASE("evaluation files are byte-identical on rerun") {
  RunConfig cfg = testing::tiny_run();
  cfg.evaluation.budget = 2;
  const auto first = run_evaluate(cfg);
  const std::string table = read_bytes(first.table);
  const std::string jsonl = read_bytes(first.jsonl);
  const auto second = run_evaluate(cfg);
  CHECK(read_bytes(second.table) == table);
  CHECK(read_bytes(second.jsonl) == jsonl);
  CHECK(first.table.filename() == "metrics_train-mined_k2.txt");
  CHECK(first.report.budget == 2);
  cfg.evaluation.protocol = Protocol::kTestMined;
  CHECK(run_evaluate(cfg).report.protocol == Protocol::kTestMined);
}

TEST_CASE("stage names") {
  for (Stage s : training_stages()) CHECK(parse_stage(to_string(s)) == s);
  CHECK_THROWS_AS(parse_stage("warmup"), FormatError);
}

}  // TEST_SUITE

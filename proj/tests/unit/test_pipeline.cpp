// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "motionmap/error.hpp"
#include "motionmap/pipeline.hpp"
#include "motionmap/workflow.hpp"

using namespace motionmap;

namespace {

PoseSequence constant_sequence(int frames, double value) {
  PoseSequence s;
  s.frames.assign(frames, Pose::Constant(2, 3, value));
  return s;
}

// Per frame: sqrt of the sum over joints and axes of squared differences.
double naive_sequence_distance(const PoseSequence& a, const PoseSequence& b) {
  double total = 0.0;
  for (int f = 0; f < a.frame_count(); ++f) {
    double sq = 0.0;
    for (int j = 0; j < a.frames[f].rows(); ++j) {
      for (int k = 0; k < 3; ++k) {
        const double d = a.frames[f](j, k) - b.frames[f](j, k);
        sq += d * d;
      }
    }
    total += std::sqrt(sq);
  }
  return total / a.frame_count();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("distances and best-of-k metrics against loops") {
  Rng rng(1);
  const auto topo = SkeletonTopology::human17();
  std::vector<PoseSequence> preds, gts;
  for (int k = 0; k < 4; ++k) preds.push_back(testing::random_sequence(rng, topo, 5));
  for (int k = 0; k < 3; ++k) gts.push_back(testing::random_sequence(rng, topo, 5));
  double mm_ade = 0.0, mm_fde = 0.0;
  for (const auto& g : gts) {
    double best_a = 1e300, best_f = 1e300;
    for (const auto& p : preds) {
      best_a = std::min(best_a, naive_sequence_distance(p, g));
      best_f = std::min(best_f, (p.frames.back() - g.frames.back()).norm());
    }
    mm_ade += best_a / 3.0;
    mm_fde += best_f / 3.0;
    CHECK(ade(preds, g) == doctest::Approx(best_a).epsilon(1e-14));
    CHECK(fde(preds, g) == doctest::Approx(best_f).epsilon(1e-14));
  }
  CHECK(mmade(preds, gts) == doctest::Approx(mm_ade).epsilon(1e-14));
  CHECK(mmfde(preds, gts) == doctest::Approx(mm_fde).epsilon(1e-14));
  CHECK_THROWS_AS(ade({}, gts[0]), DomainError);
  CHECK_THROWS_AS(mmade(preds, {}), DomainError);
  CHECK_THROWS_AS(ade(preds, constant_sequence(5, 0.0)), ShapeError);
}

TEST_CASE("zero velocity repeats the last frame") {
  const auto topo = SkeletonTopology::human17();
  Rng rng(2);
  const PoseSequence obs = testing::random_sequence(rng, topo, 3);
  const PoseSequence z = zero_velocity(obs, 4);
  CHECK(z.frame_count() == 4);
  for (const auto& f : z.frames) CHECK(f == obs.frames.back());
  CHECK_THROWS_AS(zero_velocity(obs, 0), DomainError);
}

TEST_CASE("diversity over unordered pairs") {
  const std::vector<PoseSequence> p{constant_sequence(2, 0.0), constant_sequence(2, 1.0),
                                    constant_sequence(2, 3.0)};
  // Each pair: sqrt(2 frames * 6 coords * d^2) = d * sqrt(12).
  const double want = (1.0 + 3.0 + 2.0) / 3.0 * std::sqrt(12.0);
  CHECK(*diversity(p) == doctest::Approx(want));
  CHECK_FALSE(diversity({p[0]}).has_value());
}

TEST_CASE("protocol names") {
  CHECK(parse_protocol("train-mined") == Protocol::kTrainMined);
  CHECK(parse_protocol("test-mined") == Protocol::kTestMined);
  CHECK(to_string(Protocol::kTestMined) == "test-mined");
  CHECK_THROWS_AS(parse_protocol("mined"), ConfigError);
}

TEST_CASE("ranked forecasts honour the budget and the maxima") {
  const RunConfig& cfg = testing::tiny_run();
  const Models models = load_models(cfg.checkpoint_path());
  const Dataset data = load_dataset(cfg);
  const auto populated = static_cast<int>(models.codebook.populated());
  for (const auto& s : data.test) {
    for (int budget : {1, 3, 7}) {
      const ForecastResult r = forecast(models, s.observation, budget);
      CHECK(static_cast<int>(r.forecasts.size()) == std::min(budget, populated));
      std::set<HeatmapCell> cells;
      for (std::size_t i = 0; i < r.forecasts.size(); ++i) {
        const auto& f = r.forecasts[i];
        CHECK(f.rank == static_cast<int>(i) + 1);
        if (i > 0) CHECK(r.forecasts[i - 1].mode.confidence >= f.mode.confidence);
        CHECK(f.forecast.frame_count() == cfg.data.future_frames);
        CHECK(f.reconstruction.frame_count() == cfg.data.obs_frames);
        cells.insert(f.mode.cell);
        // Batch output equals a direct decode at the same cell.
        const RankedForecast direct =
            decode_at(models, models.autoencoder.encode_observation(s.observation), f.mode.cell);
        CHECK(direct.forecast == f.forecast);
        CHECK(direct.used_cell == f.used_cell);
      }
      CHECK(cells.size() == r.forecasts.size());
      // Local maxima come first, in their own order.
      std::size_t modes_used = 0;
      for (const auto& f : r.forecasts) modes_used += f.expanded ? 0 : 1;
      for (std::size_t i = 0; i < modes_used; ++i) CHECK_FALSE(r.forecasts[i].expanded);
    }
    const ForecastResult all = forecast(models, s.observation, 0);
    std::size_t decodable = 0;
    for (const auto& m : all.maxima) {
      try {
        models.codebook.find(m.cell, models.settings.lookup_radius);
        ++decodable;
      } catch (const LookupError&) {
      }
    }
    CHECK(all.forecasts.size() == decodable);
  }
  Models strict = models;
  strict.settings.threshold = 1.0;
  CHECK(forecast(strict, data.test[0].observation, 0).no_confident_future());
  CHECK_THROWS_AS(decode_at(models, LatentVector::Zero(cfg.autoencoder.latent), {-1, 0}),
                  DomainError);
}

TEST_CASE("evaluation matches a recomputation and is deterministic") {
  const RunConfig& cfg = testing::tiny_run();
  const Models models = load_models(cfg.checkpoint_path());
  const Dataset data = load_dataset(cfg);
  const auto p = Protocol::kTrainMined;
  const MetricsReport r = evaluate(models, data.test, data.test_index(p), data.test_pool(p), p, 3);
  CHECK(r == evaluate(models, data.test, data.test_index(p), data.test_pool(p), p, 3));
  CHECK(r.methods.size() == 2);
  CHECK(r.method("zero_velocity").budget == 1);
  CHECK(r.budget == 3);

  double mmade_sum = 0.0, zv_ade = 0.0;
  for (const auto& s : data.test) {
    std::vector<PoseSequence> gts{motion_transfer(s.observation, s.future, models.topology)};
    for (int id : data.test_index(p).members_of(s.id)) {
      for (const auto& t : data.train) {
        if (t.id == id) gts.push_back(motion_transfer(s.observation, t.future, models.topology));
      }
    }
    std::vector<PoseSequence> preds;
    for (const auto& f : forecast(models, s.observation, 3).forecasts) preds.push_back(f.forecast);
    double sum = 0.0;
    for (const auto& g : gts) {
      double best = 1e300;
      for (const auto& q : preds) best = std::min(best, naive_sequence_distance(q, g));
      sum += best;
    }
    mmade_sum += sum / gts.size();
    zv_ade += naive_sequence_distance(zero_velocity(s.observation, s.future.frame_count()), s.future);
  }
  const double n = static_cast<double>(data.test.size());
  CHECK(r.method("motionmap").mmade == doctest::Approx(mmade_sum / n).epsilon(1e-12));
  CHECK(r.method("zero_velocity").ade == doctest::Approx(zv_ade / n).epsilon(1e-12));

  std::istringstream lines(metrics_jsonl(r));
  std::string line;
  int records = 0;
  while (std::getline(lines, line)) {
    CHECK(nlohmann::json::accept(line));
    ++records;
  }
  CHECK(records == 3);
  CHECK(metrics_table(r).find("zero_velocity") != std::string::npos);
  CHECK_THROWS(r.method("nope"));
}

}  // TEST_SUITE

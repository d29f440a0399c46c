#include <cstring>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "dybm/experiments.hpp"

using namespace dybm;
namespace fs = std::filesystem;

namespace {

Markov7Options tiny_markov() {
  Markov7Options o = make_markov7_options("desk");
  o.train_steps = 800;
  o.val_steps = 200;
  o.test_steps = 200;
  o.chunk_len = 20;
  o.train.minibatch_size = 8;
  o.train.max_steps_per_sample = 100;
  o.train.validation_cadence_epochs = 2;
  return o;
}

VideoOptions tiny_video() {
  VideoOptions o = make_video_options("desk");
  o.train_videos = 3;
  o.val_videos = 2;
  o.test_videos = 2;
  o.train.max_steps_per_sample = 60;
  o.train.validation_cadence_epochs = 2;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return s;
}

}  // namespace

TEST_CASE("markov7 experiment writes the documented outputs deterministically") {
  const fs::path out = fs::temp_directory_path() / "dybm_markov7_smoke";
  fs::remove_all(out);
  const Markov7Options opts = tiny_markov();
  const Markov7Result r1 = run_markov7(opts, &out);
  CHECK(fs::exists(out / "config.txt"));
  for (const char* job : {"baseline", "delay-prune"}) {
    CHECK(fs::exists(out / job / "metrics.csv"));
    CHECK(fs::exists(out / job / "correlation.csv"));
    CHECK(fs::exists(out / job / "checkpoint.bin"));
  }
  CHECK(r1.baseline.correlation.pairs.size() == 10);
  CHECK(r1.pruned.correlation.pearson_r >= -1.0);
  CHECK(r1.pruned.correlation.pearson_r <= 1.0);

  const std::string metrics_first = slurp(out / "baseline" / "metrics.csv");
  const Markov7Result r2 = run_markov7(opts, &out);
  CHECK(std::memcmp(&r1.baseline.correlation.pearson_r, &r2.baseline.correlation.pearson_r,
                    8) == 0);
  CHECK(slurp(out / "baseline" / "metrics.csv") == metrics_first);
  fs::remove_all(out);
}

TEST_CASE("markov7 p=0 collapses pruned onto baseline") {
  Markov7Options opts = tiny_markov();
  opts.p_prune = 0.0;
  const Markov7Result r = run_markov7(opts, nullptr);
  CHECK(std::memcmp(&r.baseline.correlation.pearson_r, &r.pruned.correlation.pearson_r,
                    8) == 0);
}

TEST_CASE("video experiment end to end with rollout accounting") {
  const fs::path out = fs::temp_directory_path() / "dybm_video_smoke";
  fs::remove_all(out);
  VideoOptions opts = tiny_video();
  opts.randomize_weights = true;
  const VideoResult r = run_video(opts, &out);
  // 2 test videos x (15 + 5) frames of accuracy rows
  CHECK(r.accuracy_rows.size() == 2u * 20u);
  CHECK(r.overall_accuracy >= 0.0);
  CHECK(r.overall_accuracy <= 100.0);
  CHECK(r.randomized_accuracy.has_value());
  CHECK(fs::exists(out / "accuracy.csv"));
  CHECK(fs::exists(out / "accuracy_randomized.csv"));
  CHECK(fs::exists(out / "rollouts.dyvf"));
  CHECK(fs::exists(out / "ground_truth.dyvf"));
  CHECK(fs::exists(out / "checkpoint.bin"));

  const auto rollouts = ingest_frames(out / "rollouts.dyvf");
  CHECK(rollouts.size() == 2);
  CHECK(rollouts[0].frames.size() == 20);
  CHECK(rollouts[0].height == 16);
  fs::remove_all(out);
}

TEST_CASE("video experiment is deterministic across runs") {
  const VideoOptions opts = tiny_video();
  const VideoResult a = run_video(opts, nullptr);
  const VideoResult b = run_video(opts, nullptr);
  CHECK(std::memcmp(&a.overall_accuracy, &b.overall_accuracy, 8) == 0);
  CHECK(a.best.params.data == b.best.params.data);
}

TEST_CASE("video experiment rejects a missing frames file") {
  VideoOptions opts = tiny_video();
  opts.source = "file";
  opts.frames_file.clear();
  CHECK_THROWS_AS(run_video(opts, nullptr), ConfigError);
}

TEST_CASE("video experiment consumes an exported frames file") {
  const fs::path file = fs::temp_directory_path() / "dybm_video_input.dyvf";
  std::vector<FrameSequence> videos;
  for (int v = 0; v < 7; ++v) {
    VideoSpec spec;
    spec.patch_size = 16;
    spec.n_frames = 20;
    spec.sprite_size = 6;
    spec.rng_seed = 900 + v;
    videos.push_back(bouncing_sprites_generate(spec));
  }
  export_frames(file, videos);
  VideoOptions opts = tiny_video();
  opts.source = "file";
  opts.frames_file = file;
  const VideoResult r = run_video(opts, nullptr);
  CHECK(r.accuracy_rows.size() == 2u * 20u);

  // too few videos in the file is a config error
  VideoOptions big = opts;
  big.train_videos = 20;
  CHECK_THROWS_AS(run_video(big, nullptr), ConfigError);
  fs::remove_all(file);
}

TEST_CASE("sweep grid runs cells and aggregates") {
  const fs::path out = fs::temp_directory_path() / "dybm_sweep_smoke";
  fs::remove_all(out);
  SweepOptions opts;
  opts.base = tiny_video();
  opts.methods = {RegMethod::delay_prune, RegMethod::dropout};
  opts.p_values = {0.0, 0.5};
  opts.seeds = {1, 2};
  opts.max_parallel = 2;
  const SweepResult r = run_sweep(opts, &out);
  CHECK(r.cells.size() == 8);
  CHECK(r.complete);
  CHECK(r.table.size() == 4);
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(fs::exists(out / "cells.csv"));
  // p = 0 rows coincide across methods given equal seeds
  double dp0 = -1, do0 = -2;
  for (const auto& row : r.table) {
    if (row.p == 0.0 && row.method == "delay-prune") dp0 = row.median;
    if (row.p == 0.0 && row.method == "dropout") do0 = row.median;
  }
  CHECK(dp0 == do0);
  fs::remove_all(out);
}

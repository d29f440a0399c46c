#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dybm/checkpoint.hpp"
#include "dybm/config_file.hpp"
#include "dybm/datagen.hpp"
#include "dybm/eval.hpp"
#include "dybm/trainer.hpp"

namespace dybm {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// ---------------------------------------------------------------- markov7 --

struct Markov7Options {
  std::string scale = "desk";
  std::uint64_t seed = 1;
  double p_prune = 0.5;
  int train_steps = 10000;
  int val_steps = 1000;
  int test_steps = 1000;
  int chunk_len = 50;
  ModelConfig model;
  TrainConfig train;
};

Markov7Options make_markov7_options(const std::string& scale);
void apply_markov7_config(KeyValueConfig& cfg, Markov7Options& opts);
void echo_markov7_config(std::ostream& os, const Markov7Options& opts);

struct TrainedJob {
  Checkpoint best;
  std::vector<MetricsRow> metrics;
  CorrelationReport correlation;
};

struct Markov7Result {
  TrainedJob baseline;
  TrainedJob pruned;
};

// Trains an unregularized and a delay-pruned model on the same data with the
// same parameter init, then correlates per-chunk model NLL against the true
// NLL on held-out test chunks. out_dir null = no files written.
Markov7Result run_markov7(const Markov7Options& opts,
                          const std::filesystem::path* out_dir);

// ------------------------------------------------------------------ video --

struct VideoOptions {
  std::string scale = "desk";
  std::uint64_t seed = 1;
  RegMethod method = RegMethod::delay_prune;
  double p = 0.5;
  int input_frames = 15;
  int predict_frames = 5;
  std::string source = "synthetic";  // synthetic | file
  std::filesystem::path frames_file;
  bool randomize_weights = false;
  int patch_size = 16;        // resolution after downsampling
  int render_size = 16;       // synthetic render resolution
  int sprite_size = 6;
  double speed_min = 0.5;
  double speed_max = 1.0;
  int frame_threshold = 127;
  int train_videos = 20;
  int val_videos = 5;
  int test_videos = 10;
  ModelConfig model;  // n_units derived from patch_size
  TrainConfig train;
};

VideoOptions make_video_options(const std::string& scale);
void apply_video_config(KeyValueConfig& cfg, VideoOptions& opts);
void echo_video_config(std::ostream& os, const VideoOptions& opts);

struct VideoResult {
  Checkpoint best;
  std::vector<MetricsRow> metrics;
  double overall_accuracy = 0.0;         // pooled bits over all test videos
  double reconstruction_accuracy = 0.0;
  double prediction_accuracy = 0.0;
  std::vector<AccuracyCsvRow> accuracy_rows;
  std::optional<double> randomized_accuracy;
};

VideoResult run_video(const VideoOptions& opts, const std::filesystem::path* out_dir);

// ------------------------------------------------------------------ sweep --

struct SweepOptions {
  VideoOptions base;
  std::vector<RegMethod> methods = {RegMethod::delay_prune, RegMethod::dropout,
                                    RegMethod::dropconnect};
  std::vector<double> p_values = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int max_parallel = 0;  // 0 = hardware concurrency
};

void apply_sweep_config(KeyValueConfig& cfg, SweepOptions& opts);
void echo_sweep_config(std::ostream& os, const SweepOptions& opts);

struct SweepCellResult {
  RegMethod method = RegMethod::none;
  double p = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  double accuracy = 0.0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCellResult> cells;
  std::vector<SweepRow> table;
  bool complete = false;
};

// Grid of independent video jobs; failed cells are recorded and skipped in the
// aggregate table.
SweepResult run_sweep(const SweepOptions& opts, const std::filesystem::path* out_dir);

}  // namespace dybm

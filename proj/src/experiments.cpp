#include "dybm/experiments.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "dybm/errors.hpp"
#include "dybm/kernels.hpp"

namespace dybm {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

namespace {

// Fixed tags for the independent random streams of one experiment run.
enum : std::uint64_t {
  kTagTrainData = 1,
  kTagValData = 2,
  kTagTestData = 3,
  kTagModel = 4,
  kTagRegularizer = 5,
  kTagRandomize = 6,
};

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::uint64_t> parse_u64s(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoull(item));
  }
  return out;
}

std::vector<RegMethod> parse_methods(const std::string& text) {
  std::vector<RegMethod> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_method(item));
  }
  return out;
}

void apply_model_train_config(KeyValueConfig& cfg, ModelConfig& model, TrainConfig& train) {
  model.n_units = cfg.get_int("n_units", model.n_units);
  model.n_synaptic_traces = cfg.get_int("n_synaptic_traces", model.n_synaptic_traces);
  model.n_neural_traces = cfg.get_int("n_neural_traces", model.n_neural_traces);
  if (cfg.has("synaptic_decays"))
    model.synaptic_decays = parse_doubles(cfg.get_string("synaptic_decays", ""));
  if (cfg.has("neural_decays"))
    model.neural_decays = parse_doubles(cfg.get_string("neural_decays", ""));
  model.delay_min = cfg.get_int("delay_min", model.delay_min);
  model.delay_max = cfg.get_int("delay_max", model.delay_max);
  train.max_steps_per_sample =
      cfg.get_u64("max_steps_per_sample", train.max_steps_per_sample);
  train.validation_cadence_epochs =
      cfg.get_int("validation_cadence_epochs", train.validation_cadence_epochs);
  train.learning_rate = cfg.get_double("learning_rate", train.learning_rate);
  train.adam_beta1 = cfg.get_double("adam_beta1", train.adam_beta1);
  train.adam_beta2 = cfg.get_double("adam_beta2", train.adam_beta2);
  train.adam_eps = cfg.get_double("adam_eps", train.adam_eps);
  train.minibatch_size = cfg.get_int("minibatch_size", train.minibatch_size);
  train.stop_tolerance_per_unit =
      cfg.get_double("stop_tolerance_per_unit", train.stop_tolerance_per_unit);
  train.log_masks = cfg.get_bool("log_masks", train.log_masks);
}

void echo_model_train_config(std::ostream& os, const ModelConfig& model,
                             const TrainConfig& train) {
  os << "n_units = " << model.n_units << '\n';
  os << "n_synaptic_traces = " << model.n_synaptic_traces << '\n';
  os << "n_neural_traces = " << model.n_neural_traces << '\n';
  os << "synaptic_decays = " << join_doubles(model.synaptic_decays) << '\n';
  os << "neural_decays = " << join_doubles(model.neural_decays) << '\n';
  os << "delay_min = " << model.delay_min << '\n';
  os << "delay_max = " << model.delay_max << '\n';
  os << "max_steps_per_sample = " << train.max_steps_per_sample << '\n';
  os << "validation_cadence_epochs = " << train.validation_cadence_epochs << '\n';
  os << "learning_rate = " << format_double(train.learning_rate) << '\n';
  os << "adam_beta1 = " << format_double(train.adam_beta1) << '\n';
  os << "adam_beta2 = " << format_double(train.adam_beta2) << '\n';
  os << "adam_eps = " << format_double(train.adam_eps) << '\n';
  os << "minibatch_size = " << train.minibatch_size << '\n';
  os << "stop_tolerance_per_unit = " << format_double(train.stop_tolerance_per_unit)
     << '\n';
  os << "log_masks = " << (train.log_masks ? "true" : "false") << '\n';
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace

// ---------------------------------------------------------------- markov7 --

Markov7Options make_markov7_options(const std::string& scale) {
  Markov7Options o;
  o.scale = scale;
  o.model.n_units = 7;
  o.model.delay_min = 1;
  o.model.delay_max = 7;
  if (scale == "desk") {
    o.train_steps = 10000;
    o.val_steps = 1000;
    o.test_steps = 1000;
    o.chunk_len = 50;
    // small per-cycle batches keep the per-structure training in the
    // overfitting regime that the pruning ensemble is meant to counter
    o.train.minibatch_size = 4;
    o.train.max_steps_per_sample = 5000;
    o.train.validation_cadence_epochs = 15;
  } else if (scale == "paper") {
    o.train_steps = 100000;
    o.val_steps = 10000;
    o.test_steps = 10000;
    o.chunk_len = 100;
    o.train.max_steps_per_sample = 50000;
    o.train.validation_cadence_epochs = 500;
  } else {
    throw ConfigError("unknown scale preset: " + scale);
  }
  return o;
}

void apply_markov7_config(KeyValueConfig& cfg, Markov7Options& opts) {
  if (cfg.has("scale")) {
    opts = make_markov7_options(cfg.get_string("scale", opts.scale));
  }
  opts.seed = cfg.get_u64("seed", opts.seed);
  opts.p_prune = cfg.get_double("p", opts.p_prune);
  opts.train_steps = cfg.get_int("train_steps", opts.train_steps);
  opts.val_steps = cfg.get_int("val_steps", opts.val_steps);
  opts.test_steps = cfg.get_int("test_steps", opts.test_steps);
  opts.chunk_len = cfg.get_int("chunk_len", opts.chunk_len);
  apply_model_train_config(cfg, opts.model, opts.train);
  cfg.require_consumed();
}

void echo_markov7_config(std::ostream& os, const Markov7Options& opts) {
  os << "subcommand = markov7\n";
  os << "scale = " << opts.scale << '\n';
  os << "seed = " << opts.seed << '\n';
  os << "p = " << format_double(opts.p_prune) << '\n';
  os << "train_steps = " << opts.train_steps << '\n';
  os << "val_steps = " << opts.val_steps << '\n';
  os << "test_steps = " << opts.test_steps << '\n';
  os << "chunk_len = " << opts.chunk_len << '\n';
  echo_model_train_config(os, opts.model, opts.train);
}

namespace {

TrainedJob markov_job(const Markov7Options& opts, const RegularizerConfig& reg_cfg,
                      const std::vector<BinarySequence>& train_set,
                      const std::vector<BinarySequence>& val_set,
                      const std::vector<BinarySequence>& test_set,
                      const std::vector<double>& test_true_nll, double onl_per_step,
                      const std::filesystem::path* job_dir) {
  std::ofstream mask_log;
  if (job_dir && opts.train.log_masks) {
    mask_log.open(*job_dir / "masks.log", std::ios::trunc);
  }
  ModelConfig model_cfg = opts.model;
  model_cfg.rng_seed = derive_seed(opts.seed, kTagModel);
  TrainResult tr = run_training(model_cfg, opts.train, reg_cfg, train_set, val_set,
                                onl_per_step, mask_log.is_open() ? &mask_log : nullptr);
  TrainedJob job;
  job.best = std::move(tr.best);
  job.metrics = std::move(tr.metrics);

  DybmModel probe = model_from_checkpoint(job.best);
  RegularizerConfig eval_cfg = reg_cfg;
  const double scale = eval_history_scale(eval_cfg);
  for (std::size_t c = 0; c < test_set.size(); ++c) {
    reset_dynamic_state(probe);
    const double model_nll = sequence_nll(probe, test_set[c], scale);
    job.correlation.pairs.emplace_back(test_true_nll[c], model_nll);
  }
  job.correlation.pearson_r = pearson_correlation(job.correlation.pairs);

  if (job_dir) {
    ensure_dir(*job_dir);
    write_metrics_csv(*job_dir / "metrics.csv", job.metrics);
    write_correlation_csv(*job_dir / "correlation.csv", job.correlation);
    save_checkpoint(*job_dir / "checkpoint.bin", job.best);
  }
  return job;
}

}  // namespace

Markov7Result run_markov7(const Markov7Options& opts,
                          const std::filesystem::path* out_dir) {
  MarkovSpec train_spec{opts.model.n_units, 0.95, opts.train_steps,
                        derive_seed(opts.seed, kTagTrainData)};
  MarkovSpec val_spec{opts.model.n_units, 0.95, opts.val_steps,
                      derive_seed(opts.seed, kTagValData)};
  MarkovSpec test_spec{opts.model.n_units, 0.95, opts.test_steps,
                       derive_seed(opts.seed, kTagTestData)};

  const std::vector<BinarySequence> train_set =
      chunk_sequence(markov_generate(train_spec), opts.chunk_len);
  const std::vector<BinarySequence> val_set =
      chunk_sequence(markov_generate(val_spec), opts.chunk_len);
  const std::vector<BinarySequence> test_set =
      chunk_sequence(markov_generate(test_spec), opts.chunk_len);
  if (train_set.empty() || val_set.empty() || test_set.size() < 2) {
    throw ConfigError("markov7: step counts too small for the chunk length");
  }

  double onl_total = 0.0;
  std::uint64_t onl_steps = 0;
  for (const auto& seq : val_set) {
    onl_total += markov_true_nll(seq, val_spec);
    onl_steps += std::uint64_t(seq.length);
  }
  const double onl_per_step = onl_total / double(onl_steps);

  std::vector<double> test_true_nll;
  test_true_nll.reserve(test_set.size());
  for (const auto& seq : test_set) {
    test_true_nll.push_back(markov_true_nll(seq, test_spec));
  }

  RegularizerConfig base_cfg;
  base_cfg.method = RegMethod::none;
  base_cfg.p = 0.0;
  base_cfg.rng_seed = derive_seed(opts.seed, kTagRegularizer);

  RegularizerConfig prune_cfg;
  prune_cfg.method = RegMethod::delay_prune;
  prune_cfg.p = opts.p_prune;
  prune_cfg.rng_seed = derive_seed(opts.seed, kTagRegularizer);

  std::filesystem::path base_dir, prune_dir;
  const std::filesystem::path* base_dir_ptr = nullptr;
  const std::filesystem::path* prune_dir_ptr = nullptr;
  if (out_dir) {
    ensure_dir(*out_dir);
    std::ofstream echo(*out_dir / "config.txt", std::ios::trunc);
    echo_markov7_config(echo, opts);
    base_dir = *out_dir / "baseline";
    prune_dir = *out_dir / "delay-prune";
    base_dir_ptr = &base_dir;
    prune_dir_ptr = &prune_dir;
  }

  Markov7Result result;
  result.baseline = markov_job(opts, base_cfg, train_set, val_set, test_set, test_true_nll,
                               onl_per_step, base_dir_ptr);
  result.pruned = markov_job(opts, prune_cfg, train_set, val_set, test_set, test_true_nll,
                             onl_per_step, prune_dir_ptr);
  return result;
}

// ------------------------------------------------------------------ video --

VideoOptions make_video_options(const std::string& scale) {
  VideoOptions o;
  o.scale = scale;
  o.model.delay_min = 1;
  o.model.delay_max = 7;
  if (scale == "desk") {
    o.patch_size = 16;
    o.render_size = 16;
    o.train_videos = 20;
    o.val_videos = 5;
    o.test_videos = 10;
    o.train.max_steps_per_sample = 2250;  // 150 passes over 15-frame samples
    o.train.validation_cadence_epochs = 10;
  } else if (scale == "paper") {
    o.patch_size = 16;
    o.render_size = 64;
    o.train_videos = 100;
    o.val_videos = 10;
    o.test_videos = 50;
    o.train.max_steps_per_sample = 50000;
    o.train.validation_cadence_epochs = 500;
  } else {
    throw ConfigError("unknown scale preset: " + scale);
  }
  return o;
}

void apply_video_config(KeyValueConfig& cfg, VideoOptions& opts) {
  if (cfg.has("scale")) {
    opts = make_video_options(cfg.get_string("scale", opts.scale));
  }
  opts.seed = cfg.get_u64("seed", opts.seed);
  opts.method = parse_method(cfg.get_string("method", to_string(opts.method)));
  opts.p = cfg.get_double("p", opts.p);
  opts.input_frames = cfg.get_int("frames", opts.input_frames);
  opts.predict_frames = cfg.get_int("predict", opts.predict_frames);
  opts.source = cfg.get_string("source", opts.source);
  opts.frames_file = cfg.get_string("frames_file", opts.frames_file.string());
  opts.randomize_weights = cfg.get_bool("randomize_weights", opts.randomize_weights);
  opts.patch_size = cfg.get_int("patch_size", opts.patch_size);
  opts.render_size = cfg.get_int("render_size", opts.render_size);
  opts.sprite_size = cfg.get_int("sprite_size", opts.sprite_size);
  opts.speed_min = cfg.get_double("speed_min", opts.speed_min);
  opts.speed_max = cfg.get_double("speed_max", opts.speed_max);
  opts.frame_threshold = cfg.get_int("frame_threshold", opts.frame_threshold);
  opts.train_videos = cfg.get_int("train_videos", opts.train_videos);
  opts.val_videos = cfg.get_int("val_videos", opts.val_videos);
  opts.test_videos = cfg.get_int("test_videos", opts.test_videos);
  apply_model_train_config(cfg, opts.model, opts.train);
  cfg.require_consumed();
}

void echo_video_config(std::ostream& os, const VideoOptions& opts) {
  os << "subcommand = video\n";
  os << "scale = " << opts.scale << '\n';
  os << "seed = " << opts.seed << '\n';
  os << "method = " << to_string(opts.method) << '\n';
  os << "p = " << format_double(opts.p) << '\n';
  os << "frames = " << opts.input_frames << '\n';
  os << "predict = " << opts.predict_frames << '\n';
  os << "source = " << opts.source << '\n';
  if (!opts.frames_file.empty()) os << "frames_file = " << opts.frames_file.string() << '\n';
  os << "randomize_weights = " << (opts.randomize_weights ? "true" : "false") << '\n';
  os << "patch_size = " << opts.patch_size << '\n';
  os << "render_size = " << opts.render_size << '\n';
  os << "sprite_size = " << opts.sprite_size << '\n';
  os << "speed_min = " << format_double(opts.speed_min) << '\n';
  os << "speed_max = " << format_double(opts.speed_max) << '\n';
  os << "frame_threshold = " << opts.frame_threshold << '\n';
  os << "train_videos = " << opts.train_videos << '\n';
  os << "val_videos = " << opts.val_videos << '\n';
  os << "test_videos = " << opts.test_videos << '\n';
  echo_model_train_config(os, opts.model, opts.train);
}

namespace {

struct VideoData {
  std::vector<BinarySequence> train_seqs;
  std::vector<BinarySequence> val_seqs;
  std::vector<FrameSequence> test_bin;  // binarized, >= input+predict frames
};

FrameSequence prepare_video(const VideoOptions& opts, FrameSequence raw) {
  if (opts.render_size != opts.patch_size) {
    if (raw.width % opts.patch_size != 0) {
      throw ConfigError("video: source resolution not divisible by patch_size");
    }
    raw = downsample(raw, raw.width / opts.patch_size);
  }
  return binarize(raw, opts.frame_threshold);
}

VideoData prepare_video_data(const VideoOptions& opts) {
  const int needed_frames = opts.input_frames + opts.predict_frames;
  const int total = opts.train_videos + opts.val_videos + opts.test_videos;
  std::vector<FrameSequence> prepared;
  prepared.reserve(total);

  if (opts.source == "synthetic") {
    const std::uint64_t data_seed = derive_seed(opts.seed, kTagTrainData);
    for (int v = 0; v < total; ++v) {
      VideoSpec spec;
      spec.patch_size = opts.render_size;
      spec.n_frames = needed_frames;
      spec.n_sprites = 2;
      spec.frame_threshold = opts.frame_threshold;
      spec.sprite_size = opts.sprite_size;
      spec.speed_min = opts.speed_min;
      spec.speed_max = opts.speed_max;
      spec.rng_seed = derive_seed(data_seed, std::uint64_t(v));
      prepared.push_back(prepare_video(opts, bouncing_sprites_generate(spec)));
    }
  } else if (opts.source == "file") {
    if (opts.frames_file.empty()) {
      throw ConfigError(
          "video: --source file needs a frames file "
          "(or use --source synthetic)");
    }
    std::vector<FrameSequence> raw = ingest_frames(opts.frames_file);
    if (int(raw.size()) < total) {
      throw ConfigError("video: frames file has " + std::to_string(raw.size()) +
                        " videos, need " + std::to_string(total));
    }
    for (int v = 0; v < total; ++v) {
      if (int(raw[v].frames.size()) < needed_frames) {
        throw ConfigError("video: file videos are shorter than frames+predict");
      }
      prepared.push_back(prepare_video(opts, std::move(raw[v])));
    }
  } else {
    throw ConfigError("video: unknown source '" + opts.source + "'");
  }

  VideoData data;
  int at = 0;
  for (int v = 0; v < opts.train_videos; ++v, ++at) {
    data.train_seqs.push_back(video_to_sequence(prepared[at], opts.input_frames));
  }
  for (int v = 0; v < opts.val_videos; ++v, ++at) {
    data.val_seqs.push_back(video_to_sequence(prepared[at], opts.input_frames));
  }
  for (int v = 0; v < opts.test_videos; ++v, ++at) {
    data.test_bin.push_back(std::move(prepared[at]));
  }
  return data;
}

FrameSequence sequence_to_frames(const BinarySequence& seq, int patch) {
  FrameSequence fs;
  fs.height = patch;
  fs.width = patch;
  fs.source = "rollout";
  for (int t = 0; t < seq.length; ++t) {
    std::vector<std::uint8_t> frame(std::size_t(patch) * patch);
    for (int i = 0; i < patch * patch; ++i) frame[i] = seq.at(i, t) ? 255 : 0;
    fs.frames.push_back(std::move(frame));
  }
  return fs;
}

struct RolloutEval {
  double overall = 0.0;
  double recon = 0.0;
  double pred = 0.0;
  std::vector<AccuracyCsvRow> rows;
  std::vector<FrameSequence> rollouts;
};

RolloutEval evaluate_rollouts(DybmModel& model, const VideoOptions& opts,
                              const std::vector<FrameSequence>& test_bin, double scale) {
  RolloutEval ev;
  double overall_sum = 0.0, recon_sum = 0.0, pred_sum = 0.0;
  for (std::size_t v = 0; v < test_bin.size(); ++v) {
    const BinarySequence input = frames_to_sequence(test_bin[v], 0, opts.input_frames);
    const BinarySequence truth =
        frames_to_sequence(test_bin[v], 0, opts.input_frames + opts.predict_frames);
    const BinarySequence rollout = generate_rollout(model, input, opts.predict_frames,
                                                    RolloutMode::thresholded, scale);
    const AccuracyReport rep = bit_accuracy(rollout, truth, opts.input_frames);
    overall_sum += rep.overall_accuracy;
    recon_sum += rep.reconstruction_accuracy;
    pred_sum += rep.prediction_accuracy;
    for (int t = 0; t < rollout.length; ++t) {
      ev.rows.push_back({int(v), t, rep.per_frame_accuracy[t],
                         t < opts.input_frames ? "reconstruction" : "prediction"});
    }
    ev.rollouts.push_back(sequence_to_frames(rollout, opts.patch_size));
  }
  const double n = double(test_bin.size());
  ev.overall = overall_sum / n;
  ev.recon = recon_sum / n;
  ev.pred = pred_sum / n;
  return ev;
}

}  // namespace

VideoResult run_video(const VideoOptions& opts, const std::filesystem::path* out_dir) {
  if (opts.input_frames < 1 || opts.predict_frames < 0) {
    throw ConfigError("video: frames must be >= 1 and predict >= 0");
  }
  VideoData data = prepare_video_data(opts);

  ModelConfig model_cfg = opts.model;
  model_cfg.n_units = opts.patch_size * opts.patch_size;
  model_cfg.rng_seed = derive_seed(opts.seed, kTagModel);

  RegularizerConfig reg_cfg;
  reg_cfg.method = opts.method;
  reg_cfg.p = opts.p;
  reg_cfg.rng_seed = derive_seed(opts.seed, kTagRegularizer);

  std::ofstream mask_log;
  if (out_dir && opts.train.log_masks) {
    ensure_dir(*out_dir);
    mask_log.open(*out_dir / "masks.log", std::ios::trunc);
  }

  TrainResult tr = run_training(model_cfg, opts.train, reg_cfg, data.train_seqs,
                                data.val_seqs, std::nullopt,
                                mask_log.is_open() ? &mask_log : nullptr);

  VideoResult result;
  result.best = std::move(tr.best);
  result.metrics = std::move(tr.metrics);

  DybmModel probe = model_from_checkpoint(result.best);
  const double scale = eval_history_scale(reg_cfg);
  RolloutEval ev = evaluate_rollouts(probe, opts, data.test_bin, scale);
  result.overall_accuracy = ev.overall;
  result.reconstruction_accuracy = ev.recon;
  result.prediction_accuracy = ev.pred;
  result.accuracy_rows = std::move(ev.rows);

  std::vector<AccuracyCsvRow> randomized_rows;
  if (opts.randomize_weights) {
    DybmModel shuffled = model_from_checkpoint(result.best);
    Rng rng(derive_seed(opts.seed, kTagRandomize));
    for (double& w : shuffled.params.data) w = rng.normal(0.0, 0.1);
    RolloutEval rv = evaluate_rollouts(shuffled, opts, data.test_bin, scale);
    result.randomized_accuracy = rv.overall;
    randomized_rows = std::move(rv.rows);
  }

  if (out_dir) {
    ensure_dir(*out_dir);
    std::ofstream echo(*out_dir / "config.txt", std::ios::trunc);
    echo_video_config(echo, opts);
    write_metrics_csv(*out_dir / "metrics.csv", result.metrics);
    write_accuracy_csv(*out_dir / "accuracy.csv", result.accuracy_rows);
    save_checkpoint(*out_dir / "checkpoint.bin", result.best);
    export_frames(*out_dir / "rollouts.dyvf", ev.rollouts);
    std::vector<FrameSequence> truth_frames;
    for (const auto& tb : data.test_bin) {
      FrameSequence cut;
      cut.height = tb.height;
      cut.width = tb.width;
      cut.source = "ground-truth";
      for (int t = 0; t < opts.input_frames + opts.predict_frames; ++t) {
        auto frame = tb.frames[t];
        for (auto& px : frame) px = px ? 255 : 0;
        cut.frames.push_back(std::move(frame));
      }
      truth_frames.push_back(std::move(cut));
    }
    export_frames(*out_dir / "ground_truth.dyvf", truth_frames);
    if (opts.randomize_weights) {
      write_accuracy_csv(*out_dir / "accuracy_randomized.csv", randomized_rows);
    }
  }
  return result;
}

// ------------------------------------------------------------------ sweep --

void apply_sweep_config(KeyValueConfig& cfg, SweepOptions& opts) {
  if (cfg.has("methods")) opts.methods = parse_methods(cfg.get_string("methods", ""));
  if (cfg.has("p_list")) opts.p_values = parse_doubles(cfg.get_string("p_list", ""));
  if (cfg.has("seeds")) opts.seeds = parse_u64s(cfg.get_string("seeds", ""));
  opts.max_parallel = cfg.get_int("max_parallel", opts.max_parallel);
  apply_video_config(cfg, opts.base);
}

void echo_sweep_config(std::ostream& os, const SweepOptions& opts) {
  os << "subcommand = sweep\n";
  os << "methods = ";
  for (std::size_t i = 0; i < opts.methods.size(); ++i) {
    if (i) os << ',';
    os << to_string(opts.methods[i]);
  }
  os << '\n';
  os << "p_list = " << join_doubles(opts.p_values) << '\n';
  os << "seeds = ";
  for (std::size_t i = 0; i < opts.seeds.size(); ++i) {
    if (i) os << ',';
    os << opts.seeds[i];
  }
  os << '\n';
  os << "max_parallel = " << opts.max_parallel << '\n';
  echo_video_config(os, opts.base);
}

SweepResult run_sweep(const SweepOptions& opts, const std::filesystem::path* out_dir) {
  if (opts.methods.empty() || opts.p_values.empty() || opts.seeds.empty()) {
    throw ConfigError("sweep: methods, p_list and seeds must be non-empty");
  }
  SweepResult result;
  for (RegMethod m : opts.methods) {
    for (double p : opts.p_values) {
      for (std::uint64_t s : opts.seeds) {
        SweepCellResult cell;
        cell.method = m;
        cell.p = p;
        cell.seed = s;
        result.cells.push_back(cell);
      }
    }
  }

  kernels::active();  // settle backend selection before spawning workers
  unsigned workers = opts.max_parallel > 0 ? unsigned(opts.max_parallel)
                                           : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, unsigned(result.cells.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= result.cells.size()) return;
      SweepCellResult& cell = result.cells[i];
      VideoOptions vo = opts.base;
      vo.method = cell.method;
      vo.p = cell.p;
      vo.seed = cell.seed;
      vo.randomize_weights = false;
      try {
        const VideoResult vr = run_video(vo, nullptr);
        cell.accuracy = vr.overall_accuracy;
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::tuple<std::string, double, double>> ok_results;
  result.complete = true;
  for (const auto& cell : result.cells) {
    if (cell.ok) {
      ok_results.emplace_back(to_string(cell.method), cell.p, cell.accuracy);
    } else {
      result.complete = false;
    }
  }
  result.table = sweep_report(ok_results);

  if (out_dir) {
    ensure_dir(*out_dir);
    std::ofstream echo(*out_dir / "config.txt", std::ios::trunc);
    echo_sweep_config(echo, opts);
    write_sweep_csv(*out_dir / "sweep.csv", result.table);
    std::ofstream cells(*out_dir / "cells.csv", std::ios::trunc);
    cells << "method,p,seed,ok,accuracy,error\n";
    for (const auto& c : result.cells) {
      cells << to_string(c.method) << ',' << format_double(c.p) << ',' << c.seed << ','
            << (c.ok ? 1 : 0) << ',' << format_double(c.accuracy) << ',' << c.error
            << '\n';
    }
  }
  return result;
}

}  // namespace dybm

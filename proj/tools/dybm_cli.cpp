// Command-line driver for the DyBM experiments: a 7-dimensional Markov-chain
// prediction task, video reconstruction/prediction on bouncing-sprite or
// pre-exported frame data, and a regularizer sweep over (method, p, seed).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dybm/errors.hpp"
#include "dybm/experiments.hpp"

namespace {

// Exit codes: 0 ok, 2 config error, 3 data error, 4 training diverged,
// 5 sweep partially failed.
enum ExitCode {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kDivergence = 4,
  kPartialSweep = 5,
};

std::filesystem::path default_out_root() {
  if (const char* env = std::getenv("DYBM_OUT_ROOT")) return env;
  return "runs";
}

std::filesystem::path stamped_dir(const std::string& subcommand) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const auto us = std::chrono::duration_cast<std::chrono::microseconds>(now).count();
  std::ostringstream name;
  name << subcommand << '-' << us;
  return default_out_root() / name.str();
}

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string scale = "desk";
  std::uint64_t seed = 1;
  bool seed_set = false;
  bool scale_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key=value config file");
  cmd->add_option("--out", flags.out, "output directory (default: run-stamped)");
  cmd->add_option("--seed", flags.seed, "master seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--scale", flags.scale, "size preset: desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->each([&](const std::string&) { flags.scale_set = true; });
}

std::filesystem::path resolve_out(const CommonFlags& flags, const std::string& subcommand) {
  if (!flags.out.empty()) return flags.out;
  return stamped_dir(subcommand);
}

int run_markov7_cmd(const CommonFlags& flags, double p, bool p_set) {
  dybm::Markov7Options opts = dybm::make_markov7_options(flags.scale);
  if (flags.seed_set) opts.seed = flags.seed;
  if (p_set) opts.p_prune = p;
  if (!flags.config_path.empty()) {
    dybm::KeyValueConfig cfg = dybm::KeyValueConfig::parse_file(flags.config_path);
    dybm::apply_markov7_config(cfg, opts);
  }
  const std::filesystem::path out = resolve_out(flags, "markov7");
  const dybm::Markov7Result result = dybm::run_markov7(opts, &out);
  std::cout << "markov7 baseline   pearson_r = "
            << dybm::format_double(result.baseline.correlation.pearson_r) << "\n";
  std::cout << "markov7 delay-prune pearson_r = "
            << dybm::format_double(result.pruned.correlation.pearson_r) << "\n";
  std::cout << "outputs: " << out.string() << "\n";
  return kOk;
}

int run_video_cmd(const CommonFlags& flags, bool method_set, const std::string& method,
                  bool p_set, double p, bool frames_set, int frames, bool predict_set,
                  int predict, bool source_set, const std::string& source,
                  const std::string& frames_file, bool randomize) {
  dybm::VideoOptions opts = dybm::make_video_options(flags.scale);
  if (flags.seed_set) opts.seed = flags.seed;
  if (method_set) opts.method = dybm::parse_method(method);
  if (p_set) opts.p = p;
  if (frames_set) opts.input_frames = frames;
  if (predict_set) opts.predict_frames = predict;
  if (source_set) opts.source = source;
  if (!frames_file.empty()) opts.frames_file = frames_file;
  if (randomize) opts.randomize_weights = true;
  if (!flags.config_path.empty()) {
    dybm::KeyValueConfig cfg = dybm::KeyValueConfig::parse_file(flags.config_path);
    dybm::apply_video_config(cfg, opts);
  }
  const std::filesystem::path out = resolve_out(flags, "video");
  const dybm::VideoResult result = dybm::run_video(opts, &out);
  std::cout << "video method=" << dybm::to_string(opts.method)
            << " p=" << dybm::format_double(opts.p)
            << " overall=" << dybm::format_double(result.overall_accuracy)
            << "% reconstruction=" << dybm::format_double(result.reconstruction_accuracy)
            << "% prediction=" << dybm::format_double(result.prediction_accuracy) << "%\n";
  if (result.randomized_accuracy) {
    std::cout << "video randomized-weights overall="
              << dybm::format_double(*result.randomized_accuracy) << "%\n";
  }
  std::cout << "outputs: " << out.string() << "\n";
  return kOk;
}

int run_sweep_cmd(const CommonFlags& flags, const std::string& methods,
                  const std::string& p_list, const std::string& seeds, int jobs) {
  dybm::SweepOptions opts;
  opts.base = dybm::make_video_options(flags.scale);
  if (flags.seed_set) opts.base.seed = flags.seed;
  {
    std::ostringstream text;
    if (!methods.empty()) text << "methods = " << methods << "\n";
    if (!p_list.empty()) text << "p_list = " << p_list << "\n";
    if (!seeds.empty()) text << "seeds = " << seeds << "\n";
    if (jobs > 0) text << "max_parallel = " << jobs << "\n";
    dybm::KeyValueConfig cfg = dybm::KeyValueConfig::parse_text(text.str());
    dybm::apply_sweep_config(cfg, opts);
  }
  if (!flags.config_path.empty()) {
    dybm::KeyValueConfig cfg = dybm::KeyValueConfig::parse_file(flags.config_path);
    dybm::apply_sweep_config(cfg, opts);
  }
  const std::filesystem::path out = resolve_out(flags, "sweep");
  const dybm::SweepResult result = dybm::run_sweep(opts, &out);
  for (const auto& row : result.table) {
    std::cout << "sweep " << row.method << " p=" << dybm::format_double(row.p)
              << " median=" << dybm::format_double(row.median)
              << "% iqr=" << dybm::format_double(row.iqr) << " (n=" << row.count << ")\n";
  }
  std::cout << "outputs: " << out.string() << "\n";
  if (!result.complete) {
    std::cerr << "sweep: some cells failed; see cells.csv\n";
    return kPartialSweep;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic Boltzmann machine with delay pruning"};
  app.require_subcommand(1);

  CommonFlags mk_flags;
  double mk_p = 0.5;
  bool mk_p_set = false;
  CLI::App* markov7 = app.add_subcommand("markov7", "7-dim Markov-chain experiment");
  add_common(markov7, mk_flags);
  markov7->add_option("--p", mk_p, "prune probability")->each([&](const std::string&) {
    mk_p_set = true;
  });

  CommonFlags vd_flags;
  std::string vd_method = "delay-prune", vd_source = "synthetic", vd_frames_file;
  double vd_p = 0.5;
  int vd_frames = 15, vd_predict = 5;
  bool vd_method_set = false, vd_p_set = false, vd_frames_set = false,
       vd_predict_set = false, vd_source_set = false, vd_randomize = false;
  CLI::App* video = app.add_subcommand("video", "video reconstruction + prediction");
  add_common(video, vd_flags);
  video->add_option("--method", vd_method, "none|delay-prune|dropout|dropconnect")
      ->each([&](const std::string&) { vd_method_set = true; });
  video->add_option("--p", vd_p, "prune/drop probability")->each([&](const std::string&) {
    vd_p_set = true;
  });
  video->add_option("--frames", vd_frames, "input frames")->each([&](const std::string&) {
    vd_frames_set = true;
  });
  video->add_option("--predict", vd_predict, "frames to predict")
      ->each([&](const std::string&) { vd_predict_set = true; });
  video->add_option("--source", vd_source, "synthetic|file")
      ->check(CLI::IsMember({"synthetic", "file"}))
      ->each([&](const std::string&) { vd_source_set = true; });
  video->add_option("--data", vd_frames_file, "raw-frames file for --source file");
  video->add_flag("--randomize-weights", vd_randomize,
                  "also evaluate the checkpoint with re-randomized weights");

  CommonFlags sw_flags;
  std::string sw_methods, sw_p_list, sw_seeds;
  int sw_jobs = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "regularizer grid over (method, p, seed)");
  add_common(sweep, sw_flags);
  sweep->add_option("--methods", sw_methods, "comma list of methods");
  sweep->add_option("--p-list", sw_p_list, "comma list of p values");
  sweep->add_option("--seeds", sw_seeds, "comma list of seeds");
  sweep->add_option("--jobs", sw_jobs, "max parallel jobs (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (markov7->parsed()) return run_markov7_cmd(mk_flags, mk_p, mk_p_set);
    if (video->parsed()) {
      return run_video_cmd(vd_flags, vd_method_set, vd_method, vd_p_set, vd_p,
                           vd_frames_set, vd_frames, vd_predict_set, vd_predict,
                           vd_source_set, vd_source, vd_frames_file, vd_randomize);
    }
    if (sweep->parsed()) {
      return run_sweep_cmd(sw_flags, sw_methods, sw_p_list, sw_seeds, sw_jobs);
    }
  } catch (const dybm::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const dybm::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const dybm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const dybm::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const dybm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}

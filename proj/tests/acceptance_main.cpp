// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria 4-6 run the full experiments at desk scale and
// take real time; --only N,M runs a subset.
//
//   dybm_acceptance --cli <path-to-cli-binary> --work <scratch-dir> [--only 1,2]

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dybm/experiments.hpp"
#include "dybm/model.hpp"

using namespace dybm;
namespace fs = std::filesystem;

namespace {

struct Args {
  std::string cli;
  fs::path work = "acceptance_work";
  std::vector<int> only;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  bool pass = false;
  std::string detail;
  double elapsed = 0.0;
};

BinarySequence random_sequence(Rng& rng, int n, int t) {
  BinarySequence seq(n, t);
  for (auto& v : seq.values) v = rng.bernoulli(0.5) ? 1 : 0;
  return seq;
}

// ---- criterion 1: streaming traces vs direct evaluation -------------------

double direct_gamma(const ModelConfig& cfg, int l, int j, const BinarySequence& seq,
                    int prefix) {
  double acc = 0.0;
  for (int s = 0; s < prefix; ++s) {
    acc += std::pow(cfg.neural_decays[l], double(prefix - s)) * seq.at(j, s);
  }
  return acc;
}

double direct_alpha(const ModelConfig& cfg, int k, int d, int i, const BinarySequence& seq,
                    int prefix) {
  double acc = 0.0;
  for (int s = 0; s + d <= prefix; ++s) {
    acc += std::pow(cfg.synaptic_decays[k], double(prefix - s - d)) * seq.at(i, s);
  }
  return acc;
}

double direct_beta(const ModelConfig& cfg, int l, int d, int i, const BinarySequence& seq,
                   int prefix) {
  double acc = 0.0;
  for (int m = 1; m <= d - 1 && prefix - m >= 0; ++m) {
    acc += std::pow(cfg.neural_decays[l], double(m)) * seq.at(i, prefix - m);
  }
  return acc;
}

bool criterion_trace_oracle(std::string& detail) {
  Rng seeder(20260808);
  double max_err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    ModelConfig cfg;
    cfg.n_units = 1 + int(seeder.below(3));
    cfg.n_synaptic_traces = 1 + int(seeder.below(3));
    cfg.n_neural_traces = 1 + int(seeder.below(3));
    cfg.synaptic_decays.clear();
    for (int k = 0; k < cfg.n_synaptic_traces; ++k) {
      cfg.synaptic_decays.push_back(0.05 + 0.9 * seeder.uniform());
    }
    cfg.neural_decays.clear();
    for (int l = 0; l < cfg.n_neural_traces; ++l) {
      cfg.neural_decays.push_back(0.05 + 0.9 * seeder.uniform());
    }
    cfg.delay_min = 1;
    cfg.delay_max = 7;
    cfg.rng_seed = seeder.next_u64();
    DybmModel m = init_model(cfg);
    Rng data_rng(seeder.next_u64());
    const int T = 20 + int(seeder.below(181));  // up to 200
    BinarySequence seq = random_sequence(data_rng, cfg.n_units, T);
    for (int t = 0; t < T; ++t) step_advance(m, seq, t);

    const int n = cfg.n_units;
    for (int l = 0; l < cfg.n_neural_traces; ++l) {
      for (int j = 0; j < n; ++j) {
        max_err = std::max(max_err, std::abs(m.traces.gamma_plane(l)[j] -
                                             direct_gamma(cfg, l, j, seq, T)));
      }
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const int d = m.queues.delay[j * n + i];
          max_err = std::max(max_err, std::abs(m.traces.beta_plane(l)[j * n + i] -
                                               direct_beta(cfg, l, d, i, seq, T)));
        }
      }
    }
    for (int k = 0; k < cfg.n_synaptic_traces; ++k) {
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const int d = m.queues.delay[j * n + i];
          max_err = std::max(max_err, std::abs(m.traces.alpha_plane(k)[j * n + i] -
                                               direct_alpha(cfg, k, d, i, seq, T)));
        }
      }
    }
  }
  std::ostringstream os;
  os << "max abs err " << max_err;
  detail = os.str();
  return max_err <= 1e-12;
}

// ---- criterion 2: gradient vs central finite differences ------------------

bool criterion_gradient(std::string& detail) {
  Rng seeder(424242);
  double worst_rel = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    ModelConfig cfg;
    cfg.n_units = 1 + int(seeder.below(3));
    cfg.rng_seed = seeder.next_u64();
    DybmModel model = init_model(cfg);
    Rng data_rng(seeder.next_u64());
    const int T = 4 + int(seeder.below(7));  // up to 10
    BinarySequence seq = random_sequence(data_rng, cfg.n_units, T);

    Parameters analytic;
    analytic.resize(cfg.n_units, cfg.n_synaptic_traces, cfg.n_neural_traces);
    reset_dynamic_state(model);
    for (int t = 0; t < T; ++t) {
      const Parameters g = loglik_gradient(model, seq.step(t), cfg.n_units);
      for (std::size_t c = 0; c < g.size(); ++c) analytic.data[c] += g.data[c];
      step_advance(model, seq, t);
    }
    const double h = 1e-5;
    for (std::size_t c = 0; c < analytic.size(); ++c) {
      DybmModel plus = init_model(cfg);
      plus.params.data[c] += h;
      const double f_plus = -sequence_nll(plus, seq);
      DybmModel minus = init_model(cfg);
      minus.params.data[c] -= h;
      const double f_minus = -sequence_nll(minus, seq);
      const double fd = (f_plus - f_minus) / (2.0 * h);
      const double a = analytic.data[c];
      if (std::abs(a) < 1e-7 && std::abs(fd) < 1e-7) continue;
      const double rel = std::abs(a - fd) / std::max(std::abs(a), std::abs(fd));
      worst_rel = std::max(worst_rel, rel);
    }
  }
  std::ostringstream os;
  os << "worst per-coordinate rel err " << worst_rel;
  detail = os.str();
  return worst_rel <= 1e-5;
}

// ---- criterion 3: normalization over all 64 sequences ---------------------

bool criterion_normalization(std::string& detail) {
  Rng seeder(987);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    ModelConfig cfg;
    cfg.n_units = 2;
    cfg.rng_seed = seeder.next_u64();
    DybmModel m = init_model(cfg);
    double total = 0.0;
    for (int code = 0; code < 64; ++code) {
      BinarySequence seq(2, 3);
      for (int b = 0; b < 6; ++b) seq.values[b] = (code >> b) & 1;
      reset_dynamic_state(m);
      total += std::exp(-sequence_nll(m, seq));
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  std::ostringstream os;
  os << "worst |sum-1| " << worst;
  detail = os.str();
  return worst <= 1e-10;
}

// ---- criterion 4: markov experiment ----------------------------------------

bool criterion_markov(std::string& detail) {
  std::vector<double> base_r, prune_r;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Markov7Options opts = make_markov7_options("desk");
    opts.seed = seed;
    opts.p_prune = 0.5;
    const Markov7Result r = run_markov7(opts, nullptr);
    base_r.push_back(r.baseline.correlation.pearson_r);
    prune_r.push_back(r.pruned.correlation.pearson_r);
  }
  const double mb = median_of(base_r);
  const double mp = median_of(prune_r);
  std::ostringstream os;
  os << "median r: baseline " << mb << ", delay-pruned " << mp;
  detail = os.str();
  return (mp - mb >= 0.05) && (mp >= 0.75);
}

// ---- criterion 5: video experiment -----------------------------------------

bool criterion_video(std::string& detail) {
  struct Job {
    VideoOptions opts;
    VideoResult result;
  };
  std::vector<Job> jobs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    VideoOptions base = make_video_options("desk");
    base.seed = seed;
    base.method = RegMethod::none;
    base.p = 0.0;
    jobs.push_back({base, {}});

    VideoOptions pruned = make_video_options("desk");
    pruned.seed = seed;
    pruned.method = RegMethod::delay_prune;
    pruned.p = 0.5;
    pruned.randomize_weights = true;
    jobs.push_back({pruned, {}});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i].result = run_video(jobs[i].opts, nullptr);
    }
  };
  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), 4u));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> base_acc, prune_acc, rand_acc;
  for (const Job& j : jobs) {
    if (j.opts.method == RegMethod::none) {
      base_acc.push_back(j.result.overall_accuracy);
    } else {
      prune_acc.push_back(j.result.overall_accuracy);
      rand_acc.push_back(*j.result.randomized_accuracy);
    }
  }
  const double mb = median_of(base_acc);
  const double mp = median_of(prune_acc);
  const double mr = median_of(rand_acc);
  std::ostringstream os;
  os << "median overall %: baseline " << mb << ", delay-pruned " << mp
     << ", randomized-weights " << mr;
  detail = os.str();
  return (mp >= mb) && (mp >= 85.0) && (mr < mp - 15.0);
}

// ---- criterion 6: sweep ordering -------------------------------------------

bool criterion_sweep(std::string& detail) {
  SweepOptions opts;
  opts.base = make_video_options("desk");
  opts.methods = {RegMethod::delay_prune, RegMethod::dropout, RegMethod::dropconnect};
  opts.p_values = {0.3, 0.5, 0.7};
  opts.seeds = {1, 2, 3, 4, 5};
  const SweepResult r = run_sweep(opts, nullptr);
  if (!r.complete) {
    detail = "sweep had failed cells";
    return false;
  }
  auto median_for = [&](RegMethod m, double p) {
    for (const auto& row : r.table) {
      if (row.method == to_string(m) && row.p == p) return row.median;
    }
    return -1.0;
  };
  bool ok = true;
  std::ostringstream os;
  for (double p : opts.p_values) {
    const double dp = median_for(RegMethod::delay_prune, p);
    const double dr = median_for(RegMethod::dropout, p);
    const double dc = median_for(RegMethod::dropconnect, p);
    ok = ok && dp >= dr && dp >= dc;
    os << "p=" << p << ": prune " << dp << " dropout " << dr << " dropconnect " << dc
       << "; ";
  }
  detail = os.str();
  return ok;
}

// ---- criterion 7: CLI determinism + checkpoint persistence -----------------

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool criterion_determinism(const Args& args, std::string& detail) {
  if (args.cli.empty()) {
    detail = "no --cli given";
    return false;
  }
  const fs::path a = args.work / "det_a";
  const fs::path b = args.work / "det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  for (const fs::path& out : {a, b}) {
    std::ostringstream cmd;
    cmd << args.cli << " markov7 --scale desk --seed 3 --out " << out
        << " > " << (out.string() + ".log") << " 2>&1";
    if (std::system(cmd.str().c_str()) != 0) {
      detail = "cli run failed; see " + out.string() + ".log";
      return false;
    }
  }
  // every csv (and the config echo) must be byte-identical
  std::vector<std::string> rel;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) {
      const std::string ext = entry.path().extension().string();
      if (ext == ".csv" || ext == ".txt" || ext == ".log") {
        rel.push_back(fs::relative(entry.path(), a).string());
      }
    }
  }
  std::sort(rel.begin(), rel.end());
  if (rel.empty()) {
    detail = "no csv outputs found";
    return false;
  }
  for (const auto& r : rel) {
    if (read_file(a / r) != read_file(b / r)) {
      detail = "mismatch in " + r;
      return false;
    }
  }

  // checkpoint save/load round-trip: bit-identical NLL on a probe set
  const Checkpoint ck = load_checkpoint(a / "delay-prune" / "checkpoint.bin");
  DybmModel m1 = model_from_checkpoint(ck);
  const fs::path resaved = args.work / "det_resaved.bin";
  save_checkpoint(resaved, ck);
  DybmModel m2 = model_from_checkpoint(load_checkpoint(resaved));
  Rng probe_rng(555);
  for (int rep = 0; rep < 5; ++rep) {
    BinarySequence probe = random_sequence(probe_rng, ck.model_config.n_units, 80);
    reset_dynamic_state(m1);
    reset_dynamic_state(m2);
    const double n1 = sequence_nll(m1, probe);
    const double n2 = sequence_nll(m2, probe);
    if (std::memcmp(&n1, &n2, sizeof n1) != 0) {
      detail = "probe NLL differs after checkpoint round-trip";
      return false;
    }
  }
  detail = std::to_string(rel.size()) + " files byte-identical; checkpoint round-trip exact";
  return true;
}

// ---- criterion 8: p=0 identity across methods ------------------------------

bool criterion_identity(std::string& detail) {
  MarkovSpec train_spec{5, 0.95, 2000, 404};
  MarkovSpec val_spec{5, 0.95, 500, 405};
  const auto train = chunk_sequence(markov_generate(train_spec), 50);
  const auto val = chunk_sequence(markov_generate(val_spec), 50);
  ModelConfig mc;
  mc.n_units = 5;
  mc.rng_seed = 31337;
  TrainConfig tc;
  tc.minibatch_size = 8;
  tc.validation_cadence_epochs = 4;
  tc.max_steps_per_sample = 500;

  RegularizerConfig none_cfg;
  none_cfg.method = RegMethod::none;
  none_cfg.rng_seed = 9;
  const TrainResult base = run_training(mc, tc, none_cfg, train, val, std::nullopt);

  for (RegMethod method :
       {RegMethod::delay_prune, RegMethod::dropout, RegMethod::dropconnect}) {
    RegularizerConfig reg;
    reg.method = method;
    reg.p = 0.0;
    reg.rng_seed = 9;
    const TrainResult r = run_training(mc, tc, reg, train, val, std::nullopt);
    if (r.metrics.size() != base.metrics.size()) {
      detail = std::string("row count differs for ") + to_string(method);
      return false;
    }
    for (std::size_t i = 0; i < r.metrics.size(); ++i) {
      const MetricsRow& x = r.metrics[i];
      const MetricsRow& y = base.metrics[i];
      if (x.step != y.step || std::memcmp(&x.train_nll, &y.train_nll, 8) != 0 ||
          std::memcmp(&x.val_tnl, &y.val_tnl, 8) != 0 ||
          std::memcmp(&x.epsilon, &y.epsilon, 8) != 0 || x.is_best != y.is_best) {
        detail = std::string("trajectory differs for ") + to_string(method) + " at row " +
                 std::to_string(i);
        return false;
      }
    }
    if (r.best.params.data != base.best.params.data) {
      detail = std::string("final parameters differ for ") + to_string(method);
      return false;
    }
  }
  detail = "all three methods bit-identical to the unregularized trajectory";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      args.cli = argv[++i];
    } else if (a == "--work" && i + 1 < argc) {
      args.work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::istringstream is(argv[++i]);
      std::string tok;
      while (std::getline(is, tok, ',')) args.only.push_back(std::stoi(tok));
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", a.c_str());
      return 2;
    }
  }
  std::error_code ec;
  fs::create_directories(args.work, ec);

  std::vector<Criterion> criteria = {
      {1, "trace-oracle equivalence", 5.0},
      {2, "gradient exactness vs finite differences", 30.0},
      {3, "sequence normalization", 5.0},
      {4, "markov experiment (delay pruning beats baseline)", 600.0},
      {5, "video experiment (accuracy + randomized-weights collapse)", 1200.0},
      {6, "sweep ordering (delay-prune >= dropout, dropconnect)", 3600.0},
      {7, "CLI determinism and checkpoint persistence", 120.0},
      {8, "p=0 regularizer identity", 120.0},
  };

  auto enabled = [&](int id) {
    return args.only.empty() ||
           std::find(args.only.begin(), args.only.end(), id) != args.only.end();
  };

  int failures = 0;
  for (Criterion& c : criteria) {
    if (!enabled(c.id)) continue;
    const double t0 = now_seconds();
    try {
      switch (c.id) {
        case 1: c.pass = criterion_trace_oracle(c.detail); break;
        case 2: c.pass = criterion_gradient(c.detail); break;
        case 3: c.pass = criterion_normalization(c.detail); break;
        case 4: c.pass = criterion_markov(c.detail); break;
        case 5: c.pass = criterion_video(c.detail); break;
        case 6: c.pass = criterion_sweep(c.detail); break;
        case 7: c.pass = criterion_determinism(args, c.detail); break;
        case 8: c.pass = criterion_identity(c.detail); break;
      }
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    c.elapsed = now_seconds() - t0;
    if (c.elapsed > c.budget_seconds) {
      c.pass = false;
      c.detail += " [over runtime budget]";
    }
    std::printf("[%s] %d. %s (%.1fs, budget %.0fs) - %s\n", c.pass ? "PASS" : "FAIL",
                c.id, c.name, c.elapsed, c.budget_seconds, c.detail.c_str());
    std::fflush(stdout);
    if (!c.pass) ++failures;
  }
  return failures;
}

#include "dybm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dybm/errors.hpp"
#include "dybm/kernels.hpp"

namespace dybm {

void TrainConfig::validate() const {
  if (validation_cadence_epochs < 1) throw ConfigError("validation cadence must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 outside (0,1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 outside (0,1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (minibatch_size < 1) throw ConfigError("minibatch_size must be >= 1");
  if (!(stop_tolerance_per_unit > 0.0)) throw ConfigError("stop tolerance must be > 0");
}

void RegContext::resample(DybmModel& model, std::uint64_t step) {
  switch (config.method) {
    case RegMethod::none:
      return;
    case RegMethod::delay_prune: {
      prune = sample_prune_mask(config, model.config.n_units, rng);
      apply_prune_mask(model, prune);
      if (mask_log) {
        write_mask_event(*mask_log, step, config.method, prune.keep.data(),
                         prune.keep.size());
      }
      return;
    }
    case RegMethod::dropout:
    case RegMethod::dropconnect: {
      drop = sample_drop_mask(config, model.config.n_units, rng);
      workspace.bind(drop);
      drop_active = true;
      if (mask_log) {
        const auto& bits = (drop.kind == DropMask::Kind::dropout_units) ? drop.unit_keep
                                                                        : drop.weight_keep;
        write_mask_event(*mask_log, step, config.method, bits.data(), bits.size());
      }
      return;
    }
  }
}

namespace {

struct StepScratch {
  std::vector<double> p;
  std::vector<double> e;
  std::vector<double> row;  // one gradient row at a time

  void ensure(int n) {
    p.resize(n);
    e.resize(n);
    row.resize(n);
  }
};

StepScratch& scratch_for_thread() {
  thread_local StepScratch s;
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

void train_step(DybmModel& model, const std::uint8_t* x_t, AdamState& optimizer,
                double learning_rate, const TrainConfig& cfg, RegContext* reg,
                double* out_step_nll) {
  const int n = model.config.n_units;
  const int k = model.config.n_synaptic_traces;
  const int l = model.config.n_neural_traces;
  StepScratch& s = scratch_for_thread();
  s.ensure(n);

  const bool masked = reg && reg->drop_active;
  try {
    if (masked) {
      reg->workspace.masked_logits(model, reg->drop);
      probs_from_logits(reg->workspace.z.data(), s.p.data(), n, model.clock);
    } else {
      const std::vector<double> p = conditional_probs(model);
      std::copy(p.begin(), p.end(), s.p.begin());
    }
  } catch (const NumericalError& e) {
    // adam's first moment tracks recent gradients; report its scale
    throw DivergenceError(std::string("training diverged: ") + e.what(),
                          optimizer.step_count, max_abs(optimizer.first_moment));
  }

  for (int j = 0; j < n; ++j) s.e[j] = double(x_t[j]) - s.p[j];
  if (out_step_nll) *out_step_nll = step_nll(x_t, s.p.data(), n);

  if (learning_rate != 0.0) {
    ++optimizer.step_count;
    kernels::AdamScalars as;
    as.step_size = learning_rate;  // ascent on log-likelihood
    as.beta1 = cfg.adam_beta1;
    as.beta2 = cfg.adam_beta2;
    as.eps = cfg.adam_eps;
    as.bias1 = 1.0 - std::pow(cfg.adam_beta1, double(optimizer.step_count));
    as.bias2 = 1.0 - std::pow(cfg.adam_beta2, double(optimizer.step_count));

    const bool drop_traces = masked && reg->drop.kind == DropMask::Kind::dropout_units;
    const bool drop_edges = masked && reg->drop.kind == DropMask::Kind::dropconnect_weights;
    const TraceState& tr = drop_traces ? reg->workspace.masked_traces : model.traces;
    const auto& K = kernels::active();

    // Gradient rows are produced into a small scratch row and consumed by the
    // adam update immediately; the full gradient tensor is never materialized.
    auto adam_range = [&](std::size_t offset, const double* grad_row, std::size_t count) {
      K.adam_ascent(model.params.data.data() + offset, grad_row,
                    optimizer.first_moment.data() + offset,
                    optimizer.second_moment.data() + offset, count, as);
    };
    adam_range(0, s.e.data(), std::size_t(n));  // bias gradient is e itself
    const std::size_t plane = std::size_t(n) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double* alpha = tr.alpha.data() + std::size_t(kk) * plane;
      const std::size_t base = std::size_t(n) + std::size_t(kk) * plane;
      for (int j = 0; j < n; ++j) {
        K.scale(s.e[j], alpha + std::size_t(j) * n, s.row.data(), n);
        if (drop_edges) {
          K.hadamard(s.row.data(), reg->workspace.edge_keep_d.data() + std::size_t(j) * n,
                     s.row.data(), n);
        }
        adam_range(base + std::size_t(j) * n, s.row.data(), n);
      }
    }
    for (int ll = 0; ll < l; ++ll) {
      const double* beta = tr.beta.data() + std::size_t(ll) * plane;
      const double* gamma = tr.gamma.data() + std::size_t(ll) * n;
      const std::size_t base = std::size_t(n) + std::size_t(k) * plane + std::size_t(ll) * plane;
      for (int j = 0; j < n; ++j) {
        K.axpby(-s.e[j], beta + std::size_t(j) * n, -gamma[j], s.e.data(), s.row.data(), n);
        if (drop_edges) {
          K.hadamard(s.row.data(), reg->workspace.edge_keep_d.data() + std::size_t(j) * n,
                     s.row.data(), n);
        }
        adam_range(base + std::size_t(j) * n, s.row.data(), n);
      }
    }
  }
  step_advance(model, x_t, n);
}

TrainReport train_minibatch(DybmModel& model, std::span<const BinarySequence> batch,
                            RegContext& reg, const TrainConfig& cfg, AdamState& optimizer,
                            bool new_presentation) {
  TrainReport report;
  if (batch.empty()) return report;
  if (new_presentation && reg.config.resample == ResampleCadence::per_minibatch) {
    reg.resample(model, optimizer.step_count);
  }
  double nll_sum = 0.0;
  for (const BinarySequence& seq : batch) {
    if (seq.n_dims != model.config.n_units)
      throw ShapeError("train_minibatch: sequence dimension mismatch");
    if (reg.config.resample == ResampleCadence::per_sample) {
      reg.resample(model, optimizer.step_count);
    }
    reset_dynamic_state(model);
    for (int t = 0; t < seq.length; ++t) {
      double step_loss = 0.0;
      train_step(model, seq.step(t), optimizer, cfg.learning_rate, cfg, &reg, &step_loss);
      nll_sum += step_loss;
      ++report.steps;
    }
  }
  reset_dynamic_state(model);
  report.mean_nll = report.steps ? nll_sum / double(report.steps) : 0.0;
  return report;
}

double validation_tnl(const DybmModel& model, std::span<const BinarySequence> validation,
                      const RegularizerConfig& reg_cfg) {
  DybmModel probe = model;  // deep copy; training state untouched
  const double scale = eval_history_scale(reg_cfg);
  double total = 0.0;
  std::uint64_t steps = 0;
  for (const BinarySequence& seq : validation) {
    reset_dynamic_state(probe);
    total += sequence_nll(probe, seq, scale);
    steps += std::uint64_t(seq.length);
  }
  return steps ? total / double(steps) : 0.0;
}

Checkpoint validate_and_checkpoint(const DybmModel& model,
                                   std::span<const BinarySequence> validation,
                                   std::optional<double> true_per_step_nll,
                                   const Checkpoint& best, const RegularizerConfig& reg_cfg,
                                   std::uint64_t step, EpsilonScore* out_score) {
  EpsilonScore score;
  score.tnl = validation_tnl(model, validation, reg_cfg);
  if (true_per_step_nll) {
    score.onl = *true_per_step_nll;
    score.epsilon = score.onl - score.tnl;
  } else {
    score.epsilon = -score.tnl;
  }
  if (out_score) *out_score = score;
  if (best.valid && !(score.epsilon > best.epsilon)) return best;
  Checkpoint next = snapshot_model(model, reg_cfg.method, reg_cfg.p);
  next.epsilon = score.epsilon;
  next.tnl = score.tnl;
  next.onl = score.onl;
  next.step = step;
  return next;
}

TrainResult run_training(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                         const RegularizerConfig& reg_cfg,
                         const std::vector<BinarySequence>& train_set,
                         const std::vector<BinarySequence>& validation_set,
                         std::optional<double> true_per_step_nll,
                         std::ostream* mask_log) {
  model_cfg.validate();
  train_cfg.validate();
  reg_cfg.validate();

  TrainResult result;
  DybmModel model = init_model(model_cfg);
  AdamState adam;
  adam.init(model.params.size());
  RegContext reg(reg_cfg);
  if (train_cfg.log_masks) reg.mask_log = mask_log;

  std::vector<std::span<const BinarySequence>> batches;
  for (std::size_t at = 0; at < train_set.size(); at += train_cfg.minibatch_size) {
    const std::size_t count =
        std::min<std::size_t>(train_cfg.minibatch_size, train_set.size() - at);
    batches.emplace_back(train_set.data() + at, count);
  }
  std::vector<std::uint64_t> batch_passes(batches.size(), 0);
  std::vector<std::uint64_t> batch_max_len(batches.size(), 0);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    for (const auto& seq : batches[b]) {
      batch_max_len[b] = std::max(batch_max_len[b], std::uint64_t(seq.length));
    }
  }

  const double stop_tol = train_cfg.stop_tolerance_per_unit * model_cfg.n_units;

  auto validate_now = [&](int batch_index) -> bool {
    EpsilonScore score;
    Checkpoint next = validate_and_checkpoint(model, validation_set, true_per_step_nll,
                                              result.best, reg_cfg, result.total_steps,
                                              &score);
    const bool improved = !result.best.valid || score.epsilon > result.best.epsilon;
    MetricsRow row;
    row.step = result.total_steps;
    row.batch = batch_index;
    row.train_nll = std::numeric_limits<double>::quiet_NaN();
    row.val_tnl = score.tnl;
    row.onl = score.onl;
    row.epsilon = score.epsilon;
    row.is_best = improved;
    row.method = reg_cfg.method;
    row.p = reg_cfg.p;
    result.metrics.push_back(row);
    result.best = std::move(next);
    return true_per_step_nll && std::abs(score.tnl - *true_per_step_nll) <= stop_tol;
  };

  try {
    validate_now(-1);  // the initial model is always the first best

    // One block = validation_cadence_epochs passes over one minibatch with the
    // mask held fixed (a "presentation of the training cycle"), then a
    // validation that scores that structure.
    std::uint64_t block = 0;
    bool stopped = false;
    while (!batches.empty() && !stopped) {
      const std::size_t b = block % batches.size();
      const std::uint64_t cadence = std::uint64_t(train_cfg.validation_cadence_epochs);
      std::uint64_t epochs_left = 0;
      if (batch_max_len[b] > 0) {
        const std::uint64_t budget_epochs =
            train_cfg.max_steps_per_sample / batch_max_len[b];
        if (batch_passes[b] >= budget_epochs) break;
        epochs_left = std::min(cadence, budget_epochs - batch_passes[b]);
      }
      if (epochs_left == 0) break;
      TrainReport rep;
      for (std::uint64_t e = 0; e < epochs_left; ++e) {
        rep = train_minibatch(model, batches[b], reg, train_cfg, adam, e == 0);
        ++batch_passes[b];
        result.total_steps += rep.steps;
      }
      if (validate_now(int(b))) stopped = true;
      result.metrics.back().train_nll = rep.mean_nll;
      ++block;
    }
  } catch (const DivergenceError& e) {
    throw TrainingDiverged(e, std::move(result));
  }
  return result;
}

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v || (std::isnan(back) && std::isnan(v))) break;
  }
  return buf;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write metrics csv: " + path.string());
  os << "step,batch,train_nll,val_tnl,onl,epsilon,is_best,method,p\n";
  for (const MetricsRow& r : rows) {
    os << r.step << ',' << r.batch << ',' << format_double(r.train_nll) << ','
       << format_double(r.val_tnl) << ',' << format_double(r.onl) << ','
       << format_double(r.epsilon) << ',' << (r.is_best ? 1 : 0) << ','
       << to_string(r.method) << ',' << format_double(r.p) << '\n';
  }
}

}  // namespace dybm

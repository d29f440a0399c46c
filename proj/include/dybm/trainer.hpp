#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dybm/checkpoint.hpp"
#include "dybm/model.hpp"
#include "dybm/regularizers.hpp"

namespace dybm {

struct TrainConfig {
  std::uint64_t max_steps_per_sample = 50000;
  int validation_cadence_epochs = 500;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int minibatch_size = 32;
  // Stop when |TNL - ONL| <= stop_tolerance_per_unit * N (per-step NLLs).
  double stop_tolerance_per_unit = 1e-3;
  std::uint64_t rng_seed = 0;
  bool log_masks = false;

  void validate() const;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;

  void init(std::size_t n) {
    first_moment.assign(n, 0.0);
    second_moment.assign(n, 0.0);
    step_count = 0;
  }
};

// onl/tnl are mean per-step NLLs over the validation set; epsilon = onl - tnl
// when the true distribution is known, otherwise -tnl.
struct EpsilonScore {
  double onl = std::numeric_limits<double>::quiet_NaN();
  double tnl = 0.0;
  double epsilon = 0.0;
};

struct MetricsRow {
  std::uint64_t step = 0;
  int batch = -1;
  double train_nll = std::numeric_limits<double>::quiet_NaN();  // per-step mean
  double val_tnl = std::numeric_limits<double>::quiet_NaN();
  double onl = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  bool is_best = false;
  RegMethod method = RegMethod::none;
  double p = 0.0;
};

struct TrainReport {
  std::uint64_t steps = 0;
  double mean_nll = 0.0;  // per-step mean over the batch
};

// Mask lifecycle owned by the training loop: holds the regularizer RNG stream
// and the masks currently in force.
struct RegContext {
  RegularizerConfig config;
  Rng rng;
  PruneMask prune;
  DropMask drop;
  bool drop_active = false;
  MaskWorkspace workspace;
  std::ostream* mask_log = nullptr;

  explicit RegContext(const RegularizerConfig& cfg)
      : config(cfg), rng(Rng(cfg.rng_seed).derive(0x6d61736bULL)) {}

  void resample(DybmModel& model, std::uint64_t step);
};

// One online update: gradient of log P(x_t | history), Adam ascent step, then
// state advance. The RegContext supplies the training-time mask, if any.
void train_step(DybmModel& model, const std::uint8_t* x_t, AdamState& optimizer,
                double learning_rate, const TrainConfig& cfg, RegContext* reg = nullptr,
                double* out_step_nll = nullptr);

// Train each sequence in order: per-cadence mask resampling, dynamic-state
// reset per sample, weights carried through. new_presentation marks the first
// pass of a minibatch presentation, which is when per-minibatch masks
// resample.
TrainReport train_minibatch(DybmModel& model, std::span<const BinarySequence> batch,
                            RegContext& reg, const TrainConfig& cfg, AdamState& optimizer,
                            bool new_presentation = true);

// Mean per-step NLL of the validation set under the current model, evaluation
// mode (no masks, (1-p) scaling for drop methods).
double validation_tnl(const DybmModel& model, std::span<const BinarySequence> validation,
                      const RegularizerConfig& reg_cfg);

// Score the model and replace `best` when epsilon improves strictly.
Checkpoint validate_and_checkpoint(const DybmModel& model,
                                   std::span<const BinarySequence> validation,
                                   std::optional<double> true_per_step_nll,
                                   const Checkpoint& best, const RegularizerConfig& reg_cfg,
                                   std::uint64_t step, EpsilonScore* out_score = nullptr);

struct TrainResult {
  Checkpoint best;
  std::vector<MetricsRow> metrics;
  std::uint64_t total_steps = 0;
};

// Thrown when training produces non-finite state; carries whatever metrics
// were collected before the failure.
struct TrainingDiverged : DivergenceError {
  TrainingDiverged(const DivergenceError& e, TrainResult partial)
      : DivergenceError(e), partial(std::move(partial)) {}
  TrainResult partial;
};

TrainResult run_training(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                         const RegularizerConfig& reg_cfg,
                         const std::vector<BinarySequence>& train_set,
                         const std::vector<BinarySequence>& validation_set,
                         std::optional<double> true_per_step_nll,
                         std::ostream* mask_log = nullptr);

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRow>& rows);

std::string format_double(double v);  // shortest deterministic round-trip text

}  // namespace dybm

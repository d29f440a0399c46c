#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dybm/model.hpp"
#include "dybm/rng.hpp"

namespace dybm {

enum class RegMethod { none, delay_prune, dropout, dropconnect };

const char* to_string(RegMethod m);
RegMethod parse_method(const std::string& name);

enum class ResampleCadence { per_minibatch, per_sample };

struct RegularizerConfig {
  RegMethod method = RegMethod::none;
  double p = 0.5;  // prune/drop probability
  ResampleCadence resample = ResampleCadence::per_minibatch;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Keep/prune decision per directed edge [j*N + i]. original_delays is a
// snapshot of the model's init-time delays, filled on first application.
struct PruneMask {
  int n = 0;
  std::vector<std::uint8_t> keep;
  std::vector<int> original_delays;
};

struct DropMask {
  enum class Kind { dropout_units, dropconnect_weights };
  Kind kind = Kind::dropout_units;
  int n = 0;
  std::vector<std::uint8_t> unit_keep;    // dropout: historical unit i kept
  std::vector<std::uint8_t> weight_keep;  // dropconnect: edge [j*N + i] kept
};

// Each edge is pruned independently with probability config.p.
PruneMask sample_prune_mask(const RegularizerConfig& config, int n, Rng& rng);

// Pruned edges get delay 1 (queue emptied, beta zeroed, alpha kept decaying);
// edges returning to kept get their original delay back with a zero-filled
// queue.
void apply_prune_mask(DybmModel& model, PruneMask& mask);

DropMask sample_drop_mask(const RegularizerConfig& config, int n, Rng& rng);

// Training-time probabilities with the mask applied to history contributions.
// Current-step predictions are never masked.
std::vector<double> masked_conditional_probs(const DybmModel& model, const DropMask& mask);

// Evaluation-time history scaling hook. All methods currently evaluate
// unscaled (the straightforward protocol); conditional_probs_scaled remains
// the entry point for experimenting with expectation rescaling.
double eval_history_scale(const RegularizerConfig& config);

// Scratch for the masked training path. Dropout multiplies the traces by the
// unit-keep vector; dropconnect multiplies the weights (and the resulting
// gradient) by the edge-keep matrix. Either way the unmasked core math runs on
// the masked buffers.
struct MaskWorkspace {
  std::vector<double> unit_keep_d;   // N
  std::vector<double> edge_keep_d;   // N*N
  TraceState masked_traces;          // dropout
  Parameters masked_params;          // dropconnect
  std::vector<double> z;             // N logits

  void bind(const DropMask& mask);  // convert mask to doubles
  // Refresh masked buffers from the current model state and compute logits.
  void masked_logits(const DybmModel& model, const DropMask& mask);
  // Multiply a gradient in place by the dropconnect edge mask.
  void mask_gradient_edges(Parameters& grad) const;
};

void write_mask_event(std::ostream& os, std::uint64_t step, RegMethod method,
                      const std::uint8_t* bits, std::size_t count);

}  // namespace dybm

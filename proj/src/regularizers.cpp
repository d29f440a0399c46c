#include "dybm/regularizers.hpp"

#include <algorithm>
#include <ostream>

#include "dybm/errors.hpp"
#include "dybm/kernels.hpp"

namespace dybm {

const char* to_string(RegMethod m) {
  switch (m) {
    case RegMethod::none: return "none";
    case RegMethod::delay_prune: return "delay-prune";
    case RegMethod::dropout: return "dropout";
    case RegMethod::dropconnect: return "dropconnect";
  }
  return "?";
}

RegMethod parse_method(const std::string& name) {
  if (name == "none") return RegMethod::none;
  if (name == "delay-prune") return RegMethod::delay_prune;
  if (name == "dropout") return RegMethod::dropout;
  if (name == "dropconnect") return RegMethod::dropconnect;
  throw ConfigError("unknown regularizer method: " + name);
}

void RegularizerConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("regularizer p must be in [0,1]");
}

PruneMask sample_prune_mask(const RegularizerConfig& config, int n, Rng& rng) {
  config.validate();
  PruneMask mask;
  mask.n = n;
  mask.keep.resize(std::size_t(n) * n);
  for (auto& bit : mask.keep) bit = rng.bernoulli(config.p) ? 0 : 1;
  return mask;
}

void apply_prune_mask(DybmModel& model, PruneMask& mask) {
  const int n = model.config.n_units;
  if (mask.n != n) throw ShapeError("apply_prune_mask: dimension mismatch");
  if (mask.original_delays.empty()) {
    mask.original_delays = model.original_delays;
  }
  const std::size_t plane = std::size_t(n) * n;
  for (int pair = 0; pair < n * n; ++pair) {
    const int target = mask.keep[pair] ? model.original_delays[pair] : 1;
    if (model.queues.delay[pair] == target) continue;
    model.queues.set_delay(pair, target);
    for (int l = 0; l < model.config.n_neural_traces; ++l) {
      model.traces.beta[std::size_t(l) * plane + pair] = 0.0;
    }
  }
}

DropMask sample_drop_mask(const RegularizerConfig& config, int n, Rng& rng) {
  config.validate();
  if (config.method != RegMethod::dropout && config.method != RegMethod::dropconnect)
    throw ConfigError("sample_drop_mask requires dropout or dropconnect");
  DropMask mask;
  mask.n = n;
  if (config.method == RegMethod::dropout) {
    mask.kind = DropMask::Kind::dropout_units;
    mask.unit_keep.resize(n);
    for (auto& bit : mask.unit_keep) bit = rng.bernoulli(config.p) ? 0 : 1;
  } else {
    mask.kind = DropMask::Kind::dropconnect_weights;
    mask.weight_keep.resize(std::size_t(n) * n);
    for (auto& bit : mask.weight_keep) bit = rng.bernoulli(config.p) ? 0 : 1;
  }
  return mask;
}

double eval_history_scale(const RegularizerConfig& config) {
  // Dropout and DropConnect are applied the way the original comparison did:
  // masks during training, the full network as-is at evaluation. Expectation
  // rescaling of the history terms would paper over exactly the train/eval
  // mismatch the comparison measures.
  (void)config;
  return 1.0;
}

void MaskWorkspace::bind(const DropMask& mask) {
  const int n = mask.n;
  if (mask.kind == DropMask::Kind::dropout_units) {
    unit_keep_d.resize(n);
    for (int i = 0; i < n; ++i) unit_keep_d[i] = double(mask.unit_keep[i]);
  } else {
    edge_keep_d.resize(std::size_t(n) * n);
    for (std::size_t e = 0; e < edge_keep_d.size(); ++e)
      edge_keep_d[e] = double(mask.weight_keep[e]);
  }
}

void MaskWorkspace::masked_logits(const DybmModel& model, const DropMask& mask) {
  const int n = model.config.n_units;
  const int k = model.config.n_synaptic_traces;
  const int l = model.config.n_neural_traces;
  if (mask.n != n) throw ShapeError("drop mask: dimension mismatch");
  const auto& K = kernels::active();
  const std::size_t plane = std::size_t(n) * n;
  z.resize(n);

  if (mask.kind == DropMask::Kind::dropout_units) {
    masked_traces.resize(n, k, l);
    // alpha/beta rows masked over the pre-synaptic index, gamma masked directly
    for (int kk = 0; kk < k; ++kk) {
      const double* src = model.traces.alpha_plane(kk);
      double* dst = masked_traces.alpha_plane(kk);
      for (int j = 0; j < n; ++j) {
        K.hadamard(src + std::size_t(j) * n, unit_keep_d.data(), dst + std::size_t(j) * n, n);
      }
    }
    for (int ll = 0; ll < l; ++ll) {
      const double* src = model.traces.beta_plane(ll);
      double* dst = masked_traces.beta_plane(ll);
      for (int j = 0; j < n; ++j) {
        K.hadamard(src + std::size_t(j) * n, unit_keep_d.data(), dst + std::size_t(j) * n, n);
      }
      K.hadamard(model.traces.gamma_plane(ll), unit_keep_d.data(),
                 masked_traces.gamma_plane(ll), n);
    }
    compute_logits(n, k, l, model.params.bias(), model.params.u_plane(0),
                   model.params.v_plane(0), masked_traces.gamma.data(),
                   masked_traces.alpha.data(), masked_traces.beta.data(), z.data());
  } else {
    masked_params.resize(n, k, l);
    std::copy(model.params.bias(), model.params.bias() + n, masked_params.bias());
    for (int kk = 0; kk < k; ++kk) {
      K.hadamard(model.params.u_plane(kk), edge_keep_d.data(), masked_params.u_plane(kk),
                 plane);
    }
    for (int ll = 0; ll < l; ++ll) {
      K.hadamard(model.params.v_plane(ll), edge_keep_d.data(), masked_params.v_plane(ll),
                 plane);
    }
    compute_logits(n, k, l, masked_params.bias(), masked_params.u_plane(0),
                   masked_params.v_plane(0), model.traces.gamma.data(),
                   model.traces.alpha.data(), model.traces.beta.data(), z.data());
  }
}

void MaskWorkspace::mask_gradient_edges(Parameters& grad) const {
  const auto& K = kernels::active();
  const std::size_t plane = std::size_t(grad.n) * grad.n;
  for (int kk = 0; kk < grad.k; ++kk) {
    K.hadamard(grad.u_plane(kk), edge_keep_d.data(), grad.u_plane(kk), plane);
  }
  for (int ll = 0; ll < grad.l; ++ll) {
    K.hadamard(grad.v_plane(ll), edge_keep_d.data(), grad.v_plane(ll), plane);
  }
}

std::vector<double> masked_conditional_probs(const DybmModel& model, const DropMask& mask) {
  MaskWorkspace ws;
  ws.bind(mask);
  ws.masked_logits(model, mask);
  std::vector<double> p(ws.z.size());
  probs_from_logits(ws.z.data(), p.data(), int(ws.z.size()), model.clock);
  return p;
}

void write_mask_event(std::ostream& os, std::uint64_t step, RegMethod method,
                      const std::uint8_t* bits, std::size_t count) {
  os << "step=" << step << " method=" << to_string(method) << " keep=";
  for (std::size_t i = 0; i < count; ++i) os << (bits[i] ? '1' : '0');
  os << '\n';
}

}  // namespace dybm

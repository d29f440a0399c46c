#include "dybm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dybm/errors.hpp"
#include "dybm/kernels.hpp"

namespace dybm {

void ModelConfig::validate() const {
  if (n_units < 1) throw ConfigError("n_units must be >= 1");
  if (n_synaptic_traces < 1) throw ConfigError("n_synaptic_traces must be >= 1");
  if (n_neural_traces < 1) throw ConfigError("n_neural_traces must be >= 1");
  if (int(synaptic_decays.size()) != n_synaptic_traces)
    throw ConfigError("synaptic_decays size must equal n_synaptic_traces");
  if (int(neural_decays.size()) != n_neural_traces)
    throw ConfigError("neural_decays size must equal n_neural_traces");
  for (double d : synaptic_decays)
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("synaptic decay outside (0,1)");
  for (double d : neural_decays)
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("neural decay outside (0,1)");
  if (delay_min < 1) throw ConfigError("delay_min must be >= 1");
  if (delay_min > delay_max) throw ConfigError("delay_min > delay_max");
}

void QueueArray::init(int n_units, int max_delay) {
  if (max_delay > 57) throw ConfigError("delay_max above the 57-slot queue limit");
  n = n_units;
  delay.assign(std::size_t(n) * n, 1);
  bits.assign(std::size_t(n) * n, 0);
}

void QueueArray::zero_fill() {
  std::fill(bits.begin(), bits.end(), std::uint64_t(0));
}

void QueueArray::set_delay(int pair, int d) {
  delay[pair] = d;
  bits[pair] = 0;
}

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

constexpr double kProbFloor = 1e-12;

void fill_mu_pow(DybmModel& m) {
  const int l_count = m.config.n_neural_traces;
  const int width = m.config.delay_max + 1;
  m.mu_pow.assign(std::size_t(l_count) * width, 0.0);
  for (int l = 0; l < l_count; ++l) {
    double p = 1.0;
    for (int e = 0; e < width; ++e) {
      m.mu_pow[std::size_t(l) * width + e] = p;
      p *= m.config.neural_decays[l];
    }
  }
}

// Queues hold at most a handful of binary slots, so the decayed in-queue sum
// is a pure function of (decay index, slot count, slot bits); small queues go
// through a lookup table.
constexpr int kBetaLutMaxSlots = 12;

void fill_beta_lut(DybmModel& m) {
  const int l_count = m.config.n_neural_traces;
  const int max_slots = m.config.delay_max - 1;
  if (max_slots > kBetaLutMaxSlots) {
    m.beta_lut.clear();
    return;
  }
  const int width = m.config.delay_max + 1;
  const std::size_t masks = std::size_t(1) << std::max(max_slots, 0);
  m.beta_lut.assign(std::size_t(l_count) * (max_slots + 1) * masks, 0.0);
  for (int l = 0; l < l_count; ++l) {
    for (int len = 0; len <= max_slots; ++len) {
      for (std::size_t b = 0; b < (std::size_t(1) << len); ++b) {
        double acc = 0.0;
        for (int step = 1; step <= len; ++step) {
          if ((b >> (step - 1)) & 1u) acc += m.mu_pow[std::size_t(l) * width + step];
        }
        m.beta_lut[(std::size_t(l) * (max_slots + 1) + len) * masks + b] = acc;
      }
    }
  }
}

void recompute_beta(DybmModel& m) {
  const int n = m.config.n_units;
  const int l_count = m.config.n_neural_traces;
  const int width = m.config.delay_max + 1;
  const int max_slots = m.config.delay_max - 1;
  std::fill(m.traces.beta.begin(), m.traces.beta.end(), 0.0);
  const std::size_t plane = std::size_t(n) * n;
  if (!m.beta_lut.empty()) {
    const std::size_t masks = std::size_t(1) << std::max(max_slots, 0);
    for (int pair = 0; pair < n * n; ++pair) {
      const std::uint64_t bits = m.queues.bits[pair];
      if (!bits) continue;
      const int len = m.queues.delay[pair] - 1;
      for (int l = 0; l < l_count; ++l) {
        m.traces.beta[std::size_t(l) * plane + pair] =
            m.beta_lut[(std::size_t(l) * (max_slots + 1) + len) * masks + bits];
      }
    }
    return;
  }
  for (int pair = 0; pair < n * n; ++pair) {
    const int len = m.queues.slot_count(pair);
    for (int step = 1; step <= len; ++step) {
      if (!m.queues.peek_ago(pair, step)) continue;
      for (int l = 0; l < l_count; ++l) {
        m.traces.beta[std::size_t(l) * plane + pair] +=
            m.mu_pow[std::size_t(l) * width + step];
      }
    }
  }
}

}  // namespace

DybmModel init_model(const ModelConfig& config) {
  config.validate();
  DybmModel m;
  m.config = config;
  const int n = config.n_units;
  const int k = config.n_synaptic_traces;
  const int l = config.n_neural_traces;
  m.params.resize(n, k, l);
  m.traces.resize(n, k, l);
  m.queues.init(n, config.delay_max);
  m.pop_buf.assign(std::size_t(n) * n, 0.0);
  m.x_buf.assign(n, 0.0);
  fill_mu_pow(m);
  fill_beta_lut(m);

  // Draw order is fixed: bias, u planes, v planes, then delays.
  Rng rng(config.rng_seed);
  for (double& w : m.params.data) w = rng.normal(0.0, 0.1);
  m.original_delays.resize(std::size_t(n) * n);
  for (int pair = 0; pair < n * n; ++pair) {
    const int d = rng.uniform_int(config.delay_min, config.delay_max);
    m.original_delays[pair] = d;
    m.queues.set_delay(pair, d);
  }
  m.clock = 0;
  return m;
}

void compute_logits(int n, int k, int l, const double* bias, const double* u,
                    const double* v, const double* gamma, const double* alpha,
                    const double* beta, double* z_out) {
  const auto& K = kernels::active();
  const std::size_t plane = std::size_t(n) * n;
  std::copy(bias, bias + n, z_out);
  for (int kk = 0; kk < k; ++kk) {
    const double* up = u + std::size_t(kk) * plane;
    const double* ap = alpha + std::size_t(kk) * plane;
    for (int j = 0; j < n; ++j) {
      z_out[j] += K.dot(up + std::size_t(j) * n, ap + std::size_t(j) * n, n);
    }
  }
  for (int ll = 0; ll < l; ++ll) {
    const double* vp = v + std::size_t(ll) * plane;
    const double* bp = beta + std::size_t(ll) * plane;
    for (int j = 0; j < n; ++j) {
      z_out[j] -= K.dot(vp + std::size_t(j) * n, bp + std::size_t(j) * n, n);
    }
    const double* gp = gamma + std::size_t(ll) * n;
    for (int i = 0; i < n; ++i) {
      if (gp[i] != 0.0) K.axpy(-gp[i], vp + std::size_t(i) * n, z_out, n);
    }
  }
}

void probs_from_logits(const double* z, double* p, int n, std::uint64_t clock) {
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(z[j])) {
      throw NumericalError("non-finite logit for unit " + std::to_string(j) +
                           " at clock " + std::to_string(clock));
    }
    p[j] = sigmoid(z[j]);
  }
}

std::vector<double> conditional_probs_scaled(const DybmModel& model, double history_scale) {
  const int n = model.config.n_units;
  std::vector<double> z(n);
  compute_logits(n, model.config.n_synaptic_traces, model.config.n_neural_traces,
                 model.params.bias(), model.params.u_plane(0), model.params.v_plane(0),
                 model.traces.gamma.data(), model.traces.alpha.data(),
                 model.traces.beta.data(), z.data());
  if (history_scale != 1.0) {
    const double* b = model.params.bias();
    for (int j = 0; j < n; ++j) z[j] = b[j] + history_scale * (z[j] - b[j]);
  }
  std::vector<double> p(n);
  probs_from_logits(z.data(), p.data(), n, model.clock);
  return p;
}

std::vector<double> conditional_probs(const DybmModel& model) {
  return conditional_probs_scaled(model, 1.0);
}

void step_advance(DybmModel& model, const std::uint8_t* x_t, int n) {
  if (n != model.config.n_units) throw ShapeError("step_advance: dimension mismatch");
  for (int i = 0; i < n; ++i) {
    if (x_t[i] > 1) throw ShapeError("step_advance: values must be 0 or 1");
  }
  const auto& K = kernels::active();
  const int k_count = model.config.n_synaptic_traces;
  const int l_count = model.config.n_neural_traces;
  const std::size_t plane = std::size_t(n) * n;

  // Queues first: the popped value is the spike arriving now.
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int pair = j * n + i;
      model.pop_buf[pair] = double(model.queues.advance(pair, x_t[i]));
    }
  }
  // alpha_k <- lambda_k*alpha_k + popped, matching the closed form
  // alpha_k = sum_{s<=t-d} lambda_k^(t-s-d) x[s] (newest arrival undamped).
  for (int kk = 0; kk < k_count; ++kk) {
    K.scale_accum(model.config.synaptic_decays[kk], model.traces.alpha_plane(kk),
                  model.pop_buf.data(), plane);
  }
  for (int i = 0; i < n; ++i) model.x_buf[i] = double(x_t[i]);
  for (int ll = 0; ll < l_count; ++ll) {
    K.decay_add(model.config.neural_decays[ll], model.traces.gamma_plane(ll),
                model.x_buf.data(), n);
  }
  recompute_beta(model);
  ++model.clock;
}

void step_advance(DybmModel& model, const BinarySequence& seq, int t) {
  step_advance(model, seq.step(t), seq.n_dims);
}

double step_nll(const std::uint8_t* x, const double* p, int n) {
  double nll = 0.0;
  for (int j = 0; j < n; ++j) {
    const double pr = x[j] ? p[j] : 1.0 - p[j];
    nll -= std::log(std::max(pr, kProbFloor));
  }
  return nll;
}

double sequence_nll(DybmModel& model, const BinarySequence& seq, double history_scale) {
  if (seq.n_dims != model.config.n_units)
    throw ShapeError("sequence_nll: dimension mismatch");
  double total = 0.0;
  for (int t = 0; t < seq.length; ++t) {
    const std::vector<double> p = conditional_probs_scaled(model, history_scale);
    total += step_nll(seq.step(t), p.data(), seq.n_dims);
    step_advance(model, seq, t);
  }
  return total;
}

void fill_gradient(int n, int k, int l, const double* gamma, const double* alpha,
                   const double* beta, const double* e, Parameters& grad) {
  const auto& K = kernels::active();
  const std::size_t plane = std::size_t(n) * n;
  std::copy(e, e + n, grad.bias());
  for (int kk = 0; kk < k; ++kk) {
    const double* ap = alpha + std::size_t(kk) * plane;
    double* gp = grad.u_plane(kk);
    for (int j = 0; j < n; ++j) {
      K.scale(e[j], ap + std::size_t(j) * n, gp + std::size_t(j) * n, n);
    }
  }
  for (int ll = 0; ll < l; ++ll) {
    const double* bp = beta + std::size_t(ll) * plane;
    const double* gam = gamma + std::size_t(ll) * n;
    double* gp = grad.v_plane(ll);
    for (int j = 0; j < n; ++j) {
      K.axpby(-e[j], bp + std::size_t(j) * n, -gam[j], e, gp + std::size_t(j) * n, n);
    }
  }
}

Parameters loglik_gradient(const DybmModel& model, const std::uint8_t* x_t, int n) {
  if (n != model.config.n_units) throw ShapeError("loglik_gradient: dimension mismatch");
  const std::vector<double> p = conditional_probs(model);
  std::vector<double> e(n);
  for (int j = 0; j < n; ++j) e[j] = double(x_t[j]) - p[j];
  Parameters grad;
  grad.resize(n, model.config.n_synaptic_traces, model.config.n_neural_traces);
  fill_gradient(n, grad.k, grad.l, model.traces.gamma.data(), model.traces.alpha.data(),
                model.traces.beta.data(), e.data(), grad);
  return grad;
}

std::vector<std::uint8_t> sample_next(const DybmModel& model, Rng& rng) {
  const std::vector<double> p = conditional_probs(model);
  std::vector<std::uint8_t> x(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) x[j] = rng.bernoulli(p[j]) ? 1 : 0;
  return x;
}

void reset_dynamic_state(DybmModel& model) {
  model.traces.zero();
  model.queues.zero_fill();
  model.clock = 0;
}

}  // namespace dybm

#pragma once

#include <cstdint>
#include <vector>

#include "dybm/rng.hpp"
#include "dybm/sequence.hpp"

namespace dybm {

struct ModelConfig {
  int n_units = 1;
  int n_synaptic_traces = 3;                            // K
  int n_neural_traces = 3;                              // L
  std::vector<double> synaptic_decays = {0.2, 0.5, 0.8};  // lambda_k, in (0,1)
  std::vector<double> neural_decays = {0.2, 0.5, 0.8};    // mu_l, in (0,1)
  int delay_min = 1;
  int delay_max = 7;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Learnable parameters in one flat buffer:
//   [ bias (N) | u planes (K x N*N) | v planes (L x N*N) ]
// N*N matrices are post-synaptic-major: element [j*N + i] refers to the edge
// from pre-synaptic unit i to post-synaptic unit j. Gradients and Adam moments
// reuse this struct so elementwise kernels can run over the whole buffer.
struct Parameters {
  int n = 0, k = 0, l = 0;
  std::vector<double> data;

  void resize(int n_units, int n_u_planes, int n_v_planes) {
    n = n_units;
    k = n_u_planes;
    l = n_v_planes;
    data.assign(std::size_t(n) + std::size_t(k + l) * n * n, 0.0);
  }
  std::size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  double* bias() { return data.data(); }
  const double* bias() const { return data.data(); }
  double* u_plane(int kk) { return data.data() + n + std::size_t(kk) * n * n; }
  const double* u_plane(int kk) const { return data.data() + n + std::size_t(kk) * n * n; }
  double* v_plane(int ll) {
    return data.data() + n + std::size_t(k) * n * n + std::size_t(ll) * n * n;
  }
  const double* v_plane(int ll) const {
    return data.data() + n + std::size_t(k) * n * n + std::size_t(ll) * n * n;
  }
};

// One conduction-delay FIFO per ordered unit pair (i -> j), self-pairs
// included. A queue with delay d has d-1 slots; delay 1 means the incoming
// value passes straight through. Slots are binary, so each queue packs into a
// 64-bit word, bit m-1 holding the value pushed m steps ago.
struct QueueArray {
  int n = 0;
  std::vector<int> delay;            // [j*n + i], current effective delay
  std::vector<std::uint64_t> bits;   // [j*n + i], chronological slot contents

  void init(int n_units, int max_delay);
  int slot_count(int pair) const { return delay[pair] - 1; }

  // Pop the oldest value, push the incoming one. With zero slots the incoming
  // value is returned unchanged.
  std::uint8_t advance(int pair, std::uint8_t incoming) {
    const int len = delay[pair] - 1;
    if (len == 0) return incoming;
    std::uint64_t& q = bits[pair];
    const std::uint8_t popped = std::uint8_t((q >> (len - 1)) & 1u);
    q = ((q << 1) | std::uint64_t(incoming)) & ((std::uint64_t(1) << len) - 1);
    return popped;
  }

  // Value that entered the queue m steps ago, 1 <= m <= slot_count(pair).
  std::uint8_t peek_ago(int pair, int m) const {
    return std::uint8_t((bits[pair] >> (m - 1)) & 1u);
  }

  void zero_fill();
  void set_delay(int pair, int d);  // also empties the queue
};

// gamma[l*N + j]          neural traces
// alpha[k*N*N + j*N + i]  synaptic traces (post-major like the weights)
// beta[l*N*N + j*N + i]   in-queue traces, recomputed from queue contents
struct TraceState {
  int n = 0, k = 0, l = 0;
  std::vector<double> gamma;
  std::vector<double> alpha;
  std::vector<double> beta;

  void resize(int n_units, int n_u_planes, int n_v_planes) {
    n = n_units;
    k = n_u_planes;
    l = n_v_planes;
    gamma.assign(std::size_t(l) * n, 0.0);
    alpha.assign(std::size_t(k) * n * n, 0.0);
    beta.assign(std::size_t(l) * n * n, 0.0);
  }
  void zero() {
    std::fill(gamma.begin(), gamma.end(), 0.0);
    std::fill(alpha.begin(), alpha.end(), 0.0);
    std::fill(beta.begin(), beta.end(), 0.0);
  }
  double* gamma_plane(int ll) { return gamma.data() + std::size_t(ll) * n; }
  const double* gamma_plane(int ll) const { return gamma.data() + std::size_t(ll) * n; }
  double* alpha_plane(int kk) { return alpha.data() + std::size_t(kk) * n * n; }
  const double* alpha_plane(int kk) const { return alpha.data() + std::size_t(kk) * n * n; }
  double* beta_plane(int ll) { return beta.data() + std::size_t(ll) * n * n; }
  const double* beta_plane(int ll) const { return beta.data() + std::size_t(ll) * n * n; }
};

struct DybmModel {
  ModelConfig config;
  Parameters params;
  QueueArray queues;
  TraceState traces;
  std::vector<int> original_delays;  // snapshot at init, immutable afterwards
  std::uint64_t clock = 0;

  // per-step scratch and derived tables, not part of the model state
  std::vector<double> pop_buf;   // N*N popped queue values as doubles
  std::vector<double> x_buf;     // N current observation as doubles
  std::vector<double> mu_pow;    // [l*(delay_max+1) + m] = mu_l^m
  std::vector<double> beta_lut;  // in-queue trace by (l, slot count, slot bits)

  int n_units() const { return config.n_units; }
};

DybmModel init_model(const ModelConfig& config);

// Conditional probability of each unit firing at the next step given the
// history absorbed so far. history_scale rescales every history contribution
// (bias excluded); 1.0 is the plain model.
std::vector<double> conditional_probs(const DybmModel& model);
std::vector<double> conditional_probs_scaled(const DybmModel& model, double history_scale);

// Absorb the observation at the current step: update gamma/alpha, advance all
// queues, recompute beta, advance the clock.
void step_advance(DybmModel& model, const std::uint8_t* x_t, int n);
void step_advance(DybmModel& model, const BinarySequence& seq, int t);

// Total negative log-likelihood of seq from the model's current state,
// advancing the state through the whole sequence. Callers wanting the
// from-scratch value reset first.
double sequence_nll(DybmModel& model, const BinarySequence& seq, double history_scale = 1.0);

// Ascent direction of log P(x_t | history). Does not mutate the model.
Parameters loglik_gradient(const DybmModel& model, const std::uint8_t* x_t, int n);

std::vector<std::uint8_t> sample_next(const DybmModel& model, Rng& rng);

// Zero traces and queues, reset the clock; parameters and delays untouched.
void reset_dynamic_state(DybmModel& model);

// --- building blocks shared with the regularized paths ---

// z_j = bias_j + sum_{i,k} u_k[j,i]*alpha_k[j,i]
//              - sum_{i,l} v_l[j,i]*beta_l[j,i] - sum_{i,l} v_l[i,j]*gamma_l[i]
void compute_logits(int n, int k, int l, const double* bias, const double* u,
                    const double* v, const double* gamma, const double* alpha,
                    const double* beta, double* z_out);

// grad_b[j] = e_j; grad_u_k[j,i] = alpha_k[j,i]*e_j;
// grad_v_l[j,i] = -beta_l[j,i]*e_j - gamma_l[j]*e_i   with e = x - p
void fill_gradient(int n, int k, int l, const double* gamma, const double* alpha,
                   const double* beta, const double* e, Parameters& grad);

double sigmoid(double z);

// Bernoulli NLL of one step; probabilities clamped to >= 1e-12 inside the
// logs only.
double step_nll(const std::uint8_t* x, const double* p, int n);

void probs_from_logits(const double* z, double* p, int n, std::uint64_t clock);

}  // namespace dybm

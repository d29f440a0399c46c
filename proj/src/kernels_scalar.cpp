#include <cmath>

#include "dybm/kernels.hpp"

// Reference kernels. Compiled with -ffp-contract=off so no FMA contraction can
// change results; these define the numerical contract the SIMD variants must
// reproduce (bit-exactly for the elementwise ops).
namespace dybm::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void axpby_scalar(double a, const double* x, double b, const double* y, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void hadamard_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void decay_add_scalar(double decay, double* t, const double* add, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) t[i] = decay * (t[i] + add[i]);
}

void scale_accum_scalar(double decay, double* t, const double* add, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) t[i] = decay * t[i] + add[i];
}

void adam_ascent_scalar(double* param, const double* grad, double* m, double* v,
                        std::size_t n, const AdamScalars& s) {
  const double one_minus_b1 = 1.0 - s.beta1;
  const double one_minus_b2 = 1.0 - s.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + one_minus_b1 * g;
    v[i] = s.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / s.bias1;
    const double v_hat = v[i] / s.bias2;
    param[i] += s.step_size * (m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {
      "scalar",         dot_scalar,       axpy_scalar,        scale_scalar,
      axpby_scalar,     hadamard_scalar,  decay_add_scalar,   scale_accum_scalar,
      adam_ascent_scalar,
  };
  return table;
}

}  // namespace dybm::kernels

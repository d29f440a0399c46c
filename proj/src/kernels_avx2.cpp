#if defined(DYBM_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

#include "dybm/kernels.hpp"

// AVX2 variants. Elementwise kernels use explicit mul/add (no FMA) and match
// the scalar reference bit-for-bit, tails included (this TU is compiled with
// -ffp-contract=off). dot() uses FMA with four accumulators and therefore
// differs from scalar only by summation order.
namespace dybm::kernels {
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, const double* x, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = a * x[i];
}

void axpby_avx2(double a, const double* x, double b, const double* y, double* out,
                std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t0 = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    const __m256d t1 = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(t0, t1));
  }
  for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void hadamard_avx2(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void decay_add_avx2(double decay, double* t, const double* add, std::size_t n) {
  const __m256d vd = _mm256_set1_pd(decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d sum = _mm256_add_pd(_mm256_loadu_pd(t + i), _mm256_loadu_pd(add + i));
    _mm256_storeu_pd(t + i, _mm256_mul_pd(vd, sum));
  }
  for (; i < n; ++i) t[i] = decay * (t[i] + add[i]);
}

void scale_accum_avx2(double decay, double* t, const double* add, std::size_t n) {
  const __m256d vd = _mm256_set1_pd(decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d scaled = _mm256_mul_pd(vd, _mm256_loadu_pd(t + i));
    _mm256_storeu_pd(t + i, _mm256_add_pd(scaled, _mm256_loadu_pd(add + i)));
  }
  for (; i < n; ++i) t[i] = decay * t[i] + add[i];
}

void adam_ascent_avx2(double* param, const double* grad, double* m, double* v,
                      std::size_t n, const AdamScalars& s) {
  const __m256d vb1 = _mm256_set1_pd(s.beta1);
  const __m256d vb2 = _mm256_set1_pd(s.beta2);
  const __m256d v1mb1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d v1mb2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d vbias1 = _mm256_set1_pd(s.bias1);
  const __m256d vbias2 = _mm256_set1_pd(s.bias2);
  const __m256d veps = _mm256_set1_pd(s.eps);
  const __m256d vstep = _mm256_set1_pd(s.step_size);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                                     _mm256_mul_pd(v1mb1, g));
    const __m256d g2 = _mm256_mul_pd(g, g);
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(v1mb2, g2));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, vbias1);
    const __m256d v_hat = _mm256_div_pd(vi, vbias2);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps);
    const __m256d upd = _mm256_mul_pd(vstep, _mm256_div_pd(m_hat, denom));
    _mm256_storeu_pd(param + i, _mm256_add_pd(_mm256_loadu_pd(param + i), upd));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * (g * g);
    const double m_hat = m[i] / s.bias1;
    const double v_hat = v[i] / s.bias2;
    param[i] += s.step_size * (m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable table = {
      "avx2",         dot_avx2,       axpy_avx2,        scale_avx2,
      axpby_avx2,     hadamard_avx2,  decay_add_avx2,   scale_accum_avx2,
      adam_ascent_avx2,
  };
  return &table;
}

}  // namespace dybm::kernels

#endif  // DYBM_HAVE_AVX2

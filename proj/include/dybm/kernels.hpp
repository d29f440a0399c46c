#pragma once

#include <cstddef>

// Data-parallel inner loops used by the model and trainer. Every kernel has a
// scalar reference implementation and, on capable x86-64 hosts, an AVX2
// variant selected at runtime. Elementwise kernels are bit-identical across
// backends (no FMA contraction anywhere); the dot-product reduction uses FMA
// and a different summation order under AVX2, so cross-backend comparisons of
// dot() need a tolerance.
namespace dybm::kernels {

struct AdamScalars {
  double step_size;  // signed: positive for ascent on the objective
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct KernelTable {
  const char* name;
  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out[i] = a*x[i]
  void (*scale)(double a, const double* x, double* out, std::size_t n);
  // out[i] = a*x[i] + b*y[i]   (out may alias x or y)
  void (*axpby)(double a, const double* x, double b, const double* y, double* out,
                std::size_t n);
  // out[i] = x[i]*y[i]         (out may alias x or y)
  void (*hadamard)(const double* x, const double* y, double* out, std::size_t n);
  // t[i] = decay*(t[i] + add[i])
  void (*decay_add)(double decay, double* t, const double* add, std::size_t n);
  // t[i] = decay*t[i] + add[i]
  void (*scale_accum)(double decay, double* t, const double* add, std::size_t n);
  // m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2;
  // param += step_size * (m/bias1) / (sqrt(v/bias2) + eps)
  void (*adam_ascent)(double* param, const double* grad, double* m, double* v,
                      std::size_t n, const AdamScalars& s);
};

enum class Backend { autodetect, scalar, avx2 };

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in or unsupported
bool avx2_supported();

// Active table. Default resolution order: DYBM_KERNELS env var ("scalar" or
// "avx2"), then best supported backend. select_backend overrides both.
const KernelTable& active();
void select_backend(Backend b);

}  // namespace dybm::kernels

#include <cmath>
#include <cstring>
#include <vector>

#include <doctest.h>

#include "dybm/kernels.hpp"
#include "dybm/rng.hpp"

using namespace dybm;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + rng.uniform() * (hi - lo);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar kernels match naive formulas") {
  const auto& K = kernels::scalar_table();
  Rng rng(7);
  const auto a = random_vec(rng, 13);
  const auto b = random_vec(rng, 13);

  double expect = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) expect += a[i] * b[i];
  CHECK(K.dot(a.data(), b.data(), a.size()) == doctest::Approx(expect).epsilon(1e-15));

  auto y = b;
  K.axpy(0.5, a.data(), y.data(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(y[i] == 0.5 * a[i] + b[i]);

  std::vector<double> out(a.size());
  K.axpby(2.0, a.data(), -3.0, b.data(), out.data(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(out[i] == 2.0 * a[i] + -3.0 * b[i]);

  auto t = a;
  K.decay_add(0.5, t.data(), b.data(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(t[i] == 0.5 * (a[i] + b[i]));

  t = a;
  K.scale_accum(0.25, t.data(), b.data(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(t[i] == 0.25 * a[i] + b[i]);
}

TEST_CASE("adam step matches hand-computed first update") {
  const auto& K = kernels::scalar_table();
  double param = 1.0, g = 0.3, m = 0.0, v = 0.0;
  kernels::AdamScalars s{0.01, 0.9, 0.999, 1e-8, 1.0 - 0.9, 1.0 - 0.999};
  K.adam_ascent(&param, &g, &m, &v, 1, s);
  // first step: m_hat = g, v_hat = g^2 -> update ~ lr * sign(g)
  const double expect = 1.0 + 0.01 * (g / (std::abs(g) + 1e-8));
  CHECK(param == doctest::Approx(expect).epsilon(1e-9));
  CHECK(m == doctest::Approx(0.1 * g));
  CHECK(v == doctest::Approx(0.001 * g * g));
}

TEST_CASE("avx2 kernels agree with scalar reference") {
  const kernels::KernelTable* avx = kernels::avx2_table();
  if (!avx) return;  // host without AVX2
  const auto& ref = kernels::scalar_table();
  Rng rng(99);
  // Sizes straddle the vector width to exercise the tails.
  for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(4), std::size_t(7),
                        std::size_t(16), std::size_t(33), std::size_t(256),
                        std::size_t(1001)}) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);

    // dot reassociates; tolerance scaled to the magnitude of the terms
    const double d_ref = ref.dot(a.data(), b.data(), n);
    const double d_avx = avx->dot(a.data(), b.data(), n);
    CHECK(std::abs(d_ref - d_avx) <= 1e-12 * (1.0 + double(n)));

    // elementwise kernels are bit-identical by contract
    auto y_ref = b, y_avx = b;
    ref.axpy(1.7, a.data(), y_ref.data(), n);
    avx->axpy(1.7, a.data(), y_avx.data(), n);
    CHECK(bit_equal(y_ref, y_avx));

    std::vector<double> s_ref(n), s_avx(n);
    ref.scale(-0.3, a.data(), s_ref.data(), n);
    avx->scale(-0.3, a.data(), s_avx.data(), n);
    CHECK(bit_equal(s_ref, s_avx));

    ref.axpby(0.9, a.data(), -1.1, b.data(), s_ref.data(), n);
    avx->axpby(0.9, a.data(), -1.1, b.data(), s_avx.data(), n);
    CHECK(bit_equal(s_ref, s_avx));

    ref.hadamard(a.data(), b.data(), s_ref.data(), n);
    avx->hadamard(a.data(), b.data(), s_avx.data(), n);
    CHECK(bit_equal(s_ref, s_avx));

    auto t_ref = a, t_avx = a;
    ref.decay_add(0.85, t_ref.data(), b.data(), n);
    avx->decay_add(0.85, t_avx.data(), b.data(), n);
    CHECK(bit_equal(t_ref, t_avx));

    t_ref = a;
    t_avx = a;
    ref.scale_accum(0.45, t_ref.data(), b.data(), n);
    avx->scale_accum(0.45, t_avx.data(), b.data(), n);
    CHECK(bit_equal(t_ref, t_avx));

    auto p_ref = a, p_avx = a;
    auto m_ref = random_vec(rng, n, 0.0, 0.1), v_ref = random_vec(rng, n, 0.0, 0.1);
    auto m_avx = m_ref, v_avx = v_ref;
    kernels::AdamScalars s{0.002, 0.9, 0.999, 1e-8, 0.3, 0.02};
    ref.adam_ascent(p_ref.data(), b.data(), m_ref.data(), v_ref.data(), n, s);
    avx->adam_ascent(p_avx.data(), b.data(), m_avx.data(), v_avx.data(), n, s);
    CHECK(bit_equal(p_ref, p_avx));
    CHECK(bit_equal(m_ref, m_avx));
    CHECK(bit_equal(v_ref, v_avx));
  }
}

TEST_CASE("backend selection") {
  kernels::select_backend(kernels::Backend::scalar);
  CHECK(std::string(kernels::active().name) == "scalar");
  kernels::select_backend(kernels::Backend::autodetect);
  if (kernels::avx2_supported()) {
    kernels::select_backend(kernels::Backend::avx2);
    CHECK(std::string(kernels::active().name) == "avx2");
    kernels::select_backend(kernels::Backend::autodetect);
  }
}

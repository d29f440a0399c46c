#include <atomic>
#include <cstdlib>
#include <cstring>

#include "dybm/errors.hpp"
#include "dybm/kernels.hpp"

namespace dybm::kernels {

#if defined(DYBM_HAVE_AVX2)
const KernelTable* avx2_table_impl();
#endif

bool avx2_supported() {
#if defined(DYBM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* avx2_table() {
#if defined(DYBM_HAVE_AVX2)
  if (avx2_supported()) return avx2_table_impl();
#endif
  return nullptr;
}

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* resolve_default() {
  if (const char* env = std::getenv("DYBM_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_table();
    if (std::strcmp(env, "avx2") == 0) {
      if (const KernelTable* t = avx2_table()) return t;
      throw ConfigError("DYBM_KERNELS=avx2 but AVX2 is not available on this host");
    }
    throw ConfigError(std::string("unknown DYBM_KERNELS value: ") + env);
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

}  // namespace

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = resolve_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select_backend(Backend b) {
  switch (b) {
    case Backend::autodetect:
      g_active.store(nullptr, std::memory_order_release);
      active();
      return;
    case Backend::scalar:
      g_active.store(&scalar_table(), std::memory_order_release);
      return;
    case Backend::avx2: {
      const KernelTable* t = avx2_table();
      if (!t) throw ConfigError("AVX2 backend requested but not available");
      g_active.store(t, std::memory_order_release);
      return;
    }
  }
}

}  // namespace dybm::kernels

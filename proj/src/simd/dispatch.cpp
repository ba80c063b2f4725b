#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "pvrisk/simd/kernels.hpp"

namespace pvrisk::simd {

namespace {

Isa detect() {
#if defined(PVRISK_SIMD_X86) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
#if defined(PVRISK_SIMD_NEON)
  return Isa::Neon;
#endif
  return Isa::Scalar;
}

Isa from_environment(Isa fallback) {
  const char* env = std::getenv("PVRISK_ISA");
  if (!env) return fallback;
  const std::string v(env);
  if (v == "scalar") return Isa::Scalar;
  if (v == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (v == "neon" && isa_supported(Isa::Neon)) return Isa::Neon;
  return fallback;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{from_environment(detect())};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(PVRISK_SIMD_X86) && (defined(__GNUC__) || defined(__clang__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(PVRISK_SIMD_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::invalid_argument("ISA not supported on this CPU: " + std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

void add_squared_diff(std::span<const double> column, double q, std::span<double> acc) {
  if (column.size() != acc.size()) throw std::invalid_argument("add_squared_diff: length mismatch");
  switch (active_isa()) {
#if defined(PVRISK_SIMD_X86)
    case Isa::Avx2: return avx2::add_squared_diff(column.data(), q, acc.data(), column.size());
#endif
#if defined(PVRISK_SIMD_NEON)
    case Isa::Neon: return neon::add_squared_diff(column.data(), q, acc.data(), column.size());
#endif
    default: return scalar::add_squared_diff(column.data(), q, acc.data(), column.size());
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  switch (active_isa()) {
#if defined(PVRISK_SIMD_X86)
    case Isa::Avx2: return avx2::dot(a.data(), b.data(), a.size());
#endif
#if defined(PVRISK_SIMD_NEON)
    case Isa::Neon: return neon::dot(a.data(), b.data(), a.size());
#endif
    default: return scalar::dot(a.data(), b.data(), a.size());
  }
}

std::size_t argmin(std::span<const double> v) {
  switch (active_isa()) {
#if defined(PVRISK_SIMD_X86)
    case Isa::Avx2: return avx2::argmin(v.data(), v.size());
#endif
#if defined(PVRISK_SIMD_NEON)
    case Isa::Neon: return neon::argmin(v.data(), v.size());
#endif
    default: return scalar::argmin(v.data(), v.size());
  }
}

}  // namespace pvrisk::simd

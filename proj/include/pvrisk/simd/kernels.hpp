#pragma once

// Data-parallel inner loops shared by the GP kernel assembly, the conflict
// and closest-approach scans, and SMOTE neighbour search.
//
// Every kernel has a scalar reference in `scalar::`; vector variants live in
// `avx2::` / `neon::` and are selected once at runtime. `add_squared_diff`
// and `argmin` are bit-identical across variants (no fused multiply-add);
// `dot` differs only in summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace pvrisk::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

/// Best supported ISA, unless overridden by `force_isa` or the environment
/// variable PVRISK_ISA (scalar|avx2|neon).
Isa active_isa();

/// Pins the dispatch target; throws std::invalid_argument when unsupported.
void force_isa(Isa isa);

/// acc[i] += (column[i] - q)^2
void add_squared_diff(std::span<const double> column, double q, std::span<double> acc);

double dot(std::span<const double> a, std::span<const double> b);

/// Index of the first minimal element; 0 for an empty span.
std::size_t argmin(std::span<const double> v);

namespace scalar {
void add_squared_diff(const double* column, double q, double* acc, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
std::size_t argmin(const double* v, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
#define PVRISK_SIMD_X86 1
namespace avx2 {
void add_squared_diff(const double* column, double q, double* acc, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
std::size_t argmin(const double* v, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__) || defined(__ARM_NEON)
#define PVRISK_SIMD_NEON 1
namespace neon {
void add_squared_diff(const double* column, double q, double* acc, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
std::size_t argmin(const double* v, std::size_t n);
}  // namespace neon
#endif

}  // namespace pvrisk::simd

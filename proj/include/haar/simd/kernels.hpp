#pragma once
// Arithmetic inner loops shared by every module.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 (x86-64) or NEON (aarch64) variant. The variant is
// picked once at runtime from the CPU feature flags; setting the environment
// variable HAAR_SIMD=scalar forces the reference path. Every level reduces in
// a fixed order, so results are reproducible for a given level.

#include <cstddef>
#include <span>

namespace haar::simd {

enum class Level { Scalar, Avx2, Neon };

const char* level_name(Level level);

/// Level used by the dispatching entry points below.
Level active_level();

/// Best level this CPU and build can run.
Level detected_level();

/// Override the dispatch level (tests, benchmarks). Requesting a level the
/// CPU cannot run falls back to Scalar. Returns the level actually set.
Level force_level(Level level);

double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
void scale(std::span<double> a, double factor);

/// y = A x for a row-major rows x cols matrix.
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);

namespace scalar {
double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
void scale(std::span<double> a, double factor);
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define HAAR_SIMD_HAVE_AVX2 1
namespace avx2 {
double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
void scale(std::span<double> a, double factor);
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
}  // namespace avx2
#endif

#if defined(__aarch64__) || defined(__ARM_NEON)
#define HAAR_SIMD_HAVE_NEON 1
namespace neon {
double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
void scale(std::span<double> a, double factor);
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
}  // namespace neon
#endif

}  // namespace haar::simd

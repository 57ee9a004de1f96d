#include <atomic>
#include <cstdlib>
#include <string_view>

#include "haar/simd/kernels.hpp"

namespace haar::simd {
namespace {

struct Table {
  Level level;
  double (*sum)(std::span<const double>);
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*dot3)(std::span<const double>, std::span<const double>, std::span<const double>);
  double (*max_abs_diff)(std::span<const double>, std::span<const double>);
  void (*scale)(std::span<double>, double);
  void (*matvec)(std::span<const double>, std::size_t, std::size_t, std::span<const double>,
                 std::span<double>);
};

constexpr Table kScalar{Level::Scalar,        scalar::sum,   scalar::dot,   scalar::dot3,
                        scalar::max_abs_diff, scalar::scale, scalar::matvec};
#if defined(HAAR_SIMD_HAVE_AVX2)
constexpr Table kAvx2{Level::Avx2,        avx2::sum,   avx2::dot,   avx2::dot3,
                      avx2::max_abs_diff, avx2::scale, avx2::matvec};
#endif
#if defined(HAAR_SIMD_HAVE_NEON)
constexpr Table kNeon{Level::Neon,        neon::sum,   neon::dot,   neon::dot3,
                      neon::max_abs_diff, neon::scale, neon::matvec};
#endif

const Table* table_for(Level level) {
  switch (level) {
#if defined(HAAR_SIMD_HAVE_AVX2)
    case Level::Avx2:
      return &kAvx2;
#endif
#if defined(HAAR_SIMD_HAVE_NEON)
    case Level::Neon:
      return &kNeon;
#endif
    default:
      return &kScalar;
  }
}

bool cpu_supports(Level level) {
  switch (level) {
    case Level::Scalar:
      return true;
    case Level::Avx2:
#if defined(HAAR_SIMD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Level::Neon:
#if defined(HAAR_SIMD_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table* initial_table() {
  if (const char* env = std::getenv("HAAR_SIMD"); env && std::string_view(env) == "scalar") {
    return &kScalar;
  }
  return table_for(detected_level());
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{initial_table()};
  return table;
}

const Table& active() { return *current().load(std::memory_order_acquire); }

}  // namespace

const char* level_name(Level level) {
  switch (level) {
    case Level::Scalar:
      return "scalar";
    case Level::Avx2:
      return "avx2";
    case Level::Neon:
      return "neon";
  }
  return "unknown";
}

Level detected_level() {
  if (cpu_supports(Level::Avx2)) return Level::Avx2;
  if (cpu_supports(Level::Neon)) return Level::Neon;
  return Level::Scalar;
}

Level active_level() { return active().level; }

Level force_level(Level level) {
  if (!cpu_supports(level)) level = Level::Scalar;
  current().store(table_for(level), std::memory_order_release);
  return level;
}

double sum(std::span<const double> a) { return active().sum(a); }
double dot(std::span<const double> a, std::span<const double> b) { return active().dot(a, b); }
double dot3(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  return active().dot3(a, b, c);
}
double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().max_abs_diff(a, b);
}
void scale(std::span<double> a, double factor) { active().scale(a, factor); }
void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  active().matvec(a, rows, cols, x, y);
}

}  // namespace haar::simd

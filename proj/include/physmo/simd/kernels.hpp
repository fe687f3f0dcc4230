#pragma once

#include <cstddef>

namespace physmo::simd {

/// Flat-array kernels behind the hot loops: diffusion chain updates, MLP
/// matvecs, loss reductions, Monte-Carlo covariance accumulation. Scalar
/// reference implementations and AVX2 variants share this table; the active
/// table is picked once at startup from cpuid (override with PHYSMO_SIMD=
/// scalar|avx2).
struct Kernels {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  double (*sum_abs)(const double* a, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // out = alpha*x + beta*y
  void (*axpby)(double alpha, const double* x, double beta, const double* y, double* out,
                std::size_t n);
  // acc += alpha*x
  void (*axpy)(double alpha, const double* x, double* acc, std::size_t n);
  // acc += x .* y
  void (*mul_acc)(const double* x, const double* y, double* acc, std::size_t n);
  // y = A x, A row-major rows×cols
  void (*gemv)(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
  // y = A^T x, A row-major rows×cols, x has rows entries, y has cols entries
  void (*gemv_t)(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
};

const Kernels& scalar();
/// AVX2 table, or nullptr when unsupported by the CPU or the build.
const Kernels* avx2();
const Kernels& active();
const char* active_name();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double sum(const double* a, std::size_t n) { return active().sum(a, n); }
inline double sum_sq(const double* a, std::size_t n) { return active().sum_sq(a, n); }
inline double sum_abs(const double* a, std::size_t n) { return active().sum_abs(a, n); }
inline double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  return active().sum_sq_diff(a, b, n);
}
inline void axpby(double alpha, const double* x, double beta, const double* y, double* out,
                  std::size_t n) {
  active().axpby(alpha, x, beta, y, out, n);
}
inline void axpy(double alpha, const double* x, double* acc, std::size_t n) {
  active().axpy(alpha, x, acc, n);
}
inline void mul_acc(const double* x, const double* y, double* acc, std::size_t n) {
  active().mul_acc(x, y, acc, n);
}
inline void gemv(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  active().gemv(a, x, y, rows, cols);
}
inline void gemv_t(const double* a, const double* x, double* y, std::size_t rows,
                   std::size_t cols) {
  active().gemv_t(a, x, y, rows, cols);
}

}  // namespace physmo::simd

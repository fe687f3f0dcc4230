#include <cmath>
#include <cstddef>

#include "physmo/simd/kernels.hpp"

namespace physmo::simd {
namespace {

double dot_s(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_s(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

double sum_sq_s(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

double sum_abs_s(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i]);
  return s;
}

double sum_sq_diff_s(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpby_s(double alpha, const double* x, double beta, const double* y, double* out,
             std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void axpy_s(double alpha, const double* x, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += alpha * x[i];
}

void mul_acc_s(const double* x, const double* y, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * y[i];
}

void gemv_s(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_s(a + r * cols, x, cols);
}

void gemv_t_s(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_s(x[r], a + r * cols, y, cols);
}

}  // namespace

const Kernels& scalar() {
  static const Kernels k = {dot_s,    sum_s,     sum_sq_s, sum_abs_s, sum_sq_diff_s,
                            axpby_s,  axpy_s,    mul_acc_s, gemv_s,   gemv_t_s};
  return k;
}

}  // namespace physmo::simd

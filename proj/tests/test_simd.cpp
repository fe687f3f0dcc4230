#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "physmo/rng.hpp"
#include "physmo/simd/kernels.hpp"

using namespace physmo;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
  return v;
}

}  // namespace

TEST_CASE("scalar kernels: known values") {
  const double a[5] = {1, 2, 3, -4, 5};
  const double b[5] = {2, -1, 0.5, 1, 1};
  const auto& k = simd::scalar();
  CHECK(k.dot(a, b, 5) == doctest::Approx(2 - 2 + 1.5 - 4 + 5));
  CHECK(k.sum(a, 5) == doctest::Approx(7));
  CHECK(k.sum_sq(a, 5) == doctest::Approx(1 + 4 + 9 + 16 + 25));
  CHECK(k.sum_abs(a, 5) == doctest::Approx(15));
  CHECK(k.sum_sq_diff(a, b, 5) == doctest::Approx(1 + 9 + 6.25 + 25 + 16));

  double out[5];
  k.axpby(2.0, a, -1.0, b, out, 5);
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[3] == doctest::Approx(-9.0));

  double acc[5] = {0, 0, 0, 0, 0};
  k.axpy(3.0, a, acc, 5);
  CHECK(acc[4] == doctest::Approx(15.0));
  k.mul_acc(a, b, acc, 5);
  CHECK(acc[0] == doctest::Approx(3 + 2));

  // y = A x with A = [[1,2],[3,4],[5,6]]
  const double mat[6] = {1, 2, 3, 4, 5, 6};
  const double x[2] = {1, -1};
  double y[3];
  k.gemv(mat, x, y, 3, 2);
  CHECK(y[0] == doctest::Approx(-1));
  CHECK(y[1] == doctest::Approx(-1));
  CHECK(y[2] == doctest::Approx(-1));
  double yt[2];
  const double x3[3] = {1, 1, 1};
  k.gemv_t(mat, x3, yt, 3, 2);
  CHECK(yt[0] == doctest::Approx(9));
  CHECK(yt[1] == doctest::Approx(12));
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const simd::Kernels* vec = simd::avx2();
  if (!vec) {
    MESSAGE("avx2 unavailable; dispatch falls back to scalar");
    CHECK(std::string(simd::active_name()) == "scalar");
    return;
  }
  Rng rng(42);
  const auto& ref = simd::scalar();
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 17u, 64u, 129u, 1000u}) {
    auto a = random_vec(n, rng), b = random_vec(n, rng);
    const double tol = 1e-12 * static_cast<double>(n);
    CHECK(vec->dot(a.data(), b.data(), n) ==
          doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(tol));
    CHECK(vec->sum(a.data(), n) == doctest::Approx(ref.sum(a.data(), n)).epsilon(tol));
    CHECK(vec->sum_sq(a.data(), n) == doctest::Approx(ref.sum_sq(a.data(), n)).epsilon(tol));
    CHECK(vec->sum_abs(a.data(), n) == doctest::Approx(ref.sum_abs(a.data(), n)).epsilon(tol));
    CHECK(vec->sum_sq_diff(a.data(), b.data(), n) ==
          doctest::Approx(ref.sum_sq_diff(a.data(), b.data(), n)).epsilon(tol));

    std::vector<double> o1(n), o2(n);
    vec->axpby(1.7, a.data(), -0.3, b.data(), o1.data(), n);
    ref.axpby(1.7, a.data(), -0.3, b.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-14));

    std::vector<double> acc1(n, 0.5), acc2(n, 0.5);
    vec->axpy(2.5, a.data(), acc1.data(), n);
    ref.axpy(2.5, a.data(), acc2.data(), n);
    vec->mul_acc(a.data(), b.data(), acc1.data(), n);
    ref.mul_acc(a.data(), b.data(), acc2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(acc1[i] == doctest::Approx(acc2[i]).epsilon(1e-13));
  }

  // gemv with awkward shapes
  for (auto [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{
           {1, 1}, {3, 5}, {8, 8}, {13, 7}, {64, 33}}) {
    auto mat = random_vec(rows * cols, rng);
    auto x = random_vec(cols, rng), xr = random_vec(rows, rng);
    std::vector<double> y1(rows), y2(rows), z1(cols), z2(cols);
    vec->gemv(mat.data(), x.data(), y1.data(), rows, cols);
    ref.gemv(mat.data(), x.data(), y2.data(), rows, cols);
    vec->gemv_t(mat.data(), xr.data(), z1.data(), rows, cols);
    ref.gemv_t(mat.data(), xr.data(), z2.data(), rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < cols; ++i)
      CHECK(z1[i] == doctest::Approx(z2[i]).epsilon(1e-12));
  }
}

TEST_CASE("runtime dispatch selects a working table") {
  const auto& k = simd::active();
  const double a[3] = {1, 2, 2};
  CHECK(k.sum_sq(a, 3) == doctest::Approx(9.0));
  CHECK((std::string(simd::active_name()) == "avx2" ||
         std::string(simd::active_name()) == "scalar"));
}

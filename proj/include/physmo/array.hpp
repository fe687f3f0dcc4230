#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "physmo/errors.hpp"

namespace physmo {

/// Dense row-major rows×cols array of doubles. Used for flattened motion
/// sequences (T frames × dim coordinates) and anything else that wants a
/// contiguous buffer the SIMD kernels can chew on.
class MotionArray {
 public:
  MotionArray() = default;
  MotionArray(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double& operator()(std::size_t t, std::size_t j) { return v_[t * cols_ + j]; }
  double operator()(std::size_t t, std::size_t j) const { return v_[t * cols_ + j]; }

  double* row(std::size_t t) { return v_.data() + t * cols_; }
  const double* row(std::size_t t) const { return v_.data() + t * cols_; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  bool same_shape(const MotionArray& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void fill(double x) { v_.assign(v_.size(), x); }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> v_;
};

inline void require_same_shape(const MotionArray& a, const MotionArray& b, const char* where) {
  if (!a.same_shape(b)) throw ValidationError(std::string(where) + ": shape mismatch");
}

}  // namespace physmo

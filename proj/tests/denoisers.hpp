#pragma once

#include "physmo/denoiser.hpp"

namespace testutil {

using physmo::MotionArray;

/// x_hat := y
class IdentityToY : public physmo::nn::Denoiser {
 public:
  MotionArray predict(const MotionArray&, const MotionArray& y, int) const override { return y; }
  MotionArray features(const MotionArray& x_n, const MotionArray&, int) const override {
    return MotionArray(x_n.rows(), 1, 0.0);
  }
  std::size_t feature_dim() const override { return 1; }
};

/// x_hat := x_n
class IdentityToX : public physmo::nn::Denoiser {
 public:
  MotionArray predict(const MotionArray& x_n, const MotionArray&, int) const override {
    return x_n;
  }
  MotionArray features(const MotionArray& x_n, const MotionArray&, int) const override {
    return MotionArray(x_n.rows(), 1, 0.0);
  }
  std::size_t feature_dim() const override { return 1; }
};

/// x_hat := fixed target
class OracleDenoiser : public physmo::nn::Denoiser {
 public:
  explicit OracleDenoiser(MotionArray target) : target_(std::move(target)) {}
  MotionArray predict(const MotionArray&, const MotionArray&, int) const override {
    return target_;
  }
  MotionArray features(const MotionArray& x_n, const MotionArray&, int) const override {
    return MotionArray(x_n.rows(), 1, 0.0);
  }
  std::size_t feature_dim() const override { return 1; }

 private:
  MotionArray target_;
};

/// x_hat_j = w_j * x_j + b_j entrywise; keeps the chain moments diagonal so
/// the affine-Gaussian recursion stays exact.
class DiagLinearDenoiser : public physmo::nn::Denoiser {
 public:
  DiagLinearDenoiser(std::vector<double> w, std::vector<double> b)
      : w_(std::move(w)), b_(std::move(b)) {}
  MotionArray predict(const MotionArray& x_n, const MotionArray&, int) const override {
    MotionArray out(x_n.rows(), x_n.cols());
    for (std::size_t t = 0; t < x_n.rows(); ++t)
      for (std::size_t j = 0; j < x_n.cols(); ++j) out(t, j) = w_[j] * x_n(t, j) + b_[j];
    return out;
  }
  MotionArray features(const MotionArray& x_n, const MotionArray&, int) const override {
    return MotionArray(x_n.rows(), 1, 0.0);  // constant feature: gamma^2 = var_b
  }
  std::size_t feature_dim() const override { return 1; }

 private:
  std::vector<double> w_, b_;
};

}  // namespace testutil

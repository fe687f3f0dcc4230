#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "physmo/array.hpp"
#include "physmo/diffusion.hpp"
#include "physmo/rng.hpp"

namespace physmo::nn {

/// Clean-motion predictor f(x^n, y, n). Implementations must be deterministic
/// in their inputs; features() exposes the last-layer input per frame for the
/// Laplace posterior.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual MotionArray predict(const MotionArray& x_n, const MotionArray& y, int n) const = 0;
  virtual MotionArray features(const MotionArray& x_n, const MotionArray& y, int n) const = 0;
  virtual std::size_t feature_dim() const = 0;
};

struct MLPConfig {
  int dim = 0;
  int window = 2;                  // frames of context on each side
  std::vector<int> hidden = {64, 64};
  static constexpr int kStepEmbed = 8;

  int input_dim() const { return (2 * window + 1) * dim * 2 + kStepEmbed; }
};

/// Windowed per-frame MLP with tanh hidden layers and a linear head that adds
/// a residual correction to x^n. A zero-initialized head makes predict the
/// identity on x^n.
class MLPDenoiser : public Denoiser {
 public:
  explicit MLPDenoiser(MLPConfig cfg);

  void init_params(Rng& rng);  // Xavier hidden layers, zero head

  MotionArray predict(const MotionArray& x_n, const MotionArray& y, int n) const override;
  MotionArray features(const MotionArray& x_n, const MotionArray& y, int n) const override;
  std::size_t feature_dim() const override { return static_cast<std::size_t>(cfg_.hidden.back()); }

  /// Forward pass that keeps the activations needed by backward().
  const MotionArray& forward_cached(const MotionArray& x_n, const MotionArray& y, int n);
  /// Accumulates parameter gradients for upstream = dL/d(x_hat). Throws if no
  /// forward pass is cached.
  void backward(const MotionArray& upstream);

  void zero_grad();
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& grads() { return grads_; }
  const MLPConfig& config() const { return cfg_; }

  std::size_t param_count() const { return params_.size(); }
  /// [offset, rows, cols] triplets per weight matrix / bias, for gradient
  /// checking and serialization.
  struct LayerSpec {
    std::size_t offset;
    int rows, cols;  // cols == 0 marks a bias vector
  };
  const std::vector<LayerSpec>& layout() const { return layout_; }

 private:
  struct Trace;

  void forward_impl(const MotionArray& x_n, const MotionArray& y, int n, MotionArray* out,
                    MotionArray* feats, Trace* trace) const;

  MLPConfig cfg_;
  std::vector<double> params_, grads_;
  std::vector<LayerSpec> layout_;

  struct Trace {
    MotionArray input;                  // T × input_dim
    std::vector<MotionArray> act;      // post-tanh activations per hidden layer, T × H_i
  };
  std::optional<Trace> trace_;
  MotionArray cached_out_;
};

/// Diagonal Gaussian posterior over the last linear layer, precision =
/// prior_precision + Gauss-Newton diagonal accumulated over the data.
struct LaplacePosterior {
  Eigen::ArrayXXd var_w;  // dim × H
  Eigen::ArrayXd var_b;   // dim
};

/// Fits the diagonal posterior by accumulating squared last-layer features
/// over all sequences, diffusion steps n = 1..N and frames. Features are
/// evaluated at the marginal means x0 + eta_n (y - x0), keeping the fit
/// deterministic in the dataset.
LaplacePosterior fit_laplace(const Denoiser& denoiser,
                             const std::vector<std::pair<MotionArray, MotionArray>>& data,
                             const diff::ShiftSchedule& sched, double prior_precision);

/// (x_hat, gamma^2): predictive mean and per-entry variance
/// gamma^2_{t,j} = sum_k a_{t,k}^2 var_w(j,k) + var_b(j).
std::pair<MotionArray, MotionArray> predict_with_variance(const Denoiser& denoiser,
                                                          const LaplacePosterior& posterior,
                                                          const MotionArray& x_n,
                                                          const MotionArray& y, int n);

}  // namespace physmo::nn

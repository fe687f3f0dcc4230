#include "physmo/denoiser.hpp"

#include <algorithm>
#include <cmath>

#include "physmo/simd/kernels.hpp"

namespace physmo::nn {

namespace {

void step_embedding(int n, double* out) {
  double f = 1.0;
  for (int k = 0; k < MLPConfig::kStepEmbed / 2; ++k) {
    out[2 * k] = std::sin(n * f);
    out[2 * k + 1] = std::cos(n * f);
    f *= 0.5;
  }
}

}  // namespace

MLPDenoiser::MLPDenoiser(MLPConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.dim < 1) throw ValidationError("MLPDenoiser: dim must be positive");
  if (cfg_.window < 1) throw ValidationError("MLPDenoiser: window must be >= 1");
  if (cfg_.hidden.empty()) throw ValidationError("MLPDenoiser: need at least one hidden layer");

  std::size_t off = 0;
  int in = cfg_.input_dim();
  for (int h : cfg_.hidden) {
    layout_.push_back({off, h, in});
    off += static_cast<std::size_t>(h) * in;
    layout_.push_back({off, h, 0});
    off += h;
    in = h;
  }
  layout_.push_back({off, cfg_.dim, in});  // head weight
  off += static_cast<std::size_t>(cfg_.dim) * in;
  layout_.push_back({off, cfg_.dim, 0});   // head bias
  off += cfg_.dim;
  params_.assign(off, 0.0);
  grads_.assign(off, 0.0);
}

void MLPDenoiser::init_params(Rng& rng) {
  // Xavier-uniform hidden layers, zero head so the initial predictor is the
  // identity on x^n.
  const std::size_t n_layers = layout_.size() / 2;
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    const LayerSpec& w = layout_[2 * l];
    const double r = std::sqrt(6.0 / (w.rows + w.cols));
    for (int i = 0; i < w.rows * w.cols; ++i)
      params_[w.offset + i] = r * (2.0 * rng.uniform() - 1.0);
    const LayerSpec& b = layout_[2 * l + 1];
    for (int i = 0; i < b.rows; ++i) params_[b.offset + i] = 0.0;
  }
  const LayerSpec& hw = layout_[layout_.size() - 2];
  for (int i = 0; i < hw.rows * hw.cols; ++i) params_[hw.offset + i] = 0.0;
  const LayerSpec& hb = layout_.back();
  for (int i = 0; i < hb.rows; ++i) params_[hb.offset + i] = 0.0;
}

void MLPDenoiser::forward_impl(const MotionArray& x_n, const MotionArray& y, int n,
                               MotionArray* out, MotionArray* feats, Trace* trace) const {
  require_same_shape(x_n, y, "MLPDenoiser");
  if (static_cast<int>(x_n.cols()) != cfg_.dim)
    throw ValidationError("MLPDenoiser: input dim mismatch");
  const std::size_t t_count = x_n.rows();
  const int dim = cfg_.dim;
  const int w = cfg_.window;
  const int in_dim = cfg_.input_dim();

  MotionArray input(t_count, in_dim);
  for (std::size_t t = 0; t < t_count; ++t) {
    double* row = input.row(t);
    int at = 0;
    for (int o = -w; o <= w; ++o) {
      const std::size_t s =
          static_cast<std::size_t>(std::clamp<long>(static_cast<long>(t) + o, 0,
                                                    static_cast<long>(t_count) - 1));
      for (int j = 0; j < dim; ++j) row[at++] = x_n(s, j);
    }
    for (int o = -w; o <= w; ++o) {
      const std::size_t s =
          static_cast<std::size_t>(std::clamp<long>(static_cast<long>(t) + o, 0,
                                                    static_cast<long>(t_count) - 1));
      for (int j = 0; j < dim; ++j) row[at++] = y(s, j);
    }
    step_embedding(n, row + at);
  }

  const std::size_t n_hidden = cfg_.hidden.size();
  std::vector<MotionArray> act(n_hidden);
  const MotionArray* prev = &input;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    const LayerSpec& ws = layout_[2 * l];
    const LayerSpec& bs = layout_[2 * l + 1];
    act[l] = MotionArray(t_count, ws.rows);
    for (std::size_t t = 0; t < t_count; ++t) {
      double* z = act[l].row(t);
      simd::gemv(&params_[ws.offset], prev->row(t), z, ws.rows, ws.cols);
      for (int i = 0; i < ws.rows; ++i) z[i] = std::tanh(z[i] + params_[bs.offset + i]);
    }
    prev = &act[l];
  }

  if (feats) *feats = act.back();
  if (out) {
    const LayerSpec& hw = layout_[layout_.size() - 2];
    const LayerSpec& hb = layout_.back();
    *out = MotionArray(t_count, dim);
    std::vector<double> head(dim);
    for (std::size_t t = 0; t < t_count; ++t) {
      simd::gemv(&params_[hw.offset], act.back().row(t), head.data(), hw.rows, hw.cols);
      double* o = out->row(t);
      for (int j = 0; j < dim; ++j) o[j] = x_n(t, j) + head[j] + params_[hb.offset + j];
    }
  }
  if (trace) {
    trace->input = std::move(input);
    trace->act = std::move(act);
  }
}

MotionArray MLPDenoiser::predict(const MotionArray& x_n, const MotionArray& y, int n) const {
  MotionArray out;
  forward_impl(x_n, y, n, &out, nullptr, nullptr);
  return out;
}

MotionArray MLPDenoiser::features(const MotionArray& x_n, const MotionArray& y, int n) const {
  MotionArray f;
  forward_impl(x_n, y, n, nullptr, &f, nullptr);
  return f;
}

const MotionArray& MLPDenoiser::forward_cached(const MotionArray& x_n, const MotionArray& y,
                                               int n) {
  Trace tr;
  forward_impl(x_n, y, n, &cached_out_, nullptr, &tr);
  trace_ = std::move(tr);
  return cached_out_;
}

void MLPDenoiser::backward(const MotionArray& upstream) {
  if (!trace_) throw ValidationError("MLPDenoiser::backward: no cached forward pass");
  const Trace& tr = *trace_;
  const std::size_t t_count = tr.input.rows();
  require_same_shape(upstream, cached_out_, "MLPDenoiser::backward");

  const std::size_t n_hidden = cfg_.hidden.size();
  const LayerSpec& hw = layout_[layout_.size() - 2];
  const LayerSpec& hb = layout_.back();

  std::vector<double> delta, next_delta;
  for (std::size_t t = 0; t < t_count; ++t) {
    const double* up = upstream.row(t);
    const double* a_last = tr.act.back().row(t);
    // head: x_hat = x_n + Wh a + bh
    for (int j = 0; j < hw.rows; ++j) {
      simd::axpy(up[j], a_last, &grads_[hw.offset + static_cast<std::size_t>(j) * hw.cols],
                 hw.cols);
      grads_[hb.offset + j] += up[j];
    }
    delta.assign(hw.cols, 0.0);
    simd::gemv_t(&params_[hw.offset], up, delta.data(), hw.rows, hw.cols);

    for (std::size_t l = n_hidden; l-- > 0;) {
      const LayerSpec& ws = layout_[2 * l];
      const LayerSpec& bs = layout_[2 * l + 1];
      const double* a = tr.act[l].row(t);
      for (int i = 0; i < ws.rows; ++i) delta[i] *= 1.0 - a[i] * a[i];  // tanh'
      const double* in = l == 0 ? tr.input.row(t) : tr.act[l - 1].row(t);
      for (int i = 0; i < ws.rows; ++i) {
        simd::axpy(delta[i], in, &grads_[ws.offset + static_cast<std::size_t>(i) * ws.cols],
                   ws.cols);
        grads_[bs.offset + i] += delta[i];
      }
      if (l > 0) {
        next_delta.assign(ws.cols, 0.0);
        simd::gemv_t(&params_[ws.offset], delta.data(), next_delta.data(), ws.rows, ws.cols);
        delta.swap(next_delta);
      }
    }
  }
}

void MLPDenoiser::zero_grad() { grads_.assign(grads_.size(), 0.0); }

LaplacePosterior fit_laplace(const Denoiser& denoiser,
                             const std::vector<std::pair<MotionArray, MotionArray>>& data,
                             const diff::ShiftSchedule& sched, double prior_precision) {
  if (data.empty()) throw ValidationError("fit_laplace: empty dataset");
  if (!(prior_precision > 0.0)) throw ValidationError("fit_laplace: prior precision must be positive");
  const std::size_t h = denoiser.feature_dim();
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(h);
  std::size_t count = 0;
  for (const auto& [x_gt, y] : data) {
    require_same_shape(x_gt, y, "fit_laplace");
    for (int n = 1; n <= sched.steps(); ++n) {
      const double e = sched.eta(n);
      MotionArray x_n(x_gt.rows(), x_gt.cols());
      simd::axpby(1.0 - e, x_gt.data(), e, y.data(), x_n.data(), x_n.size());
      const MotionArray feats = denoiser.features(x_n, y, n);
      for (std::size_t t = 0; t < feats.rows(); ++t) {
        const double* a = feats.row(t);
        for (std::size_t k = 0; k < h; ++k) acc[k] += a[k] * a[k];
      }
      count += feats.rows();
    }
  }
  // output rows share the feature-driven precision
  const MotionArray probe = data.front().first;
  const std::size_t dim = probe.cols();
  LaplacePosterior post;
  post.var_w = Eigen::ArrayXXd(dim, h);
  for (std::size_t k = 0; k < h; ++k) post.var_w.col(k) = 1.0 / (prior_precision + acc[k]);
  post.var_b = Eigen::ArrayXd::Constant(dim, 1.0 / (prior_precision + static_cast<double>(count)));
  return post;
}

std::pair<MotionArray, MotionArray> predict_with_variance(const Denoiser& denoiser,
                                                          const LaplacePosterior& posterior,
                                                          const MotionArray& x_n,
                                                          const MotionArray& y, int n) {
  if (posterior.var_w.size() == 0) throw ValidationError("predict_with_variance: missing posterior");
  if (posterior.var_w.cols() != static_cast<Eigen::Index>(denoiser.feature_dim()))
    throw ValidationError("predict_with_variance: posterior/denoiser feature dim mismatch");
  MotionArray mean = denoiser.predict(x_n, y, n);
  const MotionArray feats = denoiser.features(x_n, y, n);
  const std::size_t t_count = x_n.rows(), dim = x_n.cols(), h = denoiser.feature_dim();
  if (posterior.var_w.rows() != static_cast<Eigen::Index>(dim))
    throw ValidationError("predict_with_variance: posterior dim mismatch");
  MotionArray gamma2(t_count, dim);
  Eigen::ArrayXd a2(h);
  for (std::size_t t = 0; t < t_count; ++t) {
    const double* a = feats.row(t);
    for (std::size_t k = 0; k < h; ++k) a2[k] = a[k] * a[k];
    for (std::size_t j = 0; j < dim; ++j)
      gamma2(t, j) = (posterior.var_w.row(j).transpose() * a2).sum() + posterior.var_b[j];
  }
  return {std::move(mean), std::move(gamma2)};
}

}  // namespace physmo::nn

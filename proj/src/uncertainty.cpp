#include "physmo/uncertainty.hpp"

#include <cmath>

#include "physmo/simd/kernels.hpp"

namespace physmo::uq {

MotionArray step_expectation(const MotionArray& mean_xn, const MotionArray& mean_xhat, int n,
                             const diff::ShiftSchedule& sched) {
  if (n < 1 || n > sched.steps()) throw ValidationError("step_expectation: step out of range");
  require_same_shape(mean_xn, mean_xhat, "step_expectation");
  MotionArray out(mean_xn.rows(), mean_xn.cols());
  simd::axpby(sched.a(n), mean_xn.data(), sched.b(n), mean_xhat.data(), out.data(), out.size());
  return out;
}

MotionArray step_variance(const MotionArray& var_xn, const MotionArray& var_xhat,
                          const MotionArray& cov, int n, const diff::ShiftSchedule& sched,
                          int* floor_count) {
  if (n < 1 || n > sched.steps()) throw ValidationError("step_variance: step out of range");
  require_same_shape(var_xn, var_xhat, "step_variance");
  require_same_shape(var_xn, cov, "step_variance");
  const double a = sched.a(n), b = sched.b(n), s = sched.sigma(n);
  MotionArray out(var_xn.rows(), var_xn.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = a * a * var_xn.data()[i] + b * b * var_xhat.data()[i] + s +
               2.0 * a * b * cov.data()[i];
    if (v < 0.0) {
      v = 0.0;
      if (floor_count) ++*floor_count;
    }
    out.data()[i] = v;
  }
  return out;
}

MotionArray mc_covariance(const std::vector<MotionArray>& samples_xn,
                          const std::vector<MotionArray>& samples_xhat,
                          const MotionArray& mean_xn) {
  const std::size_t s = samples_xn.size();
  if (s < 2) throw ValidationError("mc_covariance: need at least 2 samples");
  if (samples_xhat.size() != s) throw ValidationError("mc_covariance: sample count mismatch");
  MotionArray prod(mean_xn.rows(), mean_xn.cols(), 0.0);
  MotionArray mean_hat(mean_xn.rows(), mean_xn.cols(), 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    require_same_shape(samples_xn[i], mean_xn, "mc_covariance");
    require_same_shape(samples_xhat[i], mean_xn, "mc_covariance");
    simd::mul_acc(samples_xn[i].data(), samples_xhat[i].data(), prod.data(), prod.size());
    simd::axpy(1.0, samples_xhat[i].data(), mean_hat.data(), mean_hat.size());
  }
  const double inv = 1.0 / static_cast<double>(s);
  MotionArray out(mean_xn.rows(), mean_xn.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = inv * prod.data()[i] - mean_xn.data()[i] * inv * mean_hat.data()[i];
  return out;
}

VarianceReport propagate(const MotionArray& y, const nn::Denoiser& denoiser,
                         const nn::LaplacePosterior& posterior, const diff::ShiftSchedule& sched,
                         int s_samples, Rng& rng) {
  if (s_samples < 2) throw ValidationError("propagate: S must be >= 2");
  const std::size_t t_count = y.rows(), dim = y.cols();
  const int n_steps = sched.steps();

  VarianceReport rep;
  rep.floor_warnings = 0;

  // sampled starting point; the expectation recursion starts on it with zero
  // variance
  MotionArray chain = y;
  for (double* p = chain.data(); p != chain.data() + chain.size(); ++p)
    *p += sched.kappa() * rng.normal();

  MotionArray mean = chain;
  MotionArray var(t_count, dim, 0.0);
  MotionArray cov(t_count, dim, 0.0);

  // x_hat moments at step N: the state is known, so the only spread is the
  // posterior's
  auto [mu_n, g2_n] = nn::predict_with_variance(denoiser, posterior, chain, y, n_steps);
  MotionArray mean_xhat = std::move(mu_n);
  MotionArray var_xhat = std::move(g2_n);

  for (int n = n_steps; n >= 1; --n) {
    // advance the sampled chain
    auto [mu_chain, g2_chain] = nn::predict_with_variance(denoiser, posterior, chain, y, n);
    for (std::size_t i = 0; i < mu_chain.size(); ++i)
      mu_chain.data()[i] += std::sqrt(g2_chain.data()[i]) * rng.normal();
    diff::MotionState st{std::move(chain), n};
    chain = diff::reverse_step(st, mu_chain, sched, rng).values;

    // advance the moments
    mean = step_expectation(mean, mean_xhat, n, sched);
    var = step_variance(var, var_xhat, cov, n, sched, &rep.floor_warnings);

    if (n > 1) {
      // S auxiliary samples of N(E, Var) feed the covariance and x_hat
      // moments for the next step
      std::vector<MotionArray> xs(s_samples), xh(s_samples);
      MotionArray g2_acc(t_count, dim, 0.0);
      for (int i = 0; i < s_samples; ++i) {
        xs[i] = mean;
        for (std::size_t e = 0; e < xs[i].size(); ++e)
          xs[i].data()[e] += std::sqrt(var.data()[e]) * rng.normal();
        auto [mu_i, g2_i] = nn::predict_with_variance(denoiser, posterior, xs[i], y, n - 1);
        xh[i] = std::move(mu_i);
        simd::axpy(1.0, g2_i.data(), g2_acc.data(), g2_acc.size());
      }
      cov = mc_covariance(xs, xh, mean);
      // E[x_hat] and total Var(x_hat) from the same samples
      mean_xhat.fill(0.0);
      for (int i = 0; i < s_samples; ++i)
        simd::axpy(1.0 / s_samples, xh[i].data(), mean_xhat.data(), mean_xhat.size());
      for (std::size_t e = 0; e < var_xhat.size(); ++e) {
        double acc = 0.0;
        for (int i = 0; i < s_samples; ++i) {
          const double d = xh[i].data()[e] - mean_xhat.data()[e];
          acc += d * d;
        }
        var_xhat.data()[e] = acc / (s_samples - 1) + g2_acc.data()[e] / s_samples;
      }
    }
  }

  rep.refined = std::move(chain);
  rep.mean0 = std::move(mean);
  rep.var0 = std::move(var);
  return rep;
}

MotionArray force_variance(const kin::KinematicTree& tree, const dyn::RigidBodySet& bodies,
                           const MotionArray& mean0_raw, const MotionArray& var0_raw, double dt,
                           const Eigen::Vector3d& gravity) {
  require_same_shape(mean0_raw, var0_raw, "force_variance");
  const std::size_t t_count = mean0_raw.rows(), dim = mean0_raw.cols();
  for (std::size_t i = 0; i < var0_raw.size(); ++i)
    if (var0_raw.data()[i] < 0.0) throw ValidationError("force_variance: negative input variance");

  MotionArray u = kin::unwrap_rotations(mean0_raw);
  MotionArray out(t_count, dim, 0.0);
  for (std::size_t s = 0; s < t_count; ++s) {
    const auto rows = dyn::fd_affected_frames(static_cast<int>(s), static_cast<int>(t_count));
    for (std::size_t k = 0; k < dim; ++k) {
      const double v = var0_raw(s, k);
      if (v == 0.0) continue;
      const double x = u(s, k);
      const double h = 1e-5 * (1.0 + std::fabs(x));
      if (!(h > 0.0)) throw NumericalError("force_variance: finite-difference step underflow");
      u(s, k) = x + h;
      const MotionArray fp = dyn::pseudoforce_rows(tree, bodies, u, dt, rows, gravity);
      u(s, k) = x - h;
      const MotionArray fm = dyn::pseudoforce_rows(tree, bodies, u, dt, rows, gravity);
      u(s, k) = x;
      for (std::size_t ri = 0; ri < rows.size(); ++ri) {
        const std::size_t t = static_cast<std::size_t>(rows[ri]);
        for (std::size_t j = 0; j < dim; ++j) {
          const double jac = (fp(ri, j) - fm(ri, j)) / (2.0 * h);
          out(t, j) += jac * jac * v;
        }
      }
    }
  }
  return out;
}

MotionArray variance_maps(const MotionArray& var_force) {
  const std::size_t t_count = var_force.rows(), dim = var_force.cols();
  if (dim < 6 || (dim - 6) % 3 != 0) throw ValidationError("variance_maps: bad dim");
  for (std::size_t i = 0; i < var_force.size(); ++i)
    if (var_force.data()[i] < 0.0) throw ValidationError("variance_maps: negative input");
  const std::size_t n_joints = (dim - 6) / 3 + 1;
  MotionArray map(t_count, n_joints, 0.0);
  double peak = 0.0;
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t j = 0; j < dim; ++j) {
      const std::size_t joint = j < 6 ? 0 : 1 + (j - 6) / 3;
      map(t, joint) += var_force(t, j);
    }
    for (std::size_t j = 0; j < n_joints; ++j) peak = std::max(peak, map(t, j));
  }
  if (peak > 0.0)
    for (std::size_t i = 0; i < map.size(); ++i) map.data()[i] /= peak;
  return map;
}

MotionArray vertex_variance_map(const MotionArray& joint_map, const inertia::PartWeights& weights) {
  if (weights.part_count() != joint_map.cols())
    throw ValidationError("vertex_variance_map: part count mismatch");
  const std::size_t t_count = joint_map.rows(), n_verts = weights.vertex_count();
  MotionArray out(t_count, n_verts, 0.0);
  const Eigen::MatrixXd& w = weights.matrix();
  for (std::size_t t = 0; t < t_count; ++t)
    for (std::size_t v = 0; v < n_verts; ++v) {
      double s = 0.0;
      for (std::size_t j = 0; j < joint_map.cols(); ++j) s += w(v, j) * joint_map(t, j);
      out(t, v) = s;
    }
  return out;
}

VarianceReport refine_with_variance(const kin::KinematicTree& tree, const dyn::RigidBodySet& bodies,
                                    const MotionArray& y_raw, const nn::Denoiser& denoiser,
                                    const nn::LaplacePosterior& posterior,
                                    const diff::ShiftSchedule& sched,
                                    const train::Normalization& norm, int s_samples, double dt,
                                    Rng& rng, const Eigen::Vector3d& gravity) {
  kin::check_dim(tree, y_raw.cols(), "refine_with_variance");
  const MotionArray y_n = norm.normalize(y_raw);
  VarianceReport rep = propagate(y_n, denoiser, posterior, sched, s_samples, rng);
  rep.refined = norm.denormalize(rep.refined);
  rep.mean0 = norm.denormalize(rep.mean0);
  MotionArray var_raw(rep.var0.rows(), rep.var0.cols());
  for (std::size_t t = 0; t < var_raw.rows(); ++t)
    for (std::size_t j = 0; j < var_raw.cols(); ++j)
      var_raw(t, j) = rep.var0(t, j) * norm.stddev[j] * norm.stddev[j];
  rep.var0 = std::move(var_raw);
  rep.force_var = force_variance(tree, bodies, rep.mean0, rep.var0, dt, gravity);
  rep.joint_map = variance_maps(rep.force_var);
  return rep;
}

}  // namespace physmo::uq

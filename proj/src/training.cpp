#include "physmo/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "physmo/simd/kernels.hpp"

namespace physmo::train {

using Eigen::Vector3d;
using Eigen::VectorXd;

Normalization Normalization::fit(const std::vector<SequenceSample>& data) {
  if (data.empty()) throw ValidationError("Normalization: empty dataset");
  const std::size_t dim = data.front().x_gt.cols();
  Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(dim), sq = Eigen::ArrayXd::Zero(dim);
  std::size_t count = 0;
  for (const auto& s : data) {
    for (std::size_t t = 0; t < s.x_gt.rows(); ++t) {
      for (std::size_t j = 0; j < dim; ++j) {
        mean[j] += s.x_gt(t, j);
        sq[j] += s.x_gt(t, j) * s.x_gt(t, j);
      }
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  Normalization n;
  n.mean = mean;
  n.stddev = (sq / static_cast<double>(count) - mean.square()).max(0.0).sqrt().max(1e-6);
  return n;
}

Normalization Normalization::identity(std::size_t dim) {
  Normalization n;
  n.mean = Eigen::ArrayXd::Zero(dim);
  n.stddev = Eigen::ArrayXd::Ones(dim);
  return n;
}

MotionArray Normalization::normalize(const MotionArray& raw) const {
  if (raw.cols() != static_cast<std::size_t>(mean.size()))
    throw ValidationError("Normalization: dim mismatch");
  MotionArray out(raw.rows(), raw.cols());
  for (std::size_t t = 0; t < raw.rows(); ++t)
    for (std::size_t j = 0; j < raw.cols(); ++j) out(t, j) = (raw(t, j) - mean[j]) / stddev[j];
  return out;
}

MotionArray Normalization::denormalize(const MotionArray& normed) const {
  if (normed.cols() != static_cast<std::size_t>(mean.size()))
    throw ValidationError("Normalization: dim mismatch");
  MotionArray out(normed.rows(), normed.cols());
  for (std::size_t t = 0; t < normed.rows(); ++t)
    for (std::size_t j = 0; j < normed.cols(); ++j) out(t, j) = normed(t, j) * stddev[j] + mean[j];
  return out;
}

double loss_data(const MotionArray& x_gt, const MotionArray& x_hat) {
  require_same_shape(x_gt, x_hat, "loss_data");
  return simd::sum_sq_diff(x_gt.data(), x_hat.data(), x_gt.size()) /
         static_cast<double>(x_gt.size());
}

namespace {

std::vector<std::vector<Vector3d>> all_joint_positions(const KinematicTree& tree,
                                                       const MotionArray& x) {
  std::vector<std::vector<Vector3d>> pts(x.rows());
  VectorXd q(x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t) {
    for (std::size_t j = 0; j < x.cols(); ++j) q[j] = x(t, j);
    pts[t] = kin::joint_positions(tree, q);
  }
  return pts;
}

double geo_loss_from_points(const std::vector<std::vector<Vector3d>>& pred,
                            const std::vector<std::vector<Vector3d>>& gt) {
  const std::size_t t_count = pred.size();
  const std::size_t n_joints = pred.front().size();
  double pos = 0.0, vel = 0.0;
  for (std::size_t t = 0; t < t_count; ++t)
    for (std::size_t j = 0; j < n_joints; ++j) pos += (pred[t][j] - gt[t][j]).squaredNorm();
  for (std::size_t t = 0; t + 1 < t_count; ++t)
    for (std::size_t j = 0; j < n_joints; ++j) {
      const Vector3d dv = (pred[t + 1][j] - pred[t][j]) - (gt[t + 1][j] - gt[t][j]);
      vel += dv.squaredNorm();
    }
  pos /= static_cast<double>(t_count * n_joints);
  if (t_count > 1) vel /= static_cast<double>((t_count - 1) * n_joints);
  return pos + vel;
}

}  // namespace

double loss_geometric(const KinematicTree& tree, const MotionArray& x_gt,
                      const MotionArray& x_hat) {
  require_same_shape(x_gt, x_hat, "loss_geometric");
  return geo_loss_from_points(all_joint_positions(tree, x_hat), all_joint_positions(tree, x_gt));
}

double loss_el(const KinematicTree& tree, const RigidBodySet& bodies, double dt,
               const MotionArray& x0_raw, const MotionArray& pseudoforce, double sigma_n) {
  if (!(sigma_n > 0.0)) throw ValidationError("loss_el: sigma_n must be positive after flooring");
  const Trajectory traj{x0_raw, dt};
  const MotionArray z = dyn::el_residual(tree, bodies, traj, pseudoforce);
  return simd::sum_sq(z.data(), z.size()) / (2.0 * sigma_n);
}

double total_loss(double l_data, double l_geo, double l_el, const TrainConfig& cfg) {
  return cfg.lambda1 * (l_data + l_geo) + cfg.lambda2 * l_el;
}

namespace {

// dL_geo/dx_hat by central differences; perturbing frame t only moves that
// frame's joint positions, so the stencil is local.
MotionArray geometric_gradient(const KinematicTree& tree, const MotionArray& x_gt,
                               const MotionArray& x_hat) {
  const std::size_t t_count = x_hat.rows(), dim = x_hat.cols();
  const auto gt_pts = all_joint_positions(tree, x_gt);
  auto pred_pts = all_joint_positions(tree, x_hat);
  const std::size_t n_joints = gt_pts.front().size();
  const double pos_w = 1.0 / static_cast<double>(t_count * n_joints);
  const double vel_w = t_count > 1 ? 1.0 / static_cast<double>((t_count - 1) * n_joints) : 0.0;

  auto local_terms = [&](std::size_t t, const std::vector<Vector3d>& pt) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_joints; ++j) s += pos_w * (pt[j] - gt_pts[t][j]).squaredNorm();
    if (t > 0)
      for (std::size_t j = 0; j < n_joints; ++j) {
        const Vector3d dv = (pt[j] - pred_pts[t - 1][j]) - (gt_pts[t][j] - gt_pts[t - 1][j]);
        s += vel_w * dv.squaredNorm();
      }
    if (t + 1 < t_count)
      for (std::size_t j = 0; j < n_joints; ++j) {
        const Vector3d dv = (pred_pts[t + 1][j] - pt[j]) - (gt_pts[t + 1][j] - gt_pts[t][j]);
        s += vel_w * dv.squaredNorm();
      }
    return s;
  };

  MotionArray grad(t_count, dim);
  VectorXd q(dim);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t j = 0; j < dim; ++j) q[j] = x_hat(t, j);
    for (std::size_t j = 0; j < dim; ++j) {
      const double x = q[j];
      const double h = 1e-6 * (1.0 + std::fabs(x));
      q[j] = x + h;
      const double lp = local_terms(t, kin::joint_positions(tree, q));
      q[j] = x - h;
      const double lm = local_terms(t, kin::joint_positions(tree, q));
      q[j] = x;
      grad(t, j) = (lp - lm) / (2.0 * h);
    }
  }
  return grad;
}

struct Adam {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

void scale_and_clip(std::vector<double>& g, double scale, double clip) {
  for (double& x : g) x *= scale;
  if (clip > 0.0) {
    const double norm = std::sqrt(simd::sum_sq(g.data(), g.size()));
    if (norm > clip) {
      const double f = clip / norm;
      for (double& x : g) x *= f;
    }
  }
}

}  // namespace

TrainResult train(nn::MLPDenoiser& net, const std::vector<SequenceSample>& data,
                  const diff::ShiftSchedule& sched, const KinematicTree& tree,
                  const RigidBodySet& bodies, const TrainConfig& cfg, Rng& rng,
                  const Eigen::Vector3d& gravity, const Normalization* fixed_norm) {
  if (data.empty()) throw ValidationError("train: empty dataset");
  bodies.validate(tree);

  TrainResult result;
  result.norm = fixed_norm ? *fixed_norm : Normalization::fit(data);
  const Normalization& norm = result.norm;
  const std::size_t t_dim = data.front().x_gt.size();

  std::vector<MotionArray> gt_n(data.size()), y_n(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    gt_n[i] = norm.normalize(data[i].x_gt);
    y_n[i] = norm.normalize(data[i].y);
  }

  Adam adam(net.param_count());
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.decay, epoch / cfg.decay_interval);
    // Fisher-Yates with the run rng
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);

    EpochStats stats{epoch, 0.0, 0.0, 0.0, 0.0};
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch, order.size() - done);
      net.zero_grad();
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t i = order[done + b];
        const SequenceSample& seq = data[i];
        const int n = rng.uniform_int(1, sched.steps());

        // data + geometric supervision at a marginal-sampled step
        const diff::MotionState x_n = diff::forward_marginal_sample(gt_n[i], y_n[i], n, sched, rng);
        const MotionArray& x_hat = net.forward_cached(x_n.values, y_n[i], n);
        const double l_data = loss_data(gt_n[i], x_hat);
        const MotionArray x_hat_raw = norm.denormalize(x_hat);
        const double l_geo = loss_geometric(tree, seq.x_gt, x_hat_raw);

        MotionArray upstream(x_hat.rows(), x_hat.cols());
        const double dscale = 2.0 / static_cast<double>(t_dim);
        const MotionArray geo_grad = geometric_gradient(tree, seq.x_gt, x_hat_raw);
        for (std::size_t t = 0; t < upstream.rows(); ++t)
          for (std::size_t j = 0; j < upstream.cols(); ++j)
            upstream(t, j) = cfg.lambda1 * (dscale * (x_hat(t, j) - gt_n[i](t, j)) +
                                            geo_grad(t, j) * norm.stddev[j]);
        net.backward(upstream);

        // physics loss on the reverse-sampled x0 (gradient through the final
        // prediction only)
        diff::MotionState state{y_n[i], sched.steps()};
        for (double* p = state.values.data(); p != state.values.data() + state.values.size(); ++p)
          *p += sched.kappa() * rng.normal();
        for (int m = sched.steps(); m >= 2; --m) {
          const MotionArray xh = net.predict(state.values, y_n[i], m);
          state = diff::reverse_step(state, xh, sched, rng);
        }
        const MotionArray& xh1 = net.forward_cached(state.values, y_n[i], 1);
        MotionArray x0(xh1.rows(), xh1.cols());
        simd::axpby(sched.a(1), state.values.data(), sched.b(1), xh1.data(), x0.data(), x0.size());

        const MotionArray x0_raw = norm.denormalize(x0);
        const double sigma_n = std::max(sched.sigma(n) / cfg.c, cfg.sigma_floor);
        const double l_el = loss_el(tree, bodies, seq.dt, x0_raw, seq.pseudoforce_gt, sigma_n);
        const MotionArray el_grad = dyn::el_squared_gradient(tree, bodies, {x0_raw, seq.dt},
                                                             seq.pseudoforce_gt, gravity);
        MotionArray upstream_el(x0.rows(), x0.cols());
        const double w_el = cfg.lambda2 * sched.b(1) / (2.0 * sigma_n);
        for (std::size_t t = 0; t < x0.rows(); ++t)
          for (std::size_t j = 0; j < x0.cols(); ++j)
            upstream_el(t, j) = w_el * el_grad(t, j) * norm.stddev[j];
        net.backward(upstream_el);

        stats.l_data += l_data;
        stats.l_geo += l_geo;
        stats.l_el += l_el;
      }
      scale_and_clip(net.grads(), 1.0 / static_cast<double>(bsz), cfg.grad_clip);
      adam.step(net.params(), net.grads(), lr);
      done += bsz;
    }
    const double inv = 1.0 / static_cast<double>(order.size());
    stats.l_data *= inv;
    stats.l_geo *= inv;
    stats.l_el *= inv;
    stats.total = total_loss(stats.l_data, stats.l_geo, stats.l_el, cfg);
    if (!std::isfinite(stats.total)) throw NumericalError("train: loss diverged");
    result.curve.push_back(stats);
  }
  return result;
}

namespace {

bool rotations_in_range(const MotionArray& q, double limit) {
  for (std::size_t t = 0; t < q.rows(); ++t)
    for (std::size_t j = 0; j < q.cols(); ++j)
      if (kin::is_rotation_coord(j) && std::fabs(q(t, j)) > limit) return false;
  return true;
}

}  // namespace

std::vector<SequenceSample> synth_dataset(const KinematicTree& tree, const RigidBodySet& bodies,
                                          int count, int t_len, double dt,
                                          const CorruptionConfig& corruption, Rng& rng,
                                          const Eigen::Vector3d& gravity) {
  if (t_len < 3) throw ValidationError("synth_dataset: T must be >= 3");
  bodies.validate(tree);
  const std::size_t dim = tree.dof();

  std::vector<SequenceSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng seq_rng = rng.split(static_cast<std::uint64_t>(i));
    MotionArray gt;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      Rng r = seq_rng.split(1000 + attempt);
      VectorXd q0(dim), v0(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        const bool rot = kin::is_rotation_coord(j);
        q0[j] = (rot ? 0.3 : 0.05) * (2.0 * r.uniform() - 1.0);
        v0[j] = (rot ? 0.3 : 0.05) * (2.0 * r.uniform() - 1.0);
      }
      // band-limited excitation scaled by the inertia diagonal
      const VectorXd mdiag = dyn::mass_matrix(tree, bodies, q0).diagonal();
      std::vector<double> amp(dim), freq(dim), phase(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        amp[j] = mdiag[j] * 4.0 * r.uniform();
        freq[j] = 0.3 + 0.9 * r.uniform();
        phase[j] = 6.283185307179586 * r.uniform();
      }
      const double damp = 2.0;
      auto torque = [&](double t, const VectorXd& q, const VectorXd& v) {
        VectorXd tau = dyn::inverse_dynamics(tree, bodies, q, VectorXd::Zero(dim),
                                             VectorXd::Zero(dim), gravity);
        for (std::size_t j = 0; j < dim; ++j)
          tau[j] += amp[j] * std::sin(6.283185307179586 * freq[j] * t + phase[j]) -
                    damp * mdiag[j] * v[j];
        return tau;
      };
      try {
        const auto res = dyn::integrate_symplectic(tree, bodies, q0, v0, torque, gravity,
                                                   static_cast<std::size_t>(t_len), dt, 10);
        if (rotations_in_range(res.q, 2.5)) {
          gt = res.q;
          ok = true;
        }
      } catch (const NumericalError&) {
        // resample torques
      }
    }
    if (!ok) throw NumericalError("synth_dataset: integration kept blowing up");

    SequenceSample s;
    s.dt = dt;
    s.x_gt = gt;
    s.y = gt;
    Rng crng = seq_rng.split(2);
    if (corruption.jitter_std > 0.0)
      for (double* p = s.y.data(); p != s.y.data() + s.y.size(); ++p)
        *p += corruption.jitter_std * crng.normal();
    auto mark = [&](int start, int len) {
      for (int t = start; t < start + len && t < t_len; ++t) s.corrupt_frames.push_back(t);
    };
    for (int bwin = 0; bwin < corruption.bias_windows && corruption.bias_std > 0.0; ++bwin) {
      const int len = std::min(corruption.bias_window_len, t_len);
      const int start = crng.uniform_int(0, t_len - len);
      std::vector<double> offset(dim);
      for (std::size_t j = 0; j < dim; ++j) offset[j] = corruption.bias_std * crng.normal();
      for (int t = start; t < start + len; ++t)
        for (std::size_t j = 0; j < dim; ++j) s.y(t, j) += offset[j];
      mark(start, len);
    }
    for (int jwin = 0; jwin < corruption.jump_windows; ++jwin) {
      const int len = std::min(corruption.jump_window_len, t_len - 1);
      if (len <= 0) break;
      const int start = crng.uniform_int(1, t_len - len);
      for (int t = start; t < start + len; ++t)
        for (std::size_t j = 0; j < dim; ++j) s.y(t, j) = s.y(start - 1, j);
      mark(start, len);
    }
    std::sort(s.corrupt_frames.begin(), s.corrupt_frames.end());
    s.corrupt_frames.erase(std::unique(s.corrupt_frames.begin(), s.corrupt_frames.end()),
                           s.corrupt_frames.end());
    s.pseudoforce_gt = dyn::pseudoforce(tree, bodies, {s.x_gt, dt}, gravity);
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<KinematicTree, RigidBodySet> default_body(double density) {
  using inertia::make_box;
  std::vector<kin::Link> links(5);
  links[0] = {-1, Vector3d::Zero()};
  links[1] = {0, Vector3d(0.045, 0.015, 0.0)};
  links[2] = {1, Vector3d(0.04, 0.0, 0.0)};
  links[3] = {0, Vector3d(0.045, -0.015, 0.0)};
  links[4] = {3, Vector3d(0.04, 0.0, 0.0)};
  KinematicTree tree(std::move(links));

  RigidBodySet bodies;
  bodies.bodies.push_back(
      inertia::mesh_mass_properties(make_box({0.07, 0.04, 0.02}, {0.01, 0.0, 0.0}), density));
  const Vector3d seg_ext(0.035, 0.012, 0.012);
  const Vector3d seg_ctr(0.0175, 0.0, 0.0);
  for (int i = 0; i < 4; ++i)
    bodies.bodies.push_back(inertia::mesh_mass_properties(make_box(seg_ext, seg_ctr), density));
  return {std::move(tree), std::move(bodies)};
}

}  // namespace physmo::train

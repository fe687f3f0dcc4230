#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "physmo/training.hpp"

using namespace physmo;
using train::CorruptionConfig;
using train::SequenceSample;
using train::TrainConfig;

namespace {

MotionArray random_array(std::size_t t, std::size_t d, Rng& rng, double scale = 1.0) {
  MotionArray a(t, d);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
  return a;
}

}  // namespace

TEST_CASE("loss_data: zero, constant offset, direct sum") {
  Rng rng(1);
  const MotionArray a = random_array(4, 6, rng);
  CHECK(train::loss_data(a, a) == 0.0);

  MotionArray b = a;
  for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] += 0.37;
  CHECK(train::loss_data(a, b) == doctest::Approx(0.37 * 0.37).epsilon(1e-12));

  const MotionArray c = random_array(4, 6, rng);
  double direct = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - c.data()[i];
    direct += d * d;
  }
  CHECK(train::loss_data(a, c) == doctest::Approx(direct / a.size()).epsilon(1e-14));
  CHECK_THROWS_AS(train::loss_data(a, MotionArray(3, 6, 0.0)), ValidationError);
}

TEST_CASE("loss_geometric: zero, rigid offset decomposition, recomputation oracle") {
  auto [tree, bodies] = train::default_body();
  Rng rng(3);
  MotionArray gt(5, tree.dof());
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t j = 0; j < tree.dof(); ++j)
      gt(t, j) = 0.2 * std::sin(0.4 * t + 0.7 * j);

  CHECK(train::loss_geometric(tree, gt, gt) == 0.0);

  SUBCASE("global translation: position term only") {
    MotionArray moved = gt;
    for (std::size_t t = 0; t < 5; ++t) moved(t, 3) += 0.01;  // root x
    const double l = train::loss_geometric(tree, gt, moved);
    CHECK(l == doctest::Approx(1e-4).epsilon(1e-9));
  }

  SUBCASE("random pair matches recomputation from joint_positions") {
    const MotionArray pred = random_array(5, tree.dof(), rng, 0.3);
    const double l = train::loss_geometric(tree, gt, pred);

    double pos = 0.0, vel = 0.0;
    const std::size_t nj = tree.link_count();
    std::vector<std::vector<Eigen::Vector3d>> pp(5), gp(5);
    for (std::size_t t = 0; t < 5; ++t) {
      Eigen::VectorXd qp(tree.dof()), qg(tree.dof());
      for (std::size_t j = 0; j < tree.dof(); ++j) {
        qp[j] = pred(t, j);
        qg[j] = gt(t, j);
      }
      pp[t] = kin::joint_positions(tree, qp);
      gp[t] = kin::joint_positions(tree, qg);
    }
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t j = 0; j < nj; ++j) pos += (pp[t][j] - gp[t][j]).squaredNorm();
    for (std::size_t t = 0; t + 1 < 5; ++t)
      for (std::size_t j = 0; j < nj; ++j)
        vel += ((pp[t + 1][j] - pp[t][j]) - (gp[t + 1][j] - gp[t][j])).squaredNorm();
    const double expect = pos / (5.0 * nj) + vel / (4.0 * nj);
    CHECK(l == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("loss_el: zero at ground truth, scales with 1/sigma, matches recomputation") {
  auto [tree, bodies] = train::default_body();
  Rng rng(5);
  const auto data = train::synth_dataset(tree, bodies, 1, 8, 1.0 / 30.0, CorruptionConfig{}, rng);
  const SequenceSample& s = data[0];

  CHECK(train::loss_el(tree, bodies, s.dt, s.x_gt, s.pseudoforce_gt, 1e-3) == 0.0);

  MotionArray x = s.x_gt;
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += 0.01 * rng.normal();
  const double l1 = train::loss_el(tree, bodies, s.dt, x, s.pseudoforce_gt, 2e-3);
  const double l2 = train::loss_el(tree, bodies, s.dt, x, s.pseudoforce_gt, 1e-3);
  CHECK(l2 == doctest::Approx(2.0 * l1).epsilon(1e-12));

  const MotionArray z = dyn::el_residual(tree, bodies, {x, s.dt}, s.pseudoforce_gt);
  double sq = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sq += z.data()[i] * z.data()[i];
  CHECK(l2 == doctest::Approx(sq / (2.0 * 1e-3)).epsilon(1e-12));

  CHECK_THROWS_AS(train::loss_el(tree, bodies, s.dt, x, s.pseudoforce_gt, 0.0), ValidationError);
}

TEST_CASE("total_loss: weighting structure and paper defaults") {
  TrainConfig cfg;
  CHECK(cfg.lambda1 == 2e3);
  CHECK(cfg.lambda2 == 500.0);
  CHECK(cfg.c == 10.0);
  CHECK(train::total_loss(1.0, 1.0, 1.0, cfg) == doctest::Approx(2e3 * 2.0 + 500.0));
  cfg.lambda2 = 0.0;
  CHECK(train::total_loss(0.3, 0.2, 123.0, cfg) == doctest::Approx(2e3 * 0.5));
}

TEST_CASE("synth_dataset: zero corruption copies gt; folded-mean jitter; determinism") {
  auto [tree, bodies] = train::default_body();

  SUBCASE("all-zero corruption") {
    CorruptionConfig c;
    c.jitter_std = 0.0;
    c.bias_std = 0.0;
    c.bias_windows = 0;
    c.jump_windows = 0;
    Rng rng(7);
    const auto data = train::synth_dataset(tree, bodies, 2, 10, 1.0 / 30.0, c, rng);
    for (const auto& s : data) {
      REQUIRE(s.x_gt.rows() == 10);
      for (std::size_t i = 0; i < s.x_gt.size(); ++i)
        CHECK(s.y.data()[i] == s.x_gt.data()[i]);
      CHECK(s.corrupt_frames.empty());
    }
  }

  SUBCASE("jitter-only mean absolute deviation approx sigma*sqrt(2/pi)") {
    CorruptionConfig c;
    c.jitter_std = 0.05;
    c.bias_std = 0.0;
    c.bias_windows = 0;
    c.jump_windows = 0;
    Rng rng(9);
    const auto data = train::synth_dataset(tree, bodies, 12, 16, 1.0 / 30.0, c, rng);
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& s : data)
      for (std::size_t i = 0; i < s.y.size(); ++i) {
        acc += std::fabs(s.y.data()[i] - s.x_gt.data()[i]);
        ++n;
      }
    const double expect = 0.05 * std::sqrt(2.0 / 3.14159265358979);
    CHECK(acc / n == doctest::Approx(expect).epsilon(0.05));
  }

  SUBCASE("same seed: bit-identical output") {
    CorruptionConfig c;
    Rng r1(31), r2(31);
    const auto a = train::synth_dataset(tree, bodies, 3, 8, 1.0 / 30.0, c, r1);
    const auto b = train::synth_dataset(tree, bodies, 3, 8, 1.0 / 30.0, c, r2);
    for (std::size_t s = 0; s < a.size(); ++s) {
      for (std::size_t i = 0; i < a[s].x_gt.size(); ++i) {
        CHECK(a[s].x_gt.data()[i] == b[s].x_gt.data()[i]);
        CHECK(a[s].y.data()[i] == b[s].y.data()[i]);
      }
      CHECK(a[s].corrupt_frames == b[s].corrupt_frames);
    }
  }

  SUBCASE("corrupt frames recorded for bias and jump windows") {
    CorruptionConfig c;
    c.jitter_std = 0.0;
    Rng rng(11);
    const auto data = train::synth_dataset(tree, bodies, 2, 12, 1.0 / 30.0, c, rng);
    for (const auto& s : data) CHECK(!s.corrupt_frames.empty());
  }
}

TEST_CASE("normalization: fit and affine roundtrip") {
  auto [tree, bodies] = train::default_body();
  Rng rng(13);
  const auto data = train::synth_dataset(tree, bodies, 3, 8, 1.0 / 30.0, CorruptionConfig{}, rng);
  const auto norm = train::Normalization::fit(data);
  const MotionArray n0 = norm.normalize(data[0].x_gt);
  const MotionArray back = norm.denormalize(n0);
  for (std::size_t i = 0; i < back.size(); ++i)
    CHECK(back.data()[i] == doctest::Approx(data[0].x_gt.data()[i]).epsilon(1e-12));
}

TEST_CASE("train: smoke run decreases the data loss; zero lr freezes parameters") {
  auto [tree, bodies] = train::default_body();
  Rng data_rng(17);
  CorruptionConfig c;
  c.jitter_std = 0.0;
  c.bias_std = 0.0;
  c.bias_windows = 0;
  c.jump_windows = 0;
  const auto data = train::synth_dataset(tree, bodies, 48, 8, 1.0 / 30.0, c, data_rng);

  const auto sched = diff::ShiftSchedule::build(1, 1e-3, 0.999, 1.0, 1.0);
  nn::MLPConfig mc;
  mc.dim = static_cast<int>(tree.dof());
  mc.window = 1;
  mc.hidden = {24};
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch = 1;
  cfg.lambda2 = 0.0;  // pure data objective for the smoke run
  cfg.lr = 3e-3;

  SUBCASE("loss_data decreases monotonically over the first epochs") {
    nn::MLPDenoiser net(mc);
    Rng init(1);
    net.init_params(init);
    Rng rng(23);
    const auto res = train::train(net, data, sched, tree, bodies, cfg, rng);
    REQUIRE(res.curve.size() == 5);
    for (std::size_t e = 1; e < res.curve.size(); ++e)
      CHECK(res.curve[e].l_data < res.curve[e - 1].l_data);
  }

  SUBCASE("zero learning rate leaves parameters bit-identical") {
    nn::MLPDenoiser net(mc);
    Rng init(1);
    net.init_params(init);
    const std::vector<double> before = net.params();
    TrainConfig frozen = cfg;
    frozen.lr = 0.0;
    frozen.epochs = 1;
    Rng rng(29);
    train::train(net, data, sched, tree, bodies, frozen, rng);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(net.params()[i] == before[i]);
  }
}

TEST_CASE("train rejects an empty dataset") {
  auto [tree, bodies] = train::default_body();
  const auto sched = diff::ShiftSchedule::build(2, 1e-2, 0.9, 1.0, 1.0);
  nn::MLPConfig mc;
  mc.dim = static_cast<int>(tree.dof());
  nn::MLPDenoiser net(mc);
  TrainConfig cfg;
  Rng rng(1);
  CHECK_THROWS_AS(train::train(net, {}, sched, tree, bodies, cfg, rng), ValidationError);
}

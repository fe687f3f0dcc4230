#include <CLI11.hpp>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <thread>

#include "physmo/io.hpp"
#include "physmo/metrics.hpp"
#include "physmo/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace physmo;

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

io::RunConfig resolve_config(const CommonArgs& a) {
  io::RunConfig cfg;
  if (!a.config_path.empty()) cfg = io::load_run_config(a.config_path);
  if (a.seed_set) cfg.seed = a.seed;
  if (a.jobs > 0) cfg.jobs = a.jobs;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "run configuration JSON");
  cmd->add_option("--seed", a.seed, "rng seed (overrides config)")->each([&](const std::string&) {
    a.seed_set = true;
  });
  cmd->add_option("--jobs", a.jobs, "parallel sequence workers");
}

metrics::JointSequence joints_mm(const kin::KinematicTree& tree, const MotionArray& frames) {
  metrics::JointSequence seq(frames.rows());
  Eigen::VectorXd q(frames.cols());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    for (std::size_t j = 0; j < frames.cols(); ++j) q[j] = frames(t, j);
    const auto pts = kin::joint_positions(tree, q);
    seq[t].reserve(pts.size());
    for (const auto& p : pts) seq[t].push_back(1000.0 * p);
  }
  return seq;
}

io::Checkpoint train_to_checkpoint(const io::RunConfig& cfg, const nn::MLPDenoiser& net,
                                   const train::Normalization& norm, int epochs_done) {
  io::Checkpoint ck;
  ck.model = net.config();
  ck.params = net.params();
  ck.norm = norm;
  ck.n_steps = cfg.n_steps;
  ck.eta1 = cfg.eta1;
  ck.eta_n = cfg.eta_n;
  ck.kappa = cfg.kappa;
  ck.curve_p = cfg.curve_p;
  ck.epochs_done = epochs_done;
  return ck;
}

int cmd_synth(const CommonArgs& common, const std::string& out_dir, int count_flag, int t_flag) {
  io::RunConfig cfg = resolve_config(common);
  if (count_flag >= 0) cfg.count = count_flag;
  if (t_flag > 0) cfg.train.t_len = t_flag;
  auto [tree, bodies] = train::default_body(cfg.density);
  Rng rng(cfg.seed);
  const auto data = train::synth_dataset(tree, bodies, cfg.count, cfg.train.t_len, cfg.dt,
                                         cfg.corruption, rng);
  io::save_dataset(out_dir, tree, bodies, data, cfg.corruption, cfg.seed);
  std::cout << "wrote " << data.size() << " sequences to " << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& data_dir, const std::string& out,
              const std::string& resume, const std::map<std::string, double>& overrides) {
  io::RunConfig cfg = resolve_config(common);
  auto get = [&](const char* k, double fallback) {
    auto it = overrides.find(k);
    return it == overrides.end() ? fallback : it->second;
  };
  cfg.train.epochs = static_cast<int>(get("epochs", cfg.train.epochs));
  cfg.train.lambda1 = get("lambda1", cfg.train.lambda1);
  cfg.train.lambda2 = get("lambda2", cfg.train.lambda2);
  cfg.train.c = get("c", cfg.train.c);
  cfg.n_steps = static_cast<int>(get("N", cfg.n_steps));
  cfg.kappa = get("kappa", cfg.kappa);
  cfg.train.n_steps = cfg.n_steps;

  kin::KinematicTree tree({{-1, Eigen::Vector3d::Zero()}});
  dyn::RigidBodySet bodies;
  const auto data = io::load_dataset(data_dir, &tree, &bodies);
  const auto sched = cfg.schedule();

  int epoch_offset = 0;
  std::optional<train::Normalization> fixed;
  nn::MLPDenoiser net = [&] {
    if (!resume.empty()) {
      const io::Checkpoint prev = io::load_checkpoint(resume);
      epoch_offset = prev.epochs_done;
      fixed = prev.norm;
      return prev.instantiate();
    }
    nn::MLPConfig mc;
    mc.dim = static_cast<int>(tree.dof());
    mc.window = cfg.model_window;
    mc.hidden = cfg.model_hidden;
    nn::MLPDenoiser n(mc);
    Rng init(Rng(cfg.seed).split(1).seed());
    n.init_params(init);
    return n;
  }();

  Rng rng(Rng(cfg.seed).split(2).seed());
  const auto result = train::train(net, data, sched, tree, bodies, cfg.train, rng,
                                   dyn::default_gravity(), fixed ? &*fixed : nullptr);

  // Laplace posterior over the training pairs, stored with the checkpoint
  std::vector<std::pair<MotionArray, MotionArray>> pairs;
  pairs.reserve(data.size());
  for (const auto& s : data)
    pairs.emplace_back(result.norm.normalize(s.x_gt), result.norm.normalize(s.y));
  const auto posterior = nn::fit_laplace(net, pairs, sched, cfg.laplace_prior);

  io::Checkpoint ck = train_to_checkpoint(cfg, net, result.norm, epoch_offset + cfg.train.epochs);
  ck.laplace = posterior;
  io::save_checkpoint(out, ck);

  auto curve = result.curve;
  for (auto& row : curve) row.epoch += epoch_offset;
  const fs::path out_path(out);
  fs::path losses = out_path;
  losses.replace_filename(out_path.stem().string() + "_losses.csv");
  io::save_loss_curve_csv(losses, curve);
  std::cout << "checkpoint: " << out << "\nlosses: " << losses.string() << "\n";
  return 0;
}

int cmd_refine(const CommonArgs& common, const std::string& ckpt_path, const std::string& input,
               const std::string& out, double kappa_flag) {
  const io::RunConfig cfg = resolve_config(common);
  io::Checkpoint ck = io::load_checkpoint(ckpt_path);
  if (kappa_flag > 0.0) ck.kappa = kappa_flag;
  const auto sched = ck.schedule();
  const nn::MLPDenoiser net = ck.instantiate();
  const kin::Trajectory traj = io::load_trajectory(input);
  if (static_cast<int>(traj.dim()) != ck.model.dim)
    throw ValidationError("refine: trajectory dim does not match the checkpoint");
  Rng rng(Rng(cfg.seed).split(3).seed());
  const MotionArray y_n = ck.norm.normalize(traj.frames);
  const MotionArray x0 = diff::refine(y_n, net, sched, rng);
  io::save_trajectory(out, {ck.norm.denormalize(x0), traj.dt});
  std::cout << "refined: " << out << "\n";
  return 0;
}

int cmd_variance(const CommonArgs& common, const std::string& ckpt_path, const std::string& input,
                 const std::string& tree_path, const std::string& bodies_path,
                 const std::string& out_prefix, int s_flag, double kappa_flag) {
  io::RunConfig cfg = resolve_config(common);
  if (s_flag > 0) cfg.s_samples = s_flag;
  io::Checkpoint ck = io::load_checkpoint(ckpt_path);
  if (kappa_flag > 0.0) ck.kappa = kappa_flag;
  if (!ck.laplace) throw ValidationError("variance: checkpoint has no Laplace posterior");
  const auto sched = ck.schedule();
  const nn::MLPDenoiser net = ck.instantiate();
  const kin::KinematicTree tree = io::load_tree(tree_path);
  dyn::RigidBodySet bodies = io::load_bodies(bodies_path);
  bodies.validate(tree);
  const kin::Trajectory traj = io::load_trajectory(input);
  Rng rng(Rng(cfg.seed).split(4).seed());
  const auto rep = uq::refine_with_variance(tree, bodies, traj.frames, net, *ck.laplace, sched,
                                            ck.norm, cfg.s_samples, traj.dt, rng);
  io::save_variance_csv(out_prefix + ".csv", rep);
  io::save_variance_svg(out_prefix + ".svg", rep.joint_map);
  io::save_trajectory(out_prefix + "_refined.json", {rep.refined, traj.dt});
  std::cout << "variance report: " << out_prefix << ".csv / .svg\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& refined_dir, const std::string& gt_dir,
             const std::string& tree_path, const std::string& bodies_path,
             const std::string& out_prefix) {
  const io::RunConfig cfg = resolve_config(common);
  const kin::KinematicTree tree = io::load_tree(tree_path);
  dyn::RigidBodySet bodies = io::load_bodies(bodies_path);
  bodies.validate(tree);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(refined_dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("eval: no .json trajectories in " + refined_dir);

  struct Row {
    std::string name;
    double mpjpe, pa, accel, residual;
  };
  std::vector<Row> rows(files.size());

  auto work = [&](std::size_t i) {
    const fs::path gt_path = fs::path(gt_dir) / files[i].filename();
    if (!fs::exists(gt_path))
      throw ValidationError("eval: missing ground truth for " + files[i].filename().string());
    const kin::Trajectory pred = io::load_trajectory(files[i]);
    const kin::Trajectory gt = io::load_trajectory(gt_path);
    if (pred.dim() != tree.dof() || gt.dim() != tree.dof() || pred.length() != gt.length())
      throw ValidationError("eval: shape mismatch for " + files[i].filename().string());
    const auto pj = joints_mm(tree, pred.frames);
    const auto gj = joints_mm(tree, gt.frames);
    const MotionArray f_bar = dyn::pseudoforce(tree, bodies, gt);
    rows[i] = {files[i].filename().string(), metrics::mpjpe(pj, gj), metrics::pa_mpjpe(pj, gj),
               metrics::accel_error(pj, gj), dyn::residual_metric(tree, bodies, pred, f_bar)};
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < files.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < files.size(); i = next++) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::ostringstream csv;
  csv << "sequence,mpjpe,pa_mpjpe,accel,residual_metric\n";
  csv.precision(17);
  double m = 0, pa = 0, ac = 0, rs = 0;
  for (const auto& r : rows) {
    csv << r.name << ',' << r.mpjpe << ',' << r.pa << ',' << r.accel << ',' << r.residual << "\n";
    m += r.mpjpe;
    pa += r.pa;
    ac += r.accel;
    rs += r.residual;
  }
  io::write_text_file(out_prefix + ".csv", csv.str());
  const double inv = 1.0 / rows.size();
  nlohmann::json agg = {{"mpjpe", m * inv},
                        {"pa_mpjpe", pa * inv},
                        {"accel", ac * inv},
                        {"residual_metric", rs * inv},
                        {"sequences", rows.size()}};
  io::write_text_file(out_prefix + ".json", agg.dump(2) + "\n");
  std::cout << agg.dump(2) << "\n";
  return 0;
}

int cmd_schedule(const CommonArgs& common, const std::string& out) {
  const io::RunConfig cfg = resolve_config(common);
  io::save_schedule_csv(out, cfg.schedule());
  std::cout << "schedule: " << out << "\n";
  return 0;
}

int cmd_bodyprops(const std::string& mesh_path, double density, const std::string& out) {
  const auto mesh = io::load_obj(mesh_path);
  const auto p = inertia::mesh_mass_properties(mesh, density);
  nlohmann::json j = {{"mass", p.mass},
                      {"com", {p.com.x(), p.com.y(), p.com.z()}},
                      {"inertia",
                       {{p.inertia(0, 0), p.inertia(0, 1), p.inertia(0, 2)},
                        {p.inertia(1, 0), p.inertia(1, 1), p.inertia(1, 2)},
                        {p.inertia(2, 0), p.inertia(2, 1), p.inertia(2, 2)}}}};
  if (out.empty())
    std::cout << j.dump(2) << "\n";
  else
    io::write_text_file(out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physics-consistent motion refinement with dynamic-force variance maps"};
  app.require_subcommand(1);

  CommonArgs common;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out;
  int synth_count = -1, synth_t = 0;
  add_common(synth, common);
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--count", synth_count, "number of sequences");
  synth->add_option("--T", synth_t, "frames per sequence");

  auto* tr = app.add_subcommand("train", "train a denoiser on a dataset");
  std::string train_data, train_out, train_resume;
  std::map<std::string, double> overrides;
  add_common(tr, common);
  tr->add_option("--data", train_data, "dataset directory")->required();
  tr->add_option("--out", train_out, "checkpoint path")->required();
  tr->add_option("--resume", train_resume, "checkpoint to continue from");
  for (const char* k : {"epochs", "lambda1", "lambda2", "c", "N", "kappa"})
    tr->add_option(std::string("--") + k, overrides[k]);

  auto* rf = app.add_subcommand("refine", "refine a noisy trajectory");
  std::string rf_ckpt, rf_in, rf_out;
  double rf_kappa = 0.0;
  add_common(rf, common);
  rf->add_option("--checkpoint", rf_ckpt)->required();
  rf->add_option("--input", rf_in)->required();
  rf->add_option("--out", rf_out)->required();
  rf->add_option("--kappa", rf_kappa, "override the schedule kappa");

  auto* vr = app.add_subcommand("variance", "refine with propagated force variance");
  std::string vr_ckpt, vr_in, vr_tree, vr_bodies, vr_out;
  int vr_s = 0;
  double vr_kappa = 0.0;
  add_common(vr, common);
  vr->add_option("--checkpoint", vr_ckpt)->required();
  vr->add_option("--input", vr_in)->required();
  vr->add_option("--tree", vr_tree)->required();
  vr->add_option("--bodies", vr_bodies)->required();
  vr->add_option("--out", vr_out, "output prefix (.csv/.svg)")->required();
  vr->add_option("--S", vr_s, "Monte-Carlo samples per step");
  vr->add_option("--kappa", vr_kappa, "override the schedule kappa");

  auto* ev = app.add_subcommand("eval", "evaluate refined trajectories against ground truth");
  std::string ev_refined, ev_gt, ev_tree, ev_bodies, ev_out;
  add_common(ev, common);
  ev->add_option("--refined", ev_refined)->required();
  ev->add_option("--gt", ev_gt)->required();
  ev->add_option("--tree", ev_tree)->required();
  ev->add_option("--bodies", ev_bodies)->required();
  ev->add_option("--out", ev_out, "output prefix (.csv/.json)")->required();

  auto* sc = app.add_subcommand("schedule", "dump the diffusion schedule as CSV");
  std::string sc_out;
  add_common(sc, common);
  sc->add_option("--out", sc_out)->required();

  auto* bp = app.add_subcommand("bodyprops", "mass properties of a watertight OBJ mesh");
  std::string bp_mesh, bp_out;
  double bp_density = 1000.0;
  bp->add_option("--mesh", bp_mesh)->required();
  bp->add_option("--density", bp_density, "kg/m^3");
  bp->add_option("--out", bp_out, "write JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(common, synth_out, synth_count, synth_t);
    if (tr->parsed()) {
      for (auto it = overrides.begin(); it != overrides.end();) {
        if (tr->count(std::string("--") + it->first) == 0)
          it = overrides.erase(it);
        else
          ++it;
      }
      return cmd_train(common, train_data, train_out, train_resume, overrides);
    }
    if (rf->parsed()) return cmd_refine(common, rf_ckpt, rf_in, rf_out, rf_kappa);
    if (vr->parsed())
      return cmd_variance(common, vr_ckpt, vr_in, vr_tree, vr_bodies, vr_out, vr_s, vr_kappa);
    if (ev->parsed()) return cmd_eval(common, ev_refined, ev_gt, ev_tree, ev_bodies, ev_out);
    if (sc->parsed()) return cmd_schedule(common, sc_out);
    if (bp->parsed()) return cmd_bodyprops(bp_mesh, bp_density, bp_out);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

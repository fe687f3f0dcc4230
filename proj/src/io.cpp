#include "physmo/io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace physmo::io {

using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys)
      if (k == key) known = true;
    if (!known) throw ValidationError(std::string(where) + ": unknown key '" + k + "'");
  }
}

MotionArray frames_from_json(const json& frames, std::size_t dim, const char* where) {
  MotionArray arr(frames.size(), dim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& row = frames[t];
    if (!row.is_array() || row.size() != dim)
      throw ValidationError(std::string(where) + ": frame " + std::to_string(t) + " has wrong dim");
    for (std::size_t j = 0; j < dim; ++j) arr(t, j) = row[j].get<double>();
  }
  if (!arr.all_finite()) throw ValidationError(std::string(where) + ": non-finite value");
  return arr;
}

json frames_to_json(const MotionArray& arr) {
  json frames = json::array();
  for (std::size_t t = 0; t < arr.rows(); ++t) {
    json row = json::array();
    for (std::size_t j = 0; j < arr.cols(); ++j) row.push_back(arr(t, j));
    frames.push_back(std::move(row));
  }
  return frames;
}

}  // namespace

kin::Trajectory load_trajectory(const fs::path& path) {
  const json j = read_json(path);
  reject_unknown(j, {"dt", "dim", "frames"}, "trajectory");
  if (!j.contains("dt") || !j.contains("dim") || !j.contains("frames"))
    throw ValidationError(path.string() + ": trajectory needs dt, dim, frames");
  kin::Trajectory traj;
  traj.dt = j["dt"].get<double>();
  if (!(traj.dt > 0.0)) throw ValidationError(path.string() + ": dt must be positive");
  const std::size_t dim = j["dim"].get<std::size_t>();
  traj.frames = frames_from_json(j["frames"], dim, "trajectory");
  return traj;
}

void save_trajectory(const fs::path& path, const kin::Trajectory& traj) {
  json j;
  j["dt"] = traj.dt;
  j["dim"] = traj.dim();
  j["frames"] = frames_to_json(traj.frames);
  write_json(path, j);
}

kin::KinematicTree load_tree(const fs::path& path) {
  const json j = read_json(path);
  reject_unknown(j, {"links"}, "tree");
  if (!j.contains("links")) throw ValidationError(path.string() + ": tree needs links");
  std::vector<kin::Link> links;
  for (const auto& l : j["links"]) {
    reject_unknown(l, {"parent", "offset"}, "tree link");
    kin::Link link;
    link.parent = l.at("parent").get<int>();
    const auto& o = l.at("offset");
    if (!o.is_array() || o.size() != 3) throw ValidationError("tree: offset must be [x,y,z]");
    link.offset = {o[0].get<double>(), o[1].get<double>(), o[2].get<double>()};
    links.push_back(link);
  }
  return kin::KinematicTree(std::move(links));
}

void save_tree(const fs::path& path, const kin::KinematicTree& tree) {
  json links = json::array();
  for (const auto& l : tree.links())
    links.push_back({{"parent", l.parent}, {"offset", {l.offset.x(), l.offset.y(), l.offset.z()}}});
  write_json(path, json{{"links", links}});
}

dyn::RigidBodySet load_bodies(const fs::path& path) {
  const json j = read_json(path);
  reject_unknown(j, {"bodies"}, "bodies");
  dyn::RigidBodySet out;
  for (const auto& b : j.at("bodies")) {
    reject_unknown(b, {"mass", "com", "inertia"}, "body");
    inertia::BodyParams p;
    p.mass = b.at("mass").get<double>();
    const auto& c = b.at("com");
    p.com = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
    const auto& m = b.at("inertia");
    for (int r = 0; r < 3; ++r)
      for (int q = 0; q < 3; ++q) p.inertia(r, q) = m[r][q].get<double>();
    out.bodies.push_back(p);
  }
  return out;
}

void save_bodies(const fs::path& path, const dyn::RigidBodySet& bodies) {
  json arr = json::array();
  for (const auto& b : bodies.bodies) {
    json m = json::array();
    for (int r = 0; r < 3; ++r) m.push_back({b.inertia(r, 0), b.inertia(r, 1), b.inertia(r, 2)});
    arr.push_back({{"mass", b.mass},
                   {"com", {b.com.x(), b.com.y(), b.com.z()}},
                   {"inertia", m}});
  }
  write_json(path, json{{"bodies", arr}});
}

inertia::TriangleMesh load_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  inertia::TriangleMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag == "#") continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.push_back({x, y, z});
    } else if (tag == "f") {
      std::string a, b, c, extra;
      if (!(ss >> a >> b >> c) || (ss >> extra))
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": faces must be triangles");
      std::array<int, 3> idx{};
      const std::string toks[3] = {a, b, c};
      for (int i = 0; i < 3; ++i) {
        if (toks[i].find('/') != std::string::npos)
          throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                ": only plain vertex indices supported");
        idx[i] = std::stoi(toks[i]) - 1;  // 1-based
      }
      mesh.faces.push_back(idx);
    } else {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": unsupported tag '" +
                            tag + "'");
    }
  }
  return mesh;
}

inertia::PartWeights load_weights_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path.string() + ": ragged csv");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": empty weights csv");
  Eigen::MatrixXd w(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) w(i, j) = rows[i][j];
  return inertia::PartWeights(std::move(w));
}

void save_schedule_csv(const fs::path& path, const diff::ShiftSchedule& sched) {
  std::ostringstream out;
  out << "n,eta,alpha,A,B,Sigma\n";
  out.precision(17);
  for (int n = 1; n <= sched.steps(); ++n)
    out << n << ',' << sched.eta(n) << ',' << sched.alpha(n) << ',' << sched.a(n) << ','
        << sched.b(n) << ',' << sched.sigma(n) << "\n";
  write_text_file(path, out.str());
}

void save_forces_csv(const fs::path& path, const MotionArray& forces) {
  std::ostringstream out;
  out << "frame,coordinate,value\n";
  out.precision(17);
  for (std::size_t t = 0; t < forces.rows(); ++t)
    for (std::size_t j = 0; j < forces.cols(); ++j)
      out << t << ',' << j << ',' << forces(t, j) << "\n";
  write_text_file(path, out.str());
}

void save_loss_curve_csv(const fs::path& path, const std::vector<train::EpochStats>& curve) {
  std::ostringstream out;
  out << "epoch,L_data,L_geo,L_EL,total\n";
  out.precision(17);
  for (const auto& e : curve)
    out << e.epoch << ',' << e.l_data << ',' << e.l_geo << ',' << e.l_el << ',' << e.total << "\n";
  write_text_file(path, out.str());
}

void save_variance_csv(const fs::path& path, const uq::VarianceReport& rep) {
  std::ostringstream out;
  out << "frame,joint,coordinate,var_x0,var_force,normalized_map\n";
  out.precision(17);
  for (std::size_t t = 0; t < rep.var0.rows(); ++t)
    for (std::size_t j = 0; j < rep.var0.cols(); ++j) {
      const std::size_t joint = j < 6 ? 0 : 1 + (j - 6) / 3;
      out << t << ',' << joint << ',' << j << ',' << rep.var0(t, j) << ',' << rep.force_var(t, j)
          << ',' << rep.joint_map(t, joint) << "\n";
    }
  write_text_file(path, out.str());
}

void save_variance_svg(const fs::path& path, const MotionArray& joint_map) {
  const int cell = 18;
  const std::size_t t_count = joint_map.rows(), n_joints = joint_map.cols();
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << t_count * cell + 60
      << "\" height=\"" << n_joints * cell + 40 << "\">\n";
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t j = 0; j < n_joints; ++j) {
      const double v = joint_map(t, j);
      // linear blue-to-red ramp
      const int r = static_cast<int>(255.0 * v);
      const int b = static_cast<int>(255.0 * (1.0 - v));
      out << "<rect x=\"" << 40 + t * cell << "\" y=\"" << 20 + j * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(" << r << ",40," << b << ")\"/>\n";
    }
  }
  for (std::size_t j = 0; j < n_joints; ++j)
    out << "<text x=\"4\" y=\"" << 34 + j * cell << "\" font-size=\"11\">j" << j << "</text>\n";
  out << "<text x=\"40\" y=\"" << n_joints * cell + 34 << "\" font-size=\"11\">frames 0.."
      << t_count - 1 << "</text>\n";
  out << "</svg>\n";
  write_text_file(path, out.str());
}

nn::MLPDenoiser Checkpoint::instantiate() const {
  nn::MLPDenoiser net(model);
  if (net.param_count() != params.size())
    throw ValidationError("checkpoint: parameter count mismatch");
  net.params() = params;
  return net;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  json j;
  j["version"] = 1;
  j["model"] = {{"dim", ckpt.model.dim},
                {"window", ckpt.model.window},
                {"hidden", ckpt.model.hidden}};
  j["params"] = ckpt.params;
  j["normalization"] = {
      {"mean", std::vector<double>(ckpt.norm.mean.data(), ckpt.norm.mean.data() + ckpt.norm.mean.size())},
      {"std", std::vector<double>(ckpt.norm.stddev.data(),
                                  ckpt.norm.stddev.data() + ckpt.norm.stddev.size())}};
  j["schedule"] = {{"N", ckpt.n_steps},
                   {"eta1", ckpt.eta1},
                   {"etaN", ckpt.eta_n},
                   {"kappa", ckpt.kappa},
                   {"p", ckpt.curve_p}};
  j["epochs_done"] = ckpt.epochs_done;
  if (ckpt.laplace) {
    json lw = json::array();
    for (Eigen::Index r = 0; r < ckpt.laplace->var_w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < ckpt.laplace->var_w.cols(); ++c)
        row.push_back(ckpt.laplace->var_w(r, c));
      lw.push_back(std::move(row));
    }
    j["laplace"] = {{"var_w", std::move(lw)},
                    {"var_b", std::vector<double>(ckpt.laplace->var_b.data(),
                                                  ckpt.laplace->var_b.data() +
                                                      ckpt.laplace->var_b.size())}};
  }
  write_json(path, j);
}

Checkpoint load_checkpoint(const fs::path& path) {
  const json j = read_json(path);
  reject_unknown(j, {"version", "model", "params", "normalization", "schedule", "epochs_done",
                     "laplace"},
                 "checkpoint");
  if (j.at("version").get<int>() != 1) throw ValidationError("checkpoint: unsupported version");
  Checkpoint c;
  const json& m = j.at("model");
  c.model.dim = m.at("dim").get<int>();
  c.model.window = m.at("window").get<int>();
  c.model.hidden = m.at("hidden").get<std::vector<int>>();
  c.params = j.at("params").get<std::vector<double>>();
  const json& n = j.at("normalization");
  const auto mean = n.at("mean").get<std::vector<double>>();
  const auto stddev = n.at("std").get<std::vector<double>>();
  c.norm.mean = Eigen::Map<const Eigen::ArrayXd>(mean.data(), mean.size());
  c.norm.stddev = Eigen::Map<const Eigen::ArrayXd>(stddev.data(), stddev.size());
  const json& s = j.at("schedule");
  c.n_steps = s.at("N").get<int>();
  c.eta1 = s.at("eta1").get<double>();
  c.eta_n = s.at("etaN").get<double>();
  c.kappa = s.at("kappa").get<double>();
  c.curve_p = s.at("p").get<double>();
  c.epochs_done = j.at("epochs_done").get<int>();
  if (j.contains("laplace")) {
    nn::LaplacePosterior lp;
    const auto& lw = j["laplace"].at("var_w");
    lp.var_w = Eigen::ArrayXXd(lw.size(), lw.empty() ? 0 : lw[0].size());
    for (std::size_t r = 0; r < lw.size(); ++r)
      for (std::size_t q = 0; q < lw[r].size(); ++q) lp.var_w(r, q) = lw[r][q].get<double>();
    const auto vb = j["laplace"].at("var_b").get<std::vector<double>>();
    lp.var_b = Eigen::Map<const Eigen::ArrayXd>(vb.data(), vb.size());
    c.laplace = std::move(lp);
  }
  return c;
}

void save_dataset(const fs::path& dir, const kin::KinematicTree& tree,
                  const dyn::RigidBodySet& bodies, const std::vector<train::SequenceSample>& data,
                  const train::CorruptionConfig& corruption, std::uint64_t seed) {
  fs::create_directories(dir);
  save_tree(dir / "tree.json", tree);
  save_bodies(dir / "bodies.json", bodies);
  json entries = json::array();
  char name[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::snprintf(name, sizeof name, "seq_%04zu_gt.json", i);
    const std::string gt_name = name;
    std::snprintf(name, sizeof name, "seq_%04zu_obs.json", i);
    const std::string obs_name = name;
    save_trajectory(dir / gt_name, {data[i].x_gt, data[i].dt});
    save_trajectory(dir / obs_name, {data[i].y, data[i].dt});
    entries.push_back({{"gt", gt_name},
                       {"observed", obs_name},
                       {"corrupt_frames", data[i].corrupt_frames}});
  }
  json manifest;
  manifest["dt"] = data.empty() ? 1.0 / 30.0 : data.front().dt;
  manifest["tree"] = "tree.json";
  manifest["bodies"] = "bodies.json";
  manifest["seed"] = seed;
  manifest["T"] = data.empty() ? 0 : data.front().x_gt.rows();
  manifest["corruption"] = {{"jitter_std", corruption.jitter_std},
                            {"bias_std", corruption.bias_std},
                            {"bias_windows", corruption.bias_windows},
                            {"bias_window_len", corruption.bias_window_len},
                            {"jump_windows", corruption.jump_windows},
                            {"jump_window_len", corruption.jump_window_len}};
  manifest["sequences"] = std::move(entries);
  write_json(dir / "manifest.json", manifest);
}

std::vector<train::SequenceSample> load_dataset(const fs::path& dir, kin::KinematicTree* tree_out,
                                                dyn::RigidBodySet* bodies_out) {
  const json manifest = read_json(dir / "manifest.json");
  reject_unknown(manifest, {"dt", "tree", "bodies", "seed", "T", "corruption", "sequences"},
                 "manifest");
  kin::KinematicTree tree = load_tree(dir / manifest.at("tree").get<std::string>());
  dyn::RigidBodySet bodies = load_bodies(dir / manifest.at("bodies").get<std::string>());
  bodies.validate(tree);
  std::vector<train::SequenceSample> out;
  for (const auto& e : manifest.at("sequences")) {
    train::SequenceSample s;
    const kin::Trajectory gt = load_trajectory(dir / e.at("gt").get<std::string>());
    const kin::Trajectory obs = load_trajectory(dir / e.at("observed").get<std::string>());
    if (gt.dim() != tree.dof() || obs.dim() != tree.dof() || gt.length() != obs.length())
      throw ValidationError("dataset: inconsistent sequence shapes");
    s.x_gt = gt.frames;
    s.y = obs.frames;
    s.dt = gt.dt;
    if (e.contains("corrupt_frames"))
      s.corrupt_frames = e["corrupt_frames"].get<std::vector<int>>();
    s.pseudoforce_gt = dyn::pseudoforce(tree, bodies, gt);
    out.push_back(std::move(s));
  }
  if (tree_out) *tree_out = std::move(tree);
  if (bodies_out) *bodies_out = std::move(bodies);
  return out;
}

namespace {

void apply_train_json(const json& j, train::TrainConfig& t) {
  reject_unknown(j,
                 {"lambda1", "lambda2", "c", "sigma2_virtual", "lr", "decay", "decay_interval",
                  "epochs", "batch", "T", "N", "grad_clip", "sigma_floor"},
                 "config.train");
  if (j.contains("lambda1")) t.lambda1 = j["lambda1"].get<double>();
  if (j.contains("lambda2")) t.lambda2 = j["lambda2"].get<double>();
  if (j.contains("c")) t.c = j["c"].get<double>();
  if (j.contains("sigma2_virtual")) t.sigma2_virtual = j["sigma2_virtual"].get<double>();
  if (j.contains("lr")) t.lr = j["lr"].get<double>();
  if (j.contains("decay")) t.decay = j["decay"].get<double>();
  if (j.contains("decay_interval")) t.decay_interval = j["decay_interval"].get<int>();
  if (j.contains("epochs")) t.epochs = j["epochs"].get<int>();
  if (j.contains("batch")) t.batch = j["batch"].get<int>();
  if (j.contains("T")) t.t_len = j["T"].get<int>();
  if (j.contains("N")) t.n_steps = j["N"].get<int>();
  if (j.contains("grad_clip")) t.grad_clip = j["grad_clip"].get<double>();
  if (j.contains("sigma_floor")) t.sigma_floor = j["sigma_floor"].get<double>();
  if (!(t.lambda1 >= 0.0) || !(t.lambda2 >= 0.0) || !(t.c > 0.0) || !(t.lr > 0.0) ||
      !(t.decay > 0.0) || t.decay_interval < 1 || t.epochs < 0 || t.batch < 1 || t.t_len < 3 ||
      t.n_steps < 1)
    throw ValidationError("config.train: parameter out of range");
}

void apply_corruption_json(const json& j, train::CorruptionConfig& c) {
  reject_unknown(j,
                 {"jitter_std", "bias_std", "bias_windows", "bias_window_len", "jump_windows",
                  "jump_window_len"},
                 "config.corruption");
  if (j.contains("jitter_std")) c.jitter_std = j["jitter_std"].get<double>();
  if (j.contains("bias_std")) c.bias_std = j["bias_std"].get<double>();
  if (j.contains("bias_windows")) c.bias_windows = j["bias_windows"].get<int>();
  if (j.contains("bias_window_len")) c.bias_window_len = j["bias_window_len"].get<int>();
  if (j.contains("jump_windows")) c.jump_windows = j["jump_windows"].get<int>();
  if (j.contains("jump_window_len")) c.jump_window_len = j["jump_window_len"].get<int>();
  if (c.jitter_std < 0.0 || c.bias_std < 0.0 || c.bias_windows < 0 || c.bias_window_len < 0 ||
      c.jump_windows < 0 || c.jump_window_len < 0)
    throw ValidationError("config.corruption: parameter out of range");
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  const json j = read_json(path);
  reject_unknown(j,
                 {"schedule", "train", "corruption", "count", "dt", "density", "model", "S",
                  "laplace_prior", "seed", "jobs"},
                 "config");
  RunConfig c;
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    reject_unknown(s, {"N", "eta1", "etaN", "kappa", "p"}, "config.schedule");
    if (s.contains("N")) c.n_steps = s["N"].get<int>();
    if (s.contains("eta1")) c.eta1 = s["eta1"].get<double>();
    if (s.contains("etaN")) c.eta_n = s["etaN"].get<double>();
    if (s.contains("kappa")) c.kappa = s["kappa"].get<double>();
    if (s.contains("p")) c.curve_p = s["p"].get<double>();
  }
  if (j.contains("train")) apply_train_json(j["train"], c.train);
  if (j.contains("corruption")) apply_corruption_json(j["corruption"], c.corruption);
  if (j.contains("count")) c.count = j["count"].get<int>();
  if (j.contains("dt")) c.dt = j["dt"].get<double>();
  if (j.contains("density")) c.density = j["density"].get<double>();
  if (j.contains("model")) {
    const json& m = j["model"];
    reject_unknown(m, {"window", "hidden"}, "config.model");
    if (m.contains("window")) c.model_window = m["window"].get<int>();
    if (m.contains("hidden")) c.model_hidden = m["hidden"].get<std::vector<int>>();
  }
  if (j.contains("S")) c.s_samples = j["S"].get<int>();
  if (j.contains("laplace_prior")) c.laplace_prior = j["laplace_prior"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
  if (c.count < 0 || !(c.dt > 0.0) || !(c.density > 0.0) || c.s_samples < 2 ||
      !(c.laplace_prior > 0.0) || c.jobs < 1)
    throw ValidationError("config: parameter out of range");
  // schedule parameters validated by the builder
  c.schedule();
  return c;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

}  // namespace physmo::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "physmo/denoiser.hpp"
#include "physmo/dynamics.hpp"
#include "physmo/inertia.hpp"
#include "physmo/kinematics.hpp"
#include "physmo/training.hpp"
#include "physmo/uncertainty.hpp"

namespace physmo::io {

namespace fs = std::filesystem;

// ---- trajectory JSON: { "dt": number, "dim": int, "frames": [[...], ...] }
kin::Trajectory load_trajectory(const fs::path& path);
void save_trajectory(const fs::path& path, const kin::Trajectory& traj);

// ---- tree JSON: { "links": [{ "parent": int|-1, "offset": [x,y,z] }, ...] }
kin::KinematicTree load_tree(const fs::path& path);
void save_tree(const fs::path& path, const kin::KinematicTree& tree);

// ---- body parameters JSON
dyn::RigidBodySet load_bodies(const fs::path& path);
void save_bodies(const fs::path& path, const dyn::RigidBodySet& bodies);

// ---- ASCII OBJ subset: v/f lines, 1-based indices, triangles only
inertia::TriangleMesh load_obj(const fs::path& path);

// ---- part weights CSV: one row per vertex
inertia::PartWeights load_weights_csv(const fs::path& path);

// ---- CSV dumps
void save_schedule_csv(const fs::path& path, const diff::ShiftSchedule& sched);
void save_forces_csv(const fs::path& path, const MotionArray& forces);
void save_loss_curve_csv(const fs::path& path, const std::vector<train::EpochStats>& curve);
void save_variance_csv(const fs::path& path, const uq::VarianceReport& rep);
void save_variance_svg(const fs::path& path, const MotionArray& joint_map);

// ---- model checkpoint (versioned JSON)
struct Checkpoint {
  nn::MLPConfig model;
  std::vector<double> params;
  train::Normalization norm;
  int n_steps = 4;
  double eta1 = 1e-3, eta_n = 0.999, kappa = 1.0, curve_p = 1.0;
  std::optional<nn::LaplacePosterior> laplace;
  int epochs_done = 0;

  diff::ShiftSchedule schedule() const {
    return diff::ShiftSchedule::build(n_steps, eta1, eta_n, kappa, curve_p);
  }
  nn::MLPDenoiser instantiate() const;
};
void save_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& path);

// ---- dataset directory: per-sequence trajectory JSON pairs + manifest
void save_dataset(const fs::path& dir, const kin::KinematicTree& tree,
                  const dyn::RigidBodySet& bodies, const std::vector<train::SequenceSample>& data,
                  const train::CorruptionConfig& corruption, std::uint64_t seed);
std::vector<train::SequenceSample> load_dataset(const fs::path& dir, kin::KinematicTree* tree_out,
                                                dyn::RigidBodySet* bodies_out);

// ---- run configuration (single JSON document, unknown keys rejected)
struct RunConfig {
  int n_steps = 4;
  double eta1 = 1e-3, eta_n = 0.999, kappa = 1.0, curve_p = 1.0;
  train::TrainConfig train;
  train::CorruptionConfig corruption;
  int count = 30;
  double dt = 1.0 / 30.0;
  double density = 1000.0;
  int model_window = 2;
  std::vector<int> model_hidden = {64, 64};
  int s_samples = 20;
  double laplace_prior = 1.0;
  std::uint64_t seed = 0;
  int jobs = 1;

  diff::ShiftSchedule schedule() const {
    return diff::ShiftSchedule::build(n_steps, eta1, eta_n, kappa, curve_p);
  }
};
RunConfig load_run_config(const fs::path& path);

void write_text_file(const fs::path& path, const std::string& content);

}  // namespace physmo::io

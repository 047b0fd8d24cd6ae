#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "safe_explore/grid.hpp"

namespace safe_explore::env {

using Rng = std::mt19937_64;

/// Grid MDP with deterministic 4-neighbour moves and a time-indexed safety
/// field g[t][s]. Immutable after construction.
class GridWorld {
 public:
  GridWorld(GridShape shape, std::vector<std::vector<double>> safety, double threshold,
            StateSet initial_safe, double noise_std);

  const GridShape& shape() const noexcept { return shape_; }
  int num_states() const noexcept { return shape_.size(); }
  int horizon() const noexcept { return static_cast<int>(safety_.size()); }
  double threshold() const noexcept { return threshold_; }
  double noise_std() const noexcept { return noise_std_; }
  const StateSet& initial_safe() const noexcept { return initial_safe_; }

  double safety(int t, StateId s) const { return safety_[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]; }
  const std::vector<double>& slice(int t) const { return safety_[static_cast<std::size_t>(t)]; }
  bool is_safe(int t, StateId s) const { return safety(t, s) >= threshold_; }

  StateId transition(StateId s, Action a) const { return safe_explore::transition(shape_, s, a); }
  std::vector<Action> available_actions(StateId s) const {
    return safe_explore::available_actions(shape_, s);
  }

  /// g[t][s] plus N(0, noise_std^2) noise drawn from `rng`.
  double observe(int t, StateId s, Rng& rng) const;

  double min_safety() const;
  double max_safety() const;

 private:
  GridShape shape_;
  std::vector<std::vector<double>> safety_;
  double threshold_;
  StateSet initial_safe_;
  double noise_std_;
};

struct EnvGenSpec {
  std::uint64_t seed = 0;
  GridShape shape{20, 20};
  double variance = 1.0;
  double length_scale = 2.0;
  double temporal_drift = 0.1;  // L_t in the stacking rule
  int horizon = 100;
  double threshold = 0.0;
  double noise_std = 0.001;
  double start_margin = 0.2;
  int max_redraws = 100;
};

/// Slice 0 is a draw from a zero-mean GP with an RBF covariance over cell
/// coordinates. Every later slice adds `temporal_drift * phi_t * g[0]`, with
/// one phi_t ~ U[-1, 1] per step. The initial safe set is the argmax of g[0];
/// the field is redrawn until that maximum clears threshold + start_margin.
GridWorld generate_random_env(const EnvGenSpec& spec);

/// A grayscale raster, row-major.
struct Frame {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;
};

struct TerrainNormalization {
  double input_min = 0.0;
  double input_max = 0.0;
  double output_min = -0.5;
  double output_max = 1.5;
};

struct TerrainEnv {
  GridWorld world;
  TerrainNormalization normalization;
  std::vector<int> frame_steps;  // time index of each input frame
};

/// Rescales all frames jointly onto [-0.5, 1.5] and linearly interpolates
/// `steps` slices. Frame k sits at slice round(k * (steps - 1) / (frames - 1)).
TerrainEnv load_terrain_env(std::span<const Frame> frames, int steps, double threshold,
                            double noise_std = 0.001, double start_margin = 0.2);

/// Reads a PGM (P2/P5, 8 or 16 bit) or a CSV matrix, chosen by extension.
Frame read_frame(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Frame& frame, int maxval = 255);

/// CSV with header `t,row,col,g`.
void write_env_csv(const std::filesystem::path& path, const GridWorld& world);

/// Inverse of write_env_csv plus the metadata the CSV does not carry.
GridWorld read_env_csv(const std::filesystem::path& path, double threshold,
                       StateSet initial_safe, double noise_std);

/// Lowest-index argmax of g[0], provided it clears threshold + margin.
std::optional<StateId> pick_start_state(const GridShape& shape, std::span<const double> slice0,
                                        double threshold, double margin);

}  // namespace safe_explore::env

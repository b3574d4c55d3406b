#pragma once

// Run configuration: one JSON document, every key optional. Missing keys take
// the defaults below, unknown keys are rejected. See docs/config.md.

#include "nnreach/dmdc.hpp"
#include "nnreach/mc_oracle.hpp"
#include "nnreach/mlp.hpp"
#include "nnreach/polytope.hpp"
#include "nnreach/quadrotor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nnreach {

struct DmdcConfig {
  Eigen::Index window = 8;
  double svd_tol = 1e-10;
  LiftPrior prior = LiftPrior::identity;
  /// On an ill-conditioned lift the window is doubled up to this width.
  Eigen::Index max_window = 64;
};

struct ReachConfig {
  std::size_t horizon = 50;
  /// "axis": the 2 n_x box face normals.
  std::string normal_scheme = "axis";
  std::vector<ProjectionPlane> planes;
  /// Per-hyperplane worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
  double max_condition = 1e12;
};

struct ValidateConfig {
  std::size_t samples = 10000;
  SampleScheme scheme = SampleScheme::mixed;
  double slack_fraction = 0.02;
  double max_violation_fraction = 0.02;
  /// Also sample the true plant (reported, not gated).
  bool truth = true;
};

struct Seeds {
  std::uint64_t dataset = 1;
  std::uint64_t train = 42;
  std::uint64_t excitation = 7;
  std::uint64_t mc = 2024;
};

struct RunConfig {
  QuadParams quad;
  BoxSetd x0 = default_initial_box();
  ControlProfile control;
  Scenario scenario = Scenario::nominal;
  std::size_t n_traj = 100;
  std::size_t n_steps = 50;
  double dt = 0.1;
  TrainConfig train;
  DmdcConfig dmdc;
  ReachConfig reach;
  ValidateConfig validate;
  Seeds seeds;
  std::filesystem::path output_dir = "run";

  RunConfig();

  /// Throws ConfigError on any inconsistent value.
  void validate_all() const;

  DatasetSpec dataset_spec() const;
  TrainConfig train_config() const;
  /// Control box active on [t_k, t_{k+1}).
  BoxSetd omega_at(std::size_t k) const;

  /// Sets every seed to `seed`.
  void override_seed(std::uint64_t seed);
};

ProjectionPlane plane_from_string(const std::string& name);

nlohmann::json to_json(const RunConfig& c);
/// Defaults merged with `j`; throws ConfigError on unknown keys or bad types.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace nnreach

#pragma once

// End-to-end orchestration: dataset -> learned model -> online lifts ->
// contact-front propagation -> Monte-Carlo validation -> report. Every stage
// reads its inputs from and writes its artifacts to the run directory.
//
// Layout (per scenario s):
//   dataset_<s>/            manifest.json, traj_<k>.csv
//   model_<s>/              model.json, loss.csv, train.json
//   reach_<s>/              reach_<k>.json, ltv_<k>.json, hull_<plane>_<k>.csv,
//                           footprint_<plane>.csv, omega.csv, timing.csv
//   validate_<s>/           mc_report.json
//   report/                 summary.txt, hull_extents.csv, scenario_diff.csv

#include "nnreach/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace nnreach {

namespace fs = std::filesystem;

fs::path dataset_dir(const RunConfig& c);
fs::path model_dir(const RunConfig& c);
fs::path reach_dir(const RunConfig& c);
fs::path validate_dir(const RunConfig& c);
fs::path report_dir(const RunConfig& c);

struct GenerateResult {
  fs::path dir;
  std::size_t trajectories = 0;
};
GenerateResult cmd_generate(const RunConfig& c);

struct TrainSummary {
  fs::path dir;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  int epochs = 0;
};
TrainSummary cmd_train(const RunConfig& c);

struct ReachStepTiming {
  std::size_t k = 0;
  Eigen::Index window = 0;
  double fit_seconds = 0.0;
  double propagate_seconds = 0.0;
  double total_seconds = 0.0;
};

struct ReachRun {
  ReachTube<double> tube;
  std::vector<LtvStep<double>> lifts;
  std::vector<ReachStepTiming> timing;
};

/// The online loop without any file output: at each step the model is
/// excited from the current front centroid, the window is fitted and the
/// front propagated. An ill-conditioned lift is re-fitted with a doubled
/// window until dmdc.max_window.
ReachRun run_reach(const RunConfig& c, const MlpParameters& model, unsigned threads);

struct ReachSummary {
  fs::path dir;
  std::size_t steps = 0;
  double max_step_seconds = 0.0;
  double mean_step_seconds = 0.0;
  double total_seconds = 0.0;
};
ReachSummary cmd_reach(const RunConfig& c);

struct ValidateSummary {
  fs::path report;
  bool passed = false;
  std::size_t self_test_violations = 0;
  double nn_max_violation_fraction = 0.0;
  double truth_max_violation_fraction = 0.0;
};
ValidateSummary cmd_validate(const RunConfig& c);

struct ReportSummary {
  fs::path dir;
  std::vector<std::string> scenarios;
};
ReportSummary cmd_report(const RunConfig& c);

/// Per-axis bounds and area of a projected polygon.
struct HullExtent {
  double a_min = 0.0, a_max = 0.0, b_min = 0.0, b_max = 0.0, area = 0.0;
};
HullExtent hull_extent(const Polygon<double>& poly);

/// Reads reach_<k>.json for k = 0.. until the first missing file.
ReachTube<double> read_tube(const fs::path& dir);
std::vector<LtvStep<double>> read_lifts(const fs::path& dir);

}  // namespace nnreach

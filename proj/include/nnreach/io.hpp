#pragma once

// On-disk artifact formats. Every writer has a reader that reproduces the
// in-memory value exactly (doubles are written with 17 significant digits).

#include "nnreach/dmdc.hpp"
#include "nnreach/mc_oracle.hpp"
#include "nnreach/mlp.hpp"
#include "nnreach/polytope.hpp"
#include "nnreach/quadrotor.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace nnreach::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Round-trip decimal form of a double.
std::string format_double(double v);

json to_json(const QuadParams& p);
QuadParams quad_params_from_json(const json& j);
json to_json(const ControlProfile& p);
ControlProfile control_profile_from_json(const json& j);
json to_json(const BoxSetd& b);
BoxSetd box_from_json(const json& j);
json to_json(const Eigen::MatrixXd& m);  // row-major nested arrays
Eigen::MatrixXd matrix_from_json(const json& j);
json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

/// Directory with manifest.json and traj_<k>.csv.
void write_dataset(const fs::path& dir, const TrajectoryDataset& ds);
TrajectoryDataset read_dataset(const fs::path& dir);

/// model.json checkpoint; read_model validates shapes and finiteness.
void write_model(const fs::path& path, const MlpParameters& params, double dt);
MlpParameters read_model(const fs::path& path, double* dt = nullptr);

void write_loss_csv(const fs::path& path, const std::vector<double>& history);
std::vector<double> read_loss_csv(const fs::path& path);

void write_ltv(const fs::path& path, const LtvStep<double>& step, double dt);
LtvStep<double> read_ltv(const fs::path& path);

void write_reach(const fs::path& path, const ContactFront<double>& front, double wall_seconds);
ContactFront<double> read_reach(const fs::path& path);

void write_polygon_csv(const fs::path& path, const Polygon<double>& poly);
Polygon<double> read_polygon_csv(const fs::path& path);

json to_json(const ContainmentReport& report);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace nnreach::io

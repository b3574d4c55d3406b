#pragma once

// Brute-force Monte-Carlo reachable-set estimator, independent of the
// polytopic construction, plus the containment report that compares the two.

#include "nnreach/dmdc.hpp"
#include "nnreach/mlp.hpp"
#include "nnreach/polytope.hpp"
#include "nnreach/quadrotor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nnreach {

/// Advances every column of X under the matching column of U over step k.
using BatchOracle = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& U, std::size_t k)>;

/// Control schemes:
///  - uniform: x0 uniform in X0, each step's control uniform in the box;
///  - vertex: x0 a random vertex of X0, controls are box vertices held
///    piecewise constant with one switch at a random step, so every
///    single-switch bang-bang sequence has positive probability;
///  - mixed: even samples uniform, odd samples vertex.
enum class SampleScheme { uniform, vertex, mixed };

std::string to_string(SampleScheme s);
SampleScheme sample_scheme_from_string(const std::string& s);

struct SampleCloud {
  std::vector<Eigen::MatrixXd> steps;  // K + 1 matrices, n_x x N
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  SampleScheme scheme = SampleScheme::mixed;
};

/// N sampled trajectories of K steps. Sample i uses RNG substream i, so the
/// cloud depends only on the arguments. Throws NumericError with the sample
/// index if the oracle produces a non-finite state.
SampleCloud mc_reach(const BatchOracle& oracle, const BoxSetd& x0,
                     const std::function<BoxSetd(std::size_t)>& omega_at, std::size_t N, std::size_t K,
                     SampleScheme scheme, std::uint64_t seed);

/// Tolerance on hyperplane i:  absolute + range_fraction * sum_j |c_ij| * range_j
/// where range_j is the per-axis extent of the cloud at that step. With
/// range_fraction = 0.02 this inflates the outer set by 2% of the cloud's
/// per-axis range.
struct ContainmentTolerance {
  double absolute = 1e-9;
  double range_fraction = 0.0;
};

struct StepContainment {
  std::size_t k = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  double max_signed_violation = 0.0;  // max over samples and normals of <c, x> - gamma
  Eigen::VectorXd support_max;        // max over samples of <c_i, x>
  Eigen::VectorXd support_gap;        // gamma_i - support_max_i
};

struct ContainmentReport {
  std::vector<StepContainment> steps;
  double max_violation_fraction() const;
  std::size_t total_violations() const;
  double min_support_gap() const;
};

/// Throws ConfigError when the tube and cloud have different step counts.
ContainmentReport containment_report(const ReachTube<double>& tube, const SampleCloud& cloud,
                                     const ContainmentTolerance& tol);

/// Oracles.
BatchOracle ltv_oracle(std::vector<LtvStep<double>> lifts);
BatchOracle nn_oracle(MlpParameters params, double dt);
BatchOracle quad_oracle(QuadParams params, double dt);

}  // namespace nnreach

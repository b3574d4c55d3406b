#pragma once

// One-hidden-layer tanh perceptron approximating dx/dt = f(x, u), trained with
// a trapezoidal (one-step Adams-Moulton) residual loss.

#include "nnreach/errors.hpp"
#include "nnreach/quadrotor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nnreach {

/// Trainable tensors of the network. Also used as the gradient type.
struct MlpWeights {
  Eigen::MatrixXd W1;  // hidden x (n_state + n_control)
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd W2;  // n_state x hidden
  Eigen::VectorXd b2;  // n_state

  static MlpWeights zeros_like(const MlpWeights& w);
  Eigen::Index size() const { return W1.size() + b1.size() + W2.size() + b2.size(); }
  /// Flattened copy (W1, b1, W2, b2; column-major within each block).
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  bool allFinite() const { return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite(); }
};

/// Optional affine whitening: inputs are mapped to (z - input_shift) .* input_inv_scale,
/// raw network outputs are multiplied by output_scale.
struct Normalization {
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_inv_scale;
  Eigen::VectorXd output_scale;
};

struct MlpParameters {
  int n_state = kStateDim;
  int n_control = kRotorCount;
  int hidden = 256;
  std::string activation = "tanh";
  MlpWeights weights;
  std::optional<Normalization> normalization;
  std::uint64_t seed = 0;
  double final_loss = 0.0;

  int input_dim() const { return n_state + n_control; }
  /// Shapes, activation tag and finiteness; throws IoError on mismatch.
  void validate() const;

  /// All-zero network of the given shape.
  static MlpParameters zeros(int n_state, int n_control, int hidden);
};

/// Network output for one (state, control) pair.
Eigen::VectorXd forward(const MlpParameters& params, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Column-wise forward pass: X is n_state x M, U is n_control x M.
Eigen::MatrixXd forward_batch(const MlpParameters& params, const Eigen::MatrixXd& X, const Eigen::MatrixXd& U);

/// Consecutive samples that carry a control, grouped per trajectory.
/// Column j of `states`/`inputs` is one sample; pair (j, j + 1) contributes a
/// residual when both belong to the same trajectory.
struct MultistepData {
  double dt = 0.1;
  Eigen::MatrixXd states;
  Eigen::MatrixXd inputs;
  std::vector<Eigen::Index> pair_first;
  /// Column ranges [begin, end) of each trajectory.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;

  std::size_t pair_count() const { return pair_first.size(); }

  /// Each trajectory contributes its samples that have a control (the final
  /// state of a trajectory has none and is dropped).
  static MultistepData from_dataset(const TrajectoryDataset& ds);
  /// Generic form: states[k] is n_x x (N_k + 1) or n_x x N_k, inputs[k] is n_u x N_k.
  static MultistepData from_matrices(const std::vector<Eigen::MatrixXd>& states,
                                     const std::vector<Eigen::MatrixXd>& inputs, double dt);
  /// Sub-dataset made of the listed trajectory blocks.
  MultistepData select(const std::vector<std::size_t>& block_ids) const;
};

/// Mean over pairs and state components of the squared trapezoidal residual
///   x_{k+1} - x_k - dt/2 (f(x_k, u_k) + f(x_{k+1}, u_{k+1})).
double multistep_loss(const MlpParameters& params, const MultistepData& data);

struct LossAndGradient {
  double loss = 0.0;
  MlpWeights gradient;
};

/// Loss and its exact gradient by backpropagation.
LossAndGradient loss_and_gradient(const MlpParameters& params, const MultistepData& data);

inline MlpWeights gradient(const MlpParameters& params, const MultistepData& data) {
  return loss_and_gradient(params, data).gradient;
}

struct TrainConfig {
  int epochs = 2000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Trajectories per minibatch; 0 means full batch.
  std::size_t batch_size = 0;
  std::uint64_t seed = 42;
  /// Uniform init in +-init_scale / sqrt(fan_in).
  double init_scale = 1.0;
  int hidden = 256;
  bool normalize = false;

  void validate() const;
};

struct TrainResult {
  MlpParameters params;
  std::vector<double> loss_history;  // one entry per epoch
};

/// Random initialization from config.seed.
MlpParameters initialize(int n_state, int n_control, const TrainConfig& config);

/// Whitening statistics from the data (per-row mean and std of inputs, std of
/// finite-difference derivatives for outputs).
Normalization fit_normalization(const MultistepData& data);

/// Adam on the multistep loss. Throws NumericError with the epoch index when
/// the loss becomes non-finite.
TrainResult train(const MultistepData& data, const TrainConfig& config);
/// Continue training from given parameters.
TrainResult train_from(MlpParameters params, const MultistepData& data, const TrainConfig& config);

/// One RK4 step of the learned field, columns are independent samples.
Eigen::MatrixXd nn_step_batch(const MlpParameters& params, const Eigen::MatrixXd& X, const Eigen::MatrixXd& U,
                              double dt);

/// RK4 rollout of the learned field with zero-order-held controls. Returns
/// controls.size() + 1 states. Throws NumericError with the step index on
/// a non-finite state.
std::vector<Eigen::VectorXd> rollout(const MlpParameters& params, const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& controls, double dt);

}  // namespace nnreach

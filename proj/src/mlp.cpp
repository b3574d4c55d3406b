#include "nnreach/mlp.hpp"

#include "nnreach/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nnreach {

MlpWeights MlpWeights::zeros_like(const MlpWeights& w) {
  return {Eigen::MatrixXd::Zero(w.W1.rows(), w.W1.cols()), Eigen::VectorXd::Zero(w.b1.size()),
          Eigen::MatrixXd::Zero(w.W2.rows(), w.W2.cols()), Eigen::VectorXd::Zero(w.b2.size())};
}

Eigen::VectorXd MlpWeights::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index o = 0;
  flat.segment(o, W1.size()) = W1.reshaped();
  o += W1.size();
  flat.segment(o, b1.size()) = b1;
  o += b1.size();
  flat.segment(o, W2.size()) = W2.reshaped();
  o += W2.size();
  flat.segment(o, b2.size()) = b2;
  return flat;
}

void MlpWeights::unflatten(const Eigen::VectorXd& flat) {
  Eigen::Index o = 0;
  W1.reshaped() = flat.segment(o, W1.size());
  o += W1.size();
  b1 = flat.segment(o, b1.size());
  o += b1.size();
  W2.reshaped() = flat.segment(o, W2.size());
  o += W2.size();
  b2 = flat.segment(o, b2.size());
}

void MlpParameters::validate() const {
  if (n_state < 1 || n_control < 0 || hidden < 1) throw IoError("model: invalid layer sizes");
  if (activation != "tanh") throw IoError("model: unsupported activation '" + activation + "'");
  const auto& w = weights;
  if (w.W1.rows() != hidden || w.W1.cols() != input_dim() || w.b1.size() != hidden || w.W2.rows() != n_state ||
      w.W2.cols() != hidden || w.b2.size() != n_state)
    throw IoError("model: weight shapes do not match layer sizes");
  if (!w.allFinite()) throw IoError("model: non-finite weights");
  if (normalization) {
    const auto& n = *normalization;
    if (n.input_shift.size() != input_dim() || n.input_inv_scale.size() != input_dim() ||
        n.output_scale.size() != n_state)
      throw IoError("model: normalization block has wrong sizes");
    if (!n.input_shift.allFinite() || !n.input_inv_scale.allFinite() || !n.output_scale.allFinite())
      throw IoError("model: non-finite normalization");
  }
}

MlpParameters MlpParameters::zeros(int n_state, int n_control, int hidden) {
  MlpParameters p;
  p.n_state = n_state;
  p.n_control = n_control;
  p.hidden = hidden;
  p.weights = {Eigen::MatrixXd::Zero(hidden, n_state + n_control), Eigen::VectorXd::Zero(hidden),
               Eigen::MatrixXd::Zero(n_state, hidden), Eigen::VectorXd::Zero(n_state)};
  return p;
}

namespace {

// In-place elementwise tanh through the vectorized exp, in column blocks that
// stay in cache; Eigen's double tanh is scalar and dominated training time.
// Below 1e-3 an odd Taylor polynomial keeps full relative precision.
void tanh_inplace(Eigen::MatrixXd& A) {
  constexpr Eigen::Index kBlock = 32;
  Eigen::ArrayXXd e, a2;
  for (Eigen::Index c = 0; c < A.cols(); c += kBlock) {
    const Eigen::Index n = std::min(kBlock, A.cols() - c);
    auto a = A.middleCols(c, n).array();
    e = (-2.0 * a.abs()).exp();
    a2 = a.square();
    a = (a.abs() < 1e-3).select(a * (1.0 - a2 * (1.0 / 3.0 - a2 * (2.0 / 15.0))), ((1.0 - e) / (1.0 + e)) * a.sign());
  }
}

Eigen::MatrixXd stack_inputs(const MlpParameters& params, const Eigen::MatrixXd& X, const Eigen::MatrixXd& U) {
  Eigen::MatrixXd Z(params.input_dim(), X.cols());
  Z.topRows(params.n_state) = X;
  Z.bottomRows(params.n_control) = U;
  if (params.normalization) {
    const auto& n = *params.normalization;
    Z = ((Z.colwise() - n.input_shift).array().colwise() * n.input_inv_scale.array()).matrix();
  }
  return Z;
}

struct ForwardCache {
  Eigen::MatrixXd Z;  // normalized inputs
  Eigen::MatrixXd H;  // hidden activations
  Eigen::MatrixXd F;  // outputs
};

ForwardCache forward_cached(const MlpParameters& params, const Eigen::MatrixXd& X, const Eigen::MatrixXd& U) {
  ForwardCache c;
  c.Z = stack_inputs(params, X, U);
  c.H.noalias() = params.weights.W1 * c.Z;
  c.H.colwise() += params.weights.b1;
  tanh_inplace(c.H);
  c.F.noalias() = params.weights.W2 * c.H;
  c.F.colwise() += params.weights.b2;
  if (params.normalization) c.F = (c.F.array().colwise() * params.normalization->output_scale.array()).matrix();
  return c;
}

}  // namespace

Eigen::MatrixXd forward_batch(const MlpParameters& params, const Eigen::MatrixXd& X, const Eigen::MatrixXd& U) {
  return forward_cached(params, X, U).F;
}

Eigen::VectorXd forward(const MlpParameters& params, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  return forward_batch(params, x, u).col(0);
}

MultistepData MultistepData::from_matrices(const std::vector<Eigen::MatrixXd>& states,
                                           const std::vector<Eigen::MatrixXd>& inputs, double dt) {
  if (states.size() != inputs.size() || states.empty()) throw ConfigError("multistep data: need matching trajectories");
  MultistepData d;
  d.dt = dt;
  Eigen::Index total = 0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (inputs[k].cols() > states[k].cols()) throw ConfigError("multistep data: more inputs than states");
    total += inputs[k].cols();
  }
  const Eigen::Index nx = states.front().rows(), nu = inputs.front().rows();
  d.states.resize(nx, total);
  d.inputs.resize(nu, total);
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Eigen::Index n = inputs[k].cols();
    d.states.middleCols(col, n) = states[k].leftCols(n);
    d.inputs.middleCols(col, n) = inputs[k];
    d.blocks.emplace_back(col, col + n);
    for (Eigen::Index j = 0; j + 1 < n; ++j) d.pair_first.push_back(col + j);
    col += n;
  }
  return d;
}

MultistepData MultistepData::from_dataset(const TrajectoryDataset& ds) {
  std::vector<Eigen::MatrixXd> states, inputs;
  for (const auto& tr : ds.trajectories) {
    Eigen::MatrixXd S(kStateDim, tr.states.size()), U(kRotorCount, tr.inputs.size());
    for (std::size_t j = 0; j < tr.states.size(); ++j) S.col(j) = tr.states[j];
    for (std::size_t j = 0; j < tr.inputs.size(); ++j) U.col(j) = tr.inputs[j];
    states.push_back(std::move(S));
    inputs.push_back(std::move(U));
  }
  return from_matrices(states, inputs, ds.dt);
}

MultistepData MultistepData::select(const std::vector<std::size_t>& block_ids) const {
  std::vector<Eigen::MatrixXd> s, u;
  for (std::size_t b : block_ids) {
    const auto [begin, end] = blocks.at(b);
    s.push_back(states.middleCols(begin, end - begin));
    u.push_back(inputs.middleCols(begin, end - begin));
  }
  return from_matrices(s, u, dt);
}

namespace {

/// Residual matrix (n_state x pairs) for precomputed outputs F.
Eigen::MatrixXd residuals(const MultistepData& data, const Eigen::MatrixXd& F) {
  Eigen::MatrixXd R(data.states.rows(), static_cast<Eigen::Index>(data.pair_count()));
  const double half_dt = 0.5 * data.dt;
  for (Eigen::Index p = 0; p < R.cols(); ++p) {
    const Eigen::Index i = data.pair_first[p];
    R.col(p) = data.states.col(i + 1) - data.states.col(i) - half_dt * (F.col(i) + F.col(i + 1));
  }
  return R;
}

}  // namespace

double multistep_loss(const MlpParameters& params, const MultistepData& data) {
  if (data.pair_count() == 0) return 0.0;
  const Eigen::MatrixXd F = forward_batch(params, data.states, data.inputs);
  const Eigen::MatrixXd R = residuals(data, F);
  return R.squaredNorm() / static_cast<double>(R.size());
}

LossAndGradient loss_and_gradient(const MlpParameters& params, const MultistepData& data) {
  LossAndGradient out;
  out.gradient = MlpWeights::zeros_like(params.weights);
  if (data.pair_count() == 0) return out;

  const ForwardCache c = forward_cached(params, data.states, data.inputs);
  const Eigen::MatrixXd R = residuals(data, c.F);
  const double denom = static_cast<double>(R.size());
  out.loss = R.squaredNorm() / denom;

  // dL/dF: each residual touches the outputs at both ends of its pair.
  Eigen::MatrixXd dF = Eigen::MatrixXd::Zero(c.F.rows(), c.F.cols());
  const double coeff = -data.dt / denom;
  for (Eigen::Index p = 0; p < R.cols(); ++p) {
    const Eigen::Index i = data.pair_first[p];
    dF.col(i) += coeff * R.col(p);
    dF.col(i + 1) += coeff * R.col(p);
  }
  if (params.normalization) dF = (dF.array().colwise() * params.normalization->output_scale.array()).matrix();

  auto& g = out.gradient;
  g.W2.noalias() = dF * c.H.transpose();
  g.b2 = dF.rowwise().sum();
  Eigen::MatrixXd dA;
  dA.noalias() = params.weights.W2.transpose() * dF;
  dA.array() *= (1.0 - c.H.array().square());
  g.W1.noalias() = dA * c.Z.transpose();
  g.b1 = dA.rowwise().sum();
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw ConfigError("train Adam decays must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be > 0");
  if (hidden < 1) throw ConfigError("train.hidden must be >= 1");
  if (!(init_scale > 0.0)) throw ConfigError("train.init_scale must be > 0");
}

MlpParameters initialize(int n_state, int n_control, const TrainConfig& config) {
  MlpParameters p = MlpParameters::zeros(n_state, n_control, config.hidden);
  p.seed = config.seed;
  Rng rng(config.seed);
  auto fill = [&rng](auto& m, double bound) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  };
  const double b1 = config.init_scale / std::sqrt(static_cast<double>(p.input_dim()));
  const double b2 = config.init_scale / std::sqrt(static_cast<double>(p.hidden));
  fill(p.weights.W1, b1);
  fill(p.weights.b1, b1);
  fill(p.weights.W2, b2);
  fill(p.weights.b2, b2);
  return p;
}

Normalization fit_normalization(const MultistepData& data) {
  Normalization n;
  const Eigen::Index nx = data.states.rows(), nu = data.inputs.rows();
  Eigen::MatrixXd Z(nx + nu, data.states.cols());
  Z << data.states, data.inputs;
  const double M = static_cast<double>(Z.cols());
  n.input_shift = Z.rowwise().mean();
  const Eigen::VectorXd var = (Z.colwise() - n.input_shift).rowwise().squaredNorm() / M;
  n.input_inv_scale = var.unaryExpr([](double v) { return v > 1e-24 ? 1.0 / std::sqrt(v) : 1.0; });

  n.output_scale = Eigen::VectorXd::Ones(nx);
  if (data.pair_count() > 0) {
    Eigen::MatrixXd D(nx, static_cast<Eigen::Index>(data.pair_count()));
    for (Eigen::Index p = 0; p < D.cols(); ++p) {
      const Eigen::Index i = data.pair_first[p];
      D.col(p) = (data.states.col(i + 1) - data.states.col(i)) / data.dt;
    }
    const Eigen::VectorXd rms = (D.rowwise().squaredNorm() / static_cast<double>(D.cols())).cwiseSqrt();
    n.output_scale = rms.unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; });
  }
  return n;
}

TrainResult train_from(MlpParameters params, const MultistepData& data, const TrainConfig& config) {
  config.validate();
  if (data.pair_count() == 0) throw ConfigError("train: dataset has no consecutive samples");

  TrainResult result;
  result.loss_history.reserve(config.epochs);
  MlpWeights m = MlpWeights::zeros_like(params.weights);
  MlpWeights v = MlpWeights::zeros_like(params.weights);
  Eigen::VectorXd theta = params.weights.flatten();
  Eigen::VectorXd mflat = m.flatten(), vflat = v.flatten();

  std::vector<std::size_t> order(data.blocks.size());
  std::iota(order.begin(), order.end(), 0);
  const bool full_batch = config.batch_size == 0 || config.batch_size >= data.blocks.size();
  Rng shuffle_rng = Rng::substream(config.seed, 0xB47C);

  std::size_t step = 0;
  auto adam_update = [&](const MlpWeights& grad) {
    ++step;
    const Eigen::VectorXd g = grad.flatten();
    mflat = config.beta1 * mflat + (1.0 - config.beta1) * g;
    vflat = config.beta2 * vflat + (1.0 - config.beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    theta.array() -= config.learning_rate * (mflat.array() / bc1) / ((vflat.array() / bc2).sqrt() + config.epsilon);
    params.weights.unflatten(theta);
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    if (full_batch) {
      const LossAndGradient lg = loss_and_gradient(params, data);
      epoch_loss = lg.loss;
      if (!std::isfinite(epoch_loss)) throw NumericError("training diverged: non-finite loss at epoch", epoch);
      adam_update(lg.gradient);
    } else {
      // Fisher-Yates with the library generator keeps shuffles portable.
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
      double weighted = 0.0;
      std::size_t pairs = 0;
      for (std::size_t s = 0; s < order.size(); s += config.batch_size) {
        const std::size_t e = std::min(order.size(), s + config.batch_size);
        const MultistepData batch = data.select({order.begin() + s, order.begin() + e});
        if (batch.pair_count() == 0) continue;
        const LossAndGradient lg = loss_and_gradient(params, batch);
        if (!std::isfinite(lg.loss)) throw NumericError("training diverged: non-finite loss at epoch", epoch);
        weighted += lg.loss * static_cast<double>(batch.pair_count());
        pairs += batch.pair_count();
        adam_update(lg.gradient);
      }
      epoch_loss = weighted / static_cast<double>(std::max<std::size_t>(pairs, 1));
    }
    result.loss_history.push_back(epoch_loss);
  }

  params.final_loss = multistep_loss(params, data);
  if (!std::isfinite(params.final_loss))
    throw NumericError("training diverged: non-finite final loss", static_cast<std::size_t>(config.epochs));
  result.params = std::move(params);
  return result;
}

TrainResult train(const MultistepData& data, const TrainConfig& config) {
  config.validate();
  MlpParameters params =
      initialize(static_cast<int>(data.states.rows()), static_cast<int>(data.inputs.rows()), config);
  if (config.normalize) params.normalization = fit_normalization(data);
  return train_from(std::move(params), data, config);
}

Eigen::MatrixXd nn_step_batch(const MlpParameters& params, const Eigen::MatrixXd& X, const Eigen::MatrixXd& U,
                              double dt) {
  const double half = 0.5 * dt;
  const Eigen::MatrixXd k1 = forward_batch(params, X, U);
  const Eigen::MatrixXd k2 = forward_batch(params, X + half * k1, U);
  const Eigen::MatrixXd k3 = forward_batch(params, X + half * k2, U);
  const Eigen::MatrixXd k4 = forward_batch(params, X + dt * k3, U);
  return X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<Eigen::VectorXd> rollout(const MlpParameters& params, const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& controls, double dt) {
  if (!(dt > 0.0)) throw NumericError("rollout: dt must be positive");
  std::vector<Eigen::VectorXd> states;
  states.reserve(controls.size() + 1);
  states.push_back(x0);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    Eigen::VectorXd next = nn_step_batch(params, states.back(), controls[k], dt).col(0);
    if (!next.allFinite()) throw NumericError("rollout: non-finite state at step", k + 1);
    states.push_back(std::move(next));
  }
  return states;
}

}  // namespace nnreach

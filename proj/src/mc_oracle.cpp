#include "nnreach/mc_oracle.hpp"

#include "nnreach/rng.hpp"

#include <algorithm>
#include <limits>

namespace nnreach {

std::string to_string(SampleScheme s) {
  switch (s) {
    case SampleScheme::uniform: return "uniform";
    case SampleScheme::vertex: return "vertex";
    case SampleScheme::mixed: return "mixed";
  }
  return "mixed";
}

SampleScheme sample_scheme_from_string(const std::string& s) {
  if (s == "uniform") return SampleScheme::uniform;
  if (s == "vertex") return SampleScheme::vertex;
  if (s == "mixed") return SampleScheme::mixed;
  throw ConfigError("unknown sample scheme '" + s + "' (expected uniform | vertex | mixed)");
}

namespace {

constexpr std::size_t kChunk = 4096;

double random_sign(Rng& rng) { return (rng.next_u64() >> 63) ? 1.0 : -1.0; }

}  // namespace

SampleCloud mc_reach(const BatchOracle& oracle, const BoxSetd& x0,
                     const std::function<BoxSetd(std::size_t)>& omega_at, std::size_t N, std::size_t K,
                     SampleScheme scheme, std::uint64_t seed) {
  if (N < 1) throw ConfigError("mc_reach: need at least one sample");
  if (!x0.valid()) throw ConfigError("mc_reach: invalid initial box");
  const Eigen::Index nx = x0.dim();
  const Eigen::Index nu = omega_at(0).dim();

  SampleCloud cloud;
  cloud.samples = N;
  cloud.seed = seed;
  cloud.scheme = scheme;
  cloud.steps.assign(K + 1, Eigen::MatrixXd(nx, static_cast<Eigen::Index>(N)));

  // Controls are stored normalized to [-1, 1] and mapped onto omega_at(k)
  // when the step is simulated, so time-varying centers are honored.
  std::vector<Eigen::MatrixXd> unit_controls(K, Eigen::MatrixXd(nu, static_cast<Eigen::Index>(N)));
  for (std::size_t i = 0; i < N; ++i) {
    Rng rng = Rng::substream(seed, i);
    const bool vertex = scheme == SampleScheme::vertex || (scheme == SampleScheme::mixed && (i % 2 == 1));
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < nx; ++j)
      cloud.steps[0](j, col) = x0.center(j) + x0.half_width(j) * (vertex ? random_sign(rng) : rng.uniform(-1.0, 1.0));
    if (vertex) {
      Eigen::VectorXd before(nu), after(nu);
      for (Eigen::Index j = 0; j < nu; ++j) before(j) = random_sign(rng);
      for (Eigen::Index j = 0; j < nu; ++j) after(j) = random_sign(rng);
      const std::size_t switch_at = static_cast<std::size_t>(rng.below(K + 1));
      for (std::size_t k = 0; k < K; ++k) unit_controls[k].col(col) = k < switch_at ? before : after;
    } else {
      for (std::size_t k = 0; k < K; ++k)
        for (Eigen::Index j = 0; j < nu; ++j) unit_controls[k](j, col) = rng.uniform(-1.0, 1.0);
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    const BoxSetd omega = omega_at(k);
    for (std::size_t s = 0; s < N; s += kChunk) {
      const auto begin = static_cast<Eigen::Index>(s);
      const auto n = static_cast<Eigen::Index>(std::min(kChunk, N - s));
      Eigen::MatrixXd U = (unit_controls[k].middleCols(begin, n).array().colwise() * omega.half_width.array()).matrix();
      U.colwise() += omega.center;
      const Eigen::MatrixXd next = oracle(cloud.steps[k].middleCols(begin, n), U, k);
      for (Eigen::Index c = 0; c < n; ++c)
        if (!next.col(c).allFinite())
          throw NumericError("mc_reach: non-finite state at step " + std::to_string(k + 1) + " for sample",
                             static_cast<std::size_t>(begin + c));
      cloud.steps[k + 1].middleCols(begin, n) = next;
    }
  }
  return cloud;
}

double ContainmentReport::max_violation_fraction() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.violation_fraction);
  return m;
}

std::size_t ContainmentReport::total_violations() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.violations;
  return n;
}

double ContainmentReport::min_support_gap() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : steps)
    if (s.support_gap.size() > 0) m = std::min(m, s.support_gap.minCoeff());
  return m;
}

ContainmentReport containment_report(const ReachTube<double>& tube, const SampleCloud& cloud,
                                     const ContainmentTolerance& tol) {
  if (tube.fronts.size() != cloud.steps.size())
    throw ConfigError("containment_report: tube has " + std::to_string(tube.fronts.size()) + " steps, cloud has " +
                      std::to_string(cloud.steps.size()));
  ContainmentReport report;
  for (std::size_t k = 0; k < tube.fronts.size(); ++k) {
    const auto& front = tube.fronts[k];
    const Eigen::MatrixXd& X = cloud.steps[k];
    if (X.rows() != front.dim()) throw ConfigError("containment_report: dimension mismatch");

    Eigen::VectorXd tolerance = Eigen::VectorXd::Constant(front.size(), tol.absolute);
    if (tol.range_fraction > 0.0) {
      const Eigen::VectorXd range = X.rowwise().maxCoeff() - X.rowwise().minCoeff();
      tolerance += tol.range_fraction * (front.normals.cwiseAbs().transpose() * range);
    }

    const Eigen::MatrixXd proj = front.normals.transpose() * X;  // m x N
    const Eigen::MatrixXd excess = proj.colwise() - front.offsets;
    StepContainment sc;
    sc.k = k;
    sc.support_max = proj.rowwise().maxCoeff();
    sc.support_gap = front.offsets - sc.support_max;
    sc.max_signed_violation = excess.maxCoeff();
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      if (((excess.col(c) - tolerance).array() > 0.0).any()) ++sc.violations;
    sc.violation_fraction = static_cast<double>(sc.violations) / static_cast<double>(X.cols());
    report.steps.push_back(std::move(sc));
  }
  return report;
}

BatchOracle ltv_oracle(std::vector<LtvStep<double>> lifts) {
  return [lifts = std::move(lifts)](const Eigen::MatrixXd& X, const Eigen::MatrixXd& U, std::size_t k) {
    const auto& s = lifts.at(k);
    Eigen::MatrixXd next = s.A * X;
    next.noalias() += s.B * U;
    return next;
  };
}

BatchOracle nn_oracle(MlpParameters params, double dt) {
  return [params = std::move(params), dt](const Eigen::MatrixXd& X, const Eigen::MatrixXd& U, std::size_t) {
    return nn_step_batch(params, X, U, dt);
  };
}

BatchOracle quad_oracle(QuadParams params, double dt) {
  return [params, dt](const Eigen::MatrixXd& X, const Eigen::MatrixXd& U, std::size_t) {
    Eigen::MatrixXd next(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      try {
        next.col(c) = integrate_step<double>(X.col(c), U.col(c), dt, params);
      } catch (const NumericError&) {
        next.col(c).setConstant(std::numeric_limits<double>::quiet_NaN());
      }
    }
    return next;
  };
}

}  // namespace nnreach

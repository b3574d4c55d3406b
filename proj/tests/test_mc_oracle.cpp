#include "nnreach/mc_oracle.hpp"
#include "nnreach/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nnreach;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = rng.uniform(lo, hi);
  return M;
}

LtvStep<double> lift(const MatrixXd& A, const MatrixXd& B, std::size_t k = 0) {
  LtvStep<double> s;
  s.A = A;
  s.B = B;
  s.k = k;
  return s;
}

BoxSetd unit_box(Eigen::Index n, double h = 1.0) { return BoxSetd(VectorXd::Zero(n), VectorXd::Constant(n, h)); }

std::function<BoxSetd(std::size_t)> fixed(const BoxSetd& b) {
  return [b](std::size_t) { return b; };
}

const BatchOracle zero_dynamics = [](const MatrixXd& X, const MatrixXd&, std::size_t) { return X; };

struct DoubleIntegrator {
  MatrixXd A = (MatrixXd(2, 2) << 1.0, 0.1, 0.0, 1.0).finished();
  MatrixXd B = (MatrixXd(2, 1) << 0.005, 0.1).finished();
  BoxSetd x0 = BoxSetd((VectorXd(2) << 0.0, 0.0).finished(), (VectorXd(2) << 0.5, 0.2).finished());
  BoxSetd omega = unit_box(1);
};

}  // namespace

TEST(McReach, ZeroDynamicsKeepsInitialDraws) {
  const auto cloud = mc_reach(zero_dynamics, unit_box(3), fixed(unit_box(2)), 500, 6, SampleScheme::mixed, 1);
  ASSERT_EQ(cloud.steps.size(), 7u);
  for (const auto& X : cloud.steps) EXPECT_EQ(X, cloud.steps[0]);
  EXPECT_EQ(cloud.samples, 500u);
  EXPECT_EQ(cloud.seed, 1u);
}

TEST(McReach, SeedDeterminismAndPrefixStability) {
  const DoubleIntegrator di;
  const BatchOracle f = ltv_oracle(std::vector<LtvStep<double>>(8, lift(di.A, di.B)));
  const auto a = mc_reach(f, di.x0, fixed(di.omega), 300, 8, SampleScheme::mixed, 5);
  const auto b = mc_reach(f, di.x0, fixed(di.omega), 300, 8, SampleScheme::mixed, 5);
  const auto c = mc_reach(f, di.x0, fixed(di.omega), 300, 8, SampleScheme::mixed, 6);
  const auto small = mc_reach(f, di.x0, fixed(di.omega), 100, 8, SampleScheme::mixed, 5);
  for (std::size_t k = 0; k <= 8; ++k) {
    EXPECT_EQ(a.steps[k], b.steps[k]);
    EXPECT_NE(a.steps[k], c.steps[k]);
    EXPECT_EQ(a.steps[k].leftCols(100), small.steps[k]);
  }
}

TEST(McReach, SchemesRespectTheirSets) {
  const BoxSetd x0(VectorXd::LinSpaced(3, -1, 1), VectorXd::Constant(3, 0.5));
  const BoxSetd omega(VectorXd::Constant(2, 2.0), VectorXd::Constant(2, 0.25));
  std::vector<MatrixXd> seen;
  const BatchOracle record = [&seen](const MatrixXd& X, const MatrixXd& U, std::size_t) {
    seen.push_back(U);
    return X;
  };
  for (SampleScheme s : {SampleScheme::uniform, SampleScheme::vertex, SampleScheme::mixed}) {
    seen.clear();
    const auto cloud = mc_reach(record, x0, fixed(omega), 200, 4, s, 2);
    for (Eigen::Index i = 0; i < 200; ++i) {
      const bool vertex = s == SampleScheme::vertex || (s == SampleScheme::mixed && i % 2 == 1);
      const VectorXd x = cloud.steps[0].col(i);
      EXPECT_TRUE(x0.contains(x, 1e-15));
      if (vertex) EXPECT_LE(((x - x0.center).cwiseAbs() - x0.half_width).cwiseAbs().maxCoeff(), 1e-15);
      std::size_t switches = 0;
      for (std::size_t k = 0; k < seen.size(); ++k) {
        const VectorXd u = seen[k].col(i);
        EXPECT_TRUE(omega.contains(u, 1e-15));
        if (vertex) {
          EXPECT_LE(((u - omega.center).cwiseAbs() - omega.half_width).cwiseAbs().maxCoeff(), 1e-15);
          if (k > 0 && u != VectorXd(seen[k - 1].col(i))) ++switches;
        }
      }
      EXPECT_LE(switches, 1u);
    }
  }
}

TEST(McReach, TimeVaryingControlCenter) {
  std::vector<MatrixXd> seen;
  const BatchOracle record = [&seen](const MatrixXd& X, const MatrixXd& U, std::size_t) {
    seen.push_back(U);
    return X;
  };
  const auto omega_at = [](std::size_t k) { return BoxSetd(VectorXd::Constant(1, 10.0 * k), VectorXd::Constant(1, 0.5)); };
  mc_reach(record, unit_box(2), omega_at, 50, 3, SampleScheme::mixed, 3);
  ASSERT_EQ(seen.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k)
    for (Eigen::Index i = 0; i < 50; ++i) EXPECT_TRUE(omega_at(k).contains(VectorXd(seen[k].col(i)), 1e-15));
}

TEST(McReach, VertexSchemeApproachesSupportFromBelow) {
  const DoubleIntegrator di;
  const std::size_t K = 10;
  const std::vector<LtvStep<double>> lifts(K, lift(di.A, di.B));
  MatrixXd dirs(2, 8);
  for (int i = 0; i < 8; ++i) dirs.col(i) << std::cos(0.8 * i + 0.3), std::sin(0.8 * i + 0.3);
  const auto tube = reach_sequence<double>(init_contacts(di.x0, dirs), lifts, di.omega, K);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (std::size_t N : {10u, 100u, 10000u}) {
    const auto cloud = mc_reach(ltv_oracle(lifts), di.x0, fixed(di.omega), N, K, SampleScheme::vertex, 11);
    const auto report = containment_report(tube, cloud, {});
    const double gap = report.steps.back().support_gap.maxCoeff();
    EXPECT_GE(report.min_support_gap(), -1e-9);
    EXPECT_LE(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LE(prev_gap, 1e-9);
}

TEST(McReach, SupportMaximaMonotoneInSampleCount) {
  Rng rng(4);
  std::vector<LtvStep<double>> lifts;
  for (std::size_t k = 0; k < 6; ++k)
    lifts.push_back(lift(MatrixXd::Identity(3, 3) + 0.2 * random_matrix(rng, 3, 3), random_matrix(rng, 3, 2), k));
  const auto tube = reach_sequence<double>(init_contacts(unit_box(3), random_matrix(rng, 3, 12)), lifts, unit_box(2, 0.3), 6);
  VectorXd prev;
  for (std::size_t N : {1u, 7u, 50u, 400u, 3000u}) {
    const auto report = containment_report(tube, mc_reach(ltv_oracle(lifts), unit_box(3), fixed(unit_box(2, 0.3)), N, 6,
                                                           SampleScheme::mixed, 8),
                                           {});
    VectorXd all(0);
    for (const auto& s : report.steps) {
      all.conservativeResize(all.size() + s.support_max.size());
      all.tail(s.support_max.size()) = s.support_max;
    }
    if (prev.size() > 0) EXPECT_TRUE((all.array() >= prev.array()).all()) << "N = " << N;
    prev = all;
  }
}

TEST(McReach, OracleBlowUpCarriesSampleIndex) {
  const BatchOracle bad = [](const MatrixXd& X, const MatrixXd&, std::size_t k) {
    MatrixXd Y = X;
    if (k == 2) Y(0, 37) = std::nan("");
    return Y;
  };
  try {
    mc_reach(bad, unit_box(2), fixed(unit_box(1)), 100, 4, SampleScheme::uniform, 1);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.index().value_or(0), 37u);
  }
  EXPECT_THROW(mc_reach(zero_dynamics, unit_box(2), fixed(unit_box(1)), 0, 4, SampleScheme::uniform, 1), ConfigError);
}

TEST(Containment, MatchedLtvHasNoViolations) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<LtvStep<double>> lifts;
    const std::size_t K = 5 + 5 * static_cast<std::size_t>(trial);
    for (std::size_t k = 0; k < K; ++k)
      lifts.push_back(lift(MatrixXd::Identity(4, 4) + 0.15 * random_matrix(rng, 4, 4), random_matrix(rng, 4, 2), k));
    const BoxSetd x0(random_matrix(rng, 4, 1), VectorXd::Constant(4, 0.3));
    const BoxSetd omega(random_matrix(rng, 2, 1), VectorXd::Constant(2, 0.25));
    const auto tube = reach_sequence<double>(init_contacts(x0, random_matrix(rng, 4, 20)), lifts, omega, K);
    for (SampleScheme s : {SampleScheme::uniform, SampleScheme::vertex, SampleScheme::mixed}) {
      const auto cloud = mc_reach(ltv_oracle(lifts), x0, fixed(omega), 2000, K, s, 100 + trial);
      const auto report = containment_report(tube, cloud, {1e-9, 0.0});
      EXPECT_EQ(report.total_violations(), 0u) << "trial " << trial << " scheme " << to_string(s);
      EXPECT_EQ(report.max_violation_fraction(), 0.0);
    }
  }
}

TEST(Containment, ContactPointsAsCloud) {
  Rng rng(6);
  std::vector<LtvStep<double>> lifts;
  for (std::size_t k = 0; k < 8; ++k)
    lifts.push_back(lift(MatrixXd::Identity(3, 3) + 0.2 * random_matrix(rng, 3, 3), random_matrix(rng, 3, 1), k));
  const auto tube = reach_sequence<double>(init_contacts(unit_box(3), random_matrix(rng, 3, 15)), lifts, unit_box(1), 8);
  SampleCloud cloud;
  for (const auto& f : tube.fronts) cloud.steps.push_back(f.contacts);
  const auto report = containment_report(tube, cloud, {});
  EXPECT_EQ(report.total_violations(), 0u);
  // each hyperplane is attained by its own contact point
  EXPECT_LE(std::abs(report.min_support_gap()), 1e-9);
  for (const auto& s : report.steps) EXPECT_LE(s.support_gap.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Containment, RangeToleranceFormula) {
  ReachTube<double> tube;
  tube.fronts.push_back(init_contacts(unit_box(2)));
  SampleCloud cloud;
  // per-axis ranges 2.1 and 1.0; tolerance on axis faces = 1e-9 + 0.02 * range
  MatrixXd X(2, 4);
  X << -1.0, 1.1, 0.0, 0.0, 0.0, 0.0, -0.5, 0.5;
  cloud.steps = {X};
  EXPECT_EQ(containment_report(tube, cloud, {1e-9, 0.0}).steps[0].violations, 1u);
  EXPECT_EQ(containment_report(tube, cloud, {1e-9, 0.02}).steps[0].violations, 1u);  // 0.1 > 0.042
  EXPECT_EQ(containment_report(tube, cloud, {1e-9, 0.05}).steps[0].violations, 0u);  // 0.1 <= 0.105
  const auto r = containment_report(tube, cloud, {});
  EXPECT_NEAR(r.steps[0].max_signed_violation, 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(r.steps[0].violation_fraction, 0.25);
}

TEST(Containment, MisalignedLengthsRaise) {
  ReachTube<double> tube;
  tube.fronts.push_back(init_contacts(unit_box(2)));
  SampleCloud cloud;
  cloud.steps = {MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 3)};
  EXPECT_THROW(containment_report(tube, cloud, {}), ConfigError);
  cloud.steps = {MatrixXd::Zero(3, 3)};
  EXPECT_THROW(containment_report(tube, cloud, {}), ConfigError);
}

TEST(Oracles, QuadOracleMatchesIntegrateStep) {
  const QuadParams p;
  Rng rng(7);
  MatrixXd X = 0.1 * random_matrix(rng, 12, 5), U = MatrixXd::Constant(4, 5, p.hover_speed()) + 0.2 * random_matrix(rng, 4, 5);
  const MatrixXd Y = quad_oracle(p, 0.1)(X, U, 0);
  for (Eigen::Index c = 0; c < 5; ++c)
    EXPECT_EQ(VectorXd(Y.col(c)), VectorXd(integrate_step<double>(X.col(c), U.col(c), 0.1, p)));
}

TEST(Oracles, NnOracleMatchesRollout) {
  Rng rng(8);
  MlpParameters params = MlpParameters::zeros(12, 4, 16);
  VectorXd theta = params.weights.flatten();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = rng.uniform(-0.3, 0.3);
  params.weights.unflatten(theta);
  const MatrixXd X = random_matrix(rng, 12, 4), U = random_matrix(rng, 4, 4);
  const MatrixXd Y = nn_oracle(params, 0.1)(X, U, 0);
  for (Eigen::Index c = 0; c < 4; ++c) {
    const auto xs = rollout(params, X.col(c), {VectorXd(U.col(c))}, 0.1);
    EXPECT_LE((Y.col(c) - xs[1]).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Oracles, SchemeNames) {
  for (SampleScheme s : {SampleScheme::uniform, SampleScheme::vertex, SampleScheme::mixed})
    EXPECT_EQ(sample_scheme_from_string(to_string(s)), s);
  EXPECT_THROW(sample_scheme_from_string("sobol"), ConfigError);
}

#pragma once

// Dynamic mode decomposition with control over short moving windows: excite a
// one-step dynamics oracle, stack the snapshots and solve the least-squares
// problem  X' = [A B] [X; U]  with an SVD-truncated pseudo-inverse.

#include "nnreach/errors.hpp"
#include "nnreach/sets.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cstddef>
#include <functional>
#include <vector>

namespace nnreach {

/// Discrete one-step map x_{k+1} = F(x_k, u_k).
template <typename Scalar>
using StepOracle = std::function<VectorX<Scalar>(const VectorX<Scalar>&, const VectorX<Scalar>&)>;

/// Control for window column j.
template <typename Scalar>
using ColumnSampler = std::function<VectorX<Scalar>(std::size_t)>;

template <typename Scalar>
struct SnapshotWindow {
  MatrixX<Scalar> Xi;       // n_x x (w + 1): x_k .. x_{k+w}
  MatrixX<Scalar> Upsilon;  // n_u x (w + 1): column j produced Xi column j + 1
  double dt = 0.0;
  std::size_t start = 0;

  Eigen::Index width() const { return Xi.cols() - 1; }
  Eigen::Index n_x() const { return Xi.rows(); }
  Eigen::Index n_u() const { return Upsilon.rows(); }
};

template <typename Scalar>
struct LtvStep {
  MatrixX<Scalar> A;
  MatrixX<Scalar> B;
  std::size_t k = 0;
  Eigen::Index rank = 0;              // retained singular values
  Scalar smallest_retained_sv = 0;
  Scalar residual = 0;                // ||X' - [A B][X; U]||_F on the fitted window
  Eigen::Index window = 0;

  VectorX<Scalar> predict(const VectorX<Scalar>& x, const VectorX<Scalar>& u) const { return A * x + B * u; }
};

/// Regularizer used when the stacked snapshot matrix is rank deficient.
/// Among all least-squares minimizers, `none` returns the minimum Frobenius
/// norm [A B]; `identity` returns the one closest to [I 0]. Both coincide
/// when [X; U] has full row rank.
enum class LiftPrior { none, identity };

struct FitOptions {
  double svd_tol = 1e-10;
  LiftPrior prior = LiftPrior::none;
};

/// Iterates `oracle` w steps from x_k under controls from `sampler`.
/// The final Upsilon column is drawn too so both matrices have w + 1 columns.
template <typename Scalar>
SnapshotWindow<Scalar> build_window(const StepOracle<Scalar>& oracle, const VectorX<Scalar>& x_k,
                                    const ColumnSampler<Scalar>& sampler, Eigen::Index w, double dt,
                                    std::size_t start = 0) {
  if (w < 1) throw ConfigError("build_window: width must be >= 1");
  SnapshotWindow<Scalar> win;
  win.dt = dt;
  win.start = start;
  const VectorX<Scalar> u0 = sampler(0);
  win.Xi.resize(x_k.size(), w + 1);
  win.Upsilon.resize(u0.size(), w + 1);
  win.Xi.col(0) = x_k;
  win.Upsilon.col(0) = u0;
  for (Eigen::Index j = 0; j < w; ++j) {
    if (j > 0) win.Upsilon.col(j) = sampler(static_cast<std::size_t>(j));
    win.Xi.col(j + 1) = oracle(win.Xi.col(j), win.Upsilon.col(j));
    if (!win.Xi.col(j + 1).allFinite()) throw NumericError("build_window: oracle produced a non-finite state", j + 1);
  }
  win.Upsilon.col(w) = sampler(static_cast<std::size_t>(w));
  return win;
}

/// SVD-truncated pseudo-inverse. Singular values <= tol * sigma_max are
/// dropped. Returns the retained rank and smallest retained value through
/// the out parameters.
template <typename Scalar>
MatrixX<Scalar> truncated_pinv(const MatrixX<Scalar>& M, double tol, Eigen::Index* rank = nullptr,
                               Scalar* smallest = nullptr) {
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Scalar smax = s.size() > 0 ? s(0) : Scalar(0);
  Eigen::Index r = 0;
  if (smax > Scalar(0))
    while (r < s.size() && s(r) > Scalar(tol) * smax) ++r;
  if (rank) *rank = r;
  if (smallest) *smallest = r > 0 ? s(r - 1) : Scalar(0);
  if (r == 0) return MatrixX<Scalar>::Zero(M.cols(), M.rows());
  return svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal() * svd.matrixU().leftCols(r).transpose();
}

/// Least-squares lift of one window.
template <typename Scalar>
LtvStep<Scalar> fit(const SnapshotWindow<Scalar>& window, const FitOptions& options = {}) {
  const Eigen::Index w = window.width(), nx = window.n_x(), nu = window.n_u();
  if (w < 1) throw ConfigError("fit: window width must be >= 1");
  if (window.Upsilon.cols() < w) throw ConfigError("fit: input snapshot has too few columns");
  if (!window.Xi.allFinite() || !window.Upsilon.allFinite()) throw NumericError("fit: non-finite snapshot", window.start);

  MatrixX<Scalar> Z(nx + nu, w);
  Z.topRows(nx) = window.Xi.leftCols(w);
  Z.bottomRows(nu) = window.Upsilon.leftCols(w);
  const MatrixX<Scalar> Y = window.Xi.rightCols(w);

  LtvStep<Scalar> step;
  step.k = window.start;
  step.window = w;
  const MatrixX<Scalar> Zp = truncated_pinv<Scalar>(Z, options.svd_tol, &step.rank, &step.smallest_retained_sv);
  if (step.rank == 0) throw DegenerateWindowError("fit: every singular value of the snapshot is below threshold", window.start);

  MatrixX<Scalar> Gamma;
  if (options.prior == LiftPrior::identity) {
    MatrixX<Scalar> G0 = MatrixX<Scalar>::Zero(nx, nx + nu);
    G0.leftCols(nx).setIdentity();
    Gamma = G0 + (Y - G0 * Z) * Zp;
  } else {
    Gamma = Y * Zp;
  }
  step.A = Gamma.leftCols(nx);
  step.B = Gamma.rightCols(nu);
  step.residual = (Y - Gamma * Z).norm();
  return step;
}

template <typename Scalar>
struct SlidingFitResult {
  std::vector<LtvStep<Scalar>> steps;
  std::vector<double> wall_seconds;
};

/// For k = 0..K-1: build a window at x_path[k] with sampler_for(k), fit it.
template <typename Scalar>
SlidingFitResult<Scalar> sliding_fit(const StepOracle<Scalar>& oracle, const std::vector<VectorX<Scalar>>& x_path,
                                     const std::function<ColumnSampler<Scalar>(std::size_t)>& sampler_for,
                                     Eigen::Index w, double dt, std::size_t K, const FitOptions& options = {}) {
  if (K < 1) throw ConfigError("sliding_fit: horizon must be >= 1");
  if (x_path.size() < K) throw ConfigError("sliding_fit: state path shorter than horizon");
  SlidingFitResult<Scalar> out;
  out.steps.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out.steps.push_back(fit(build_window(oracle, x_path[k], sampler_for(k), w, dt, k), options));
    } catch (const DegenerateWindowError& e) {
      throw DegenerateWindowError(std::string("sliding_fit: ") + e.what(), k);
    } catch (const NumericError& e) {
      throw NumericError(std::string("sliding_fit: ") + e.what(), k);
    }
    out.wall_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return out;
}

}  // namespace nnreach

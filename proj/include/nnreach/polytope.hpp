#pragma once

// Polytopic reachable-set approximation for discrete linear time-varying
// lifts. Each supporting hyperplane <c_i, x> = gamma_i carries a contact point
// x*_i. Normals follow the discrete costate recursion A^T c_next ∝ c, contact
// points follow the lift under the bang-bang control maximizing <c_next, B u>.
// The hull of the contact points is an inner approximation, the intersection
// of the halfspaces an outer approximation.

#include "nnreach/dmdc.hpp"
#include "nnreach/errors.hpp"
#include "nnreach/sets.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace nnreach {

template <typename Scalar>
struct ContactFront {
  MatrixX<Scalar> normals;   // n_x x m, unit columns c_i
  VectorX<Scalar> offsets;   // gamma_i
  MatrixX<Scalar> contacts;  // n_x x m, x*_i
  MatrixX<Scalar> controls;  // n_u x m, u*_i that produced this front (empty at k = 0)
  std::size_t k = 0;

  Eigen::Index size() const { return normals.cols(); }
  Eigen::Index dim() const { return normals.rows(); }
  VectorX<Scalar> centroid() const { return contacts.rowwise().mean(); }
};

template <typename Scalar>
struct ReachTube {
  std::vector<ContactFront<Scalar>> fronts;
};

/// Box contact for direction c: upper face where c_j > 0, lower where c_j < 0,
/// center where c_j == 0.
template <typename Scalar>
VectorX<Scalar> box_support_point(const BoxSet<Scalar>& box, const VectorX<Scalar>& c) {
  VectorX<Scalar> x = box.center;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (c(j) > Scalar(0)) x(j) += box.half_width(j);
    else if (c(j) < Scalar(0)) x(j) -= box.half_width(j);
  }
  return x;
}

/// The 2n face normals of an n-dimensional box, ordered +e_0, -e_0, +e_1, ...
template <typename Scalar>
MatrixX<Scalar> axis_normals(Eigen::Index n) {
  MatrixX<Scalar> N = MatrixX<Scalar>::Zero(n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    N(j, 2 * j) = Scalar(1);
    N(j, 2 * j + 1) = Scalar(-1);
  }
  return N;
}

/// Supporting hyperplanes of a full-dimensional box. With no explicit
/// directions the 2n face normals are used and each contact is the centroid
/// of its face. Directions are normalized to unit length.
template <typename Scalar>
ContactFront<Scalar> init_contacts(const BoxSet<Scalar>& x0, const MatrixX<Scalar>& directions = MatrixX<Scalar>()) {
  if (!x0.valid()) throw ConfigError("init_contacts: invalid box");
  for (Eigen::Index j = 0; j < x0.dim(); ++j)
    if (!(x0.half_width(j) > Scalar(0))) throw DegenerateSetError("init_contacts: zero-width face on axis", j);

  ContactFront<Scalar> f;
  f.normals = directions.size() == 0 ? axis_normals<Scalar>(x0.dim()) : directions;
  if (f.normals.rows() != x0.dim()) throw ConfigError("init_contacts: direction dimension mismatch");
  const Eigen::Index m = f.normals.cols();
  f.contacts.resize(x0.dim(), m);
  f.offsets.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar n = f.normals.col(i).norm();
    if (!(n > Scalar(0))) throw ConfigError("init_contacts: zero direction");
    f.normals.col(i) /= n;
    f.contacts.col(i) = box_support_point<Scalar>(x0, f.normals.col(i));
    f.offsets(i) = f.normals.col(i).dot(f.contacts.col(i));
  }
  return f;
}

/// Bang-bang maximizer of <c_next, B u> over a box; a zero switching
/// component selects the box center.
template <typename Scalar>
VectorX<Scalar> optimal_control(const VectorX<Scalar>& c_next, const MatrixX<Scalar>& B, const BoxSet<Scalar>& omega) {
  const VectorX<Scalar> s = B.transpose() * c_next;
  VectorX<Scalar> u = omega.center;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s(j) > Scalar(0)) u(j) += omega.half_width(j);
    else if (s(j) < Scalar(0)) u(j) -= omega.half_width(j);
  }
  return u;
}

struct PropagateOptions {
  double max_condition = 1e12;
  /// Worker threads for the per-hyperplane map; <= 1 runs sequentially.
  unsigned threads = 1;
};

/// 2-norm condition number of a square matrix.
template <typename Scalar>
Scalar condition_number(const MatrixX<Scalar>& A) {
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return Scalar(0);
  const Scalar smin = s(s.size() - 1);
  return smin > Scalar(0) ? s(0) / smin : std::numeric_limits<Scalar>::infinity();
}

namespace detail {

template <typename Scalar>
void propagate_one(const ContactFront<Scalar>& front, const LtvStep<Scalar>& step,
                   const Eigen::PartialPivLU<MatrixX<Scalar>>& adjoint, const BoxSet<Scalar>& omega, Eigen::Index i,
                   ContactFront<Scalar>& out) {
  VectorX<Scalar> c = adjoint.solve(front.normals.col(i));
  c /= c.norm();
  const VectorX<Scalar> u = optimal_control<Scalar>(c, step.B, omega);
  const VectorX<Scalar> x = step.A * front.contacts.col(i) + step.B * u;
  out.normals.col(i) = c;
  out.contacts.col(i) = x;
  out.controls.col(i) = u;
  out.offsets(i) = c.dot(x);
}

template <typename F>
void parallel_for(Eigen::Index n, unsigned threads, F&& body) {
  if (threads <= 1 || n < 2) {
    for (Eigen::Index i = 0; i < n; ++i) body(i);
    return;
  }
  const Eigen::Index workers = std::min<Eigen::Index>(threads, n);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (Eigen::Index w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (Eigen::Index i = w; i < n; i += workers) body(i);
    });
}

}  // namespace detail

/// One step of the support recursion through x' = A x + B u, u in omega.
/// Throws IllConditionedLiftError when cond(A) exceeds the limit.
template <typename Scalar>
ContactFront<Scalar> propagate_front(const ContactFront<Scalar>& front, const LtvStep<Scalar>& step,
                                     const BoxSet<Scalar>& omega, const PropagateOptions& options = {}) {
  const Eigen::Index n = front.dim(), m = front.size();
  if (step.A.rows() != n || step.A.cols() != n || step.B.rows() != n || step.B.cols() != omega.dim())
    throw ConfigError("propagate_front: lift shape does not match front/control set");
  const Scalar cond = condition_number<Scalar>(step.A);
  if (!(cond <= Scalar(options.max_condition)))
    throw IllConditionedLiftError("propagate_front: state matrix is ill-conditioned", step.k, static_cast<double>(cond));

  const Eigen::PartialPivLU<MatrixX<Scalar>> adjoint(step.A.transpose());
  ContactFront<Scalar> out;
  out.k = front.k + 1;
  out.normals.resize(n, m);
  out.contacts.resize(n, m);
  out.controls.resize(omega.dim(), m);
  out.offsets.resize(m);
  detail::parallel_for(m, options.threads, [&](Eigen::Index i) { detail::propagate_one(front, step, adjoint, omega, i, out); });
  return out;
}

/// Folds propagate_front over the first K lifts; omega_at(k) is the control
/// box active on [t_k, t_{k+1}).
template <typename Scalar>
ReachTube<Scalar> reach_sequence(const ContactFront<Scalar>& front0, const std::vector<LtvStep<Scalar>>& lifts,
                                 const std::function<BoxSet<Scalar>(std::size_t)>& omega_at, std::size_t K,
                                 const PropagateOptions& options = {}) {
  if (K > lifts.size()) throw ConfigError("reach_sequence: horizon exceeds number of lifts");
  ReachTube<Scalar> tube;
  tube.fronts.reserve(K + 1);
  tube.fronts.push_back(front0);
  for (std::size_t k = 0; k < K; ++k) {
    try {
      tube.fronts.push_back(propagate_front(tube.fronts.back(), lifts[k], omega_at(k), options));
    } catch (const IllConditionedLiftError& e) {
      throw IllConditionedLiftError(e.what(), k, e.condition());
    }
  }
  return tube;
}

template <typename Scalar>
ReachTube<Scalar> reach_sequence(const ContactFront<Scalar>& front0, const std::vector<LtvStep<Scalar>>& lifts,
                                 const BoxSet<Scalar>& omega, std::size_t K, const PropagateOptions& options = {}) {
  return reach_sequence<Scalar>(front0, lifts, [&omega](std::size_t) { return omega; }, K, options);
}

/// <c_i, p> <= gamma_i + tol for every hyperplane.
template <typename Scalar>
bool outer_contains(const ContactFront<Scalar>& front, const VectorX<Scalar>& point, Scalar tol) {
  return ((front.normals.transpose() * point - front.offsets).array() <= tol).all();
}

/// Coordinate pair used for 2-D projections.
struct ProjectionPlane {
  int a = 0;
  int b = 1;
  std::string name = "xy";
};

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Polygon = std::vector<Point2<Scalar>>;

/// Andrew's monotone chain. Counterclockwise, collinear and duplicate points
/// dropped; degenerate inputs give one or two vertices.
template <typename Scalar>
Polygon<Scalar> convex_hull_2d(Polygon<Scalar> pts) {
  auto less = [](const Point2<Scalar>& p, const Point2<Scalar>& q) {
    return p.x() < q.x() || (p.x() == q.x() && p.y() < q.y());
  };
  std::sort(pts.begin(), pts.end(), less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;

  auto cross = [](const Point2<Scalar>& o, const Point2<Scalar>& a, const Point2<Scalar>& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  Polygon<Scalar> hull(2 * pts.size());
  std::size_t h = 0;
  for (const auto& p : pts) {
    while (h >= 2 && cross(hull[h - 2], hull[h - 1], p) <= Scalar(0)) --h;
    hull[h++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = h + 1; i-- > 0;) {
    while (h >= lower && cross(hull[h - 2], hull[h - 1], pts[i]) <= Scalar(0)) --h;
    hull[h++] = pts[i];
  }
  hull.resize(h - 1);
  return hull;
}

template <typename Scalar>
Polygon<Scalar> project(const MatrixX<Scalar>& points, const ProjectionPlane& plane) {
  Polygon<Scalar> out;
  out.reserve(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) out.emplace_back(points(plane.a, i), points(plane.b, i));
  return out;
}

/// Inner approximation projected on a coordinate plane.
template <typename Scalar>
Polygon<Scalar> inner_hull_2d(const ContactFront<Scalar>& front, const ProjectionPlane& plane) {
  return convex_hull_2d<Scalar>(project<Scalar>(front.contacts, plane));
}

template <typename Scalar>
struct TubeProjection {
  std::vector<Polygon<Scalar>> steps;
  Polygon<Scalar> footprint;  // hull of the union of all step hulls
};

template <typename Scalar>
TubeProjection<Scalar> tube_projection(const ReachTube<Scalar>& tube, const ProjectionPlane& plane) {
  if (tube.fronts.empty()) throw ConfigError("tube_projection: empty tube");
  TubeProjection<Scalar> out;
  Polygon<Scalar> all;
  for (const auto& f : tube.fronts) {
    out.steps.push_back(inner_hull_2d(f, plane));
    all.insert(all.end(), out.steps.back().begin(), out.steps.back().end());
  }
  out.footprint = convex_hull_2d<Scalar>(std::move(all));
  return out;
}

/// Shoelace area (zero for points and segments).
template <typename Scalar>
Scalar polygon_area(const Polygon<Scalar>& poly) {
  Scalar a(0);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return a / Scalar(2);
}

}  // namespace nnreach

#pragma once

#include <cmath>
#include <utility>

#include "mindist/geometry.hpp"
#include "mindist/types.hpp"

namespace mindist {

// Probe points in [0, L]^d with strictly positive weights summing to 1.
template <typename Scalar>
struct LandmarkSet {
  Matrix<Scalar> points;   // n x d
  Vector<Scalar> weights;  // n entries
  Scalar L;                // side of the enclosing cube

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};
using LandmarkSetd = LandmarkSet<double>;

template <typename Scalar>
LandmarkSet<Scalar> make_landmark_set(Matrix<Scalar> points, Vector<Scalar> weights, Scalar L) {
  if (points.rows() < 1) throw PreconditionError("landmark set must be nonempty");
  if (!(L > Scalar(0))) throw PreconditionError("landmark cube side L must be positive");
  if (weights.size() != points.rows())
    throw PreconditionError("landmark weights must match the number of points");
  if ((weights.array() <= Scalar(0)).any())
    throw PreconditionError("landmark weights must be strictly positive");
  if (std::abs(weights.sum() - Scalar(1)) > Scalar(1e-9))
    throw PreconditionError("landmark weights must sum to 1");
  const Scalar slack = Scalar(1e-9) * std::max(L, Scalar(1));
  if ((points.array() < -slack).any() || (points.array() > L + slack).any())
    throw PreconditionError("landmark coordinates must lie in [0, L]^d");
  return LandmarkSet<Scalar>{std::move(points), std::move(weights), L};
}

template <typename Scalar>
LandmarkSet<Scalar> make_landmark_set(Matrix<Scalar> points, Scalar L) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw PreconditionError("landmark set must be nonempty");
  Vector<Scalar> w = Vector<Scalar>::Constant(n, Scalar(1) / Scalar(n));
  return make_landmark_set(std::move(points), std::move(w), L);
}

// Vector of per-landmark distances to one object.  Hyperplane sketches carry
// signed values; segment and trajectory sketches are nonnegative.
template <typename Scalar>
struct SketchVector {
  Vector<Scalar> values;
  bool is_signed = false;

  Eigen::Index size() const { return values.size(); }
};
using SketchVectord = SketchVector<double>;

template <typename Scalar>
SketchVector<Scalar> sketch(const LandmarkSet<Scalar>& Q, const Trajectory<Scalar>& t) {
  if (Q.dim() != t.dim()) throw PreconditionError("sketch: dimension mismatch");
  Vector<Scalar> v(Q.size());
  Vector<Scalar> q(Q.dim());
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    q = Q.points.row(i).transpose();
    v(i) = point_trajectory_distance(q, t);
  }
  return SketchVector<Scalar>{std::move(v), false};
}

template <typename Scalar>
SketchVector<Scalar> sketch(const LandmarkSet<Scalar>& Q, const Segment<Scalar>& s) {
  if (Q.dim() != s.dim()) throw PreconditionError("sketch: dimension mismatch");
  Vector<Scalar> v(Q.size());
  Vector<Scalar> q(Q.dim());
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    q = Q.points.row(i).transpose();
    v(i) = point_segment_distance(q, s.a, s.b);
  }
  return SketchVector<Scalar>{std::move(v), false};
}

template <typename Scalar>
SketchVector<Scalar> sketch(const LandmarkSet<Scalar>& Q, const Hyperplane<Scalar>& h) {
  if (Q.dim() != h.dim()) throw PreconditionError("sketch: dimension mismatch");
  if (!hyperplane_is_canonical(h)) throw PreconditionError("sketch: hyperplane is not canonical");
  Vector<Scalar> v(Q.size());
  Vector<Scalar> q(Q.dim());
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    q = Q.points.row(i).transpose();
    v(i) = hyperplane_signed_distance(q, h);
  }
  return SketchVector<Scalar>{std::move(v), true};
}

// Root-mean-square gap between two sketches of like kind over the same set.
template <typename Scalar>
Scalar sketch_distance(const SketchVector<Scalar>& a, const SketchVector<Scalar>& b) {
  if (a.size() != b.size()) throw PreconditionError("sketch_distance: size mismatch");
  if (a.is_signed != b.is_signed)
    throw PreconditionError("sketch_distance: cannot mix signed and unsigned sketches");
  if (a.size() == 0) throw PreconditionError("sketch_distance: empty sketches");
  return std::sqrt((a.values - b.values).squaredNorm() / static_cast<Scalar>(a.size()));
}

// Weighted variant: sqrt(sum_i w_i (a_i - b_i)^2).  Weights need not sum to 1
// (coreset weights carry the normalization themselves).
template <typename Scalar>
Scalar sketch_distance(const SketchVector<Scalar>& a, const SketchVector<Scalar>& b,
                       const Vector<Scalar>& weights) {
  if (a.size() != b.size() || a.size() != weights.size())
    throw PreconditionError("sketch_distance: size mismatch");
  if (a.is_signed != b.is_signed)
    throw PreconditionError("sketch_distance: cannot mix signed and unsigned sketches");
  if ((weights.array() < Scalar(0)).any())
    throw PreconditionError("sketch_distance: negative weight");
  return std::sqrt((weights.array() * (a.values - b.values).array().square()).sum());
}

}  // namespace mindist

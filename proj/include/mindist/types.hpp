#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <stdexcept>
#include <string>

namespace mindist {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vectord = Vector<double>;
using Vector2d = Vector2<double>;
using Matrixd = Matrix<double>;

// Input violates a documented precondition (bad dimension, invalid parameter,
// degenerate configuration the operation refuses to handle).
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// A matrix that must have full rank does not.
class SingularityError : public PreconditionError {
 public:
  explicit SingularityError(const std::string& what) : PreconditionError(what) {}
};

// Sketch data that should describe a recoverable curve does not add up.
class InconsistentSketchError : public std::runtime_error {
 public:
  explicit InconsistentSketchError(const std::string& what) : std::runtime_error(what) {}
};

template <typename Scalar>
struct Segment {
  Vector<Scalar> a;
  Vector<Scalar> b;

  Eigen::Index dim() const { return a.size(); }
};

// Piecewise linear curve through points.row(0), ..., points.row(k).
// Consecutive points must be distinct; k >= 1.
template <typename Scalar>
struct Trajectory {
  Matrix<Scalar> points;  // (k+1) x d

  Eigen::Index dim() const { return points.cols(); }
  Eigen::Index segment_count() const { return points.rows() - 1; }
  Segment<Scalar> segment(Eigen::Index j) const {
    return Segment<Scalar>{points.row(j).transpose(), points.row(j + 1).transpose()};
  }
};

// Hyperplane {x : sum_j u_j x_j + u_{d+1} = 0} stored as the coefficient
// vector u of size d+1.  Canonical form: the normal part (u_1..u_d) has unit
// norm and the first nonzero entry of u is positive.
template <typename Scalar>
struct Hyperplane {
  Vector<Scalar> u;

  Eigen::Index dim() const { return u.size() - 1; }
  auto normal() const { return u.head(u.size() - 1); }
  Scalar offset() const { return u(u.size() - 1); }
};

template <typename Scalar>
struct Circle {
  Vector2<Scalar> center;
  Scalar radius;  // >= 0; radius 0 is a point circle
};

template <typename Scalar>
struct Ray {
  Vector2<Scalar> origin;
  Vector2<Scalar> direction;  // unit length
};

using Segmentd = Segment<double>;
using Trajectoryd = Trajectory<double>;
using Hyperplaned = Hyperplane<double>;
using Circled = Circle<double>;
using Rayd = Ray<double>;

template <typename Scalar>
Trajectory<Scalar> make_trajectory(std::initializer_list<std::initializer_list<Scalar>> pts) {
  const Eigen::Index rows = static_cast<Eigen::Index>(pts.size());
  if (rows < 2) throw PreconditionError("trajectory needs at least 2 points");
  const Eigen::Index cols = static_cast<Eigen::Index>(pts.begin()->size());
  Matrix<Scalar> m(rows, cols);
  Eigen::Index r = 0;
  for (const auto& row : pts) {
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw PreconditionError("trajectory rows have mixed dimensions");
    Eigen::Index c = 0;
    for (Scalar x : row) m(r, c++) = x;
    ++r;
  }
  for (Eigen::Index i = 0; i + 1 < rows; ++i)
    if ((m.row(i) - m.row(i + 1)).norm() == Scalar(0))
      throw PreconditionError("trajectory has repeated consecutive points");
  return Trajectory<Scalar>{std::move(m)};
}

inline Trajectoryd make_trajectoryd(std::initializer_list<std::initializer_list<double>> pts) {
  return make_trajectory<double>(pts);
}

}  // namespace mindist

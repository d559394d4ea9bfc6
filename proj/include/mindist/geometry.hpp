#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mindist/types.hpp"

namespace mindist {

// Distance from point q to segment [a, b].  Case split: behind a, behind b,
// otherwise perpendicular distance to the supporting line.  Accepts any Eigen
// expressions of matching dimension.
template <typename DQ, typename DA, typename DB>
typename DQ::Scalar point_segment_distance(const Eigen::MatrixBase<DQ>& q,
                                           const Eigen::MatrixBase<DA>& a,
                                           const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DQ::Scalar;
  if (q.size() != a.size() || q.size() != b.size())
    throw PreconditionError("point_segment_distance: dimension mismatch");
  const Scalar along_a = (b - a).dot(q - a);
  if (along_a <= Scalar(0)) return (q - a).norm();
  const Scalar along_b = (a - b).dot(q - b);
  if (along_b <= Scalar(0)) return (q - b).norm();
  const Scalar t = along_a / (b - a).squaredNorm();
  return (q - a - t * (b - a)).norm();
}

template <typename Scalar>
Scalar point_segment_distance(const Vector<Scalar>& q, const Segment<Scalar>& s) {
  return point_segment_distance(q, s.a, s.b);
}

// Minimum of the segment distances over the trajectory's k segments.
template <typename DQ, typename Scalar>
Scalar point_trajectory_distance(const Eigen::MatrixBase<DQ>& q, const Trajectory<Scalar>& t) {
  if (t.segment_count() < 1) throw PreconditionError("trajectory has no segments");
  if (q.size() != t.dim()) throw PreconditionError("point_trajectory_distance: dimension mismatch");
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index j = 0; j < t.segment_count(); ++j) {
    const Scalar dj = point_segment_distance(q, t.points.row(j).transpose(),
                                             t.points.row(j + 1).transpose());
    best = std::min(best, dj);
  }
  return best;
}

template <typename Scalar>
Scalar point_trajectory_distance(const Vector<Scalar>& q, const Trajectory<Scalar>& t) {
  return point_trajectory_distance<Vector<Scalar>, Scalar>(q, t);
}

// Scale coeffs so the normal part has unit norm, then flip sign so the first
// nonzero entry is positive.  Scaling and negation never change which entries
// are zero, so the map is idempotent up to roundoff.
template <typename Scalar>
Hyperplane<Scalar> hyperplane_canonical(const Vector<Scalar>& coeffs) {
  if (coeffs.size() < 2) throw PreconditionError("hyperplane needs d+1 coefficients, d >= 1");
  const Eigen::Index d = coeffs.size() - 1;
  const Scalar nn = coeffs.head(d).norm();
  if (nn == Scalar(0)) throw PreconditionError("degenerate hyperplane: zero normal part");
  Vector<Scalar> u = coeffs / nn;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u(j) != Scalar(0)) {
      if (u(j) < Scalar(0)) u = -u;
      break;
    }
  }
  return Hyperplane<Scalar>{std::move(u)};
}

template <typename Scalar>
bool hyperplane_is_canonical(const Hyperplane<Scalar>& h, Scalar tol = Scalar(1e-9)) {
  if (h.u.size() < 2) return false;
  if (std::abs(h.normal().norm() - Scalar(1)) > tol) return false;
  for (Eigen::Index j = 0; j < h.u.size(); ++j)
    if (h.u(j) != Scalar(0)) return h.u(j) > Scalar(0);
  return false;
}

// Signed distance sum_j u_j q_j + u_{d+1}; requires canonical h.
template <typename DQ, typename Scalar>
Scalar hyperplane_signed_distance(const Eigen::MatrixBase<DQ>& q, const Hyperplane<Scalar>& h) {
  if (q.size() != h.dim()) throw PreconditionError("hyperplane_signed_distance: dimension mismatch");
  if (!hyperplane_is_canonical(h)) throw PreconditionError("hyperplane is not canonical");
  return h.normal().dot(q) + h.offset();
}

template <typename Scalar>
Scalar hyperplane_signed_distance(const Vector<Scalar>& q, const Hyperplane<Scalar>& h) {
  return hyperplane_signed_distance<Vector<Scalar>, Scalar>(q, h);
}

namespace detail {

template <typename Scalar>
Vector2<Scalar> perp(const Vector2<Scalar>& v) {
  return Vector2<Scalar>(-v.y(), v.x());
}

template <typename Scalar>
Scalar cross2(const Vector2<Scalar>& a, const Vector2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace detail

// All common tangent lines of two circles, as canonical d=2 hyperplanes.
// Handles the 4/3/2/1/0 configurations and point circles (radius 0).  tol <= 0
// selects 1e-9 times the configuration's characteristic length.
template <typename Scalar>
std::vector<Hyperplane<Scalar>> circle_common_tangents(const Circle<Scalar>& c1,
                                                       const Circle<Scalar>& c2,
                                                       Scalar tol = Scalar(-1)) {
  if (c1.radius < Scalar(0) || c2.radius < Scalar(0))
    throw PreconditionError("circle radius must be nonnegative");
  const Vector2<Scalar> dvec = c2.center - c1.center;
  const Scalar D = dvec.norm();
  const Scalar charlen = std::max({D, c1.radius, c2.radius});
  if (charlen == Scalar(0) || (D == Scalar(0) && c1.radius == c2.radius))
    throw PreconditionError("identical circles admit infinitely many common tangents");
  if (tol <= Scalar(0)) tol = Scalar(1e-9) * charlen;
  const Scalar reltol = tol / charlen;

  std::vector<Hyperplane<Scalar>> out;
  if (D > Scalar(0)) {
    const Vector2<Scalar> dhat = dvec / D;
    const Vector2<Scalar> dperp = detail::perp(dhat);
    // Orient each tangent so the first circle lies on the positive side:
    // n.c1 + c = r1, n.c2 + c = s2 r2.  The opposite orientation gives the
    // same geometric line, so s1 stays fixed at +1.
    for (int s2 : {+1, -1}) {
      if (c2.radius == Scalar(0) && s2 < 0) continue;  // point circle: s2 is moot
      const Scalar k = Scalar(s2) * c2.radius - c1.radius;
      const Scalar alpha = k / D;
      const Scalar disc = Scalar(1) - alpha * alpha;
      const Scalar disc_tol = std::max(Scalar(2) * reltol, Scalar(4e-15));
      if (disc < -disc_tol) continue;
      const Scalar beta = disc <= disc_tol ? Scalar(0) : std::sqrt(disc);
      for (int sb : {+1, -1}) {
        const Vector2<Scalar> n = alpha * dhat + Scalar(sb) * beta * dperp;
        const Scalar off = c1.radius - n.dot(c1.center);
        Vector<Scalar> coeffs(3);
        coeffs << n.x(), n.y(), off;
        out.push_back(hyperplane_canonical(coeffs));
        if (beta == Scalar(0)) break;  // double root: one line for this sign pair
      }
    }
  }

  // Collapse duplicates (point circles and opposite orientations reproduce lines).
  const Scalar ntol = std::max(reltol, Scalar(1e-12));
  const Scalar ctol = std::max(tol, Scalar(1e-12) * charlen);
  std::vector<Hyperplane<Scalar>> unique;
  for (auto& h : out) {
    bool dup = false;
    for (const auto& g : unique) {
      if ((h.u.head(2) - g.u.head(2)).template lpNorm<Eigen::Infinity>() <= ntol &&
          std::abs(h.u(2) - g.u(2)) <= ctol) {
        dup = true;
        break;
      }
    }
    if (!dup) unique.push_back(std::move(h));
  }
  return unique;
}

template <typename Scalar>
struct RayDiskEntry {
  Vector2<Scalar> point;
  Scalar t;
  std::size_t disk_index;
};

// First parameter t > tol at which the ray crosses from outside into the open
// disk of some circle.  Crossings need penetration depth above tol, so circles
// merely tangent to the ray (up to roundoff) never register.  Disks already
// entered at or before tol are ignored.
template <typename Scalar>
std::optional<RayDiskEntry<Scalar>> ray_first_disk_entry(const Ray<Scalar>& ray,
                                                         const std::vector<Circle<Scalar>>& disks,
                                                         Scalar tol) {
  if (std::abs(ray.direction.norm() - Scalar(1)) > Scalar(1e-9))
    throw PreconditionError("ray direction must be unit length");
  if (!(tol > Scalar(0))) throw PreconditionError("ray_first_disk_entry needs tol > 0");
  std::optional<RayDiskEntry<Scalar>> best;
  for (std::size_t l = 0; l < disks.size(); ++l) {
    const Circle<Scalar>& disk = disks[l];
    if (disk.radius <= tol) continue;  // open disk too thin to enter
    const Vector2<Scalar> m = disk.center - ray.origin;
    const Scalar b = m.dot(ray.direction);
    const Scalar dist_line = std::abs(detail::cross2(m, ray.direction));
    if (disk.radius - dist_line <= tol) continue;  // tangent or missing the disk
    const Scalar half_chord =
        std::sqrt(std::max(disk.radius * disk.radius - dist_line * dist_line, Scalar(0)));
    const Scalar t_in = b - half_chord;
    if (t_in <= tol) continue;  // entered before the window or starts inside
    if (!best || t_in < best->t)
      best = RayDiskEntry<Scalar>{ray.origin + t_in * ray.direction, t_in, l};
  }
  return best;
}

// Trajectory pair that coincides on the boundary of the square of the given
// side length centered at q0 while only the first visits q0.  Every landmark
// outside the open square then sees identical distances to both curves, so
// the empirical sensitivity of q0 for this pair reaches the number of
// landmarks.  The open square must contain no landmark other than q0 itself.
template <typename Scalar>
std::pair<Trajectory<Scalar>, Trajectory<Scalar>> adversarial_pair(
    const Vector2<Scalar>& q0, const Matrix<Scalar>& landmarks, Scalar side) {
  if (!(side > Scalar(0))) throw PreconditionError("adversarial_pair: side must be positive");
  if (landmarks.cols() != 2) throw PreconditionError("adversarial_pair: landmarks must be planar");
  const Scalar h = side / Scalar(2);
  for (Eigen::Index i = 0; i < landmarks.rows(); ++i) {
    const Scalar dinf = (landmarks.row(i).transpose() - q0).template lpNorm<Eigen::Infinity>();
    if (dinf > Scalar(0) && dinf < h * (Scalar(1) - Scalar(1e-12)))
      throw PreconditionError("adversarial_pair: open square contains another landmark");
  }
  Matrix<Scalar> square(5, 2);
  square << q0.x() + h, q0.y() + h,  //
      q0.x() - h, q0.y() + h,        //
      q0.x() - h, q0.y() - h,        //
      q0.x() + h, q0.y() - h,        //
      q0.x() + h, q0.y() + h;
  Matrix<Scalar> with_spur(6, 2);
  with_spur.topRows(5) = square;
  with_spur.row(5) << q0.x(), q0.y();
  return {Trajectory<Scalar>{std::move(with_spur)}, Trajectory<Scalar>{std::move(square)}};
}

}  // namespace mindist

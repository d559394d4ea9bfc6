#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mindist/geometry.hpp"
#include "mindist/sketch.hpp"

namespace mindist {

// Axis-aligned lattice of spacing eta clipped to the square [lo, hi]^2, as a
// uniformly weighted landmark set with L = hi.
inline LandmarkSetd build_grid(double lo, double hi, double eta) {
  if (!(eta > 0)) throw PreconditionError("build_grid: eta must be positive");
  if (!(hi > lo)) throw PreconditionError("build_grid: domain is empty");
  if (lo < 0) throw PreconditionError("build_grid: domain must lie in the nonnegative quadrant");
  const long i0 = static_cast<long>(std::ceil(lo / eta - 1e-9));
  const long i1 = static_cast<long>(std::floor(hi / eta + 1e-9));
  if (i1 < i0) throw PreconditionError("build_grid: no grid point inside the domain");
  const long m = i1 - i0 + 1;
  Matrixd pts(m * m, 2);
  Eigen::Index row = 0;
  for (long a = i0; a <= i1; ++a)
    for (long b = i0; b <= i1; ++b) {
      pts(row, 0) = static_cast<double>(a) * eta;
      pts(row, 1) = static_cast<double>(b) * eta;
      ++row;
    }
  return make_landmark_set(pts, hi);
}

struct CurveCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

namespace detail {

inline Vector2d row2(const Matrixd& pts, Eigen::Index i) {
  return Vector2d(pts(i, 0), pts(i, 1));
}

inline Vectord dyn2(const Vector2d& v) {
  Vectord out(2);
  out << v.x(), v.y();
  return out;
}

inline double point_ray_distance(const Vector2d& p, const Vector2d& origin,
                                 const Vector2d& dir) {
  const Vector2d w = p - origin;
  const double t = w.dot(dir);
  if (t <= 0) return w.norm();
  return (w - t * dir).norm();
}

}  // namespace detail

// Reconstructability gate: corner angles bounded away from 0 and pi, the
// tau-ball of every critical point meets only its own segments, and critical
// points keep a tau margin to the domain boundary.
inline CurveCheck validate_curve(const Trajectoryd& t, double tau, double lo, double hi) {
  if (t.dim() != 2) throw PreconditionError("validate_curve: trajectory must be planar");
  if (!(tau > 0)) throw PreconditionError("validate_curve: tau must be positive");
  if (!(hi > lo)) throw PreconditionError("validate_curve: domain is empty");
  CurveCheck check;
  const Eigen::Index k = t.segment_count();
  for (Eigen::Index m = 1; m < k; ++m) {
    const Vector2d a = detail::row2(t.points, m - 1) - detail::row2(t.points, m);
    const Vector2d b = detail::row2(t.points, m + 1) - detail::row2(t.points, m);
    const double angle = std::atan2(std::abs(detail::cross2(a, b)), a.dot(b));
    if (angle <= 1e-9 || angle >= M_PI - 1e-9)
      check.violations.push_back("degenerate angle at critical point " + std::to_string(m));
  }
  for (Eigen::Index m = 0; m <= k; ++m) {
    const Vectord c = t.points.row(m).transpose();
    for (Eigen::Index s = 0; s < k; ++s) {
      if (s == m || s + 1 == m) continue;  // segments incident to the point
      if (point_segment_distance(c, t.segment(s)) < tau)
        check.violations.push_back("critical point " + std::to_string(m) +
                                   " within tau of segment " + std::to_string(s));
    }
    const double margin = std::min(c.minCoeff() - lo, hi - c.maxCoeff());
    if (margin < tau)
      check.violations.push_back("critical point " + std::to_string(m) +
                                 " within tau of the domain boundary");
  }
  check.ok = check.violations.empty();
  return check;
}

// Constant-time neighborhood queries over landmarks that sit on a lattice of
// spacing eta.  Points must land on lattice nodes within 1e-6*eta.
class GridIndex {
 public:
  GridIndex(const LandmarkSetd& Q, double eta) : eta_(eta), pts_(Q.points) {
    if (Q.dim() != 2) throw PreconditionError("GridIndex: landmarks must be planar");
    if (!(eta > 0)) throw PreconditionError("GridIndex: eta must be positive");
    const Eigen::Index n = Q.size();
    std::vector<long> ax(static_cast<std::size_t>(n)), ay(static_cast<std::size_t>(n));
    long x0 = std::numeric_limits<long>::max(), x1 = std::numeric_limits<long>::min();
    long y0 = x0, y1 = x1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double fx = Q.points(i, 0) / eta;
      const double fy = Q.points(i, 1) / eta;
      const long a = std::lround(fx);
      const long b = std::lround(fy);
      if (std::abs(fx - static_cast<double>(a)) > 1e-6 ||
          std::abs(fy - static_cast<double>(b)) > 1e-6)
        throw PreconditionError("GridIndex: landmark does not lie on the lattice");
      ax[static_cast<std::size_t>(i)] = a;
      ay[static_cast<std::size_t>(i)] = b;
      x0 = std::min(x0, a);
      x1 = std::max(x1, a);
      y0 = std::min(y0, b);
      y1 = std::max(y1, b);
    }
    ax0_ = x0;
    ay0_ = y0;
    nx_ = x1 - x0 + 1;
    ny_ = y1 - y0 + 1;
    cell_.assign(static_cast<std::size_t>(nx_ * ny_), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& slot = cell_[static_cast<std::size_t>((ax[static_cast<std::size_t>(i)] - ax0_) * ny_ +
                                                  (ay[static_cast<std::size_t>(i)] - ay0_))];
      if (slot >= 0) throw PreconditionError("GridIndex: two landmarks share a lattice cell");
      slot = i;
    }
  }

  // Indices of landmarks within the closed ball, in lattice scan order.
  void collect(const Vector2d& q, double radius, std::vector<Eigen::Index>& out) const {
    out.clear();
    const double r = radius + 1e-9 * eta_;
    const long a_lo = std::max(ax0_, static_cast<long>(std::ceil((q.x() - r) / eta_ - 1e-9)));
    const long a_hi =
        std::min(ax0_ + nx_ - 1, static_cast<long>(std::floor((q.x() + r) / eta_ + 1e-9)));
    const long b_lo = std::max(ay0_, static_cast<long>(std::ceil((q.y() - r) / eta_ - 1e-9)));
    const long b_hi =
        std::min(ay0_ + ny_ - 1, static_cast<long>(std::floor((q.y() + r) / eta_ + 1e-9)));
    for (long a = a_lo; a <= a_hi; ++a)
      for (long b = b_lo; b <= b_hi; ++b) {
        const Eigen::Index idx = cell_[static_cast<std::size_t>((a - ax0_) * ny_ + (b - ay0_))];
        if (idx < 0) continue;
        if ((detail::row2(pts_, idx) - q).norm() <= r) out.push_back(idx);
      }
  }

 private:
  double eta_;
  Matrixd pts_;
  long ax0_ = 0, ay0_ = 0, nx_ = 0, ny_ = 0;
  std::vector<Eigen::Index> cell_;
};

namespace detail {

inline void check_detection(const LandmarkSetd& Q, const SketchVectord& v, Eigen::Index i,
                            double eta) {
  if (Q.dim() != 2) throw PreconditionError("landmarks must be planar");
  if (v.size() != Q.size()) throw PreconditionError("sketch does not match the landmark set");
  if (v.is_signed) throw PreconditionError("curve sketches must be unsigned");
  if (i < 0 || i >= Q.size()) throw PreconditionError("landmark index out of range");
  if (!(eta > 0)) throw PreconditionError("eta must be positive");
  if (!(v.values(i) < eta))
    throw PreconditionError("landmark is not a detection point: its value is not below eta");
}

}  // namespace detail

// A landmark close to the curve sits next to a critical point exactly when no
// common tangent of its distance circle and a neighbor's stays clear of every
// neighborhood distance disk: along a straight stretch the curve's own line
// survives, while corners and endpoints block every candidate.
inline bool is_critical(const LandmarkSetd& Q, const SketchVectord& v, Eigen::Index i, double eta,
                        const GridIndex& index) {
  detail::check_detection(Q, v, i, eta);
  const Vector2d qi = detail::row2(Q.points, i);
  std::vector<Eigen::Index> nb;
  index.collect(qi, 3 * eta, nb);
  const double pen_tol = 1e-9 * eta;
  const Circled Ci{qi, v.values(i)};
  std::vector<Vectord> nb_pts;
  nb_pts.reserve(nb.size());
  for (const Eigen::Index m : nb) nb_pts.push_back(Q.points.row(m).transpose());

  for (const Eigen::Index j : nb) {
    if (j == i) continue;
    const Circled Cj{detail::row2(Q.points, j), v.values(j)};
    for (const Hyperplaned& line : circle_common_tangents(Ci, Cj)) {
      const Vector2d n(line.u(0), line.u(1));
      const double s = n.dot(qi) + line.u(2);
      const double half_sq = 9 * eta * eta - s * s;
      if (half_sq <= 0) continue;
      const double half = std::sqrt(half_sq);
      const Vector2d foot = qi - s * n;
      const Vector2d dirp = detail::perp(n);
      const Segmentd chord{detail::dyn2(foot - half * dirp), detail::dyn2(foot + half * dirp)};
      bool clear = true;
      for (std::size_t m = 0; m < nb.size(); ++m) {
        const double r = v.values(nb[m]);
        if (r <= pen_tol) continue;  // a point disk cannot be entered
        if (point_segment_distance(nb_pts[m], chord) < r - pen_tol) {
          clear = false;
          break;
        }
      }
      if (clear) return false;
    }
  }
  return true;
}

inline bool is_critical(const LandmarkSetd& Q, const SketchVectord& v, Eigen::Index i,
                        double eta) {
  detail::check_detection(Q, v, i, eta);
  return is_critical(Q, v, i, eta, GridIndex(Q, eta));
}

// Merge segments that lie on a common line and overlap (or touch within
// 1e-9*scale) into maximal segments.  Output is sorted by endpoints, so the
// result does not depend on input order.
inline std::vector<Segmentd> merge_overlapping_segments(const std::vector<Segmentd>& segs,
                                                        double scale) {
  if (!(scale > 0)) throw PreconditionError("merge_overlapping_segments: scale must be positive");
  const double ang_tol = 1e-9;
  const double off_tol = 1e-9 * scale;
  const std::size_t m = segs.size();
  std::vector<Vector2d> a(m), b(m), dir(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (segs[i].dim() != 2)
      throw PreconditionError("merge_overlapping_segments: segments must be planar");
    a[i] = Vector2d(segs[i].a(0), segs[i].a(1));
    b[i] = Vector2d(segs[i].b(0), segs[i].b(1));
    const double len = (b[i] - a[i]).norm();
    if (len <= 0) throw PreconditionError("merge_overlapping_segments: zero-length segment");
    dir[i] = (b[i] - a[i]) / len;
    if (dir[i].x() < 0 || (dir[i].x() == 0 && dir[i].y() < 0)) dir[i] = -dir[i];
  }

  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const auto same_line = [&](std::size_t i, std::size_t j) {
    if (std::abs(detail::cross2(dir[i], dir[j])) > ang_tol) return false;
    return std::abs(detail::cross2(Vector2d(a[j] - a[i]), dir[i])) <= off_tol &&
           std::abs(detail::cross2(Vector2d(b[j] - a[i]), dir[i])) <= off_tol;
  };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (find(i) != find(j) && same_line(i, j)) parent[find(i)] = find(j);

  struct Piece {
    double t0, t1;
    Vector2d p0, p1;
  };
  std::vector<Segmentd> out;
  std::vector<std::size_t> group;
  for (std::size_t root = 0; root < m; ++root) {
    if (find(root) != root) continue;
    group.clear();
    for (std::size_t i = 0; i < m; ++i)
      if (find(i) == root) group.push_back(i);
    // Longest member fixes the axis; exact ties fall back to endpoint order.
    std::size_t ref = group[0];
    for (const std::size_t i : group) {
      const double li = (b[i] - a[i]).norm(), lr = (b[ref] - a[ref]).norm();
      if (li > lr) ref = i;
    }
    const Vector2d axis = dir[ref];
    std::vector<Piece> pieces;
    for (const std::size_t i : group) {
      double ta = axis.dot(a[i]), tb = axis.dot(b[i]);
      Vector2d pa = a[i], pb = b[i];
      if (ta > tb) {
        std::swap(ta, tb);
        std::swap(pa, pb);
      }
      pieces.push_back({ta, tb, pa, pb});
    }
    std::sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) {
      if (x.t0 != y.t0) return x.t0 < y.t0;
      return x.t1 < y.t1;
    });
    Piece cur = pieces[0];
    for (std::size_t i = 1; i < pieces.size(); ++i) {
      if (pieces[i].t0 <= cur.t1 + off_tol) {
        if (pieces[i].t1 > cur.t1) {
          cur.t1 = pieces[i].t1;
          cur.p1 = pieces[i].p1;
        }
      } else {
        out.push_back(Segmentd{detail::dyn2(cur.p0), detail::dyn2(cur.p1)});
        cur = pieces[i];
      }
    }
    out.push_back(Segmentd{detail::dyn2(cur.p0), detail::dyn2(cur.p1)});
  }
  std::sort(out.begin(), out.end(), [](const Segmentd& x, const Segmentd& y) {
    for (int c = 0; c < 2; ++c)
      if (x.a(c) != y.a(c)) return x.a(c) < y.a(c);
    for (int c = 0; c < 2; ++c)
      if (x.b(c) != y.b(c)) return x.b(c) < y.b(c);
    return false;
  });
  return out;
}

// Critical point with the unit directions of the curve branches leaving it:
// one direction at a curve endpoint, two at a corner.
struct CriticalPointRecord {
  Vectord c;
  std::vector<Vectord> directions;

  bool endpoint() const { return directions.size() == 1; }
};

namespace detail {

// The sketch value is a minimum over the whole curve, so the curve piece
// claimed near a critical point may tie or overestimate a disk's value but
// never undercut it.
inline bool rays_penetrate_disk(const Vector2d& q, double r, const Vector2d& c,
                                const std::vector<Vector2d>& ray_dirs, double tol) {
  for (const Vector2d& d : ray_dirs)
    if (point_ray_distance(q, c, d) < r - tol) return true;
  return false;
}

}  // namespace detail

// Locate the critical point next to detection landmark i.  Surviving common
// tangents of neighborhood disk pairs are clipped to their tangency feet,
// merged into maximal chords, and the chords name the incident curve
// branches: one chord means the curve ends here, two mean a corner.
inline CriticalPointRecord find_critical(const LandmarkSetd& Q, const SketchVectord& v,
                                         Eigen::Index i, double eta, const GridIndex& index) {
  detail::check_detection(Q, v, i, eta);
  const Vector2d qi = detail::row2(Q.points, i);
  const double reach = 8 * eta;
  std::vector<Eigen::Index> nb;
  index.collect(qi, reach, nb);
  const double pen_tol = 1e-9 * eta;
  const double cond_tol = 1e-6 * eta;

  std::vector<Vector2d> centers(nb.size());
  std::vector<Vectord> centers_dyn(nb.size());
  std::vector<double> radii(nb.size());
  std::vector<Circled> circles(nb.size());
  for (std::size_t m = 0; m < nb.size(); ++m) {
    centers[m] = detail::row2(Q.points, nb[m]);
    centers_dyn[m] = Q.points.row(nb[m]).transpose();
    radii[m] = v.values(nb[m]);
    circles[m] = Circled{centers[m], radii[m]};
  }

  std::vector<Segmentd> spans;
  for (std::size_t ja = 0; ja < nb.size(); ++ja)
    for (std::size_t jb = ja + 1; jb < nb.size(); ++jb) {
      for (const Hyperplaned& line : circle_common_tangents(circles[ja], circles[jb])) {
        const Vector2d n(line.u(0), line.u(1));
        const double off = line.u(2);
        const Vector2d fa = centers[ja] - (n.dot(centers[ja]) + off) * n;
        const Vector2d fb = centers[jb] - (n.dot(centers[jb]) + off) * n;
        if ((fa - qi).norm() > reach + pen_tol) continue;
        if ((fb - qi).norm() > reach + pen_tol) continue;
        if ((fa - fb).norm() <= pen_tol) continue;
        const Segmentd span{detail::dyn2(fa), detail::dyn2(fb)};
        bool clear = true;
        for (std::size_t m = 0; m < nb.size(); ++m) {
          if (radii[m] <= pen_tol) continue;
          if (point_segment_distance(centers_dyn[m], span) < radii[m] - pen_tol) {
            clear = false;
            break;
          }
        }
        if (clear) spans.push_back(span);
      }
    }

  std::vector<Segmentd> merged = merge_overlapping_segments(spans, eta);
  // A chord counts as segment evidence only when it spans at least two
  // lattice steps, is tangent to at least three disks, and has tangent disks
  // on both sides of its line.  Stray pair tangents threading a corner wedge
  // fail the first two tests; a lattice row governed by one straight branch
  // admits a mirror line tangent to the whole row, but only from one side.
  const double tang_tol = 1e-6 * eta;
  const auto weak_evidence = [&](const Segmentd& s) {
    const Vector2d a(s.a(0), s.a(1)), b(s.b(0), s.b(1));
    const double len = (b - a).norm();
    if (len < 2 * eta) return true;
    const Vector2d d = (b - a) / len;
    int count = 0;
    bool left = false, right = false;
    for (std::size_t m = 0; m < nb.size(); ++m) {
      const Vector2d w = centers[m] - a;
      const double t = w.dot(d);
      if (t < -pen_tol || t > len + pen_tol) continue;
      const double side = detail::cross2(w, d);
      if (std::abs(std::abs(side) - radii[m]) > tang_tol) continue;
      ++count;
      if (side > tang_tol) left = true;
      if (side < -tang_tol) right = true;
    }
    return count < 3 || !left || !right;
  };
  merged.erase(std::remove_if(merged.begin(), merged.end(), weak_evidence), merged.end());

  CriticalPointRecord record;
  if (merged.size() == 1) {
    const Vector2d A(merged[0].a(0), merged[0].a(1));
    const Vector2d B(merged[0].b(0), merged[0].b(1));
    const Vector2d dAB = (B - A).normalized();
    std::optional<std::pair<Vector2d, Vector2d>> found;  // (location, inward direction)
    for (const auto& [start, dirv] : {std::pair{B, dAB}, std::pair{A, Vector2d(-dAB)}}) {
      // The end lies where the extension ray first enters a disk; when the
      // chord already stops exactly at the curve end (a lattice-aligned
      // curve) no disk is entered and the chord end itself is the candidate.
      Vector2d c = start;
      const auto entry = ray_first_disk_entry(Rayd{start, dirv}, circles, pen_tol);
      if (entry && (entry->point - qi).norm() <= reach + pen_tol) c = entry->point;
      const std::vector<Vector2d> rays{-dirv};
      bool consistent = true;
      bool witnessed = false;
      for (std::size_t m = 0; m < nb.size(); ++m) {
        if (detail::rays_penetrate_disk(centers[m], radii[m], c, rays, cond_tol)) {
          consistent = false;
          break;
        }
        // A witness pins the end at c: its circle passes through c but a
        // straight continuation of the chord would cut into it.
        if (std::abs((centers[m] - c).norm() - radii[m]) <= cond_tol &&
            std::abs(detail::point_ray_distance(centers[m], c, dirv) - radii[m]) > cond_tol)
          witnessed = true;
      }
      if (!consistent || !witnessed) continue;
      if (found) throw InconsistentSketchError("both chord extensions qualify as the curve end");
      found = {c, -dirv};
    }
    if (!found)
      throw InconsistentSketchError("single chord does not extend to a consistent curve end");
    record.c = detail::dyn2(found->first);
    record.directions.push_back(detail::dyn2(found->second));
    return record;
  }

  if (merged.size() == 2) {
    const Vector2d A1(merged[0].a(0), merged[0].a(1)), B1(merged[0].b(0), merged[0].b(1));
    const Vector2d A2(merged[1].a(0), merged[1].a(1)), B2(merged[1].b(0), merged[1].b(1));
    const Vector2d d1 = (B1 - A1).normalized();
    const Vector2d d2 = (B2 - A2).normalized();
    const double denom = detail::cross2(d1, d2);
    if (std::abs(denom) <= 1e-9)
      throw InconsistentSketchError("two parallel chords cannot meet at a corner");
    const double t = detail::cross2(Vector2d(A2 - A1), d2) / denom;
    const Vector2d c = A1 + t * d1;
    if ((c - qi).norm() > reach + pen_tol)
      throw InconsistentSketchError("chord intersection falls outside the neighborhood");
    const Vector2d F1 = ((A1 - c).norm() > (B1 - c).norm()) ? A1 : B1;
    const Vector2d F2 = ((A2 - c).norm() > (B2 - c).norm()) ? A2 : B2;
    const std::vector<Vector2d> rays{(F1 - c).normalized(), (F2 - c).normalized()};
    for (std::size_t m = 0; m < nb.size(); ++m)
      if (detail::rays_penetrate_disk(centers[m], radii[m], c, rays, cond_tol))
        throw InconsistentSketchError("corner candidate cuts into a neighborhood disk");
    record.c = detail::dyn2(c);
    record.directions.push_back(detail::dyn2(rays[0]));
    record.directions.push_back(detail::dyn2(rays[1]));
    return record;
  }

  throw InconsistentSketchError("expected one or two merged chords, found " +
                                std::to_string(merged.size()));
}

inline CriticalPointRecord find_critical(const LandmarkSetd& Q, const SketchVectord& v,
                                         Eigen::Index i, double eta) {
  detail::check_detection(Q, v, i, eta);
  return find_critical(Q, v, i, eta, GridIndex(Q, eta));
}

// Chain critical point records into a trajectory: start at an endpoint and
// repeatedly take the nearest unused record on the outgoing ray, switching to
// the non-parallel branch direction at every corner.
inline Trajectoryd determine_order(const std::vector<CriticalPointRecord>& records) {
  if (records.size() < 2)
    throw PreconditionError("determine_order: need at least two records");
  std::vector<Vector2d> locs(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].c.size() != 2)
      throw PreconditionError("determine_order: records must be planar");
    if (records[r].directions.empty() || records[r].directions.size() > 2)
      throw PreconditionError("determine_order: record needs one or two directions");
    for (const Vectord& d : records[r].directions)
      if (d.size() != 2 || std::abs(d.norm() - 1.0) > 1e-9)
        throw PreconditionError("determine_order: directions must be planar unit vectors");
    locs[r] = Vector2d(records[r].c(0), records[r].c(1));
  }

  std::vector<std::size_t> endpoints;
  for (std::size_t r = 0; r < records.size(); ++r)
    if (records[r].endpoint()) endpoints.push_back(r);
  if (endpoints.size() != 2)
    throw InconsistentSketchError("need exactly two endpoint records, found " +
                                  std::to_string(endpoints.size()));
  std::size_t cur = endpoints[0];
  {
    const Vector2d &p = locs[endpoints[0]], &q = locs[endpoints[1]];
    if (q.x() < p.x() || (q.x() == p.x() && q.y() < p.y())) cur = endpoints[1];
  }

  std::vector<bool> used(records.size(), false);
  used[cur] = true;
  Matrixd path(static_cast<Eigen::Index>(records.size()), 2);
  path.row(0) = locs[cur].transpose();
  Vector2d dir(records[cur].directions[0](0), records[cur].directions[0](1));
  for (Eigen::Index step = 1; step < static_cast<Eigen::Index>(records.size()); ++step) {
    std::size_t best = records.size();
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < records.size(); ++r) {
      if (used[r]) continue;
      const Vector2d w = locs[r] - locs[cur];
      const double t = w.dot(dir);
      if (t <= 0) continue;
      if ((w - t * dir).norm() > 1e-6 * t) continue;
      if (t < best_t) {
        best_t = t;
        best = r;
      }
    }
    if (best == records.size())
      throw InconsistentSketchError("no record continues the chain along the outgoing ray");
    used[best] = true;
    path.row(step) = locs[best].transpose();
    if (records[best].endpoint()) {
      if (step + 1 != static_cast<Eigen::Index>(records.size()))
        throw InconsistentSketchError("chain reached the far endpoint with records left over");
      break;
    }
    const Vector2d back = dir;
    std::optional<Vector2d> outgoing;
    for (const Vectord& d : records[best].directions) {
      const Vector2d cand(d(0), d(1));
      if (std::abs(detail::cross2(back, cand)) <= 1e-6) continue;  // parallel: incoming branch
      if (outgoing) throw InconsistentSketchError("corner record has two outgoing directions");
      outgoing = cand;
    }
    if (!outgoing)
      throw InconsistentSketchError("corner record has no outgoing direction");
    cur = best;
    dir = *outgoing;
  }
  return Trajectoryd{std::move(path)};
}

// Rebuild the curve from its grid sketch: scan detection landmarks, locate
// each critical point once (a found point masks later detections within
// 8*eta, past the reach of its detection ring), and chain the records.
inline Trajectoryd recover(const LandmarkSetd& Q, const SketchVectord& v, double eta) {
  if (Q.dim() != 2) throw PreconditionError("recover: landmarks must be planar");
  if (v.size() != Q.size()) throw PreconditionError("recover: sketch does not match landmarks");
  if (v.is_signed) throw PreconditionError("recover: curve sketches must be unsigned");
  if (!(eta > 0)) throw PreconditionError("recover: eta must be positive");
  const GridIndex index(Q, eta);
  bool any_detection = false;
  std::vector<CriticalPointRecord> records;
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    if (!(v.values(i) < eta)) continue;
    any_detection = true;
    const Vector2d qi = detail::row2(Q.points, i);
    bool masked = false;
    for (const CriticalPointRecord& r : records)
      if ((qi - Vector2d(r.c(0), r.c(1))).norm() <= 8 * eta) {
        masked = true;
        break;
      }
    if (masked) continue;
    if (!is_critical(Q, v, i, eta, index)) continue;
    records.push_back(find_critical(Q, v, i, eta, index));
  }
  if (!any_detection)
    throw PreconditionError("recover: unsupported input, no landmark lies within eta of the curve");
  if (records.size() < 2)
    throw InconsistentSketchError("recover: sketch yields fewer than two critical points");
  return determine_order(records);
}

}  // namespace mindist

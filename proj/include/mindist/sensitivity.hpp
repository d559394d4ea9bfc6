#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mindist/sketch.hpp"
#include "mindist/types.hpp"

namespace mindist {

enum class ProfileKind { ExactHyperplane, ShapeUpperBound };

inline const char* to_string(ProfileKind k) {
  return k == ProfileKind::ExactHyperplane ? "exact-hyperplane" : "shape-upper-bound";
}

// Per-landmark sensitivity scores together with their weighted total.
template <typename Scalar>
struct SensitivityProfile {
  Vector<Scalar> sigma;
  Scalar total;
  ProfileKind kind;
};
using SensitivityProfiled = SensitivityProfile<double>;

namespace detail {

template <typename Scalar>
Scalar ipow(Scalar base, int exp) {
  Scalar out(1);
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

}  // namespace detail

// Exact sensitivities for signed hyperplane sketches.  Row i of the design
// matrix is sqrt(mu_i) * (x_i, 1); sigma_i * mu_i is that row's leverage
// score, obtained from the thin-U factor row norms.
template <typename Scalar>
SensitivityProfile<Scalar> hyperplane_sensitivities(const LandmarkSet<Scalar>& Q) {
  const Eigen::Index n = Q.size();
  const Eigen::Index d = Q.dim();
  if (n < d + 1)
    throw SingularityError("landmark design matrix has rank at most " + std::to_string(n) +
                           ", need " + std::to_string(d + 1));
  Matrix<Scalar> A(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar root = std::sqrt(Q.weights(i));
    A.row(i).head(d) = root * Q.points.row(i);
    A(i, d) = root;
  }
  Eigen::BDCSVD<Matrix<Scalar>> svd(A, Eigen::ComputeThinU);
  const Vector<Scalar>& sv = svd.singularValues();
  if (sv(d) <= Scalar(1e-10) * sv(0)) {
    Eigen::Index rank = 0;
    for (Eigen::Index j = 0; j <= d; ++j)
      if (sv(j) > Scalar(1e-10) * sv(0)) ++rank;
    throw SingularityError("landmark design matrix has rank " + std::to_string(rank) + ", need " +
                           std::to_string(d + 1));
  }
  Vector<Scalar> sigma(n);
  for (Eigen::Index i = 0; i < n; ++i)
    sigma(i) = svd.matrixU().row(i).squaredNorm() / Q.weights(i);
  const Scalar total = (Q.weights.array() * sigma.array()).sum();
  return SensitivityProfile<Scalar>{std::move(sigma), total, ProfileKind::ExactHyperplane};
}

// Density imbalance of landmark i: the largest value of
// (r/L)^d * n / |open infinity-ball population| over the candidate radii
// (every pairwise distance, using the sorted position as the population,
// which maximizes over ties) plus r = L with the full population n.
template <typename Scalar>
Scalar compute_Cq(const LandmarkSet<Scalar>& Q, Eigen::Index i) {
  const Eigen::Index n = Q.size();
  const int d = static_cast<int>(Q.dim());
  if (i < 0 || i >= n) throw PreconditionError("compute_Cq: index out of range");
  std::vector<Scalar> dist;
  dist.reserve(n - 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    dist.push_back((Q.points.row(j) - Q.points.row(i)).template lpNorm<Eigen::Infinity>());
  }
  std::sort(dist.begin(), dist.end());
  Scalar best(1);
  for (std::size_t j = 0; j < dist.size(); ++j) {
    const Scalar val = detail::ipow(dist[j] / Q.L, d) * static_cast<Scalar>(n) /
                       static_cast<Scalar>(j + 1);
    best = std::max(best, val);
  }
  return best;
}

template <typename Scalar>
Vector<Scalar> compute_Cq_all(const LandmarkSet<Scalar>& Q) {
  Vector<Scalar> out(Q.size());
  for (Eigen::Index i = 0; i < Q.size(); ++i) out(i) = compute_Cq(Q, i);
  return out;
}

template <typename Scalar>
struct CQResult {
  Scalar value;        // mean of C_q^{2/(2+d)}
  Scalar bound;  // 2^{d+1} * min(log2(L/eta), log2(n)/d)^{2/(2+d)}
  Scalar eta;          // min pairwise infinity distance; 0 when n < 2
};
using CQResultd = CQResult<double>;

template <typename Scalar>
CQResult<Scalar> compute_CQ(const LandmarkSet<Scalar>& Q) {
  const Eigen::Index n = Q.size();
  const int d = static_cast<int>(Q.dim());
  const Scalar expo = Scalar(2) / Scalar(2 + d);
  const Vector<Scalar> cq = compute_Cq_all(Q);
  Scalar mean(0);
  for (Eigen::Index i = 0; i < n; ++i) mean += std::pow(cq(i), expo);
  mean /= static_cast<Scalar>(n);

  Scalar eta(0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar dij = (Q.points.row(i) - Q.points.row(j)).template lpNorm<Eigen::Infinity>();
      if (i == 0 && j == 1) eta = dij;
      else eta = std::min(eta, dij);
    }

  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  const Scalar spacing_branch = (n > 1 && eta > Scalar(0)) ? std::log2(Q.L / eta) : inf;
  const Scalar count_branch = std::log2(static_cast<Scalar>(n)) / static_cast<Scalar>(d);
  const Scalar bound =
      detail::ipow(Scalar(2), d + 1) * std::pow(std::min(spacing_branch, count_branch), expo);
  return CQResult<Scalar>{mean, bound, eta};
}

// Parameters of the bounded-shape family: shapes inside [0, L]^d compared at
// distances at least rho, optionally with a segment budget k.
template <typename Scalar>
struct ShapeRegime {
  Scalar L;
  Scalar rho;
  int d;
  int k = 0;
};
using ShapeRegimed = ShapeRegime<double>;

template <typename Scalar>
Scalar shape_constant(int d) {
  const Scalar dd(d);
  return std::pow(Scalar(4), Scalar(2) / (Scalar(2) + dd)) *
         std::pow(Scalar(8) * std::sqrt(dd), Scalar(2) * dd / (Scalar(2) + dd));
}

template <typename Scalar>
Scalar shape_sensitivity_bound(Scalar Cq, const ShapeRegime<Scalar>& regime) {
  if (regime.d < 1) throw PreconditionError("shape regime needs d >= 1");
  if (!(regime.rho > Scalar(0)) || !(regime.L > regime.rho))
    throw PreconditionError("shape regime needs L > rho > 0");
  if (!(Cq >= Scalar(1))) throw PreconditionError("C_q is at least 1");
  const Scalar dd(regime.d);
  const Scalar ratio = regime.L / regime.rho;
  const Scalar curved = shape_constant<Scalar>(regime.d) *
                        std::pow(Cq, Scalar(2) / (Scalar(2) + dd)) *
                        std::pow(ratio, Scalar(2) * dd / (Scalar(2) + dd));
  const Scalar cap = dd * ratio * ratio;
  return std::min(curved, cap);
}

template <typename Scalar>
SensitivityProfile<Scalar> total_sensitivity_bound(const LandmarkSet<Scalar>& Q,
                                                   const ShapeRegime<Scalar>& regime) {
  if (regime.d != static_cast<int>(Q.dim()))
    throw PreconditionError("shape regime dimension does not match the landmark set");
  Vector<Scalar> sigma(Q.size());
  for (Eigen::Index i = 0; i < Q.size(); ++i)
    sigma(i) = shape_sensitivity_bound(compute_Cq(Q, i), regime);
  const Scalar total = (Q.weights.array() * sigma.array()).sum();
  return SensitivityProfile<Scalar>{std::move(sigma), total, ProfileKind::ShapeUpperBound};
}

enum class SampleRegime { HyperplaneWeak, HyperplaneStrong, ShapeWeak, TrajectoryStrong };

struct SampleParams {
  int d = 0;                     // ambient dimension (hyperplane regimes)
  double eps = 0;                // relative error target
  double delta = 0;              // failure probability
  double total_sensitivity = 0;  // shape regimes
  int k = 0;                     // trajectory segment budget
  double multiplier = 1;         // constant in front of the strong formulas
};

inline Eigen::Index sample_size(SampleRegime regime, const SampleParams& p) {
  if (!(p.eps > 0) || !(p.eps < 1)) throw PreconditionError("sample_size: eps must be in (0,1)");
  if (!(p.delta > 0) || !(p.delta < 1))
    throw PreconditionError("sample_size: delta must be in (0,1)");
  if (!(p.multiplier > 0)) throw PreconditionError("sample_size: multiplier must be positive");
  double raw = 0;
  switch (regime) {
    case SampleRegime::HyperplaneWeak:
      if (p.d < 1) throw PreconditionError("sample_size: d must be at least 1");
      raw = (p.d + 1) / (p.delta * p.eps * p.eps);
      break;
    case SampleRegime::HyperplaneStrong:
      if (p.d < 1) throw PreconditionError("sample_size: d must be at least 1");
      raw = p.multiplier * (p.d / (p.eps * p.eps)) *
            (p.d * std::log(static_cast<double>(p.d)) + std::log(1.0 / p.delta));
      break;
    case SampleRegime::ShapeWeak:
      if (!(p.total_sensitivity > 0))
        throw PreconditionError("sample_size: total sensitivity must be positive");
      raw = p.total_sensitivity / (p.delta * p.eps * p.eps);
      break;
    case SampleRegime::TrajectoryStrong:
      if (!(p.total_sensitivity > 0))
        throw PreconditionError("sample_size: total sensitivity must be positive");
      if (p.k < 1) throw PreconditionError("sample_size: k must be at least 1");
      raw = p.multiplier * (p.total_sensitivity / (p.eps * p.eps)) *
            (detail::ipow(static_cast<double>(p.k), 3) * std::log(p.total_sensitivity) +
             std::log(1.0 / p.delta));
      break;
  }
  return static_cast<Eigen::Index>(std::ceil(raw));
}

}  // namespace mindist

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mindist/rng.hpp"
#include "mindist/sketch.hpp"

namespace mindist {

// Rows (x_i, 1); for a canonical hyperplane u the entries of A u are the
// signed landmark distances, so distances become matrix norms.
inline Matrixd build_design_matrix(const LandmarkSetd& Q) {
  Matrixd A(Q.size(), Q.dim() + 1);
  A.leftCols(Q.dim()) = Q.points;
  A.col(Q.dim()).setOnes();
  return A;
}

// One-pass row sampler keeping row a with probability proportional to its
// ridge leverage against the rows kept so far.  Kept rows are rescaled by
// 1/sqrt(p) so that the sampled Gram matrix estimates the full one.
class OnlineSampler {
 public:
  struct Step {
    bool kept = false;
    double p = 0;
  };

  OnlineSampler(Eigen::Index dim, double eps, double delta, std::uint64_t seed)
      : cols_(dim + 1), eps_(eps), rng_(seed) {
    if (dim < 1) throw PreconditionError("OnlineSampler: dimension must be at least 1");
    if (!(eps > 0) || !(eps < 1)) throw PreconditionError("OnlineSampler: eps must lie in (0,1)");
    if (!(delta > 0)) throw PreconditionError("OnlineSampler: delta must be positive");
    lambda_ = delta / eps;
    oversample_ = 8.0 * std::log(static_cast<double>(cols_) / (eps * eps));
    gram_ = lambda_ * Matrixd::Identity(cols_, cols_);
    llt_.compute(gram_);
  }

  double lambda() const { return lambda_; }
  double oversample() const { return oversample_; }
  Eigen::Index rows_seen() const { return rows_seen_; }
  Eigen::Index kept_count() const { return static_cast<Eigen::Index>(kept_.size()); }
  const std::vector<double>& kept_probabilities() const { return probabilities_; }
  const Matrixd& gram() const { return gram_; }

  // a^T (G + lambda I)^{-1} a for the current kept Gram G; never negative.
  double ridge_quadratic_form(const Vectord& row) const {
    check_row(row);
    return std::max(0.0, row.dot(llt_.solve(row)));
  }

  double acceptance_probability(const Vectord& row) const {
    return std::min(oversample_ * (1.0 + eps_) * ridge_quadratic_form(row), 1.0);
  }

  // Consumes exactly one uniform draw per row, kept or not, so the retained
  // pattern depends only on the row order.
  Step step(const Vectord& row) {
    const double u = rng_.uniform01();
    const double p = acceptance_probability(row);
    ++rows_seen_;
    if (u < p) {
      force_keep(row, p);
      return {true, p};
    }
    return {false, p};
  }

  // Bookkeeping of a keep without the coin flip.
  void force_keep(const Vectord& row, double p) {
    check_row(row);
    if (!(p > 0) || !(p <= 1)) throw PreconditionError("force_keep: p must lie in (0,1]");
    const Vectord scaled = row / std::sqrt(p);
    kept_.push_back(scaled);
    probabilities_.push_back(p);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(scaled, 1.0);
    gram_ = gram_.selfadjointView<Eigen::Lower>();
    llt_.rankUpdate(scaled, 1.0);
    if (++updates_since_refactor_ >= 256) {
      llt_.compute(gram_);
      updates_since_refactor_ = 0;
    }
  }

  // Kept rows, already scaled by 1/sqrt(p), in keep order.
  Matrixd kept_matrix() const {
    Matrixd out(kept_count(), cols_);
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = kept_[static_cast<std::size_t>(i)];
    return out;
  }

 private:
  void check_row(const Vectord& row) const {
    if (row.size() != cols_) throw PreconditionError("OnlineSampler: row has wrong length");
    if (!row.allFinite()) throw PreconditionError("OnlineSampler: row has non-finite entries");
  }

  Eigen::Index cols_;
  double eps_;
  double lambda_ = 0;
  double oversample_ = 0;
  Rng rng_;
  Matrixd gram_;
  Eigen::LLT<Matrixd> llt_;
  int updates_since_refactor_ = 0;
  Eigen::Index rows_seen_ = 0;
  std::vector<Vectord> kept_;
  std::vector<double> probabilities_;
};

struct OnlineSampleRun {
  std::vector<Eigen::Index> kept_indices;
  std::vector<double> probabilities;
  Matrixd sampled;  // rows a_i / sqrt(p_i)
  Vectord weights;  // (1/p_i)/n, masses for squared-distance estimates
  double lambda = 0;
  double oversample = 0;
  Eigen::Index rows_seen = 0;
};

inline OnlineSampleRun online_sample_matrix(const Matrixd& A, double eps, double delta,
                                            std::uint64_t seed) {
  if (A.cols() < 2) throw PreconditionError("online_sample: need at least two columns");
  OnlineSampler sampler(A.cols() - 1, eps, delta, seed);
  OnlineSampleRun run;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const auto res = sampler.step(A.row(i).transpose());
    if (res.kept) {
      run.kept_indices.push_back(i);
      run.probabilities.push_back(res.p);
    }
  }
  run.sampled = sampler.kept_matrix();
  run.weights.resize(static_cast<Eigen::Index>(run.probabilities.size()));
  const double n = static_cast<double>(A.rows());
  for (Eigen::Index j = 0; j < run.weights.size(); ++j)
    run.weights(j) = 1.0 / (run.probabilities[static_cast<std::size_t>(j)] * n);
  run.lambda = sampler.lambda();
  run.oversample = sampler.oversample();
  run.rows_seen = sampler.rows_seen();
  return run;
}

inline OnlineSampleRun online_sample(const LandmarkSetd& Q, double eps, double delta,
                                     std::uint64_t seed) {
  return online_sample_matrix(build_design_matrix(Q), eps, delta, seed);
}

// Two-sided Loewner check of the sampled Gram against the full one, with an
// additive delta*I slack and a 1e-9 eigenvalue tolerance.
inline bool spectral_sandwich_check(const Matrixd& A, const Matrixd& sampled, double eps,
                                    double delta) {
  if (A.cols() != sampled.cols())
    throw PreconditionError("spectral_sandwich_check: column count mismatch");
  const Matrixd S = A.transpose() * A;
  const Matrixd T = sampled.transpose() * sampled;
  const Matrixd I = Matrixd::Identity(A.cols(), A.cols());
  Eigen::SelfAdjointEigenSolver<Matrixd> upper((1.0 + eps) * S + delta * I - T,
                                               Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrixd> lower(T - (1.0 - eps) * S + delta * I,
                                               Eigen::EigenvaluesOnly);
  return upper.eigenvalues().minCoeff() >= -1e-9 && lower.eigenvalues().minCoeff() >= -1e-9;
}

// Median of independent estimates; even lengths average the middle pair.
inline double median_estimate(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("median_estimate: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

struct DistanceBand {
  double lower = 0;
  double upper = 0;
};

// Confidence band for the true distance read off the sampled rows.  Delta
// bounds the scale of the query pair; the additive slack 4(1+Delta^2)*delta/n
// absorbs the ridge regularization.
inline DistanceBand distance_band(const Matrixd& sampled, const Vectord& u, Eigen::Index n,
                                  double eps, double delta, double Delta) {
  if (!(eps > 0) || !(eps < 1)) throw PreconditionError("distance_band: eps must lie in (0,1)");
  if (delta < 0) throw PreconditionError("distance_band: delta must be non-negative");
  if (Delta < 0) throw PreconditionError("distance_band: Delta must be non-negative");
  if (n < 1) throw PreconditionError("distance_band: n must be at least 1");
  if (u.size() != sampled.cols()) throw PreconditionError("distance_band: u has wrong length");
  const double est_sq = (sampled * u).squaredNorm() / static_cast<double>(n);
  const double slack = 4.0 * (1.0 + Delta * Delta) * delta / static_cast<double>(n);
  DistanceBand band;
  band.lower = std::sqrt(std::max(0.0, est_sq - slack)) / (1.0 + eps);
  band.upper = std::sqrt(est_sq + slack) / (1.0 - eps);
  return band;
}

}  // namespace mindist

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "mindist/rng.hpp"
#include "mindist/sensitivity.hpp"
#include "mindist/sketch.hpp"

namespace mindist {

// Weighted subset of a parent landmark set, drawn once with a fixed seed.
struct Coreset {
  std::vector<Eigen::Index> indices;  // parent rows, one entry per draw
  Vectord weights;                    // correction weight of each draw
  double total_sensitivity = 0;
  std::uint64_t seed = 0;
  ProfileKind kind = ProfileKind::ExactHyperplane;

  Eigen::Index draw_count() const { return static_cast<Eigen::Index>(indices.size()); }
};

// N iid draws with replacement, P(i) proportional to mu_i * sigma_i, each
// draw weighted total/(N*sigma_i) so that sum w * gap^2 estimates the full
// weighted squared distance without bias.  uniform_weights swaps the
// correction weights for flat 1/N (no accuracy claim attaches to that mode).
inline Coreset sensitive_sample(const LandmarkSetd& Q, const SensitivityProfiled& profile,
                                Eigen::Index N, std::uint64_t seed,
                                bool uniform_weights = false) {
  const Eigen::Index n = Q.size();
  if (profile.sigma.size() != n)
    throw PreconditionError("sensitive_sample: profile does not match the landmark set");
  if (N < 1) throw PreconditionError("sensitive_sample: N must be at least 1");
  if ((profile.sigma.array() < 0).any())
    throw PreconditionError("sensitive_sample: negative sensitivity");

  std::vector<double> cum(n);
  double run = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    run += Q.weights(i) * profile.sigma(i);
    cum[i] = run;
  }
  const double total = run;
  if (!(total > 0)) throw PreconditionError("sensitive_sample: zero total sensitivity");

  Coreset out;
  out.total_sensitivity = total;
  out.seed = seed;
  out.kind = profile.kind;
  out.indices.reserve(N);
  out.weights.resize(N);
  Rng rng(seed);
  for (Eigen::Index j = 0; j < N; ++j) {
    const double u = rng.uniform01() * total;
    const Eigen::Index idx =
        std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    const Eigen::Index clamped = std::min(idx, n - 1);
    out.indices.push_back(clamped);
    out.weights(j) = uniform_weights ? 1.0 / static_cast<double>(N)
                                     : total / (static_cast<double>(N) * profile.sigma(clamped));
  }
  return out;
}

// Weighted distance estimate read off the coreset rows of two full sketches.
inline double coreset_distance(const Coreset& c, const SketchVectord& a, const SketchVectord& b) {
  if (a.size() != b.size()) throw PreconditionError("coreset_distance: sketch size mismatch");
  if (a.is_signed != b.is_signed)
    throw PreconditionError("coreset_distance: cannot mix signed and unsigned sketches");
  double sum = 0;
  for (Eigen::Index j = 0; j < c.draw_count(); ++j) {
    const Eigen::Index i = c.indices[j];
    if (i < 0 || i >= a.size()) throw PreconditionError("coreset_distance: index out of range");
    const double gap = a.values(i) - b.values(i);
    sum += c.weights(j) * gap * gap;
  }
  return std::sqrt(sum);
}

struct RelErrStats {
  double max_rel = 0;
  double mean_rel = 0;
  double exceed_fraction = 0;
  Eigen::Index used_pairs = 0;
  Eigen::Index excluded_pairs = 0;  // pairs whose full distance is zero
  Eigen::Index exceed_count = 0;
};

// Relative error of the coreset distance against the full weighted distance,
// over a list of sketch pairs.  Pairs at distance exactly zero cannot be
// scored and are counted separately.
inline RelErrStats empirical_relative_error(
    const LandmarkSetd& Q, const Coreset& c,
    const std::vector<std::pair<SketchVectord, SketchVectord>>& pairs, double eps) {
  RelErrStats stats;
  double sum_rel = 0;
  for (const auto& [a, b] : pairs) {
    if (a.size() != Q.size()) throw PreconditionError("empirical_relative_error: sketch size");
    const double exact = sketch_distance(a, b, Q.weights);
    if (exact == 0) {
      ++stats.excluded_pairs;
      continue;
    }
    const double approx = coreset_distance(c, a, b);
    const double rel = std::abs(approx - exact) / exact;
    stats.max_rel = std::max(stats.max_rel, rel);
    sum_rel += rel;
    if (rel > eps) ++stats.exceed_count;
    ++stats.used_pairs;
  }
  if (stats.used_pairs > 0) {
    stats.mean_rel = sum_rel / static_cast<double>(stats.used_pairs);
    stats.exceed_fraction =
        static_cast<double>(stats.exceed_count) / static_cast<double>(stats.used_pairs);
  }
  return stats;
}

}  // namespace mindist

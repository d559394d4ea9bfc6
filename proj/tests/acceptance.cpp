#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"

#include "mindist/coreset.hpp"
#include "mindist/reconstruct.hpp"
#include "mindist/rng.hpp"
#include "mindist/sensitivity.hpp"
#include "mindist/sketch.hpp"
#include "mindist/streaming.hpp"

using namespace mindist;

namespace {

constexpr double kPi = 3.14159265358979323846;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  CHECK(ok);
}

LandmarkSetd uniform_landmarks(Eigen::Index n, int d, double L, Rng& rng) {
  Matrixd pts(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = L * rng.uniform01();
  return make_landmark_set(std::move(pts), L);
}

LandmarkSetd clustered_landmarks(Eigen::Index n, int d, double L, Rng& rng) {
  Matrixd pts(n, d);
  const double sd = 0.02 * L;
  const Eigen::Index small = std::max<Eigen::Index>(1, n / 10);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double center = (i < small ? 0.8 : 0.2) * L;
    for (int j = 0; j < d; ++j) {
      double x;
      do {
        x = center + sd * rng.normal();
      } while (x < 0.0 || x > L);
      pts(i, j) = x;
    }
  }
  return make_landmark_set(std::move(pts), L);
}

Hyperplaned random_hyperplane(Rng& rng, int d, double L) {
  Vectord u(d + 1);
  double norm = 0.0;
  do {
    for (int j = 0; j < d; ++j) u(j) = rng.normal();
    norm = u.head(d).norm();
  } while (norm < 1e-12);
  u.head(d) /= norm;
  Vectord p(d);
  for (int j = 0; j < d; ++j) p(j) = L * rng.uniform01();
  u(d) = -u.head(d).dot(p);
  return hyperplane_canonical(u);
}

Segmentd random_segment(Rng& rng, int d, double L) {
  Vectord a(d), b(d);
  do {
    for (int j = 0; j < d; ++j) a(j) = L * rng.uniform01();
    for (int j = 0; j < d; ++j) b(j) = L * rng.uniform01();
  } while ((a - b).norm() < 1e-9 * L);
  return Segmentd{std::move(a), std::move(b)};
}

// Rejection sampler over random polylines, same scheme as the gen-curve
// command: headings turn at least 0.15 rad away from straight and reversal,
// segment lengths in [1.2 tau, 3 tau], accepted when validate_curve passes.
Trajectoryd random_curve(Rng& rng, long k, double tau, double side) {
  const double lo = tau;
  const double hi = side - tau;
  const double min_len = 1.2 * tau;
  const double max_len = 3.0 * tau;
  const double angle_margin = 0.15;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Matrixd pts(k + 1, 2);
    pts(0, 0) = lo + (hi - lo) * rng.uniform01();
    pts(0, 1) = lo + (hi - lo) * rng.uniform01();
    double heading = 2.0 * kPi * rng.uniform01();
    bool inside = true;
    for (long m = 1; m <= k; ++m) {
      if (m >= 2) {
        const double turn = angle_margin + rng.uniform01() * (kPi - 2.0 * angle_margin);
        heading += rng.uniform01() < 0.5 ? turn : -turn;
      }
      const double len = min_len + (max_len - min_len) * rng.uniform01();
      pts(m, 0) = pts(m - 1, 0) + len * std::cos(heading);
      pts(m, 1) = pts(m - 1, 1) + len * std::sin(heading);
      if (pts(m, 0) < lo || pts(m, 0) > hi || pts(m, 1) < lo || pts(m, 1) > hi) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    Trajectoryd t{std::move(pts)};
    if (validate_curve(t, tau, 0.0, side).ok) return t;
  }
  throw PreconditionError("random_curve: no valid curve found");
}

// Coreset draws folded into one weight per parent landmark; the dot product
// with a squared-gap vector then reproduces coreset_distance squared.
Vectord fold_parent_weights(const std::vector<Eigen::Index>& indices, Eigen::Index N,
                            const Vectord& sigma, double total, Eigen::Index n) {
  Vectord w = Vectord::Zero(n);
  for (Eigen::Index j = 0; j < N; ++j)
    w(indices[static_cast<std::size_t>(j)]) +=
        total / (static_cast<double>(N) * sigma(indices[static_cast<std::size_t>(j)]));
  return w;
}

}  // namespace

TEST_CASE("criterion 1: weighted sensitivity total equals d+1") {
  bool ok = true;
  double worst_gap = 0.0;
  double worst_time = 0.0;
  for (const int d : {2, 3, 4, 5}) {
    for (const Eigen::Index n : {100, 1000}) {
      Rng rng(derive_seed(101, "c1:" + std::to_string(d) + ":" + std::to_string(n)));
      const LandmarkSetd Q = uniform_landmarks(n, d, 1.0, rng);
      const auto t0 = std::chrono::steady_clock::now();
      const auto profile = hyperplane_sensitivities(Q);
      const double dt = seconds_since(t0);
      const double gap = std::abs(profile.total - static_cast<double>(d + 1));
      worst_gap = std::max(worst_gap, gap);
      worst_time = std::max(worst_time, dt);
      if (gap > 1e-9 || dt >= 1.0) ok = false;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "max |total - (d+1)| = %.3g over d in {2..5}, n in {100,1000}; slowest case %.3fs",
                worst_gap, worst_time);
  report(1, ok, buf);
}

TEST_CASE("criterion 2: sampled distances exceed the error budget on few enough pairs") {
  const auto t0 = std::chrono::steady_clock::now();
  const int d = 2;
  const double eps = 0.2, delta = 0.2, L = 1.0;
  const long trials = 400;
  const std::uint64_t root = derive_seed(202, "c2");
  Rng setup(derive_seed(root, "landmarks"));
  const LandmarkSetd Q = uniform_landmarks(2000, d, L, setup);
  const auto profile = hyperplane_sensitivities(Q);
  const Eigen::Index N =
      sample_size(SampleRegime::HyperplaneWeak, {d, eps, delta, profile.total, 0, 1.0});
  REQUIRE(N == 375);

  long exceed = 0;
  for (long t = 0; t < trials; ++t) {
    const std::uint64_t st = derive_seed(root, static_cast<std::uint64_t>(t));
    Rng trng(derive_seed(st, "pair"));
    const SketchVectord s1 = sketch(Q, random_hyperplane(trng, d, L));
    const SketchVectord s2 = sketch(Q, random_hyperplane(trng, d, L));
    const double exact = sketch_distance(s1, s2, Q.weights);
    REQUIRE(exact > 0);
    const auto c = sensitive_sample(Q, profile, N, derive_seed(st, "draw"));
    const double rel = std::abs(coreset_distance(c, s1, s2) - exact) / exact;
    if (rel > eps) ++exceed;
  }
  const double frac = static_cast<double>(exceed) / static_cast<double>(trials);
  const double bound = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / trials);
  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "exceed fraction %.4f <= %.4f over 400 trials at N=375; %.1fs",
                frac, bound, dt);
  report(2, frac <= bound && dt < 30.0, buf);
}

TEST_CASE("criterion 3: squared estimate is unbiased across seeds") {
  const auto t0 = std::chrono::steady_clock::now();
  Rng setup(derive_seed(303, "c3:landmarks"));
  const LandmarkSetd Q = uniform_landmarks(500, 2, 1.0, setup);
  const auto profile = hyperplane_sensitivities(Q);
  const Eigen::Index N = 50;
  const long seeds = 10000;

  Rng objrng(derive_seed(303, "c3:objects"));
  std::vector<std::pair<SketchVectord, SketchVectord>> pairs;
  for (int p = 0; p < 3; ++p)
    pairs.push_back({sketch(Q, random_hyperplane(objrng, 2, 1.0)),
                     sketch(Q, random_hyperplane(objrng, 2, 1.0))});
  for (int p = 0; p < 2; ++p)
    pairs.push_back(
        {sketch(Q, random_segment(objrng, 2, 1.0)), sketch(Q, random_segment(objrng, 2, 1.0))});

  bool ok = true;
  double worst_sigmas = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double exact_sq = std::pow(sketch_distance(pairs[p].first, pairs[p].second, Q.weights), 2);
    double sum = 0.0, sumsq = 0.0;
    for (long s = 0; s < seeds; ++s) {
      const auto c = sensitive_sample(
          Q, profile, N, derive_seed(derive_seed(303, "c3:draw"), static_cast<std::uint64_t>(s * 8 + static_cast<long>(p))));
      const double est_sq = std::pow(coreset_distance(c, pairs[p].first, pairs[p].second), 2);
      sum += est_sq;
      sumsq += est_sq * est_sq;
    }
    const double mean = sum / seeds;
    const double var = std::max(0.0, sumsq / seeds - mean * mean);
    const double se = std::sqrt(var / seeds);
    const double sigmas = se > 0 ? std::abs(mean - exact_sq) / se : 0.0;
    worst_sigmas = std::max(worst_sigmas, sigmas);
    if (sigmas > 3.0) ok = false;
  }
  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "max |mean - exact| = %.2f standard errors over 5 pairs x 10000 seeds; %.1fs",
                worst_sigmas, dt);
  report(3, ok && dt < 60.0, buf);
}

TEST_CASE("criterion 4: per-landmark cost share never beats the shape bound") {
  const auto t0 = std::chrono::steady_clock::now();
  const double L = 1.0, rho = L / 20.0, tau = L / 20.0;
  const ShapeRegimed regime{L, rho, 2, 0};
  long violations = 0;
  long scored = 0;
  for (const bool clustered : {false, true}) {
    Rng setup(derive_seed(404, clustered ? "c4:clustered" : "c4:uniform"));
    const LandmarkSetd Q = clustered ? clustered_landmarks(500, 2, L, setup)
                                     : uniform_landmarks(500, 2, L, setup);
    Vectord bound(Q.size());
    const Vectord cq = compute_Cq_all(Q);
    for (Eigen::Index i = 0; i < Q.size(); ++i)
      bound(i) = shape_sensitivity_bound(cq(i), regime);

    Rng prng(derive_seed(404, clustered ? "c4:pairs:c" : "c4:pairs:u"));
    long accepted = 0;
    while (accepted < 500) {
      const Trajectoryd t1 = random_curve(prng, 1 + prng.uniform_int(0, 3), tau, L);
      const Trajectoryd t2 = random_curve(prng, 1 + prng.uniform_int(0, 3), tau, L);
      const SketchVectord v1 = sketch(Q, t1);
      const SketchVectord v2 = sketch(Q, t2);
      const double exact = sketch_distance(v1, v2, Q.weights);
      if (exact < rho) continue;
      ++accepted;
      const Vectord gap_sq = (v1.values - v2.values).array().square();
      const double fbar = exact * exact;
      for (Eigen::Index i = 0; i < Q.size(); ++i) {
        ++scored;
        if (gap_sq(i) / fbar > bound(i)) ++violations;
      }
    }
  }
  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%ld violations over %ld landmark scores from 1000 curve pairs; %.1fs", violations,
                scored, dt);
  report(4, violations == 0 && dt < 120.0, buf);
}

TEST_CASE("criterion 5: density statistic stays under its logarithmic bound") {
  long violations = 0;
  double closest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i) {
    Rng rng(derive_seed(505, static_cast<std::uint64_t>(i)));
    const int d = 2 + (i % 3);
    const Eigen::Index n = 50 + 37 * (i % 8);
    const LandmarkSetd Q = (i % 5 == 4) ? clustered_landmarks(n, d, 1.0, rng)
                                        : uniform_landmarks(n, d, 1.0, rng);
    const auto r = compute_CQ(Q);
    if (r.value > r.bound) ++violations;
    closest = std::min(closest, r.bound - r.value);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%ld violations over 50 random sets; smallest slack %.3f",
                violations, closest);
  report(5, violations == 0, buf);
}

TEST_CASE("criterion 6: boundary-sharing pair concentrates all cost on one landmark") {
  const auto t0 = std::chrono::steady_clock::now();
  Matrixd pts(100, 2);
  Eigen::Index r = 0;
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b) {
      pts(r, 0) = a;
      pts(r, 1) = b;
      ++r;
    }
  const Eigen::Index i0 = 4 * 10 + 4;
  const Vector2d q0 = pts.row(i0).transpose();
  const auto [g1, g2] = adversarial_pair(q0, pts, 1.0);
  const LandmarkSetd Q = make_landmark_set(std::move(pts), 9.0);
  const SketchVectord v1 = sketch(Q, g1);
  const SketchVectord v2 = sketch(Q, g2);
  const Vectord gap_sq = (v1.values - v2.values).array().square();
  const double fbar = gap_sq.dot(Q.weights);
  const double sigma_hat = gap_sq(i0) / fbar;
  const double rel = std::abs(sigma_hat - 100.0) / 100.0;
  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "cost share of the visited landmark = %.9f x n (n=100); %.2fs",
                sigma_hat / 100.0, dt);
  report(6, rel <= 1e-6 && dt < 1.0, buf);
}

TEST_CASE("criterion 7: online sampler keeps a spectral sandwich with few rows") {
  const auto t0 = std::chrono::steady_clock::now();
  const double eps = 0.5, delta = 0.05;
  Rng setup(derive_seed(707, "c7:landmarks"));
  const LandmarkSetd Q = uniform_landmarks(2000, 3, 1.0, setup);
  const Matrixd A = build_design_matrix(Q);
  const double normA_sq =
      Eigen::SelfAdjointEigenSolver<Matrixd>(A.transpose() * A, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  const double dc = static_cast<double>(A.cols());
  const double kept_bound = 10.0 * dc * std::log(dc) * std::log(eps * normA_sq / delta) / (eps * eps);

  int sandwich_ok = 0;
  std::vector<double> kept;
  for (int run = 0; run < 100; ++run) {
    const auto res =
        online_sample(Q, eps, delta, derive_seed(707, static_cast<std::uint64_t>(run)));
    if (spectral_sandwich_check(A, res.sampled, eps, delta)) ++sandwich_ok;
    kept.push_back(static_cast<double>(res.kept_indices.size()));
  }
  const double med = median_estimate(kept);
  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "sandwich holds in %d/100 runs; median kept rows %.0f <= %.1f; %.1fs", sandwich_ok,
                med, kept_bound, dt);
  report(7, sandwich_ok >= 90 && med <= kept_bound && dt < 120.0, buf);
}

TEST_CASE("criterion 8: grid sketches round-trip generated curves exactly") {
  const auto t0 = std::chrono::steady_clock::now();
  const double side = 10.0;
  const double tau = side / 20.0;
  const double eta = tau / 32.0;
  const LandmarkSetd Q = build_grid(0.0, side, eta);
  int exact = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(808, static_cast<std::uint64_t>(i)));
    const long k = 1 + (i % 10);
    const Trajectoryd want = random_curve(rng, k, tau, side);
    const SketchVectord v = sketch(Q, want);
    bool good = false;
    double err = std::numeric_limits<double>::infinity();
    try {
      const Trajectoryd got = recover(Q, v, eta);
      if (got.points.rows() == want.points.rows()) {
        const double fwd = (got.points - want.points).cwiseAbs().maxCoeff();
        const double rev = (got.points - want.points.colwise().reverse()).cwiseAbs().maxCoeff();
        err = std::min(fwd, rev);
        good = err <= 1e-6 * tau;
      }
    } catch (const std::exception&) {
      good = false;
    }
    if (good) {
      ++exact;
      worst = std::max(worst, err);
    }
  }
  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d/100 curves recovered within 1e-6 tau (worst %.2e); %.0fs", exact, worst, dt);
  report(8, exact == 100 && dt < 300.0, buf);
}

TEST_CASE("criterion 9: halving the grid step at most quintuples recovery time") {
  const double side = 10.0;
  const double tau = side / 20.0;
  Rng rng(derive_seed(909, "c9:curve"));
  const Trajectoryd curve = random_curve(rng, 5, tau, side);

  double times[2] = {0.0, 0.0};
  const double etas[2] = {tau / 32.0, tau / 64.0};
  for (int step = 0; step < 2; ++step) {
    const LandmarkSetd Q = build_grid(0.0, side, etas[step]);
    const SketchVectord v = sketch(Q, curve);
    const auto t0 = std::chrono::steady_clock::now();
    const Trajectoryd got = recover(Q, v, etas[step]);
    times[step] = seconds_since(t0);
    REQUIRE(got.points.rows() == curve.points.rows());
  }
  const double ratio = times[1] / times[0];
  char buf[160];
  std::snprintf(buf, sizeof buf, "recovery time %.3fs -> %.3fs, ratio %.2f <= 5", times[0],
                times[1], ratio);
  report(9, ratio <= 5.0, buf);
}

TEST_CASE("strong sampling note: doubling the size multiplier never worsens the worst pair") {
  // No fixed numeric target attaches to the simultaneous-error guarantees;
  // instead sample at the formula size for C = 1, 2, 4, 8 with a shared draw
  // stream (each coreset is a prefix of the next) and require the achieved
  // max relative error over many pairs to improve monotonically.
  const double L = 1.0;
  Rng setup(derive_seed(111, "strong:landmarks"));
  const LandmarkSetd Q = uniform_landmarks(500, 2, L, setup);
  const long pair_count = 10000;

  const auto run_family = [&](const SensitivityProfiled& profile, Eigen::Index base_N,
                              auto&& pair_gap, const char* label) {
    std::vector<Eigen::Index> sizes;
    for (int c = 1; c <= 8; c *= 2) sizes.push_back(base_N * c);
    const auto big = sensitive_sample(Q, profile, sizes.back(), derive_seed(111, "strong:draw"));
    std::vector<Vectord> folded;
    for (const auto N : sizes)
      folded.push_back(fold_parent_weights(big.indices, N, profile.sigma, profile.total, Q.size()));

    std::vector<double> max_rel(sizes.size(), 0.0);
    long included = 0;
    Vectord gap_sq(Q.size());
    for (long p = 0; p < pair_count; ++p) {
      const double exact_sq = pair_gap(p, gap_sq);
      if (exact_sq <= 0) continue;
      ++included;
      const double exact = std::sqrt(exact_sq);
      for (std::size_t s = 0; s < sizes.size(); ++s) {
        const double est = std::sqrt(std::max(0.0, folded[s].dot(gap_sq)));
        max_rel[s] = std::max(max_rel[s], std::abs(est - exact) / exact);
      }
    }
    bool monotone = true;
    for (std::size_t s = 1; s < sizes.size(); ++s)
      if (max_rel[s] > max_rel[s - 1]) monotone = false;
    std::printf("[%s] strong sampling (%s): N=%ld..%ld over %ld pairs, max rel err %.4f -> %.4f "
                "-> %.4f -> %.4f\n",
                monotone ? "PASS" : "FAIL", label, static_cast<long>(sizes.front()),
                static_cast<long>(sizes.back()), included, max_rel[0], max_rel[1], max_rel[2],
                max_rel[3]);
    std::fflush(stdout);
    CHECK(monotone);
  };

  {
    const auto profile = hyperplane_sensitivities(Q);
    const Eigen::Index N =
        sample_size(SampleRegime::HyperplaneStrong, {2, 0.5, 0.1, profile.total, 0, 1.0});
    Rng prng(derive_seed(111, "strong:hyperplane-pairs"));
    std::vector<SketchVectord> sk1, sk2;
    const auto gap_fn = [&](long, Vectord& gap_sq) {
      const SketchVectord a = sketch(Q, random_hyperplane(prng, 2, L));
      const SketchVectord b = sketch(Q, random_hyperplane(prng, 2, L));
      gap_sq = (a.values - b.values).array().square();
      return gap_sq.dot(Q.weights);
    };
    run_family(profile, N, gap_fn, "hyperplane");
  }

  {
    const double rho = 0.2, tau = L / 20.0;
    const long k = 2;
    const auto profile = total_sensitivity_bound(Q, ShapeRegimed{L, rho, 2, 0});
    const Eigen::Index N = sample_size(
        SampleRegime::TrajectoryStrong, {2, 0.9, 0.1, profile.total, static_cast<int>(k), 1.0});
    Rng crng(derive_seed(111, "strong:curves"));
    std::vector<SketchVectord> pool;
    for (int i = 0; i < 120; ++i) pool.push_back(sketch(Q, random_curve(crng, k, tau, L)));
    Rng prng(derive_seed(111, "strong:curve-pairs"));
    const double rho_sq = rho * rho;
    const auto gap_fn = [&](long, Vectord& gap_sq) {
      const auto i = prng.uniform_int(0, 119);
      auto j = prng.uniform_int(0, 119);
      while (j == i) j = prng.uniform_int(0, 119);
      gap_sq = (pool[static_cast<std::size_t>(i)].values - pool[static_cast<std::size_t>(j)].values)
                   .array()
                   .square();
      const double exact_sq = gap_sq.dot(Q.weights);
      return exact_sq >= rho_sq ? exact_sq : 0.0;  // scored only at the regime's distance scale
    };
    run_family(profile, N, gap_fn, "trajectory");
  }
}

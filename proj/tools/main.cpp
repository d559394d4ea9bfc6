#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mindist/coreset.hpp"
#include "mindist/io.hpp"
#include "mindist/reconstruct.hpp"
#include "mindist/rng.hpp"
#include "mindist/sensitivity.hpp"
#include "mindist/sketch.hpp"
#include "mindist/streaming.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

mindist::LandmarkSetd gen_uniform(Eigen::Index n, int d, double L, mindist::Rng& rng) {
  mindist::Matrixd pts(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = L * rng.uniform01();
  return mindist::make_landmark_set(std::move(pts), L);
}

// Two tight Gaussian blobs of very different mass on the cube diagonal.  The
// small blob's points sit isolated across a wide gap, which drives the density
// imbalance statistic C_Q well above the uniform value at equal n.
mindist::LandmarkSetd gen_clustered(Eigen::Index n, int d, double L, mindist::Rng& rng) {
  mindist::Matrixd pts(n, d);
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
  return mindist::make_landmark_set(std::move(pts), L);
}

// Random polyline with k segments, rejection-sampled until it passes
// validate_curve for tau on [0, side]^2.  Headings turn by at least 0.15 rad
// away from straight and from reversal so the angle rule has slack; segment
// lengths stay within [1.2 tau, 3 tau] so consecutive vertices clear the
// separation rule by construction and the walk stays compact.
mindist::Trajectoryd generate_curve(long k, double tau, double side, std::uint64_t seed) {
  if (k < 1) throw mindist::PreconditionError("gen-curve: k must be at least 1");
  if (!(tau > 0)) throw mindist::PreconditionError("gen-curve: tau must be positive");
  if (!(side > 2 * tau))
    throw mindist::PreconditionError("gen-curve: domain side must exceed 2 tau");
  mindist::Rng rng(mindist::derive_seed(seed, "gen-curve"));
  const double lo = tau;
  const double hi = side - tau;
  const double min_len = 1.2 * tau;
  const double max_len = 3.0 * tau;
  const double angle_margin = 0.15;
  const int budget = 100000;
  for (int attempt = 0; attempt < budget; ++attempt) {
    mindist::Matrixd pts(k + 1, 2);
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
    mindist::Trajectoryd t{std::move(pts)};
    if (mindist::validate_curve(t, tau, 0.0, side).ok) return t;
  }
  throw mindist::PreconditionError("gen-curve: no valid curve found within 100000 attempts");
}

mindist::SketchVectord sketch_object_file(const mindist::LandmarkSetd& Q,
                                          const std::string& path) {
  std::ifstream f(path);
  if (!f) throw mindist::PreconditionError("cannot open object file: " + path);
  nlohmann::json j;
  f >> j;
  if (j.contains("critical_points")) return mindist::sketch(Q, mindist::read_trajectory(path));
  if (j.contains("hyperplane")) {
    const auto& arr = j.at("hyperplane");
    mindist::Vectord u(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i)
      u(i) = arr.at(static_cast<std::size_t>(i)).get<double>();
    return mindist::sketch(Q, mindist::hyperplane_canonical(u));
  }
  if (j.contains("segment")) {
    const auto& arr = j.at("segment");
    if (arr.size() != 2)
      throw mindist::PreconditionError("object file: segment needs two endpoints");
    const auto endpoint = [&arr](std::size_t which) {
      const auto& e = arr.at(which);
      mindist::Vectord p(static_cast<Eigen::Index>(e.size()));
      for (Eigen::Index i = 0; i < p.size(); ++i)
        p(i) = e.at(static_cast<std::size_t>(i)).get<double>();
      return p;
    };
    return mindist::sketch(Q, mindist::Segmentd{endpoint(0), endpoint(1)});
  }
  throw mindist::PreconditionError(
      "object file must contain critical_points, hyperplane, or segment");
}

mindist::ProfileKind parse_profile_kind(const std::string& kind) {
  if (kind == mindist::to_string(mindist::ProfileKind::ExactHyperplane))
    return mindist::ProfileKind::ExactHyperplane;
  if (kind == mindist::to_string(mindist::ProfileKind::ShapeUpperBound))
    return mindist::ProfileKind::ShapeUpperBound;
  throw mindist::PreconditionError("unknown sensitivity kind: " + kind);
}

mindist::Hyperplaned random_hyperplane(mindist::Rng& rng, int d, double L) {
  mindist::Vectord u(d + 1);
  double norm = 0.0;
  do {
    for (int j = 0; j < d; ++j) u(j) = rng.normal();
    norm = u.head(d).norm();
  } while (norm < 1e-12);
  u.head(d) /= norm;
  mindist::Vectord p(d);
  for (int j = 0; j < d; ++j) p(j) = L * rng.uniform01();
  u(d) = -u.head(d).dot(p);
  return mindist::hyperplane_canonical(u);
}

mindist::Segmentd random_segment(mindist::Rng& rng, int d, double L) {
  mindist::Vectord a(d), b(d);
  do {
    for (int j = 0; j < d; ++j) a(j) = L * rng.uniform01();
    for (int j = 0; j < d; ++j) b(j) = L * rng.uniform01();
  } while ((a - b).norm() < 1e-9 * L);
  return mindist::Segmentd{std::move(a), std::move(b)};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw mindist::PreconditionError("cannot open output file: " + path);
  f << text;
}

struct Opts {
  std::string kind = "uniform";
  std::string regime;
  std::string in, out, sens, object, summary;
  std::string in_a, in_b;
  int d = 2;
  long n = 0;
  long k = 1;
  long N = 0;
  long trials = 400;
  long jobs = 1;
  double L = 1.0;
  double rho = 0.0;
  double tau = 0.0;
  double eta = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  double multiplier = 1.0;
  std::uint64_t seed = 0;
  bool uniform_weights = false;
};

void cmd_gen_landmarks(const Opts& o) {
  mindist::LandmarkSetd Q{};
  if (o.kind == "grid") {
    if (o.d != 2) throw CLI::ValidationError("gen-landmarks: grid kind requires --d 2");
    if (!(o.eta > 0)) throw CLI::ValidationError("gen-landmarks: grid kind requires --eta");
    Q = mindist::build_grid(0.0, o.L, o.eta);
  } else {
    if (o.n < 1) throw CLI::ValidationError("gen-landmarks: --n is required for this kind");
    mindist::Rng rng(mindist::derive_seed(o.seed, "gen-landmarks:" + o.kind));
    Q = o.kind == "uniform" ? gen_uniform(o.n, o.d, o.L, rng)
                            : gen_clustered(o.n, o.d, o.L, rng);
  }
  mindist::write_landmarks(o.out, Q);
}

void cmd_gen_curve(const Opts& o) {
  mindist::write_trajectory(o.out, generate_curve(o.k, o.tau, o.L, o.seed));
}

void cmd_sketch(const Opts& o) {
  const mindist::LandmarkSetd Q = mindist::read_landmarks(o.in);
  mindist::write_sketch(o.out, Q, sketch_object_file(Q, o.object));
}

void cmd_dist(const Opts& o) {
  const auto [Qa, va] = mindist::read_sketch(o.in_a);
  const auto [Qb, vb] = mindist::read_sketch(o.in_b);
  if (Qa.size() != Qb.size() || Qa.dim() != Qb.dim() || Qa.L != Qb.L ||
      (Qa.points - Qb.points).cwiseAbs().maxCoeff() != 0.0 ||
      (Qa.weights - Qb.weights).cwiseAbs().maxCoeff() != 0.0)
    throw mindist::PreconditionError("dist: sketch files disagree on the landmark set");
  std::printf("%.17g\n", mindist::sketch_distance(va, vb, Qa.weights));
}

void cmd_sens(const Opts& o) {
  const mindist::LandmarkSetd Q = mindist::read_landmarks(o.in);
  if (o.kind == "hyperplane") {
    const auto profile = mindist::hyperplane_sensitivities(Q);
    mindist::write_sensitivities(o.out, profile.sigma, Q.weights, profile.total,
                                 mindist::to_string(profile.kind), Q.dim(), Q.L, 0.0);
    return;
  }
  if (!(o.rho > 0)) throw CLI::ValidationError("sens: shape kind requires --rho > 0");
  const auto profile = mindist::total_sensitivity_bound(
      Q, mindist::ShapeRegimed{Q.L, o.rho, static_cast<int>(Q.dim()), 0});
  mindist::write_sensitivities(o.out, profile.sigma, Q.weights, profile.total,
                               mindist::to_string(profile.kind), Q.dim(), Q.L, o.rho);
}

void cmd_coreset(const Opts& o) {
  const mindist::LandmarkSetd Q = mindist::read_landmarks(o.in);
  const mindist::SensitivityFile S = mindist::read_sensitivities(o.sens);
  if (S.sigma.size() != Q.size() ||
      (S.weights - Q.weights).cwiseAbs().maxCoeff() > 1e-12)
    throw mindist::PreconditionError("coreset: sensitivity file does not match the landmark set");
  mindist::SensitivityProfiled profile;
  profile.sigma = S.sigma;
  profile.total = S.total;
  profile.kind = parse_profile_kind(S.kind);
  Eigen::Index N = o.N;
  if (N < 1) {
    if (!(o.eps > 0) || !(o.delta > 0))
      throw CLI::ValidationError("coreset: give --N or both --eps and --delta");
    const auto regime = profile.kind == mindist::ProfileKind::ExactHyperplane
                            ? mindist::SampleRegime::HyperplaneWeak
                            : mindist::SampleRegime::ShapeWeak;
    N = mindist::sample_size(regime, {static_cast<int>(S.d), o.eps, o.delta, S.total,
                                      0, o.multiplier});
  }
  const auto c = mindist::sensitive_sample(Q, profile, N, mindist::derive_seed(o.seed, "coreset"),
                                           o.uniform_weights);
  mindist::write_coreset(o.out, c.indices, c.weights, c.total_sensitivity, c.seed);
}

void cmd_stream(const Opts& o) {
  const mindist::LandmarkSetd Q = mindist::read_landmarks(o.in);
  const auto run = mindist::online_sample(Q, o.eps, o.delta, mindist::derive_seed(o.seed, "stream"));
  std::ofstream f(o.out);
  if (!f) throw mindist::PreconditionError("cannot open output file: " + o.out);
  f << "parent_index,p\n";
  for (std::size_t i = 0; i < run.kept_indices.size(); ++i)
    f << run.kept_indices[i] << ',' << mindist::fmt_double(run.probabilities[i]) << "\n";
  const nlohmann::json summary = {
      {"kept", run.kept_indices.size()}, {"seen", run.rows_seen},
      {"epsilon", o.eps},                {"delta", o.delta},
      {"lambda", run.lambda},            {"c", run.oversample}};
  const std::string path = o.summary.empty() ? o.out + ".json" : o.summary;
  write_text(path, summary.dump(2) + "\n");
}

void cmd_reconstruct(const Opts& o) {
  const auto [Q, v] = mindist::read_sketch(o.in);
  mindist::write_trajectory(o.out, mindist::recover(Q, v, o.eta));
}

void cmd_verify(const Opts& o) {
  const bool hyper = o.regime == "hyperplane-weak";
  if (!hyper && !(o.rho > 0))
    throw CLI::ValidationError("verify: shape-weak regime requires --rho > 0");
  if (o.trials < 1) throw CLI::ValidationError("verify: --trials must be positive");
  const std::uint64_t root = mindist::derive_seed(o.seed, "verify:" + o.regime);
  mindist::Rng setup(mindist::derive_seed(root, "landmarks"));
  const mindist::LandmarkSetd Q = gen_uniform(o.n, o.d, o.L, setup);
  mindist::SensitivityProfiled profile;
  Eigen::Index N = 0;
  if (hyper) {
    profile = mindist::hyperplane_sensitivities(Q);
    N = mindist::sample_size(mindist::SampleRegime::HyperplaneWeak,
                             {o.d, o.eps, o.delta, profile.total, 0, o.multiplier});
  } else {
    profile = mindist::total_sensitivity_bound(Q, mindist::ShapeRegimed{o.L, o.rho, o.d, 0});
    N = mindist::sample_size(mindist::SampleRegime::ShapeWeak,
                             {o.d, o.eps, o.delta, profile.total, 0, o.multiplier});
  }

  std::vector<double> rel(static_cast<std::size_t>(o.trials), 0.0);
  std::vector<char> excluded(static_cast<std::size_t>(o.trials), 0);
  const auto worker = [&](long t0, long t1) {
    for (long t = t0; t < t1; ++t) {
      const std::uint64_t st = mindist::derive_seed(root, static_cast<std::uint64_t>(t));
      mindist::Rng trng(mindist::derive_seed(st, "pair"));
      mindist::SketchVectord s1, s2;
      if (hyper) {
        s1 = mindist::sketch(Q, random_hyperplane(trng, o.d, o.L));
        s2 = mindist::sketch(Q, random_hyperplane(trng, o.d, o.L));
      } else {
        s1 = mindist::sketch(Q, random_segment(trng, o.d, o.L));
        s2 = mindist::sketch(Q, random_segment(trng, o.d, o.L));
      }
      const double exact = mindist::sketch_distance(s1, s2, Q.weights);
      if (hyper ? !(exact > 0) : exact < o.rho) {
        excluded[static_cast<std::size_t>(t)] = 1;
        continue;
      }
      const auto c =
          mindist::sensitive_sample(Q, profile, N, mindist::derive_seed(st, "draw"));
      const double est = mindist::coreset_distance(c, s1, s2);
      rel[static_cast<std::size_t>(t)] = std::abs(est - exact) / exact;
    }
  };
  const long jobs = std::max(1L, std::min(o.jobs, o.trials));
  if (jobs == 1) {
    worker(0, o.trials);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (long j = 0; j < jobs; ++j)
      pool.emplace_back(worker, o.trials * j / jobs, o.trials * (j + 1) / jobs);
    for (auto& th : pool) th.join();
  }

  long included = 0, excluded_count = 0, exceed = 0;
  double max_rel = 0.0, sum_rel = 0.0;
  for (long t = 0; t < o.trials; ++t) {
    if (excluded[static_cast<std::size_t>(t)]) {
      ++excluded_count;
      continue;
    }
    ++included;
    const double r = rel[static_cast<std::size_t>(t)];
    if (r > o.eps) ++exceed;
    max_rel = std::max(max_rel, r);
    sum_rel += r;
  }
  if (included == 0) throw mindist::PreconditionError("verify: every trial was excluded");
  const double frac = static_cast<double>(exceed) / static_cast<double>(included);
  const double bound =
      o.delta + 3.0 * std::sqrt(o.delta * (1.0 - o.delta) / static_cast<double>(included));
  nlohmann::json report = {{"regime", o.regime},
                           {"d", o.d},
                           {"n", Q.size()},
                           {"L", o.L},
                           {"eps", o.eps},
                           {"delta", o.delta},
                           {"N", N},
                           {"total_sensitivity", profile.total},
                           {"trials", o.trials},
                           {"included", included},
                           {"excluded", excluded_count},
                           {"exceed_count", exceed},
                           {"exceed_fraction", frac},
                           {"exceed_bound", bound},
                           {"max_rel_error", max_rel},
                           {"mean_rel_error", sum_rel / static_cast<double>(included)},
                           {"pass", frac <= bound}};
  if (!hyper) report["rho"] = o.rho;
  const std::string text = report.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!o.out.empty()) write_text(o.out, text);
}

}  // namespace

int main(int argc, char** argv) {
  Opts o;
  CLI::App app{"MinDist sketches, sensitivity-sampled coresets, streaming landmark reduction, "
               "and exact curve reconstruction"};
  app.require_subcommand(1);

  auto* gl = app.add_subcommand("gen-landmarks", "Generate a landmark set file");
  gl->add_option("--kind", o.kind, "uniform, grid, or clustered")
      ->check(CLI::IsMember({"uniform", "grid", "clustered"}));
  gl->add_option("--n", o.n, "number of landmarks (uniform, clustered)");
  gl->add_option("--eta", o.eta, "grid spacing (grid)");
  gl->add_option("--d", o.d, "ambient dimension")->check(CLI::PositiveNumber);
  gl->add_option("--L", o.L, "cube side")->check(CLI::PositiveNumber);
  gl->add_option("--seed", o.seed, "random seed");
  gl->add_option("--out", o.out, "output landmarks file")->required();
  gl->callback([&o] { cmd_gen_landmarks(o); });

  auto* gc = app.add_subcommand("gen-curve", "Generate a random valid curve file");
  gc->add_option("--k", o.k, "number of segments")->check(CLI::PositiveNumber);
  gc->add_option("--tau", o.tau, "separation scale")->required()->check(CLI::PositiveNumber);
  gc->add_option("--L", o.L, "domain side")->check(CLI::PositiveNumber);
  gc->add_option("--seed", o.seed, "random seed");
  gc->add_option("--out", o.out, "output trajectory file")->required();
  gc->callback([&o] { cmd_gen_curve(o); });

  auto* sk = app.add_subcommand("sketch", "Sketch an object against a landmark set");
  sk->add_option("--in", o.in, "landmarks file")->required();
  sk->add_option("--object", o.object,
                 "object JSON file (critical_points, hyperplane, or segment)")
      ->required();
  sk->add_option("--out", o.out, "output sketch file")->required();
  sk->callback([&o] { cmd_sketch(o); });

  auto* di = app.add_subcommand("dist", "Distance between two sketches of one landmark set");
  di->add_option("a", o.in_a, "first sketch file")->required();
  di->add_option("b", o.in_b, "second sketch file")->required();
  di->callback([&o] { cmd_dist(o); });

  auto* se = app.add_subcommand("sens", "Per-landmark sensitivities or shape upper bounds");
  se->add_option("--in", o.in, "landmarks file")->required();
  se->add_option("--kind", o.kind, "hyperplane or shape")
      ->required()
      ->check(CLI::IsMember({"hyperplane", "shape"}));
  se->add_option("--rho", o.rho, "minimum distance scale (shape)");
  se->add_option("--out", o.out, "output sensitivities file")->required();
  se->callback([&o] { cmd_sens(o); });

  auto* co = app.add_subcommand("coreset", "Sensitivity-sample a coreset of the landmarks");
  co->add_option("--in", o.in, "landmarks file")->required();
  co->add_option("--sens", o.sens, "sensitivities file")->required();
  co->add_option("--N", o.N, "sample size (omit to size from --eps/--delta)");
  co->add_option("--eps", o.eps, "target relative error");
  co->add_option("--delta", o.delta, "failure probability");
  co->add_option("--multiplier", o.multiplier, "constant in front of the sample size")
      ->check(CLI::PositiveNumber);
  co->add_flag("--uniform", o.uniform_weights, "flat 1/N weights instead of corrections");
  co->add_option("--seed", o.seed, "random seed");
  co->add_option("--out", o.out, "output coreset file")->required();
  co->callback([&o] { cmd_coreset(o); });

  auto* st = app.add_subcommand("stream", "One-pass online row sampling of the landmarks");
  st->add_option("--in", o.in, "landmarks file")->required();
  st->add_option("--eps", o.eps, "spectral accuracy")->required();
  st->add_option("--delta", o.delta, "additive regularization scale")->required();
  st->add_option("--seed", o.seed, "random seed");
  st->add_option("--out", o.out, "output CSV of kept rows")->required();
  st->add_option("--summary", o.summary, "summary JSON path (default: <out>.json)");
  st->callback([&o] { cmd_stream(o); });

  auto* re = app.add_subcommand("reconstruct", "Recover a curve from a grid sketch");
  re->add_option("--in", o.in, "sketch file")->required();
  re->add_option("--eta", o.eta, "grid spacing")->required()->check(CLI::PositiveNumber);
  re->add_option("--out", o.out, "output trajectory file")->required();
  re->callback([&o] { cmd_reconstruct(o); });

  auto* ve = app.add_subcommand("verify", "Empirical coreset error report over random pairs");
  ve->add_option("--regime", o.regime, "hyperplane-weak or shape-weak")
      ->required()
      ->check(CLI::IsMember({"hyperplane-weak", "shape-weak"}));
  ve->add_option("--d", o.d, "ambient dimension")->required()->check(CLI::PositiveNumber);
  ve->add_option("--n", o.n, "number of landmarks")->required()->check(CLI::PositiveNumber);
  ve->add_option("--L", o.L, "cube side")->check(CLI::PositiveNumber);
  ve->add_option("--eps", o.eps, "target relative error")->required();
  ve->add_option("--delta", o.delta, "failure probability")->required();
  ve->add_option("--rho", o.rho, "minimum distance scale (shape-weak)");
  ve->add_option("--multiplier", o.multiplier, "constant in front of the sample size")
      ->check(CLI::PositiveNumber);
  ve->add_option("--trials", o.trials, "number of independent trials");
  ve->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  ve->add_option("--seed", o.seed, "random seed");
  ve->add_option("--out", o.out, "also write the report JSON here");
  ve->callback([&o] { cmd_verify(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const mindist::InconsistentSketchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

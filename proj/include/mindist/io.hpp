#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mindist/sketch.hpp"
#include "mindist/types.hpp"

namespace mindist {

// All floating-point output goes through %.17g so files round-trip doubles
// exactly.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline double parse_double(const std::string& s, const char* what) {
  const char* p = s.c_str();
  char* end = nullptr;
  const double x = std::strtod(p, &end);
  if (end == p || *end != '\0') throw PreconditionError(std::string("malformed number in ") + what);
  return x;
}

inline long parse_long(const std::string& s, const char* what) {
  const char* p = s.c_str();
  char* end = nullptr;
  const long x = std::strtol(p, &end, 10);
  if (end == p || *end != '\0')
    throw PreconditionError(std::string("malformed integer in ") + what);
  return x;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  return out;
}

// Header lines look like "# landmarks d=2 n=9 L=1".  The first token names
// the payload; the rest are key=value pairs.
inline std::pair<std::string, std::map<std::string, std::string>> parse_header(
    const std::string& line, const char* what) {
  if (line.size() < 2 || line[0] != '#')
    throw PreconditionError(std::string(what) + ": missing header line");
  std::istringstream is(line.substr(1));
  std::string kind;
  is >> kind;
  std::map<std::string, std::string> kv;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw PreconditionError(std::string(what) + ": malformed header token " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return {kind, kv};
}

inline std::string header_value(const std::map<std::string, std::string>& kv, const char* key,
                                const char* what) {
  const auto it = kv.find(key);
  if (it == kv.end())
    throw PreconditionError(std::string(what) + ": header lacks " + key);
  return it->second;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw PreconditionError("cannot open for writing: " + path);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw PreconditionError("cannot open for reading: " + path);
  return f;
}

inline std::string next_line(std::ifstream& f, const char* what) {
  std::string line;
  if (!std::getline(f, line)) throw PreconditionError(std::string(what) + ": truncated file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace detail

inline void write_landmarks(const std::string& path, const LandmarkSetd& Q) {
  auto f = detail::open_out(path);
  f << "# landmarks d=" << Q.dim() << " n=" << Q.size() << " L=" << fmt_double(Q.L) << "\n";
  f << "index";
  for (Eigen::Index j = 0; j < Q.dim(); ++j) f << ",x_" << (j + 1);
  f << ",weight\n";
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    f << i;
    for (Eigen::Index j = 0; j < Q.dim(); ++j) f << ',' << fmt_double(Q.points(i, j));
    f << ',' << fmt_double(Q.weights(i)) << "\n";
  }
}

inline LandmarkSetd read_landmarks(const std::string& path) {
  auto f = detail::open_in(path);
  const auto [kind, kv] = detail::parse_header(detail::next_line(f, "landmarks"), "landmarks");
  if (kind != "landmarks") throw PreconditionError("not a landmarks file: " + path);
  const long d = detail::parse_long(detail::header_value(kv, "d", "landmarks"), "landmarks d");
  const long n = detail::parse_long(detail::header_value(kv, "n", "landmarks"), "landmarks n");
  const double L = detail::parse_double(detail::header_value(kv, "L", "landmarks"), "landmarks L");
  detail::next_line(f, "landmarks");  // column names
  Matrixd pts(n, d);
  Vectord w(n);
  for (long i = 0; i < n; ++i) {
    const auto fields = detail::split_csv(detail::next_line(f, "landmarks"));
    if (static_cast<long>(fields.size()) != d + 2)
      throw PreconditionError("landmarks: wrong column count");
    for (long j = 0; j < d; ++j) pts(i, j) = detail::parse_double(fields[j + 1], "landmarks");
    w(i) = detail::parse_double(fields[d + 1], "landmarks");
  }
  return make_landmark_set(std::move(pts), std::move(w), L);
}

inline void write_sketch(const std::string& path, const LandmarkSetd& Q, const SketchVectord& v) {
  if (v.size() != Q.size()) throw PreconditionError("write_sketch: size mismatch");
  auto f = detail::open_out(path);
  f << "# sketch d=" << Q.dim() << " n=" << Q.size() << " L=" << fmt_double(Q.L)
    << " signed=" << (v.is_signed ? 1 : 0) << "\n";
  f << "index";
  for (Eigen::Index j = 0; j < Q.dim(); ++j) f << ",x_" << (j + 1);
  f << ",weight,value\n";
  for (Eigen::Index i = 0; i < Q.size(); ++i) {
    f << i;
    for (Eigen::Index j = 0; j < Q.dim(); ++j) f << ',' << fmt_double(Q.points(i, j));
    f << ',' << fmt_double(Q.weights(i)) << ',' << fmt_double(v.values(i)) << "\n";
  }
}

inline std::pair<LandmarkSetd, SketchVectord> read_sketch(const std::string& path) {
  auto f = detail::open_in(path);
  const auto [kind, kv] = detail::parse_header(detail::next_line(f, "sketch"), "sketch");
  if (kind != "sketch") throw PreconditionError("not a sketch file: " + path);
  const long d = detail::parse_long(detail::header_value(kv, "d", "sketch"), "sketch d");
  const long n = detail::parse_long(detail::header_value(kv, "n", "sketch"), "sketch n");
  const double L = detail::parse_double(detail::header_value(kv, "L", "sketch"), "sketch L");
  const long sgn = detail::parse_long(detail::header_value(kv, "signed", "sketch"), "sketch signed");
  detail::next_line(f, "sketch");  // column names
  Matrixd pts(n, d);
  Vectord w(n), vals(n);
  for (long i = 0; i < n; ++i) {
    const auto fields = detail::split_csv(detail::next_line(f, "sketch"));
    if (static_cast<long>(fields.size()) != d + 3)
      throw PreconditionError("sketch: wrong column count");
    for (long j = 0; j < d; ++j) pts(i, j) = detail::parse_double(fields[j + 1], "sketch");
    w(i) = detail::parse_double(fields[d + 1], "sketch");
    vals(i) = detail::parse_double(fields[d + 2], "sketch");
  }
  return {make_landmark_set(std::move(pts), std::move(w), L),
          SketchVectord{std::move(vals), sgn != 0}};
}

inline void write_trajectory(const std::string& path, const Trajectoryd& t) {
  nlohmann::json j;
  auto& pts = j["critical_points"];
  pts = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.points.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < t.points.cols(); ++c) row.push_back(t.points(i, c));
    pts.push_back(row);
  }
  auto f = detail::open_out(path);
  f << j.dump(2) << "\n";
}

inline Trajectoryd read_trajectory(const std::string& path) {
  auto f = detail::open_in(path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("trajectory: invalid JSON: ") + e.what());
  }
  if (!j.contains("critical_points") || !j["critical_points"].is_array())
    throw PreconditionError("trajectory: missing critical_points array");
  const auto& pts = j["critical_points"];
  if (pts.size() < 2) throw PreconditionError("trajectory: needs at least 2 points");
  const std::size_t d = pts[0].size();
  Matrixd m(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].is_array() || pts[i].size() != d)
      throw PreconditionError("trajectory: ragged critical_points");
    for (std::size_t c = 0; c < d; ++c) {
      if (!pts[i][c].is_number()) throw PreconditionError("trajectory: non-numeric coordinate");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = pts[i][c].get<double>();
    }
  }
  for (Eigen::Index i = 0; i + 1 < m.rows(); ++i)
    if ((m.row(i) - m.row(i + 1)).norm() == 0.0)
      throw PreconditionError("trajectory: repeated consecutive points");
  return Trajectoryd{std::move(m)};
}

namespace detail {

// Sensitivity and coreset files open with "# {json}"; nlohmann prints the
// shortest exact double form and sorts keys, so output stays byte-stable.
inline nlohmann::json parse_json_header(std::ifstream& f, const char* what) {
  const std::string line = next_line(f, what);
  if (line.size() < 2 || line[0] != '#')
    throw PreconditionError(std::string(what) + ": missing header line");
  nlohmann::json j = nlohmann::json::parse(line.substr(1), nullptr, false);
  if (!j.is_object()) throw PreconditionError(std::string(what) + ": header is not a JSON object");
  return j;
}

inline const nlohmann::json& json_field(const nlohmann::json& j, const char* key,
                                        const char* what) {
  const auto it = j.find(key);
  if (it == j.end()) throw PreconditionError(std::string(what) + ": header lacks " + key);
  return *it;
}

}  // namespace detail

// Per-landmark sensitivity table.
inline void write_sensitivities(const std::string& path, const Vectord& sigma,
                                const Vectord& weights, double total, const std::string& kind,
                                Eigen::Index d, double L, double rho) {
  if (sigma.size() != weights.size()) throw PreconditionError("write_sensitivities: size mismatch");
  auto f = detail::open_out(path);
  const nlohmann::json header = {
      {"kind", kind}, {"total", total}, {"d", d}, {"L", L}, {"rho", rho}};
  f << "# " << header.dump() << "\n";
  f << "index,sigma,weight\n";
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    f << i << ',' << fmt_double(sigma(i)) << ',' << fmt_double(weights(i)) << "\n";
}

struct SensitivityFile {
  Vectord sigma;
  Vectord weights;
  double total = 0;
  std::string kind;
  Eigen::Index d = 0;
  double L = 0;
  double rho = 0;
};

inline SensitivityFile read_sensitivities(const std::string& path) {
  auto f = detail::open_in(path);
  const nlohmann::json header = detail::parse_json_header(f, "sensitivities");
  SensitivityFile out;
  out.kind = detail::json_field(header, "kind", "sensitivities").get<std::string>();
  out.total = detail::json_field(header, "total", "sensitivities").get<double>();
  out.d = detail::json_field(header, "d", "sensitivities").get<Eigen::Index>();
  out.L = detail::json_field(header, "L", "sensitivities").get<double>();
  out.rho = detail::json_field(header, "rho", "sensitivities").get<double>();
  detail::next_line(f, "sensitivities");  // column names
  std::vector<double> sigma, weights;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 3) throw PreconditionError("sensitivities: wrong column count");
    sigma.push_back(detail::parse_double(fields[1], "sensitivities"));
    weights.push_back(detail::parse_double(fields[2], "sensitivities"));
  }
  if (sigma.empty()) throw PreconditionError("sensitivities: no rows");
  out.sigma = Eigen::Map<const Vectord>(sigma.data(), static_cast<Eigen::Index>(sigma.size()));
  out.weights =
      Eigen::Map<const Vectord>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return out;
}

// Sampled landmark subset: rows of the parent set plus correction weights.
inline void write_coreset(const std::string& path, const std::vector<Eigen::Index>& indices,
                          const Vectord& weights, double total_sensitivity, std::uint64_t seed) {
  if (static_cast<Eigen::Index>(indices.size()) != weights.size())
    throw PreconditionError("write_coreset: size mismatch");
  auto f = detail::open_out(path);
  const nlohmann::json header = {
      {"seed", seed}, {"N", indices.size()}, {"total_sensitivity", total_sensitivity}};
  f << "# " << header.dump() << "\n";
  f << "parent_index,weight\n";
  for (std::size_t i = 0; i < indices.size(); ++i)
    f << indices[i] << ',' << fmt_double(weights(static_cast<Eigen::Index>(i))) << "\n";
}

struct CoresetFile {
  std::vector<Eigen::Index> indices;
  Vectord weights;
  double total_sensitivity = 0;
  std::uint64_t seed = 0;
};

inline CoresetFile read_coreset(const std::string& path) {
  auto f = detail::open_in(path);
  const nlohmann::json header = detail::parse_json_header(f, "coreset");
  const auto N = detail::json_field(header, "N", "coreset").get<Eigen::Index>();
  if (N < 0) throw PreconditionError("coreset: negative N");
  CoresetFile out;
  out.total_sensitivity =
      detail::json_field(header, "total_sensitivity", "coreset").get<double>();
  out.seed = detail::json_field(header, "seed", "coreset").get<std::uint64_t>();
  detail::next_line(f, "coreset");  // column names
  out.weights.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto fields = detail::split_csv(detail::next_line(f, "coreset"));
    if (fields.size() != 2) throw PreconditionError("coreset: wrong column count");
    out.indices.push_back(detail::parse_long(fields[0], "coreset"));
    out.weights(i) = detail::parse_double(fields[1], "coreset");
  }
  return out;
}

}  // namespace mindist

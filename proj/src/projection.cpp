#include "rescnn/projection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "rescnn/csv.hpp"

namespace rescnn {

SvdResult jacobi_svd(const Tensor& a_in) {
  if (a_in.rank() != 2) throw DimensionError("jacobi_svd expects a matrix, got " + shape_str(a_in.shape()));
  const std::size_t n = a_in.dim(0), d = a_in.dim(1);
  // Work on columns stored contiguously.
  std::vector<double> a(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) a[j * n + i] = a_in.at(i, j);
  std::vector<double> v(d * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) v[j * d + j] = 1.0;

  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double* ap = &a[p * n];
        double* aq = &a[q * n];
        double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t i = 0; i < n; ++i) {
          alpha += ap[i] * ap[i];
          beta += aq[i] * aq[i];
          gamma += ap[i] * aq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double x = ap[i], y = aq[i];
          ap[i] = c * x - s * y;
          aq[i] = s * x + c * y;
        }
        double* vp = &v[p * d];
        double* vq = &v[q * d];
        for (std::size_t i = 0; i < d; ++i) {
          const double x = vp[i], y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(d);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[j * n + i] * a[j * n + i];
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdResult r{std::vector<double>(d), Tensor({d, d})};
  for (std::size_t c = 0; c < d; ++c) {
    r.singular_values[c] = sigma[order[c]];
    for (std::size_t i = 0; i < d; ++i) r.v.at(i, c) = v[order[c] * d + i];
  }
  return r;
}

ProjectedPoints pca_project(const Tensor& embeddings, std::size_t k, std::vector<std::string> tokens) {
  if (embeddings.rank() != 2) throw DimensionError("pca_project expects N x D, got " + shape_str(embeddings.shape()));
  const std::size_t n = embeddings.dim(0), d = embeddings.dim(1);
  if (k < 1 || k > d || k >= n) {
    throw DimensionError(fmt::format("pca_project: need 1 <= k <= {} and k < {} (rows), got k = {}", d, n, k));
  }
  if (!tokens.empty() && tokens.size() != n) {
    throw DimensionError(fmt::format("pca_project: {} token labels for {} rows", tokens.size(), n));
  }

  Tensor centered = embeddings;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += embeddings.at(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered.at(i, j) -= mean;
  }

  SvdResult svd = jacobi_svd(centered);
  const double smax = svd.singular_values.empty() ? 0.0 : svd.singular_values[0];
  const double tol = static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() * smax;
  double total = 0;
  ProjectedPoints out;
  for (double s : svd.singular_values) {
    total += s * s;
    if (s > tol && s > 0.0) ++out.rank;
  }
  out.rank_deficient = out.rank < k;

  out.coords = Tensor({n, k});
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::abs(svd.v.at(i, c)) > std::abs(svd.v.at(best, c))) best = i;
    const double sign = svd.v.at(best, c) < 0 ? -1.0 : 1.0;
    const bool zero = c >= out.rank;
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0;
      if (!zero) {
        for (std::size_t j = 0; j < d; ++j) x += centered.at(i, j) * svd.v.at(j, c);
      }
      out.coords.at(i, c) = sign * x;
    }
    const double s = svd.singular_values[c];
    out.explained_ratio.push_back(total > 0 ? s * s / total : 0.0);
  }
  if (tokens.empty()) {
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::to_string(i));
  }
  out.tokens = std::move(tokens);
  return out;
}

Tensor top_rows(const Tensor& table, std::size_t count) {
  if (table.rank() != 2 || table.dim(0) < 3) throw DimensionError("top_rows expects a table with at least one token row");
  const std::size_t m = std::min(count, table.dim(0) - 2);
  if (m == 0) throw DimensionError("top_rows: count must be positive");
  const std::size_t d = table.dim(1);
  std::vector<double> v(table.raw() + 2 * d, table.raw() + (2 + m) * d);
  return Tensor({m, d}, std::move(v));
}

void export_points(const ProjectedPoints& points, const std::filesystem::path& path) {
  const std::size_t k = points.coords.empty() ? points.explained_ratio.size() : points.coords.dim(1);
  if (k < 1 || k > 3) throw DimensionError(fmt::format("export_points supports 1 to 3 components, got {}", k));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write point file " + path.string());
  static const char* kAxes[] = {"x", "y", "z"};
  out << "token";
  for (std::size_t c = 0; c < k; ++c) out << ',' << kAxes[c];
  out << '\n';
  for (std::size_t i = 0; i < points.tokens.size(); ++i) {
    out << csv::escape(points.tokens[i]);
    for (std::size_t c = 0; c < k; ++c) out << fmt::format(",{:.17g}", points.coords.at(i, c));
    out << '\n';
  }
  if (!out) throw DataError("error writing point file " + path.string());
}

ProjectedPoints read_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open point file " + path.string());
  csv::Reader reader(in);
  csv::Record rec;
  std::vector<csv::ParseIssue> issues;
  if (!reader.next(rec, issues) || rec.fields.size() < 2 || rec.fields[0] != "token") {
    throw DataError(path.string() + ": not a point file");
  }
  const std::size_t k = rec.fields.size() - 1;
  ProjectedPoints p;
  std::vector<double> values;
  while (reader.next(rec, issues)) {
    if (rec.fields.size() != k + 1) throw DataError(fmt::format("{} line {}: expected {} fields", path.string(), rec.line, k + 1));
    p.tokens.push_back(rec.fields[0]);
    for (std::size_t c = 1; c <= k; ++c) {
      try {
        values.push_back(std::stod(rec.fields[c]));
      } catch (const std::exception&) {
        throw DataError(fmt::format("{} line {}: bad number '{}'", path.string(), rec.line, rec.fields[c]));
      }
    }
  }
  if (!issues.empty()) throw DataError(fmt::format("{} line {}: {}", path.string(), issues[0].line, issues[0].message));
  if (!p.tokens.empty()) p.coords = Tensor({p.tokens.size(), k}, std::move(values));
  p.explained_ratio.assign(k, 0.0);
  return p;
}

}  // namespace rescnn

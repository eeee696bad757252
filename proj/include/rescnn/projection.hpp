#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rescnn/tensor.hpp"

namespace rescnn {

struct ProjectedPoints {
  std::vector<std::string> tokens;
  Tensor coords;                         // N x k
  std::vector<double> explained_ratio;   // per component, non-increasing
  std::size_t rank = 0;                  // numerical rank of the centered input
  bool rank_deficient = false;           // rank < k
};

struct SvdResult {
  std::vector<double> singular_values;  // descending
  Tensor v;                             // D x D, columns are right singular vectors
};

/// One-sided Jacobi SVD of an N x D matrix; only the right factor is kept.
SvdResult jacobi_svd(const Tensor& a);

/// Mean-centers the rows, takes the thin SVD and projects onto the top k right
/// singular vectors. Each component's sign is chosen so its largest-magnitude
/// loading is positive (first one wins ties). Requires 1 <= k <= D and k < N;
/// throws DimensionError otherwise. `tokens` may be empty or hold N labels.
ProjectedPoints pca_project(const Tensor& embeddings, std::size_t k, std::vector<std::string> tokens = {});

/// The rows of the `count` most frequent tokens of an embedding table whose
/// rows 0 and 1 are padding and OOV (so rows 2.. in frequency order).
Tensor top_rows(const Tensor& table, std::size_t count);

/// CSV `token,x,y[,z]` with 17 significant digits, so values parse back
/// exactly. Supports k in 1..3. Throws DataError if the file cannot be written.
void export_points(const ProjectedPoints& points, const std::filesystem::path& path);

/// Reads a file written by export_points.
ProjectedPoints read_points(const std::filesystem::path& path);

}  // namespace rescnn

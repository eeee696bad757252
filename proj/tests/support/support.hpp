#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "rescnn/rng.hpp"
#include "rescnn/tensor.hpp"

namespace rescnn::testing {

Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0);
IndexTensor random_ids(const Shape& shape, Rng& rng, std::int64_t lo, std::int64_t hi);

double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& a);

/// ||a - b|| / (||a|| + ||b||); 0 when both are zero.
double rel_error(const Tensor& a, const Tensor& b);

/// Central differences of `loss` with respect to every element of `x`. The
/// tensor is perturbed in place and restored.
Tensor numeric_gradient(const std::function<double()>& loss, Tensor& x, double eps = 1e-5);

std::filesystem::path fixture(const std::string& name);
std::filesystem::path source_data(const std::string& name);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

std::string read_file(const std::filesystem::path& path);

}  // namespace rescnn::testing

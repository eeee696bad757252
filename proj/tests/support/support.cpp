#include "support.hpp"

#include <unistd.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace rescnn::testing {

Tensor random_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

IndexTensor random_ids(const Shape& shape, Rng& rng, std::int64_t lo, std::int64_t hi) {
  IndexTensor t(shape);
  for (auto& v : t.data()) v = lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo)));
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

double rel_error(const Tensor& a, const Tensor& b) {
  const double denom = norm(a) + norm(b);
  if (denom == 0.0) return 0.0;
  return norm(a - b) / denom;
}

Tensor numeric_gradient(const std::function<double()>& loss, Tensor& x, double eps) {
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = loss();
    x[i] = saved - eps;
    const double down = loss();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(RESCNN_TEST_DATA) / name; }

std::filesystem::path source_data(const std::string& name) {
  return std::filesystem::path(RESCNN_SOURCE_DATA) / name;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("rescnn_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rescnn::testing

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rescnn::testing {

struct GradCase {
  std::string layer;
  std::string shape;
  double rel_error;  // worst over every tensor checked in this case
};

inline const std::vector<std::string> kGradLayers = {
    "embedding", "dense", "conv1d", "maxpool1d", "lstm_step", "bilstm", "residual_add", "softmax_cross_entropy"};

/// Central-difference check (eps 1e-5) of every layer's backward pass on
/// `cases` random small shapes per layer. Loss is <output, R> for a random R.
std::vector<GradCase> gradient_suite(std::uint64_t seed, std::size_t cases = 5);

}  // namespace rescnn::testing

#pragma once

#include <cstdint>
#include <vector>

#include "rescnn/lstm.hpp"
#include "rescnn/model.hpp"
#include "rescnn/tensor.hpp"
#include "rescnn/text.hpp"

namespace rescnn::testing {

/// One LSTM step for a single sample, written as scalar loops straight from
/// the gate equations with W acting on [h_prev, x].
void lstm_step_scalar(const std::vector<double>& x, const std::vector<double>& h_prev,
                      const std::vector<double>& c_prev, const nn::LstmCellParams& p, std::vector<double>& h,
                      std::vector<double>& c);

/// Max |lstm_step - scalar oracle| over `draws` random cells and batches.
double lstm_oracle_max_diff(std::uint64_t seed, int draws);

struct PcaReference {
  Tensor coords;                // N x k
  std::vector<double> ratio;    // explained variance per component
};

/// Projection via the covariance matrix's eigendecomposition (Eigen).
PcaReference pca_covariance_oracle(const Tensor& x, std::size_t k);

/// Largest elementwise difference after flipping each column of `b` to best
/// match the sign of `a`.
double max_diff_up_to_sign(const Tensor& a, const Tensor& b);

/// Pairwise Euclidean distances between rows.
Tensor pairwise_distances(const Tensor& x);

/// Class c draws most of its tokens from its own block of ids, the rest from a
/// shared noise block. Word ids only; char ids are left empty.
std::vector<text::EncodedSample> separable_word_dataset(std::size_t n, std::size_t classes, std::size_t vocab,
                                                        std::size_t word_len, std::uint64_t seed);

/// Small configs that keep every layer of each architecture.
ModelConfig tiny_word_config();
ModelConfig tiny_char_config();
ModelConfig tiny_combined_config();

/// Random word and char ids matching `config`.
Batch random_batch(const ModelConfig& config, std::size_t size, Rng& rng);

/// The traced lengths of the char model: input, conv1, pool1, conv2, pool2,
/// conv3..conv6, pool3, then the flattened width.
std::vector<std::size_t> char_geometry_trace(const ModelConfig& config);

}  // namespace rescnn::testing

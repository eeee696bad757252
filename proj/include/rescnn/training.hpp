#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rescnn/model.hpp"
#include "rescnn/tensor.hpp"
#include "rescnn/text.hpp"

namespace rescnn {

struct LossResult {
  double loss = 0.0;
  Tensor grad_logits;  // dL/dlogits, batch x classes
};

/// Mean of -log p[label] with p clamped at 1e-12. The gradient is taken with
/// respect to the pre-softmax logits: (probs - onehot) / batch.
LossResult cross_entropy(const Tensor& probs, const std::vector<int>& labels);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update. Moments are created on the first call.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 42;
  std::size_t word_len = text::kDefaultWordLength;
  ModelKind model = ModelKind::kCombined;
  double dropout = 0.5;

  AdamConfig adam() const { return {lr, beta1, beta2, eps}; }
  /// Throws ConfigError on a non-positive size or rate, or dropout outside [0, 1).
  void validate() const;
  /// Applies one key; returns false for keys this struct does not own.
  bool set(const std::string& key, const std::string& value);
  /// Reads `key = value` lines; '#' starts a comment. Unknown keys are errors.
  static TrainConfig load(const std::filesystem::path& path);
  static TrainConfig parse(std::istream& in);
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;

  /// CSV `epoch,loss,accuracy,seconds`. Loss and accuracy are written with 17
  /// significant digits.
  std::string to_csv(bool with_seconds = true) const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Assembles a batch from `samples[indices]`; sizes come from the spec config.
Batch make_batch(const ModelSpec& spec, const std::vector<text::EncodedSample>& samples,
                 const std::vector<std::size_t>& indices);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam over `data`, reshuffled every epoch from `cfg.seed`. The
/// loss and accuracy logged per epoch are the sample means over that epoch's
/// training passes. Throws DataError for an empty dataset and NumericError
/// when the loss or a gradient stops being finite.
TrainLog fit(Model& model, const std::vector<text::EncodedSample>& data, const TrainConfig& cfg,
             const EpochCallback& on_epoch = {});

/// Eval-mode probabilities for every sample, samples x classes.
Tensor predict(const Model& model, const std::vector<text::EncodedSample>& samples, std::size_t batch = 64);

std::vector<int> argmax_rows(const Tensor& probs);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace rescnn

#pragma once

// The three classifiers as declarative layer graphs, plus parameter counting,
// initialization and the forward/backward interpreter.
//
//   word:     ids -> Embedding(V x 100) -> BiLSTM(512, final) -> Dense(32, relu)
//             -> Dense(5) -> softmax
//   char:     chars -> one-hot(69) -> Conv(256,k7)+relu -> Pool3 -> Conv(256,k7)+relu
//             -> Pool3 -> 4 x [Conv(256,k3)+relu] -> Pool3 -> Flatten(8704)
//             -> Dense(1024, relu) -> Dropout(0.5) -> Dense(1024, relu) -> Dropout(0.5)
//             -> Dense(32, relu) -> Dense(5) -> softmax
//   combined: word branch  Embedding -> 4 residual BiLSTM(512, sequence) blocks
//                          (dense shortcut on the first) -> BiLSTM(64, final)
//             char branch  conv stack -> 34 x 256 feature sequence -> BiLSTM(64, final)
//             concat(256) -> Dense(32, relu) -> Dense(5) -> softmax

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rescnn/layers.hpp"
#include "rescnn/lstm.hpp"
#include "rescnn/ops.hpp"
#include "rescnn/rng.hpp"
#include "rescnn/tensor.hpp"

namespace rescnn {

enum class ModelKind { kWord, kChar, kCombined };

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Sizes used to build any of the three models. Defaults are the full-size
/// architectures; tests shrink them.
struct ModelConfig {
  std::size_t vocab = 27064;
  std::size_t embed_dim = 100;
  std::size_t word_len = 100;
  std::size_t lstm_hidden = 512;
  std::size_t dense_hidden = 32;
  std::size_t classes = 5;
  std::size_t alphabet = 69;
  std::size_t char_len = 1014;
  std::size_t conv_filters = 256;
  std::size_t char_dense = 1024;
  double dropout = 0.5;
  std::size_t residual_blocks = 4;
  std::size_t residual_hidden = 512;
  std::size_t branch_hidden = 64;
  /// Combined model only: keep the char model's two wide dense layers between
  /// the conv stack and the char-branch BiLSTM (which then sees a length-1
  /// sequence).
  bool char_dense_head = false;

  /// Single-line "key=value key=value" rendering; round-trips through parse().
  std::string to_string() const;
  static ModelConfig parse(const std::string& text);
  /// Applies one key; returns false for keys this struct does not own.
  bool set(const std::string& key, const std::string& value);

  bool operator==(const ModelConfig&) const = default;
};

enum class LayerKind {
  kWordEmbedding,
  kCharOneHot,
  kConv1d,
  kMaxPool1d,
  kFlatten,
  kDense,
  kDropout,
  kBiLstm,
  kResidualAdd,
  kConcat,
  kAsSequence,
  kSoftmax,
};

const char* layer_kind_name(LayerKind kind);

inline constexpr const char* kWordInput = "words";
inline constexpr const char* kCharInput = "chars";

struct LayerDesc {
  std::string name;
  LayerKind kind;
  /// Producer layer names, or kWordInput / kCharInput for the input layers.
  /// Residual adds list the block output first and the skip source second.
  std::vector<std::string> inputs;
  std::size_t units = 0;   // output width: embedding dim, one-hot depth, filters, dense out, lstm hidden
  std::size_t kernel = 0;  // conv kernel or pool window
  std::size_t stride = 1;
  std::size_t rows = 0;    // embedding vocabulary
  Activation activation = Activation::kNone;
  double rate = 0.0;
  nn::BiLstmMode mode = nn::BiLstmMode::kFinal;
  bool projection = false;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kWord;
  ModelConfig config;
  std::vector<LayerDesc> layers;

  bool uses_words() const;
  bool uses_chars() const;
  std::size_t index_of(const std::string& layer) const;
};

ModelSpec word_model_spec(const ModelConfig& config);
ModelSpec char_model_spec(const ModelConfig& config);
ModelSpec combined_model_spec(const ModelConfig& config);
ModelSpec model_spec(ModelKind kind, const ModelConfig& config);

/// Per-layer output shape without the batch axis. Throws DimensionError when
/// the chain is inconsistent.
std::vector<Shape> infer_shapes(const ModelSpec& spec);

struct LayerCount {
  std::string name;
  LayerKind kind;
  Shape output;
  std::size_t parameters;
};

struct ParameterTable {
  std::vector<LayerCount> layers;
  std::size_t total = 0;

  /// Counts of the layers that own parameters, in graph order.
  std::vector<std::size_t> nonzero() const;
};

ParameterTable count_parameters(const ModelSpec& spec);
std::string render_parameter_table(const ParameterTable& table);

// ---- parameters -------------------------------------------------------------

struct EmbeddingParams {
  Tensor table;
};

struct ConvParams {
  Tensor kernels;
  Tensor bias;
};

using LayerParams = std::variant<std::monostate, EmbeddingParams, nn::DenseParams, ConvParams, nn::BiLstmParams>;

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor* tensor;
};

/// One entry per spec layer (std::monostate for parameter-free layers).
struct ModelParams {
  std::vector<LayerParams> layers;

  /// Every trainable tensor as "<layer>.<tensor>", in graph order.
  std::vector<NamedTensor> named(const ModelSpec& spec);
  std::vector<ConstNamedTensor> named(const ModelSpec& spec) const;
  std::size_t element_count() const;
};

/// Zero-filled parameters with the right shapes (used for gradients).
ModelParams zero_params(const ModelSpec& spec);

/// Glorot-uniform weights, zero biases, LSTM forget bias 1. The word embedding
/// is copied from `embedding` when given, otherwise drawn uniform(-0.005, 0.005)
/// with the padding row zero.
ModelParams init_params(const ModelSpec& spec, Rng& rng, const Tensor* embedding = nullptr);

struct Model {
  ModelSpec spec;
  ModelParams params;
};

Model build_word_model(const ModelConfig& config, Rng& rng, const Tensor* glove = nullptr);
Model build_char_model(const ModelConfig& config, Rng& rng);
Model build_combined_model(const ModelConfig& config, Rng& rng, const Tensor* glove = nullptr);

/// Copies the word model's embedding and BiLSTM into the first residual block,
/// and the char model's conv stack (and wide dense layers when the combined
/// spec keeps them) into the combined model.
void init_combined_from_branches(const ModelSpec& combined, ModelParams& params,
                                 const ModelSpec& word, const ModelParams& word_params,
                                 const ModelSpec& chars, const ModelParams& char_params);

// ---- execution ----------------------------------------------------------------

struct Batch {
  IndexTensor words;  // batch x word_len (unused by the char model)
  IndexTensor chars;  // batch x char_len (unused by the word model)
  std::vector<int> labels;

  std::size_t size() const;
};

using LayerCache = std::variant<std::monostate, std::vector<std::size_t>, Tensor, nn::BiLstmCache>;

struct ForwardTrace {
  std::vector<Tensor> outputs;  // per layer, batch axis first
  std::vector<LayerCache> caches;

  const Tensor& probabilities() const { return outputs.back(); }
  const Tensor& logits() const { return outputs[outputs.size() - 2]; }
};

/// Runs every layer. Dropout is active only when `training` is set, in which
/// case `rng` must be non-null.
ForwardTrace forward_trace(const ModelSpec& spec, const ModelParams& params, const Batch& batch,
                           bool training = false, Rng* rng = nullptr);

/// Eval-mode class probabilities, batch x classes.
Tensor forward(const ModelSpec& spec, const ModelParams& params, const Batch& batch);

/// Parameter gradients given dL/dlogits (the input of the final softmax).
ModelParams backward(const ModelSpec& spec, const ModelParams& params, const Batch& batch,
                     const ForwardTrace& trace, const Tensor& grad_logits);

}  // namespace rescnn

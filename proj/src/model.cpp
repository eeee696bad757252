#include "rescnn/model.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

namespace rescnn {

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kWord: return "word";
    case ModelKind::kChar: return "char";
    case ModelKind::kCombined: return "combined";
  }
  return "word";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "word") return ModelKind::kWord;
  if (name == "char") return ModelKind::kChar;
  if (name == "combined") return ModelKind::kCombined;
  throw ConfigError("unknown model kind '" + name + "' (expected word, char or combined)");
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kWordEmbedding: return "embedding";
    case LayerKind::kCharOneHot: return "one_hot";
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kMaxPool1d: return "maxpool1d";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kBiLstm: return "bilstm";
    case LayerKind::kResidualAdd: return "residual_add";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kAsSequence: return "as_sequence";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

// ---- config -------------------------------------------------------------------

namespace {

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty() || value[0] == '-') {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || value.empty()) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace

bool ModelConfig::set(const std::string& key, const std::string& value) {
  std::size_t* sizes[] = {&vocab, &embed_dim, &word_len, &lstm_hidden, &dense_hidden, &classes, &alphabet,
                          &char_len, &conv_filters, &char_dense, &residual_blocks, &residual_hidden, &branch_hidden};
  const char* names[] = {"vocab", "embed_dim", "word_len", "lstm_hidden", "dense_hidden", "classes", "alphabet",
                         "char_len", "conv_filters", "char_dense", "residual_blocks", "residual_hidden", "branch_hidden"};
  for (std::size_t i = 0; i < std::size(names); ++i) {
    if (key == names[i]) {
      const std::size_t v = parse_size(key, value);
      if (v == 0) throw ConfigError("config key '" + key + "' must be positive");
      *sizes[i] = v;
      return true;
    }
  }
  if (key == "dropout") {
    dropout = parse_real(key, value);
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
    return true;
  }
  if (key == "char_dense_head") {
    char_dense_head = parse_bool(key, value);
    return true;
  }
  return false;
}

std::string ModelConfig::to_string() const {
  return fmt::format(
      "vocab={} embed_dim={} word_len={} lstm_hidden={} dense_hidden={} classes={} alphabet={} char_len={} "
      "conv_filters={} char_dense={} dropout={} residual_blocks={} residual_hidden={} branch_hidden={} "
      "char_dense_head={}",
      vocab, embed_dim, word_len, lstm_hidden, dense_hidden, classes, alphabet, char_len, conv_filters, char_dense,
      dropout, residual_blocks, residual_hidden, branch_hidden, char_dense_head ? "true" : "false");
}

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string item;
  while (in >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed model descriptor item '" + item + "'");
    if (!c.set(item.substr(0, eq), item.substr(eq + 1))) {
      throw ConfigError("unknown model descriptor key '" + item.substr(0, eq) + "'");
    }
  }
  return c;
}

// ---- specs --------------------------------------------------------------------

bool ModelSpec::uses_words() const {
  for (const auto& l : layers)
    if (l.kind == LayerKind::kWordEmbedding) return true;
  return false;
}

bool ModelSpec::uses_chars() const {
  for (const auto& l : layers)
    if (l.kind == LayerKind::kCharOneHot) return true;
  return false;
}

std::size_t ModelSpec::index_of(const std::string& layer) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == layer) return i;
  throw ConfigError("model has no layer named '" + layer + "'");
}

namespace {

// Kernel widths of the six char convolutions and the pooling window.
constexpr std::size_t kCharKernels[] = {7, 7, 3, 3, 3, 3};
constexpr std::size_t kPoolWindow = 3;

class SpecBuilder {
 public:
  explicit SpecBuilder(ModelSpec& spec) : spec_(spec) {}

  const std::string& last() const { return spec_.layers.back().name; }

  SpecBuilder& add(LayerDesc d) {
    spec_.layers.push_back(std::move(d));
    return *this;
  }

  SpecBuilder& dense(const std::string& name, const std::string& in, std::size_t units, Activation act) {
    return add({.name = name, .kind = LayerKind::kDense, .inputs = {in}, .units = units, .activation = act});
  }

  SpecBuilder& bilstm(const std::string& name, const std::string& in, std::size_t hidden, nn::BiLstmMode mode) {
    return add({.name = name, .kind = LayerKind::kBiLstm, .inputs = {in}, .units = hidden, .mode = mode});
  }

  SpecBuilder& dropout(const std::string& name, const std::string& in, double rate) {
    return add({.name = name, .kind = LayerKind::kDropout, .inputs = {in}, .rate = rate});
  }

  SpecBuilder& pool(const std::string& name, const std::string& in) {
    return add({.name = name, .kind = LayerKind::kMaxPool1d, .inputs = {in}, .kernel = kPoolWindow});
  }

  SpecBuilder& conv(const std::string& name, const std::string& in, std::size_t filters, std::size_t k) {
    return add({.name = name, .kind = LayerKind::kConv1d, .inputs = {in}, .units = filters, .kernel = k,
                .stride = 1, .activation = Activation::kRelu});
  }

  // onehot -> conv1 pool1 conv2 pool2 conv3..conv6 pool3; returns the last name.
  std::string char_conv_stack(const ModelConfig& c) {
    add({.name = "onehot", .kind = LayerKind::kCharOneHot, .inputs = {kCharInput}, .units = c.alphabet});
    conv("conv1", last(), c.conv_filters, kCharKernels[0]).pool("pool1", last());
    conv("conv2", last(), c.conv_filters, kCharKernels[1]).pool("pool2", last());
    for (int i = 2; i < 6; ++i) conv("conv" + std::to_string(i + 1), last(), c.conv_filters, kCharKernels[i]);
    pool("pool3", last());
    return last();
  }

  // flatten -> fc1 dropout1 fc2 dropout2
  std::string char_dense_stack(const ModelConfig& c, const std::string& from) {
    add({.name = "flatten", .kind = LayerKind::kFlatten, .inputs = {from}});
    dense("fc1", last(), c.char_dense, Activation::kRelu).dropout("dropout1", last(), c.dropout);
    dense("fc2", last(), c.char_dense, Activation::kRelu).dropout("dropout2", last(), c.dropout);
    return last();
  }

  void classifier_head(const ModelConfig& c, const std::string& from, const std::string& hidden_name) {
    dense(hidden_name, from, c.dense_hidden, Activation::kRelu);
    dense("output", last(), c.classes, Activation::kNone);
    add({.name = "softmax", .kind = LayerKind::kSoftmax, .inputs = {last()}});
  }

 private:
  ModelSpec& spec_;
};

}  // namespace

ModelSpec word_model_spec(const ModelConfig& config) {
  ModelSpec spec{ModelKind::kWord, config, {}};
  SpecBuilder b(spec);
  b.add({.name = "embedding", .kind = LayerKind::kWordEmbedding, .inputs = {kWordInput}, .units = config.embed_dim,
         .rows = config.vocab});
  b.bilstm("bilstm", "embedding", config.lstm_hidden, nn::BiLstmMode::kFinal);
  b.classifier_head(config, "bilstm", "fc");
  return spec;
}

ModelSpec char_model_spec(const ModelConfig& config) {
  ModelSpec spec{ModelKind::kChar, config, {}};
  SpecBuilder b(spec);
  const std::string conv_out = b.char_conv_stack(config);
  const std::string dense_out = b.char_dense_stack(config, conv_out);
  b.classifier_head(config, dense_out, "fc3");
  return spec;
}

ModelSpec combined_model_spec(const ModelConfig& config) {
  ModelSpec spec{ModelKind::kCombined, config, {}};
  SpecBuilder b(spec);

  b.add({.name = "embedding", .kind = LayerKind::kWordEmbedding, .inputs = {kWordInput}, .units = config.embed_dim,
         .rows = config.vocab});
  std::string stream = "embedding";
  for (std::size_t i = 1; i <= config.residual_blocks; ++i) {
    const std::string lstm = "res" + std::to_string(i) + "_lstm";
    const std::string add = "res" + std::to_string(i);
    b.bilstm(lstm, stream, config.residual_hidden, nn::BiLstmMode::kSequence);
    // The first block changes width (embed_dim -> 2*hidden) so its shortcut is projected.
    b.add({.name = add, .kind = LayerKind::kResidualAdd, .inputs = {lstm, stream},
           .projection = config.embed_dim != 2 * config.residual_hidden && i == 1});
    stream = add;
  }
  b.bilstm("word_lstm", stream, config.branch_hidden, nn::BiLstmMode::kFinal);

  std::string char_stream = b.char_conv_stack(config);
  if (config.char_dense_head) {
    char_stream = b.char_dense_stack(config, char_stream);
    b.add({.name = "char_seq", .kind = LayerKind::kAsSequence, .inputs = {char_stream}});
    char_stream = "char_seq";
  }
  b.bilstm("char_lstm", char_stream, config.branch_hidden, nn::BiLstmMode::kFinal);

  b.add({.name = "concat", .kind = LayerKind::kConcat, .inputs = {"word_lstm", "char_lstm"}});
  b.classifier_head(config, "concat", "fc");
  return spec;
}

ModelSpec model_spec(ModelKind kind, const ModelConfig& config) {
  switch (kind) {
    case ModelKind::kWord: return word_model_spec(config);
    case ModelKind::kChar: return char_model_spec(config);
    case ModelKind::kCombined: return combined_model_spec(config);
  }
  throw ConfigError("unknown model kind");
}

// ---- shapes and counts ----------------------------------------------------------

namespace {

std::string layer_ctx(const LayerDesc& l) { return std::string("layer '") + l.name + "' (" + layer_kind_name(l.kind) + ")"; }

// Input shapes (without batch) of layer i, looked up from already-inferred shapes.
std::vector<Shape> input_shapes(const ModelSpec& spec, std::size_t i, const std::vector<Shape>& shapes) {
  std::vector<Shape> in;
  for (const auto& src : spec.layers[i].inputs) {
    if (src == kWordInput || src == kCharInput) continue;
    const std::size_t j = spec.index_of(src);
    if (j >= i) throw ConfigError(layer_ctx(spec.layers[i]) + " reads '" + src + "' before it is computed");
    in.push_back(shapes[j]);
  }
  return in;
}

// Named parameter shapes of one layer given its input shapes.
std::vector<std::pair<std::string, Shape>> param_shapes(const LayerDesc& l, const std::vector<Shape>& in) {
  switch (l.kind) {
    case LayerKind::kWordEmbedding: return {{"table", {l.rows, l.units}}};
    case LayerKind::kConv1d: return {{"kernels", {l.units, in[0].back(), l.kernel}}, {"bias", {l.units}}};
    case LayerKind::kDense: return {{"weight", {in[0].back(), l.units}}, {"bias", {l.units}}};
    case LayerKind::kBiLstm: {
      std::vector<std::pair<std::string, Shape>> out;
      const Shape w{l.units, l.units + in[0].back()};
      const Shape b{l.units};
      for (const char* dir : {"fwd", "bwd"}) {
        for (const char* g : {"w_forget", "w_input", "w_candidate", "w_output"}) out.push_back({std::string(dir) + "." + g, w});
        for (const char* g : {"b_forget", "b_input", "b_candidate", "b_output"}) out.push_back({std::string(dir) + "." + g, b});
      }
      return out;
    }
    case LayerKind::kResidualAdd:
      if (!l.projection) return {};
      return {{"weight", {in[1].back(), in[0].back()}}, {"bias", {in[0].back()}}};
    default: return {};
  }
}

}  // namespace

std::vector<Shape> infer_shapes(const ModelSpec& spec) {
  std::vector<Shape> shapes;
  const ModelConfig& c = spec.config;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDesc& l = spec.layers[i];
    const auto in = input_shapes(spec, i, shapes);
    auto need_inputs = [&](std::size_t n) {
      if (in.size() != n) throw ConfigError(layer_ctx(l) + " expects " + std::to_string(n) + " input(s)");
    };
    Shape out;
    switch (l.kind) {
      case LayerKind::kWordEmbedding: out = {c.word_len, l.units}; break;
      case LayerKind::kCharOneHot: out = {c.char_len, l.units}; break;
      case LayerKind::kConv1d:
        need_inputs(1);
        if (in[0].size() != 2) throw DimensionError(layer_ctx(l) + " needs a sequence input, got " + shape_str(in[0]));
        out = {nn::conv_out_length(in[0][0], l.kernel, l.stride), l.units};
        break;
      case LayerKind::kMaxPool1d:
        need_inputs(1);
        if (in[0].size() != 2 || in[0][0] < l.kernel) throw DimensionError(layer_ctx(l) + " input " + shape_str(in[0]) + " shorter than window");
        out = {in[0][0] / l.kernel, in[0][1]};
        break;
      case LayerKind::kFlatten: need_inputs(1); out = {shape_numel(in[0])}; break;
      case LayerKind::kDense: need_inputs(1); out = in[0]; out.back() = l.units; break;
      case LayerKind::kDropout:
      case LayerKind::kSoftmax: need_inputs(1); out = in[0]; break;
      case LayerKind::kBiLstm:
        need_inputs(1);
        if (in[0].size() != 2) throw DimensionError(layer_ctx(l) + " needs a sequence input, got " + shape_str(in[0]));
        out = l.mode == nn::BiLstmMode::kSequence ? Shape{in[0][0], 2 * l.units} : Shape{2 * l.units};
        break;
      case LayerKind::kResidualAdd: {
        need_inputs(2);
        Shape skip = in[1];
        if (l.projection) skip.back() = in[0].back();
        if (skip != in[0]) throw DimensionError(layer_ctx(l) + ": block " + shape_str(in[0]) + " vs skip " + shape_str(in[1]));
        out = in[0];
        break;
      }
      case LayerKind::kConcat:
        need_inputs(2);
        if (in[0].size() != in[1].size() || !std::equal(in[0].begin(), in[0].end() - 1, in[1].begin())) {
          throw DimensionError(layer_ctx(l) + ": cannot concatenate " + shape_str(in[0]) + " and " + shape_str(in[1]));
        }
        out = in[0];
        out.back() += in[1].back();
        break;
      case LayerKind::kAsSequence: need_inputs(1); out = {1, shape_numel(in[0])}; break;
    }
    shapes.push_back(out);
  }
  return shapes;
}

std::vector<std::size_t> ParameterTable::nonzero() const {
  std::vector<std::size_t> v;
  for (const auto& l : layers)
    if (l.parameters > 0) v.push_back(l.parameters);
  return v;
}

ParameterTable count_parameters(const ModelSpec& spec) {
  ParameterTable table;
  const auto shapes = infer_shapes(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    std::size_t n = 0;
    for (const auto& [name, shape] : param_shapes(spec.layers[i], input_shapes(spec, i, shapes))) n += shape_numel(shape);
    table.layers.push_back({spec.layers[i].name, spec.layers[i].kind, shapes[i], n});
    table.total += n;
  }
  return table;
}

std::string render_parameter_table(const ParameterTable& table) {
  std::string s = fmt::format("{:<12} {:<13} {:<14} {:>12}\n", "layer", "kind", "output", "parameters");
  for (const auto& l : table.layers) {
    s += fmt::format("{:<12} {:<13} {:<14} {:>12}\n", l.name, layer_kind_name(l.kind), shape_str(l.output), l.parameters);
  }
  s += fmt::format("{:<41} {:>12}\n", "total", table.total);
  return s;
}

// ---- parameters -------------------------------------------------------------------

namespace {

template <typename TensorPtr, typename Params>
void collect(const ModelSpec& spec, Params& params, std::vector<std::pair<std::string, TensorPtr>>& out) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const std::string& n = spec.layers[i].name;
    auto& lp = params.layers.at(i);
    if (auto* e = std::get_if<EmbeddingParams>(&lp)) {
      out.push_back({n + ".table", &e->table});
    } else if (auto* d = std::get_if<nn::DenseParams>(&lp)) {
      out.push_back({n + ".weight", &d->weight});
      out.push_back({n + ".bias", &d->bias});
    } else if (auto* c = std::get_if<ConvParams>(&lp)) {
      out.push_back({n + ".kernels", &c->kernels});
      out.push_back({n + ".bias", &c->bias});
    } else if (auto* b = std::get_if<nn::BiLstmParams>(&lp)) {
      const char* names[] = {"w_forget", "w_input", "w_candidate", "w_output", "b_forget", "b_input", "b_candidate", "b_output"};
      auto f = b->forward.tensors();
      auto r = b->backward.tensors();
      for (std::size_t k = 0; k < 8; ++k) out.push_back({n + ".fwd." + names[k], f[k]});
      for (std::size_t k = 0; k < 8; ++k) out.push_back({n + ".bwd." + names[k], r[k]});
    }
  }
}

LayerParams make_layer_params(const LayerDesc& l, const std::vector<Shape>& in) {
  const auto ps = param_shapes(l, in);
  switch (l.kind) {
    case LayerKind::kWordEmbedding: return EmbeddingParams{Tensor(ps[0].second)};
    case LayerKind::kConv1d: return ConvParams{Tensor(ps[0].second), Tensor(ps[1].second)};
    case LayerKind::kDense: return nn::DenseParams{Tensor(ps[0].second), Tensor(ps[1].second)};
    case LayerKind::kBiLstm:
      return nn::BiLstmParams{nn::LstmCellParams::zeros(l.units, in[0].back()), nn::LstmCellParams::zeros(l.units, in[0].back())};
    case LayerKind::kResidualAdd:
      if (l.projection) return nn::DenseParams{Tensor(ps[0].second), Tensor(ps[1].second)};
      return std::monostate{};
    default: return std::monostate{};
  }
}

std::vector<Shape> tensor_shapes(const LayerParams& lp) {
  return std::visit(
      [](const auto& p) -> std::vector<Shape> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, EmbeddingParams>) return {p.table.shape()};
        else if constexpr (std::is_same_v<P, nn::DenseParams>) return {p.weight.shape(), p.bias.shape()};
        else if constexpr (std::is_same_v<P, ConvParams>) return {p.kernels.shape(), p.bias.shape()};
        else if constexpr (std::is_same_v<P, nn::BiLstmParams>) return {p.forward.w_forget.shape(), p.backward.w_forget.shape()};
        else return {};
      },
      lp);
}

void glorot(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.data()) v = rng.uniform(-limit, limit);
}

}  // namespace

std::vector<NamedTensor> ModelParams::named(const ModelSpec& spec) {
  std::vector<std::pair<std::string, Tensor*>> v;
  collect(spec, *this, v);
  std::vector<NamedTensor> out;
  for (auto& [n, t] : v) out.push_back({n, t});
  return out;
}

std::vector<ConstNamedTensor> ModelParams::named(const ModelSpec& spec) const {
  std::vector<std::pair<std::string, const Tensor*>> v;
  collect(spec, *this, v);
  std::vector<ConstNamedTensor> out;
  for (auto& [n, t] : v) out.push_back({n, t});
  return out;
}

std::size_t ModelParams::element_count() const {
  std::size_t n = 0;
  for (const auto& lp : layers) {
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, EmbeddingParams>) n += p.table.numel();
          else if constexpr (std::is_same_v<P, nn::DenseParams>) n += p.parameter_count();
          else if constexpr (std::is_same_v<P, ConvParams>) n += p.kernels.numel() + p.bias.numel();
          else if constexpr (std::is_same_v<P, nn::BiLstmParams>) n += p.parameter_count();
        },
        lp);
  }
  return n;
}

ModelParams zero_params(const ModelSpec& spec) {
  const auto shapes = infer_shapes(spec);
  ModelParams p;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) p.layers.push_back(make_layer_params(spec.layers[i], input_shapes(spec, i, shapes)));
  return p;
}

ModelParams init_params(const ModelSpec& spec, Rng& rng, const Tensor* embedding) {
  const auto shapes = infer_shapes(spec);
  ModelParams p = zero_params(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDesc& l = spec.layers[i];
    auto& lp = p.layers[i];
    if (auto* e = std::get_if<EmbeddingParams>(&lp)) {
      if (embedding != nullptr) {
        require_same_shape(embedding->shape(), e->table.shape(), "pretrained embedding");
        e->table = *embedding;
      } else {
        for (auto& v : e->table.data()) v = rng.uniform(-0.5, 0.5) / 100.0;
        std::fill_n(e->table.raw(), l.units, 0.0);
      }
    } else if (auto* d = std::get_if<nn::DenseParams>(&lp)) {
      glorot(d->weight, d->weight.dim(0), d->weight.dim(1), rng);
    } else if (auto* c = std::get_if<ConvParams>(&lp)) {
      const std::size_t k = c->kernels.dim(2);
      glorot(c->kernels, c->kernels.dim(1) * k, c->kernels.dim(0) * k, rng);
    } else if (auto* b = std::get_if<nn::BiLstmParams>(&lp)) {
      for (nn::LstmCellParams* cell : {&b->forward, &b->backward}) {
        for (Tensor* w : {&cell->w_forget, &cell->w_input, &cell->w_candidate, &cell->w_output}) {
          glorot(*w, w->dim(1), w->dim(0), rng);
        }
        cell->b_forget.fill(1.0);
      }
    }
  }
  return p;
}

Model build_word_model(const ModelConfig& config, Rng& rng, const Tensor* glove) {
  Model m{word_model_spec(config), {}};
  m.params = init_params(m.spec, rng, glove);
  return m;
}

Model build_char_model(const ModelConfig& config, Rng& rng) {
  Model m{char_model_spec(config), {}};
  m.params = init_params(m.spec, rng);
  return m;
}

Model build_combined_model(const ModelConfig& config, Rng& rng, const Tensor* glove) {
  Model m{combined_model_spec(config), {}};
  m.params = init_params(m.spec, rng, glove);
  return m;
}

void init_combined_from_branches(const ModelSpec& combined, ModelParams& params, const ModelSpec& word,
                                 const ModelParams& word_params, const ModelSpec& chars,
                                 const ModelParams& char_params) {
  if (combined.kind != ModelKind::kCombined || word.kind != ModelKind::kWord || chars.kind != ModelKind::kChar) {
    throw CheckpointError("pretrained initialization needs a combined target, a word model and a char model");
  }
  auto copy_layer = [&](const std::string& dst, const ModelSpec& src_spec, const ModelParams& src_params,
                        const std::string& src) {
    auto& to = params.layers.at(combined.index_of(dst));
    const auto& from = src_params.layers.at(src_spec.index_of(src));
    if (tensor_shapes(to) != tensor_shapes(from)) {
      throw CheckpointError("cannot initialize combined layer '" + dst + "' from '" + src + "': parameter shapes differ");
    }
    to = from;
  };
  copy_layer("embedding", word, word_params, "embedding");
  copy_layer("res1_lstm", word, word_params, "bilstm");
  for (int i = 1; i <= 6; ++i) copy_layer("conv" + std::to_string(i), chars, char_params, "conv" + std::to_string(i));
  if (combined.config.char_dense_head) {
    copy_layer("fc1", chars, char_params, "fc1");
    copy_layer("fc2", chars, char_params, "fc2");
  }
}

// ---- execution ------------------------------------------------------------------

std::size_t Batch::size() const {
  if (!labels.empty()) return labels.size();
  if (!words.empty()) return words.dim(0);
  if (!chars.empty()) return chars.dim(0);
  return 0;
}

namespace {

const Tensor& input_of(const ModelSpec& spec, const ForwardTrace& trace, const LayerDesc& l, std::size_t which) {
  return trace.outputs[spec.index_of(l.inputs.at(which))];
}

const IndexTensor& ids_for(const Batch& batch, const LayerDesc& l, std::size_t expected_len) {
  const IndexTensor& ids = l.kind == LayerKind::kWordEmbedding ? batch.words : batch.chars;
  if (ids.rank() != 2 || ids.dim(1) != expected_len) {
    throw DimensionError("layer '" + l.name + "' expects ids of shape batch x " + std::to_string(expected_len) + ", got " + shape_str(ids.shape()));
  }
  return ids;
}

Tensor with_batch(const Tensor& t, std::size_t batch, const Shape& tail) {
  Shape s{batch};
  s.insert(s.end(), tail.begin(), tail.end());
  return t.reshaped(s);
}

}  // namespace

ForwardTrace forward_trace(const ModelSpec& spec, const ModelParams& params, const Batch& batch, bool training, Rng* rng) {
  if (params.layers.size() != spec.layers.size()) throw DimensionError("parameters do not match the model spec");
  if (training && rng == nullptr) throw ConfigError("training-mode forward needs a random source");
  const auto shapes = infer_shapes(spec);
  ForwardTrace tr;
  tr.outputs.resize(spec.layers.size());
  tr.caches.resize(spec.layers.size());
  std::size_t n = 0;

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDesc& l = spec.layers[i];
    const LayerParams& lp = params.layers[i];
    Tensor y;
    switch (l.kind) {
      case LayerKind::kWordEmbedding: {
        const auto& ids = ids_for(batch, l, spec.config.word_len);
        y = nn::embedding_lookup(ids, std::get<EmbeddingParams>(lp).table);
        break;
      }
      case LayerKind::kCharOneHot: y = nn::one_hot(ids_for(batch, l, spec.config.char_len), l.units); break;
      case LayerKind::kConv1d: {
        const auto& p = std::get<ConvParams>(lp);
        y = activate(nn::conv1d(input_of(spec, tr, l, 0), p.kernels, p.bias, l.stride), l.activation);
        break;
      }
      case LayerKind::kMaxPool1d: {
        auto r = nn::maxpool1d(input_of(spec, tr, l, 0), l.kernel);
        y = std::move(r.output);
        tr.caches[i] = std::move(r.argmax);
        break;
      }
      case LayerKind::kFlatten:
      case LayerKind::kAsSequence: y = with_batch(input_of(spec, tr, l, 0), n, shapes[i]); break;
      case LayerKind::kDense: {
        const auto& p = std::get<nn::DenseParams>(lp);
        y = activate(nn::dense(input_of(spec, tr, l, 0), p.weight, p.bias), l.activation);
        break;
      }
      case LayerKind::kDropout: {
        Rng dummy(0);
        auto r = nn::dropout(input_of(spec, tr, l, 0), l.rate, training, rng ? *rng : dummy);
        y = std::move(r.output);
        tr.caches[i] = std::move(r.mask);
        break;
      }
      case LayerKind::kBiLstm: {
        nn::BiLstmCache cache;
        y = nn::bilstm(input_of(spec, tr, l, 0), std::get<nn::BiLstmParams>(lp), l.mode, &cache);
        tr.caches[i] = std::move(cache);
        break;
      }
      case LayerKind::kResidualAdd: {
        const auto* proj = std::get_if<nn::DenseParams>(&lp);
        y = nn::residual_add(input_of(spec, tr, l, 0), input_of(spec, tr, l, 1), proj);
        break;
      }
      case LayerKind::kConcat: y = concat_last(input_of(spec, tr, l, 0), input_of(spec, tr, l, 1)); break;
      case LayerKind::kSoftmax: y = softmax(input_of(spec, tr, l, 0)); break;
    }
    if (i == 0) n = y.dim(0);
    if (y.dim(0) != n) throw DimensionError("layer '" + l.name + "' changed the batch size");
    tr.outputs[i] = std::move(y);
  }
  return tr;
}

Tensor forward(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
  return forward_trace(spec, params, batch, false, nullptr).probabilities();
}

ModelParams backward(const ModelSpec& spec, const ModelParams& params, const Batch& batch, const ForwardTrace& trace,
                     const Tensor& grad_logits) {
  const std::size_t count = spec.layers.size();
  if (count == 0 || spec.layers.back().kind != LayerKind::kSoftmax) throw ConfigError("model must end in a softmax layer");
  ModelParams grads = zero_params(spec);
  std::vector<Tensor> dout(count);
  const std::size_t logits_layer = spec.index_of(spec.layers.back().inputs.at(0));
  require_same_shape(grad_logits.shape(), trace.outputs[logits_layer].shape(), "backward logits gradient");
  dout[logits_layer] = grad_logits;

  auto send = [&](const LayerDesc& l, std::size_t which, Tensor g) {
    const std::size_t j = spec.index_of(l.inputs.at(which));
    if (dout[j].empty()) dout[j] = std::move(g);
    else dout[j] += g;
  };

  for (std::size_t i = count - 1; i-- > 0;) {
    if (dout[i].empty()) continue;
    const LayerDesc& l = spec.layers[i];
    const LayerParams& lp = params.layers[i];
    const Tensor& y = trace.outputs[i];
    Tensor g = std::move(dout[i]);
    switch (l.kind) {
      case LayerKind::kWordEmbedding: {
        auto& gp = std::get<EmbeddingParams>(grads.layers[i]);
        gp.table = nn::embedding_backward(batch.words, g, l.rows);
        break;
      }
      case LayerKind::kCharOneHot: break;
      case LayerKind::kConv1d: {
        const auto& p = std::get<ConvParams>(lp);
        auto r = nn::conv1d_backward(input_of(spec, trace, l, 0), p.kernels, activate_backward(y, g, l.activation), l.stride);
        auto& gp = std::get<ConvParams>(grads.layers[i]);
        gp.kernels = std::move(r.kernels);
        gp.bias = std::move(r.bias);
        send(l, 0, std::move(r.input));
        break;
      }
      case LayerKind::kMaxPool1d: {
        const auto& argmax = std::get<std::vector<std::size_t>>(trace.caches[i]);
        send(l, 0, nn::maxpool1d_backward(input_of(spec, trace, l, 0).shape(), argmax, g));
        break;
      }
      case LayerKind::kFlatten:
      case LayerKind::kAsSequence: send(l, 0, std::move(g).reshaped(input_of(spec, trace, l, 0).shape())); break;
      case LayerKind::kDense: {
        const auto& p = std::get<nn::DenseParams>(lp);
        auto r = nn::dense_backward(input_of(spec, trace, l, 0), p.weight, activate_backward(y, g, l.activation));
        auto& gp = std::get<nn::DenseParams>(grads.layers[i]);
        gp.weight = std::move(r.weight);
        gp.bias = std::move(r.bias);
        send(l, 0, std::move(r.input));
        break;
      }
      case LayerKind::kDropout: send(l, 0, nn::dropout_backward(std::get<Tensor>(trace.caches[i]), g)); break;
      case LayerKind::kBiLstm: {
        const auto& p = std::get<nn::BiLstmParams>(lp);
        auto r = nn::bilstm_backward(std::get<nn::BiLstmCache>(trace.caches[i]), p, l.mode, g);
        auto& gp = std::get<nn::BiLstmParams>(grads.layers[i]);
        gp.forward = std::move(r.forward);
        gp.backward = std::move(r.backward);
        send(l, 0, std::move(r.input));
        break;
      }
      case LayerKind::kResidualAdd: {
        const auto* proj = std::get_if<nn::DenseParams>(&lp);
        auto r = nn::residual_add_backward(input_of(spec, trace, l, 1), g, proj);
        if (proj != nullptr) {
          auto& gp = std::get<nn::DenseParams>(grads.layers[i]);
          gp.weight = std::move(r.projection_weight);
          gp.bias = std::move(r.projection_bias);
        }
        send(l, 0, std::move(r.block_out));
        send(l, 1, std::move(r.block_in));
        break;
      }
      case LayerKind::kConcat: {
        auto [a, b] = split_last(g, input_of(spec, trace, l, 0).shape().back());
        send(l, 0, std::move(a));
        send(l, 1, std::move(b));
        break;
      }
      case LayerKind::kSoftmax: {
        send(l, 0, softmax_backward(y, g));
        break;
      }
    }
  }
  return grads;
}

}  // namespace rescnn

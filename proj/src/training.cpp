#include "rescnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include <fmt/format.h>

namespace rescnn {

LossResult cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2) throw DimensionError("cross_entropy expects batch x classes, got " + shape_str(probs.shape()));
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  if (labels.size() != n) {
    throw DimensionError(fmt::format("cross_entropy: {} labels for a batch of {}", labels.size(), n));
  }
  LossResult r{0.0, probs};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw IndexError(fmt::format("label {} out of range for {} classes", y, k));
    }
    r.loss -= std::log(std::max(probs.at(i, static_cast<std::size_t>(y)), 1e-12));
    r.grad_logits.at(i, static_cast<std::size_t>(y)) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  r.loss *= inv;
  for (auto& g : r.grad_logits.data()) g *= inv;
  return r;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw DimensionError(fmt::format("adam_step: {} parameters but {} gradients", params.size(), grads.size()));
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: optimizer state built for other parameters");
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    require_same_shape(p.shape(), g.shape(), "adam_step");
    require_same_shape(p.shape(), state.m[i].shape(), "adam_step state");
    double* pm = state.m[i].raw();
    double* pv = state.v[i].raw();
    double* pp = p.raw();
    const double* pg = g.raw();
    const std::size_t n = p.numel();
#pragma omp parallel for if (n > 65536)
    for (std::size_t j = 0; j < n; ++j) {
      pm[j] = cfg.beta1 * pm[j] + (1.0 - cfg.beta1) * pg[j];
      pv[j] = cfg.beta2 * pv[j] + (1.0 - cfg.beta2) * pg[j] * pg[j];
      const double mhat = pm[j] / bc1;
      const double vhat = pv[j] / bc2;
      pp[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// ---- config -------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs > 100000) throw ConfigError("epochs is implausibly large");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a non-negative number");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (word_len == 0) throw ConfigError("word_len must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
}

namespace {

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
  }
  if (pos != v.size()) throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
  return static_cast<std::size_t>(x);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  }
  if (pos != v.size()) throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  return x;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

bool TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "epochs") epochs = parse_size(key, value);
  else if (key == "batch") batch = parse_size(key, value);
  else if (key == "lr") lr = parse_double(key, value);
  else if (key == "beta1") beta1 = parse_double(key, value);
  else if (key == "beta2") beta2 = parse_double(key, value);
  else if (key == "eps") eps = parse_double(key, value);
  else if (key == "seed") seed = parse_size(key, value);
  else if (key == "word_len") word_len = parse_size(key, value);
  else if (key == "model") model = parse_model_kind(value);
  else if (key == "dropout") dropout = parse_double(key, value);
  else return false;
  return true;
}

TrainConfig TrainConfig::parse(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    const std::string key = trim(line.substr(0, eq));
    if (!cfg.set(key, trim(line.substr(eq + 1)))) {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in);
}

// ---- log ----------------------------------------------------------------------

std::string TrainLog::to_csv(bool with_seconds) const {
  std::string s = with_seconds ? "epoch,loss,accuracy,seconds\n" : "epoch,loss,accuracy\n";
  for (const auto& e : epochs) {
    s += fmt::format("{},{:.17g},{:.17g}", e.epoch, e.loss, e.accuracy);
    if (with_seconds) s += fmt::format(",{:.3f}", e.seconds);
    s += '\n';
  }
  return s;
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_csv();
  if (!out) throw DataError("error writing " + path.string());
}

// ---- loop -----------------------------------------------------------------------

Batch make_batch(const ModelSpec& spec, const std::vector<text::EncodedSample>& samples,
                 const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw DimensionError("make_batch: empty batch");
  const std::size_t n = indices.size();
  const std::size_t wl = spec.config.word_len, cl = spec.config.char_len;
  Batch b;
  if (spec.uses_words()) b.words = IndexTensor({n, wl});
  if (spec.uses_chars()) b.chars = IndexTensor({n, cl});
  b.labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& s = samples.at(indices[r]);
    if (spec.uses_words()) {
      if (s.word_ids.size() != wl) {
        throw DimensionError(fmt::format("sample has {} word ids, model expects {}", s.word_ids.size(), wl));
      }
      std::copy(s.word_ids.begin(), s.word_ids.end(), b.words.raw() + r * wl);
    }
    if (spec.uses_chars()) {
      if (s.char_ids.size() != cl) {
        throw DimensionError(fmt::format("sample has {} char ids, model expects {}", s.char_ids.size(), cl));
      }
      std::copy(s.char_ids.begin(), s.char_ids.end(), b.chars.raw() + r * cl);
    }
    b.labels.push_back(s.label);
  }
  return b;
}

std::vector<int> argmax_rows(const Tensor& probs) {
  std::vector<int> out(probs.dim(0));
  const std::size_t k = probs.dim(1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* row = probs.raw() + i * k;
    out[i] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw DimensionError("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

TrainLog fit(Model& model, const std::vector<text::EncodedSample>& data, const TrainConfig& cfg,
             const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.empty()) throw DataError("cannot train on an empty dataset");
  const auto& spec = model.spec;
  Rng root(cfg.seed);
  Rng order_rng = root.fork();
  Rng dropout_rng = root.fork();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState state;
  const AdamConfig adam = cfg.adam();
  auto params = model.params.named(spec);
  std::vector<Tensor*> param_ptrs;
  for (auto& p : params) param_ptrs.push_back(p.tensor);

  TrainLog log;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle(order, order_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), lo + cfg.batch)));
      const Batch batch = make_batch(spec, data, idx);
      const ForwardTrace trace = forward_trace(spec, model.params, batch, true, &dropout_rng);
      const LossResult lr = cross_entropy(trace.probabilities(), batch.labels);
      if (!std::isfinite(lr.loss)) {
        throw NumericError(fmt::format("loss became non-finite at epoch {}, batch starting at sample {}", epoch, lo));
      }
      ModelParams grads = backward(spec, model.params, batch, trace, lr.grad_logits);
      std::vector<const Tensor*> grad_ptrs;
      for (const auto& g : std::as_const(grads).named(spec)) {
        if (!all_finite(*g.tensor)) {
          throw NumericError(fmt::format("gradient of {} became non-finite at epoch {}", g.name, epoch));
        }
        grad_ptrs.push_back(g.tensor);
      }
      adam_step(param_ptrs, grad_ptrs, state, adam);

      loss_sum += lr.loss * static_cast<double>(idx.size());
      const auto pred = argmax_rows(trace.probabilities());
      for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i];
    }
    EpochStats st;
    st.epoch = epoch;
    st.loss = loss_sum / static_cast<double>(data.size());
    st.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.epochs.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return log;
}

Tensor predict(const Model& model, const std::vector<text::EncodedSample>& samples, std::size_t batch) {
  if (samples.empty()) throw DataError("predict: no samples");
  if (batch == 0) throw ConfigError("batch must be positive");
  const std::size_t k = model.spec.config.classes;
  Tensor out({samples.size(), k});
  for (std::size_t lo = 0; lo < samples.size(); lo += batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = lo; i < std::min(samples.size(), lo + batch); ++i) idx.push_back(i);
    const Tensor p = forward(model.spec, model.params, make_batch(model.spec, samples, idx));
    std::copy(p.raw(), p.raw() + p.numel(), out.raw() + lo * k);
  }
  return out;
}

}  // namespace rescnn

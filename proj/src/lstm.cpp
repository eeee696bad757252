#include "rescnn/lstm.hpp"

#include <algorithm>
#include <cmath>

#include "rescnn/kernels.hpp"
#include "rescnn/ops.hpp"

namespace rescnn::nn {

LstmCellParams LstmCellParams::zeros(std::size_t hidden, std::size_t input) {
  const Shape w{hidden, hidden + input};
  const Shape b{hidden};
  return {Tensor(w), Tensor(w), Tensor(w), Tensor(w), Tensor(b), Tensor(b), Tensor(b), Tensor(b)};
}

std::size_t LstmCellParams::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->numel();
  return n;
}

void LstmCellParams::validate() const {
  if (w_forget.rank() != 2 || b_forget.rank() != 1) throw DimensionError("lstm: malformed forget gate");
  const std::size_t h = b_forget.numel();
  if (w_forget.dim(0) != h || w_forget.dim(1) <= h) {
    throw DimensionError("lstm: forget weight " + shape_str(w_forget.shape()) + " inconsistent with bias " + shape_str(b_forget.shape()));
  }
  for (const Tensor* w : {&w_input, &w_candidate, &w_output}) require_same_shape(w->shape(), w_forget.shape(), "lstm gate weights");
  for (const Tensor* b : {&b_input, &b_candidate, &b_output}) require_same_shape(b->shape(), b_forget.shape(), "lstm gate biases");
}

std::vector<Tensor*> LstmCellParams::tensors() {
  return {&w_forget, &w_input, &w_candidate, &w_output, &b_forget, &b_input, &b_candidate, &b_output};
}

std::vector<const Tensor*> LstmCellParams::tensors() const {
  return {&w_forget, &w_input, &w_candidate, &w_output, &b_forget, &b_input, &b_candidate, &b_output};
}

namespace {

// joined * W^T + b, then the gate nonlinearity.
Tensor gate(const Tensor& joined, const Tensor& w, const Tensor& b, Activation act) {
  Tensor a = matmul_nt(joined, w);
  const std::size_t h = b.numel();
  for (std::size_t r = 0; r < joined.dim(0); ++r)
    for (std::size_t j = 0; j < h; ++j) a[r * h + j] += b[j];
  return activate(a, act);
}

}  // namespace

LstmState lstm_step(const Tensor& x_t, const LstmState& prev, const LstmCellParams& p,
                    LstmStepCache* cache) {
  p.validate();
  const std::size_t hidden = p.hidden();
  const std::size_t input = p.input();
  const bool single = x_t.rank() == 1;
  const Tensor x = single ? x_t.reshaped({1, x_t.numel()}) : x_t;
  const Tensor h = prev.h.rank() == 1 ? prev.h.reshaped({1, prev.h.numel()}) : prev.h;
  const Tensor c = prev.c.rank() == 1 ? prev.c.reshaped({1, prev.c.numel()}) : prev.c;
  if (x.rank() != 2 || x.dim(1) != input) {
    throw DimensionError("lstm_step: input " + shape_str(x_t.shape()) + " vs cell input width " + std::to_string(input));
  }
  const Shape state_shape{x.dim(0), hidden};
  require_same_shape(h.shape(), state_shape, "lstm_step hidden state");
  require_same_shape(c.shape(), state_shape, "lstm_step cell state");

  Tensor joined = concat_last(h, x);
  Tensor f = gate(joined, p.w_forget, p.b_forget, Activation::kSigmoid);
  Tensor i = gate(joined, p.w_input, p.b_input, Activation::kSigmoid);
  Tensor cand = gate(joined, p.w_candidate, p.b_candidate, Activation::kTanh);
  Tensor o = gate(joined, p.w_output, p.b_output, Activation::kSigmoid);

  Tensor c_next(state_shape);
  Tensor c_tanh(state_shape);
  Tensor h_next(state_shape);
  for (std::size_t k = 0; k < c_next.numel(); ++k) {
    c_next[k] = f[k] * c[k] + i[k] * cand[k];
    c_tanh[k] = std::tanh(c_next[k]);
    h_next[k] = o[k] * c_tanh[k];
  }
  if (cache != nullptr) {
    *cache = LstmStepCache{std::move(joined), std::move(f), std::move(i), std::move(cand),
                           std::move(o), c, c_tanh};
  }
  if (single) return {std::move(h_next).reshaped({hidden}), std::move(c_next).reshaped({hidden})};
  return {std::move(h_next), std::move(c_next)};
}

LstmStepInputGrads lstm_step_backward(const LstmStepCache& cache, const LstmCellParams& p,
                                      const Tensor& grad_h, const Tensor& grad_c,
                                      LstmCellGrads& grads) {
  const std::size_t batch = cache.joined.dim(0);
  const std::size_t hidden = p.hidden();
  const std::size_t width = cache.joined.dim(1);
  const Shape state_shape{batch, hidden};
  require_same_shape(grad_h.shape(), state_shape, "lstm_step_backward grad_h");
  require_same_shape(grad_c.shape(), state_shape, "lstm_step_backward grad_c");

  Tensor da_f(state_shape), da_i(state_shape), da_c(state_shape), da_o(state_shape);
  Tensor dc_prev(state_shape);
  for (std::size_t k = 0; k < dc_prev.numel(); ++k) {
    const double f = cache.forget[k], i = cache.input[k], g = cache.candidate[k], o = cache.output[k];
    const double tc = cache.cell_tanh[k];
    const double dc = grad_c[k] + grad_h[k] * o * (1.0 - tc * tc);
    da_o[k] = grad_h[k] * tc * o * (1.0 - o);
    da_f[k] = dc * cache.cell_prev[k] * f * (1.0 - f);
    da_i[k] = dc * g * i * (1.0 - i);
    da_c[k] = dc * i * (1.0 - g * g);
    dc_prev[k] = dc * f;
  }

  Tensor djoined({batch, width});
  const std::pair<const Tensor*, Tensor*> weight_pairs[] = {
      {&p.w_forget, &grads.w_forget}, {&p.w_input, &grads.w_input},
      {&p.w_candidate, &grads.w_candidate}, {&p.w_output, &grads.w_output}};
  Tensor* bias_grads[] = {&grads.b_forget, &grads.b_input, &grads.b_candidate, &grads.b_output};
  const Tensor* das[] = {&da_f, &da_i, &da_c, &da_o};
  for (int q = 0; q < 4; ++q) {
    const Tensor& da = *das[q];
    kernels::omp::gemm_tn(hidden, width, batch, da.data(), cache.joined.data(), weight_pairs[q].second->data(), true);
    kernels::omp::gemm_nn(batch, width, hidden, da.data(), weight_pairs[q].first->data(), djoined.data(), true);
    Tensor& db = *bias_grads[q];
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < hidden; ++j) db[j] += da[r * hidden + j];
  }
  auto [dh_prev, dx] = split_last(djoined, hidden);
  return {std::move(dx), std::move(dh_prev), std::move(dc_prev)};
}

namespace {

Tensor time_slice(const Tensor& x, std::size_t t) {
  const std::size_t batch = x.dim(0), len = x.dim(1), width = x.dim(2);
  Tensor s({batch, width});
  for (std::size_t b = 0; b < batch; ++b) std::copy_n(x.raw() + (b * len + t) * width, width, s.raw() + b * width);
  return s;
}

// Writes a batch x width block into columns [offset, offset+width) of step t of
// a batch x len x total tensor; adds when accumulate is set.
void put_slice(Tensor& y, std::size_t t, std::size_t offset, const Tensor& s, bool accumulate = false) {
  const std::size_t batch = y.dim(0), len = y.dim(1), total = y.dim(2), width = s.dim(1);
  for (std::size_t b = 0; b < batch; ++b) {
    double* dst = y.raw() + (b * len + t) * total + offset;
    const double* src = s.raw() + b * width;
    for (std::size_t j = 0; j < width; ++j) dst[j] = accumulate ? dst[j] + src[j] : src[j];
  }
}

Tensor column_block(const Tensor& y, std::size_t t, std::size_t offset, std::size_t width) {
  // y is batch x len x total (t selects a step) or batch x total (t ignored).
  const std::size_t batch = y.dim(0);
  Tensor s({batch, width});
  if (y.rank() == 2) {
    for (std::size_t b = 0; b < batch; ++b) std::copy_n(y.raw() + b * y.dim(1) + offset, width, s.raw() + b * width);
  } else {
    const std::size_t len = y.dim(1), total = y.dim(2);
    for (std::size_t b = 0; b < batch; ++b) std::copy_n(y.raw() + (b * len + t) * total + offset, width, s.raw() + b * width);
  }
  return s;
}

}  // namespace

Tensor bilstm(const Tensor& x, const BiLstmParams& p, BiLstmMode mode, BiLstmCache* cache) {
  if (x.rank() != 3) throw DimensionError("bilstm: expected batch x len x input, got " + shape_str(x.shape()));
  p.forward.validate();
  p.backward.validate();
  const std::size_t batch = x.dim(0), len = x.dim(1);
  const std::size_t hf = p.forward.hidden(), hb = p.backward.hidden();
  if (p.forward.input() != x.dim(2) || p.backward.input() != x.dim(2)) {
    throw DimensionError("bilstm: input width " + std::to_string(x.dim(2)) + " does not match cell input widths");
  }
  if (cache != nullptr) {
    cache->input_shape = x.shape();
    cache->forward.assign(len, {});
    cache->backward.assign(len, {});
  }

  Tensor seq_out = mode == BiLstmMode::kSequence ? Tensor({batch, len, hf + hb}) : Tensor();
  LstmState fs{Tensor({batch, hf}), Tensor({batch, hf})};
  for (std::size_t t = 0; t < len; ++t) {
    fs = lstm_step(time_slice(x, t), fs, p.forward, cache ? &cache->forward[t] : nullptr);
    if (mode == BiLstmMode::kSequence) put_slice(seq_out, t, 0, fs.h);
  }
  LstmState bs{Tensor({batch, hb}), Tensor({batch, hb})};
  for (std::size_t t = len; t-- > 0;) {
    bs = lstm_step(time_slice(x, t), bs, p.backward, cache ? &cache->backward[t] : nullptr);
    if (mode == BiLstmMode::kSequence) put_slice(seq_out, t, hf, bs.h);
  }
  if (mode == BiLstmMode::kSequence) return seq_out;
  return concat_last(fs.h, bs.h);
}

BiLstmGrads bilstm_backward(const BiLstmCache& cache, const BiLstmParams& p, BiLstmMode mode,
                            const Tensor& grad_y) {
  const Shape& in_shape = cache.input_shape;
  const std::size_t batch = in_shape[0], len = in_shape[1];
  const std::size_t hf = p.forward.hidden(), hb = p.backward.hidden();
  const Shape expected = mode == BiLstmMode::kSequence ? Shape{batch, len, hf + hb} : Shape{batch, hf + hb};
  require_same_shape(grad_y.shape(), expected, "bilstm_backward");

  BiLstmGrads g{Tensor(in_shape), LstmCellParams::zeros(hf, in_shape[2]), LstmCellParams::zeros(hb, in_shape[2])};

  // Forward cell: its last step is t = len-1, so walk time in reverse.
  Tensor dh({batch, hf}), dc({batch, hf});
  for (std::size_t t = len; t-- > 0;) {
    if (mode == BiLstmMode::kSequence) {
      dh += column_block(grad_y, t, 0, hf);
    } else if (t == len - 1) {
      dh += column_block(grad_y, 0, 0, hf);
    }
    auto step = lstm_step_backward(cache.forward[t], p.forward, dh, dc, g.forward);
    put_slice(g.input, t, 0, step.x, true);
    dh = std::move(step.h_prev);
    dc = std::move(step.c_prev);
  }

  // Backward cell: its last step is t = 0, so walk time forwards.
  dh = Tensor({batch, hb});
  dc = Tensor({batch, hb});
  for (std::size_t t = 0; t < len; ++t) {
    if (mode == BiLstmMode::kSequence) {
      dh += column_block(grad_y, t, hf, hb);
    } else if (t == 0) {
      dh += column_block(grad_y, 0, hf, hb);
    }
    auto step = lstm_step_backward(cache.backward[t], p.backward, dh, dc, g.backward);
    put_slice(g.input, t, 0, step.x, true);
    dh = std::move(step.h_prev);
    dc = std::move(step.c_prev);
  }
  return g;
}

}  // namespace rescnn::nn

#pragma once

#include <vector>

#include "rescnn/tensor.hpp"

namespace rescnn::nn {

/// One LSTM direction. Each gate owns a hidden x (hidden + input) matrix that
/// acts on the concatenation [h_{t-1}, x_t] (previous hidden state first).
struct LstmCellParams {
  Tensor w_forget, w_input, w_candidate, w_output;
  Tensor b_forget, b_input, b_candidate, b_output;

  static LstmCellParams zeros(std::size_t hidden, std::size_t input);

  std::size_t hidden() const { return b_forget.numel(); }
  std::size_t input() const { return w_forget.dim(1) - hidden(); }
  std::size_t parameter_count() const;

  /// Throws DimensionError unless all four gates agree in shape.
  void validate() const;

  /// Gate tensors in f, i, c, o order (weights then biases).
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

using LstmCellGrads = LstmCellParams;

inline std::size_t lstm_parameter_count(std::size_t hidden, std::size_t input) {
  return 4 * (hidden * (hidden + input) + hidden);
}

/// h and C; shape [hidden] for a single sequence or [batch x hidden].
struct LstmState {
  Tensor h;
  Tensor c;
};

/// Everything one step needs to be differentiated.
struct LstmStepCache {
  Tensor joined;  // batch x (hidden + input) = [h_{t-1}, x_t]
  Tensor forget, input, candidate, output;
  Tensor cell_prev, cell_tanh;
};

/// One step of the gated recurrence:
///   f = sigmoid(W_f [h,x] + b_f), i = sigmoid(W_i [h,x] + b_i),
///   c~ = tanh(W_c [h,x] + b_c), C = f*C_prev + i*c~,
///   o = sigmoid(W_o [h,x] + b_o), h = o * tanh(C).
/// x_t is [input] with state [hidden], or batched [batch x input] with
/// [batch x hidden] state.
LstmState lstm_step(const Tensor& x_t, const LstmState& prev, const LstmCellParams& p,
                    LstmStepCache* cache = nullptr);

struct LstmStepInputGrads {
  Tensor x;
  Tensor h_prev;
  Tensor c_prev;
};

/// Backward through one batched step. grad_h / grad_c are gradients w.r.t.
/// this step's h and C; parameter gradients are accumulated into `grads`.
LstmStepInputGrads lstm_step_backward(const LstmStepCache& cache, const LstmCellParams& p,
                                      const Tensor& grad_h, const Tensor& grad_c,
                                      LstmCellGrads& grads);

enum class BiLstmMode { kSequence, kFinal };

struct BiLstmParams {
  LstmCellParams forward;
  LstmCellParams backward;

  std::size_t parameter_count() const { return forward.parameter_count() + backward.parameter_count(); }
};

struct BiLstmCache {
  Shape input_shape;
  std::vector<LstmStepCache> forward;   // indexed by time step
  std::vector<LstmStepCache> backward;  // indexed by time step
};

/// x: batch x len x input. The forward cell reads left to right, the backward
/// cell right to left. kSequence returns batch x len x 2*hidden with
/// [h_fwd_t, h_bwd_t] at each step; kFinal returns batch x 2*hidden holding the
/// forward state after the last step and the backward state after the first.
Tensor bilstm(const Tensor& x, const BiLstmParams& p, BiLstmMode mode, BiLstmCache* cache = nullptr);

struct BiLstmGrads {
  Tensor input;
  LstmCellGrads forward;
  LstmCellGrads backward;
};

BiLstmGrads bilstm_backward(const BiLstmCache& cache, const BiLstmParams& p, BiLstmMode mode,
                            const Tensor& grad_y);

}  // namespace rescnn::nn

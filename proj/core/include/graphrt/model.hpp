#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "graphrt/exec_graph.hpp"
#include "graphrt/kernels.hpp"
#include "graphrt/kv_cache.hpp"
#include "graphrt/tensor.hpp"

namespace graphrt {

// Decoder-only transformer dimensions. Defaults are the desk-scale reference
// configuration every tolerance in the test suite was pinned against.
struct ModelConfig {
  int n_layers = 4;
  int d_model = 64;
  int n_heads = 4;
  int vocab_size = 256;
  int max_seq_len = 600;
  float ln_eps = 1e-5f;
  std::uint64_t seed = 1234;  // weight initialization seed

  int d_ff() const noexcept { return 4 * d_model; }
  int head_dim() const noexcept { return d_model / n_heads; }
  void validate() const;  // raises InvalidConfig
};

struct LayerWeights {
  Tensor ln1_gamma, ln1_beta;
  Tensor wq, wk, wv, wo;      // [d, d]
  Tensor ln2_gamma, ln2_beta;
  Tensor w1;                  // [d, d_ff]
  Tensor w2;                  // [d_ff, d]
};

struct Weights {
  Tensor embedding;  // [vocab, d]
  Tensor pos_table;  // [max_seq, d], learned absolute positions
  std::vector<LayerWeights> layers;
  Tensor lnf_gamma, lnf_beta;
  Tensor head;  // [d, vocab]
};

// Fills every tensor with i.i.d. U[-0.1, 0.1] draws (LN gains and biases
// included) from one mt19937_64 stream seeded with cfg.seed. Draw order is
// part of the determinism contract: embedding, pos_table, then per layer
// wq, wk, wv, wo, w1, w2, ln1_gamma, ln1_beta, ln2_gamma, ln2_beta, and
// finally lnf_gamma, lnf_beta, head.
Weights init_model(const ModelConfig& cfg);

// One decoding model instance: weights, KV cache, and a fixed activation
// workspace sized for single-token steps. All buffers are allocated in the
// constructor; nothing below ever allocates on the step path, so buffer ids
// bound into captured plans stay valid for the model's lifetime.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  Weights& weights() noexcept { return weights_; }
  const Weights& weights() const noexcept { return weights_; }
  KvCache& kv() noexcept { return kv_; }
  const KvCache& kv() const noexcept { return kv_; }
  Workspace& workspace() noexcept { return ws_; }
  const std::set<BufferId>& weight_ids() const noexcept { return weight_ids_; }

  Tensor& x() noexcept { return *x_; }            // [1, d] residual stream
  Tensor& logits() noexcept { return *logits_; }  // [1, vocab]
  const Tensor& logits() const noexcept { return *logits_; }

  // Kernels per transformer layer in a static plan:
  //   ln1, wq, wk, wv, kv_write_k, kv_write_v, attention, wo, residual,
  //   ln2, w1, relu, w2, residual
  // plus a final layernorm and head matmul. Plan size is therefore
  // kKernelsPerLayer * n_layers + 2 regardless of length; only the attention
  // kernels' flops (and the frozen kv row / length constants) vary.
  static constexpr int kKernelsPerLayer = 14;
  static constexpr int plan_kernel_count(int n_layers) noexcept {
    return kKernelsPerLayer * n_layers + 2;
  }

  // The static pass for one sequence length. Preconditions when executed:
  // x holds the current token's embedding+position row and cur_len == length
  // (the plan overwrites cache row length-1 with the live projections before
  // attending over [0, length)). Plans are built once per length and
  // memoized; the returned reference is stable for the model's lifetime.
  // Raises LengthOutOfRange outside [1, max_seq_len].
  const std::vector<KernelInvocation>& plan(int length);

  // Dynamic-op builders for the pipeline's preprocessing and sampling blocks.
  // Raises TokenOutOfRange / LengthOutOfRange on bad inputs.
  KernelInvocation make_extend_position_op(int token, int position);
  // kv_append of the permanently zero k/v rows: advances cur_len and clears
  // the new slot; the next static pass writes the real projections.
  KernelInvocation make_slot_append_op();
  KernelInvocation make_sample_op(SampleStrategy strategy, SamplerRng* rng, int* out_token);

  // Device-free reference execution (tests and oracles): runs the dynamic
  // preprocessing closures and the static plan directly, leaving logits for
  // position cur_len-1. Token is placed at position cur_len.
  void step_math(int token);
  // step_math over the whole prompt. Raises EmptyPrompt / PromptTooLong.
  void prefill_math(const std::vector<int>& prompt);

  void reset() { kv_.reset(); }

 private:
  ModelConfig cfg_;
  Weights weights_;
  std::set<BufferId> weight_ids_;
  KvCache kv_;
  Workspace ws_;

  // Workspace activation buffers (owned by ws_).
  Tensor* x_ = nullptr;         // residual stream [1, d]
  Tensor* ln_out_ = nullptr;    // layernorm output [1, d]
  Tensor* q_ = nullptr;         // query projection [1, d]
  Tensor* k_ = nullptr;         // key projection [1, d]
  Tensor* v_ = nullptr;         // value projection [1, d]
  Tensor* attn_out_ = nullptr;  // attention mix [1, d]
  Tensor* o_ = nullptr;         // attn/mlp down-projection [1, d]
  Tensor* mlp_ = nullptr;       // ffn hidden [1, d_ff]
  Tensor* logits_ = nullptr;    // [1, vocab]
  Tensor* zero_k_ = nullptr;    // [n_layers, h, dh], always zero
  Tensor* zero_v_ = nullptr;    // [n_layers, h, dh], always zero

  std::vector<KernelInvocation> build_plan(int length);
  std::map<int, std::vector<KernelInvocation>> plans_;
};

}  // namespace graphrt

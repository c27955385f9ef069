#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "graphrt/kv_cache.hpp"
#include "graphrt/tensor.hpp"

namespace graphrt {

// Kernel classification. STATIC kernels have shapes, buffer bindings, and
// control flow fully determined by the sequence-length key and are eligible
// for capture. DYNAMIC kernels bake runtime values (token ids, RNG draws,
// live cache length) into the invocation and must never enter a graph.
// The dynamic set is closed: exactly {kv_append, sample_token, extend_position}.
enum class OpClass { Static, Dynamic };

struct KernelSpec {
  std::string name;
  OpClass op_class = OpClass::Static;
  std::vector<BufferId> input_buffers;
  std::vector<BufferId> output_buffers;
  std::int64_t flops = 0;
};

// One buffer the kernel touches, with the shape frozen at build time and a
// pointer to the live tensor so replay can re-validate against current state.
struct BufferBinding {
  BufferId id = 0;
  std::vector<std::int64_t> shape;
  const Tensor* tensor = nullptr;
};

// An executable kernel instance: metadata plus a closure that performs the
// math on the bound buffers. The closure binds buffers, not values; re-running
// it re-reads whatever the buffers hold at that moment. Building an invocation
// never executes it.
struct KernelInvocation {
  KernelSpec spec;
  std::vector<BufferBinding> bindings;  // inputs first, then outputs
  std::function<void()> run;
};

// ---------------------------------------------------------------------------
// Flop accounting (asserted by tests via independent recomputation):
//   matmul [m,k]x[k,n]      2*m*k*n
//   layernorm [n,d]         5*n*d
//   attention (len L)       n_heads * L * (4*head_dim + 5)
//   embedding_lookup        rows * d
//   residual_add / relu     element count
//   kv_write                n_heads * head_dim
//   kv_append               2 * n_layers * n_heads * head_dim
//   extend_position         2 * d
//   sample_token            vocab (greedy) or 4*vocab (temperature)
// ---------------------------------------------------------------------------

// out = a . b for a [m,k], b [k,n], out [m,n]. STATIC.
KernelInvocation make_matmul(const Tensor& a, const Tensor& b, Tensor& out);

// Row-wise layer normalization over the last dim with learned gamma/beta,
// population variance, epsilon inside the square root. STATIC.
KernelInvocation make_layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                float eps, Tensor& out);

// Single-query multi-head attention over cache positions [0, length) of one
// layer: out = softmax(q.K^T * scale) . V per head. q and out carry
// n_heads*head_dim floats (shape [1,h,dh] or [1,d]). The length is frozen at
// build time, which is what makes the kernel STATIC inside a per-length plan.
KernelInvocation make_attention(const Tensor& q, const KvCache& kv, int layer, int length,
                                float scale, Tensor& out);

// Gathers rows of table for each id into out [ids.size(), d]. STATIC.
KernelInvocation make_embedding_lookup(std::vector<int> ids, const Tensor& table, Tensor& out);

// x += y, in place. STATIC.
KernelInvocation make_residual_add(Tensor& x, const Tensor& y);

// x = max(x, 0), in place. STATIC.
KernelInvocation make_relu(Tensor& x);

// Copies src (n_heads*head_dim floats) into row `row` of one layer's key or
// value tensor. The row index is a constant of the plan that built it, so the
// kernel is STATIC and capturable; this is how per-length graphs write the
// current token's projections into the cache.
enum class KvSlot { Key, Value };
KernelInvocation make_kv_write(KvCache& kv, int layer, KvSlot slot, int row, const Tensor& src);

// Appends k_new/v_new (shape [n_layers, n_heads, head_dim]) at position
// cur_len of every layer and increments cur_len. DYNAMIC: the target row
// depends on live cache state.
KernelInvocation make_kv_append(KvCache& kv, const Tensor& k_new, const Tensor& v_new);

// out = emb[token] + pos[position]: embeds one token and adds its learned
// absolute position row. DYNAMIC: token identity and position are runtime
// values baked into the invocation.
KernelInvocation make_extend_position(int token, int position, const Tensor& emb,
                                      const Tensor& pos_table, Tensor& out);

// Token selection strategy. Greedy takes the argmax with lowest-index
// tie-breaking and draws nothing from the RNG; temperature softmax-samples
// via inverse CDF on one uniform draw.
struct SampleStrategy {
  enum class Kind { Greedy, Temperature };
  Kind kind = Kind::Greedy;
  double temperature = 1.0;
  static SampleStrategy greedy() { return {}; }
  static SampleStrategy with_temperature(double t) {
    return {Kind::Temperature, t};
  }
};

class SamplerRng {
 public:
  explicit SamplerRng(std::uint64_t seed = 0) : eng_(seed) {}
  void reset(std::uint64_t seed) { eng_.seed(seed); }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Writes the selected token id to *out_token. DYNAMIC: consumes RNG state
// (temperature) and produces a host-visible control value either way.
KernelInvocation make_sample_token(const Tensor& logits, SampleStrategy strategy,
                                   SamplerRng* rng, int* out_token);

// ---------------------------------------------------------------------------
// Immediate-mode wrappers: build, execute, and return the spec. These are the
// plain op entry points used by tests and oracles; the deferred make_*
// builders above are what plans and the pipeline submit to the device.
// ---------------------------------------------------------------------------
KernelSpec matmul(const Tensor& a, const Tensor& b, Tensor& out);
KernelSpec layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps,
                     Tensor& out);
KernelSpec attention(const Tensor& q, const KvCache& kv, float scale, Tensor& out);
KernelSpec embedding_lookup(const std::vector<int>& ids, const Tensor& table, Tensor& out);
KernelSpec kv_append(KvCache& kv, const Tensor& k_new, const Tensor& v_new);
int sample_token(const Tensor& logits, const SampleStrategy& strategy, SamplerRng& rng);

}  // namespace graphrt
